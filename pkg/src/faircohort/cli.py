"""Command-line harness: selection runs, marginal reports, simulation, checks.

Subcommands:
  select     run one seeded selection and report the cohort
  marginals  report analytic marginals, utilities, and the fairness scan
  simulate   Monte Carlo marginal estimation with confidence half-widths
  verify     run the invariant batteries; exit 3 on any violation
  baseline   weighted-sampling or uniform reference selection

Reports are JSON (schema 1) with the full configuration echoed, so any
report can be reproduced byte-for-byte from its own config block. CSV
output flattens per-candidate marginals. Exit codes: 0 success, 2 invalid
configuration or input, 3 invariant violation detected by verify.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .baselines import uniform_baseline, weighted_sampling_baseline
from .metrics import check_fairness, linear_utility, maxmin_utility, worst_case_ratio
from .model import CandidateRecord, ScoreVector
from .offline import linear_marginals, ratio_marginals, select_cohort
from .online_linear import OnlineLinearSelector, rounded_scores
from .online_linear import pending_bound as linear_pending_bound
from .online_ratio import OnlineRatioSelector
from .online_ratio import pending_bound as ratio_pending_bound
from .oracle import perturbation_oracle
from .rounding import monte_carlo_means
from .simulate import estimate_marginals
from .streams import generate_stream

MODES = ("offline-linear", "offline-ratio", "online-linear", "online-ratio",
         "baseline-weighted", "baseline-uniform")
VERIFY_TARGETS = ("all", "rounding", "offline", "online-linear", "online-ratio", "metrics")

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    command: str
    mode: str = "offline-linear"
    k: int = 1
    epsilon: float = 0.1
    alpha: float = 0.5
    seed: int = 0
    trials: int = 10_000
    input: Optional[str] = None
    gen: Optional[str] = None
    n: Optional[int] = None
    trace: bool = False
    out: Optional[str] = None
    format: str = "json"
    oracle_attempts: int = 0
    which: str = "weighted"
    target: str = "all"
    cases: int = 60

    def validate(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")
        if not (0.0 < self.alpha <= 0.5):
            raise ValueError("alpha must lie in (0, 1/2]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")


def load_candidates(path: str) -> List[CandidateRecord]:
    """Read JSONL {"id":..., "score":...} records or CSV with an id,score header."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if not stripped:
        raise ValueError(f"{path}: empty input")
    records: List[CandidateRecord] = []
    if stripped[0] == "{":
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{ln}: invalid JSON: {exc}") from exc
            if "id" not in obj or "score" not in obj:
                raise ValueError(f"{path}:{ln}: records need 'id' and 'score'")
            records.append(CandidateRecord(str(obj["id"]), float(obj["score"])))
    else:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or "id" not in reader.fieldnames or "score" not in reader.fieldnames:
            raise ValueError(f"{path}: CSV needs an 'id,score' header")
        for ln, row in enumerate(reader, 2):
            records.append(CandidateRecord(str(row["id"]), float(row["score"])))
    for rec in records:
        if not np.isfinite(rec.score) or rec.score < 0.0 or rec.score > 1.0:
            raise ValueError(f"{path}: score {rec.score!r} for {rec.id!r} outside [0, 1]")
    return records


def _resolve_stream(cfg: RunConfig) -> List[CandidateRecord]:
    if cfg.input and cfg.gen:
        raise ValueError("give either --input or --gen, not both")
    if cfg.input:
        return load_candidates(cfg.input)
    if cfg.gen:
        if cfg.n is None:
            raise ValueError("--gen needs --n")
        return generate_stream(cfg.gen, cfg.n, cfg.seed, epsilon=cfg.epsilon)
    raise ValueError("no candidates: give --input PATH or --gen SPEC --n N")


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _emit(report: dict, cfg: RunConfig):
    if cfg.format == "csv":
        text = _report_csv(report)
    else:
        text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report_csv(report: dict) -> str:
    rows = report.get("candidates", [])
    analytic = report.get("marginals", {}).get("analytic")
    empirical = report.get("marginals", {}).get("empirical")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "score", "marginal", "frequency", "half_width"])
    for i, row in enumerate(rows):
        marginal = analytic[i] if analytic is not None else ""
        freq = empirical[i]["frequency"] if empirical else ""
        hw = empirical[i]["half_width"] if empirical else ""
        writer.writerow([row["id"], repr(row["score"]),
                         repr(marginal) if marginal != "" else "",
                         repr(freq) if freq != "" else "",
                         repr(hw) if hw != "" else ""])
    return buf.getvalue()


def _config_block(cfg: RunConfig) -> dict:
    return asdict(cfg)


def _analytic_marginals(cfg: RunConfig, scores: ScoreVector):
    """Closed-form marginals and a label for where they come from."""
    if cfg.mode == "offline-linear":
        mv = linear_marginals(scores)
        return mv.probs, {"mode": mv.mode, "shift": mv.shift, "source": "water-fill"}
    if cfg.mode == "offline-ratio":
        mv = ratio_marginals(scores)
        return mv.probs, {"mode": mv.mode, "shift": mv.shift, "source": "water-fill"}
    if cfg.mode == "online-linear":
        hat = rounded_scores(scores.scores, cfg.epsilon)
        mv = linear_marginals(ScoreVector(hat, scores.k, ids=scores.ids))
        return mv.probs, {"mode": mv.mode, "shift": mv.shift,
                          "source": "bucket-water-fill", "epsilon": cfg.epsilon}
    if cfg.mode == "online-ratio":
        mv = ratio_marginals(scores)
        return mv.probs, {"mode": mv.mode, "shift": mv.shift, "source": "stream-equivalent"}
    if cfg.mode == "baseline-weighted":
        base = weighted_sampling_baseline(scores)
        return base.marginals.probs, {"source": "subset-enumeration"}
    return np.full(len(scores), scores.k / len(scores)), {"source": "uniform"}


def _run_online(cfg: RunConfig, records: List[CandidateRecord], emit_trace: bool):
    if cfg.mode == "online-linear":
        selector = OnlineLinearSelector(cfg.k, cfg.epsilon, rng=cfg.seed)
    else:
        selector = OnlineRatioSelector(cfg.k, cfg.alpha, rng=cfg.seed)
    trace = []
    for step, rec in enumerate(records, 1):
        decisions = selector.ingest(rec)
        entry = {
            "step": step,
            "pending": selector.pending_count,
            "rejected": [d.candidate_id for d in decisions if d.verdict == "rejected"],
        }
        trace.append(entry)
        if emit_trace:
            sys.stderr.write(json.dumps(entry, sort_keys=True) + "\n")
    cohort = selector.finalize()
    return cohort, trace


def _base_report(cfg: RunConfig, records: List[CandidateRecord]) -> tuple:
    scores = ScoreVector.from_records(records, cfg.k)
    probs, meta = _analytic_marginals(cfg, scores)
    fairness = check_fairness(probs, scores.scores)
    report = {
        "schema": SCHEMA_VERSION,
        "config": _config_block(cfg),
        "candidates": [{"id": r.id, "score": r.score} for r in records],
        "marginals": {"analytic": [float(x) for x in probs], **meta},
        "utilities": {
            "linear": linear_utility(probs, scores.scores),
            "maxmin": _finite_or_none(maxmin_utility(probs, scores.scores)),
        },
        "fairness": fairness.to_dict(),
    }
    if cfg.oracle_attempts > 0 and cfg.mode != "baseline-uniform":
        objectives = {"offline-linear": ("linear",), "online-linear": ("linear",),
                      "offline-ratio": ("maxmin",), "online-ratio": ("maxmin",),
                      "baseline-weighted": ("linear", "maxmin")}[cfg.mode]
        report["oracle"] = [
            perturbation_oracle(scores.scores, probs, obj, cfg.oracle_attempts,
                                cfg.seed).to_dict()
            for obj in objectives
        ]
    return scores, report


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def cmd_select(cfg: RunConfig) -> int:
    records = _resolve_stream(cfg)
    scores, report = _base_report(cfg, records)
    if cfg.mode in ("online-linear", "online-ratio"):
        cohort, trace = _run_online(cfg, records, cfg.trace)
        report["trace"] = trace
    elif cfg.mode == "offline-linear":
        cohort = select_cohort(linear_marginals(scores), rng=cfg.seed)
    elif cfg.mode == "offline-ratio":
        cohort = select_cohort(ratio_marginals(scores), rng=cfg.seed)
    elif cfg.mode == "baseline-weighted":
        cohort = weighted_sampling_baseline(scores).sample(cfg.seed)
    else:
        cohort = uniform_baseline(len(scores), cfg.k, cfg.seed, ids=scores.ids)
    report["cohort"] = list(cohort.ids)
    _emit(report, cfg)
    return 0


def cmd_marginals(cfg: RunConfig) -> int:
    records = _resolve_stream(cfg)
    _, report = _base_report(cfg, records)
    _emit(report, cfg)
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    records = _resolve_stream(cfg)
    scores, report = _base_report(cfg, records)
    est = estimate_marginals(cfg.mode, scores, cfg.k, trials=cfg.trials,
                             seed=cfg.seed, epsilon=cfg.epsilon, alpha=cfg.alpha)
    analytic = np.asarray(report["marginals"]["analytic"])
    inside = np.abs(est.frequencies - analytic) <= np.maximum(est.half_widths, 1e-12)
    report["marginals"]["empirical"] = [
        {"id": i, "frequency": float(f), "half_width": float(h)}
        for i, f, h in zip(est.ids, est.frequencies, est.half_widths)
    ]
    report["coverage"] = {
        "trials": est.trials,
        "within_half_width": float(np.mean(inside)),
    }
    if cfg.mode in ("online-linear", "online-ratio"):
        _, trace = _run_online(cfg, records, cfg.trace)
        report["trace"] = trace
    _emit(report, cfg)
    return 0


def cmd_baseline(cfg: RunConfig) -> int:
    cfg.mode = "baseline-weighted" if cfg.which == "weighted" else "baseline-uniform"
    records = _resolve_stream(cfg)
    scores, report = _base_report(cfg, records)
    if cfg.which == "weighted":
        base = weighted_sampling_baseline(scores)
        report["baseline"] = {
            "subsets": [
                {"ids": [scores.ids[i] for i in sub], "probability": float(p)}
                for sub, p in zip(base.subsets, base.probabilities)
            ],
            "linear": base.linear,
            "maxmin": _finite_or_none(base.maxmin),
        }
        cohort = base.sample(cfg.seed)
    else:
        cohort = uniform_baseline(len(scores), cfg.k, cfg.seed, ids=scores.ids)
    report["cohort"] = list(cohort.ids)
    _emit(report, cfg)
    return 0


# -- verify ------------------------------------------------------------------


def _verify_rounding(cfg: RunConfig, checks: list):
    gen = np.random.default_rng(cfg.seed)
    worst = 0.0
    bad_total = 0
    for case in range(cfg.cases):
        cap = float(gen.choice([1.0, 2.0, 5.0]))
        n = int(gen.integers(1, 13))
        values = gen.random(n) * cap
        means, bad = monte_carlo_means(values, cap, cfg.trials, cfg.seed + case)
        bad_total += bad
        hw = 2.0 * cap / math.sqrt(cfg.trials) + 1e-3
        worst = max(worst, float(np.max(np.abs(means - values))) - hw)
    checks.append({"name": "rounding-shape", "passed": bad_total == 0,
                   "detail": f"{bad_total} shape violations over {cfg.cases} cases"})
    checks.append({"name": "rounding-marginals", "passed": worst <= 0.0,
                   "detail": f"worst mean deviation beyond half-width: {worst:.3e}"})


def _verify_offline(cfg: RunConfig, checks: list):
    gen = np.random.default_rng(cfg.seed)
    ok_fair = ok_sum = ok_mono = ok_opt = True
    for case in range(cfg.cases):
        n = int(gen.integers(2, 9))
        k = int(gen.integers(1, n + 1))
        scores = ScoreVector(gen.random(n), k)
        for make, objective in ((linear_marginals, "linear"), (ratio_marginals, "maxmin")):
            mv = make(scores)
            ok_sum &= abs(mv.probs.sum() - k) <= 1e-9
            ok_fair &= check_fairness(mv.probs, scores.scores).max_violation <= 1e-9
            order = np.argsort(scores.scores)
            ok_mono &= bool(np.all(np.diff(mv.probs[order]) >= -1e-9))
            verdict = perturbation_oracle(scores, mv, objective, 2000, cfg.seed + case)
            ok_opt &= not verdict.improved
    checks.append({"name": "offline-sum-k", "passed": ok_sum, "detail": "sum(p) == k"})
    checks.append({"name": "offline-fairness", "passed": ok_fair,
                   "detail": "|p_i-p_j| <= |s_i-s_j|"})
    checks.append({"name": "offline-monotonic", "passed": ok_mono,
                   "detail": "higher score never gets lower probability"})
    checks.append({"name": "offline-optimal", "passed": ok_opt,
                   "detail": "no oracle improvement > 1e-6"})


def _verify_online_linear(cfg: RunConfig, checks: list):
    gen = np.random.default_rng(cfg.seed)
    ok_eq = ok_bound = ok_fair = ok_util = True
    for case in range(min(cfg.cases, 25)):
        n = int(gen.integers(5, 80))
        k = int(gen.integers(1, min(n, 8) + 1))
        eps = float(gen.choice([0.1, 0.25, 0.5]))
        scores = gen.random(n)
        selector = OnlineLinearSelector(k, eps, rng=cfg.seed + case)
        bound = linear_pending_bound(k, eps)
        for i, s in enumerate(scores):
            selector.ingest((f"c{i}", float(s)))
            if selector.n_seen >= k:
                ok_bound &= selector.pending_in_positive_groups <= bound
        probs = selector.marginal_probabilities()
        hat = rounded_scores(scores, eps)
        offline = linear_marginals(ScoreVector(hat, k)).probs
        ok_eq &= bool(np.max(np.abs(probs - offline)) <= 1e-9)
        ok_fair &= check_fairness(probs, scores).epsilon_satisfied <= eps + 1e-9
        best = linear_marginals(ScoreVector(scores, k)).probs
        ok_util &= float(probs @ scores) >= float(best @ scores) - k * (eps + 2.0 * math.sqrt(eps))
    checks.append({"name": "online-linear-equivalence", "passed": ok_eq,
                   "detail": "stream probabilities match bucket water-fill"})
    checks.append({"name": "online-linear-pending", "passed": ok_bound,
                   "detail": "pending <= 2k + ceil(1/eps) + 1"})
    checks.append({"name": "online-linear-fairness", "passed": ok_fair,
                   "detail": "additive slack <= eps"})
    checks.append({"name": "online-linear-utility", "passed": ok_util,
                   "detail": "utility within k(eps + 2*sqrt(eps)) of offline"})


def _verify_online_ratio(cfg: RunConfig, checks: list):
    gen = np.random.default_rng(cfg.seed)
    ok_scale = ok_bound = ok_cohort = True
    for case in range(min(cfg.cases, 25)):
        n = int(gen.integers(5, 60))
        k = int(gen.integers(1, min(n, 6) + 1))
        alpha = float(gen.choice([0.25, 0.5]))
        high = bool(gen.integers(0, 2))
        scores = gen.random(n) * (1.0 if high else min(0.8 * k / n, 1.0))
        selector = OnlineRatioSelector(k, alpha, rng=cfg.seed + case)
        bound = ratio_pending_bound(k, alpha)
        for i, s in enumerate(scores):
            selector.ingest((f"c{i}", float(s)))
            ok_bound &= selector.pending_count <= bound
            if selector.scale is not None:
                ok_scale &= abs(selector.scale - k / selector.running_sum) <= 1e-9
        cohort = selector.finalize()
        ok_cohort &= len(cohort) == k
    checks.append({"name": "online-ratio-scale", "passed": ok_scale,
                   "detail": "cumulative scale stays k/sum"})
    checks.append({"name": "online-ratio-pending", "passed": ok_bound,
                   "detail": "pending <= ceil(k/a) + ceil(k/(1-a)) + k + 1"})
    checks.append({"name": "online-ratio-cohort", "passed": ok_cohort,
                   "detail": "final draw returns exactly k"})


def _verify_metrics(cfg: RunConfig, checks: list):
    gen = np.random.default_rng(cfg.seed)
    ok_eq = ok_sym = True
    for case in range(cfg.cases):
        n = int(gen.integers(2, 7))
        s = gen.random(n) * 0.9 + 0.1
        p = gen.random(n)
        value, _ = worst_case_ratio(p, s, 200, np.random.default_rng(cfg.seed + case))
        ok_eq &= abs(value - maxmin_utility(p, s)) <= 1e-9
        perm = gen.permutation(n)
        a, b = check_fairness(p, s), check_fairness(p[perm], s[perm])
        ok_sym &= abs(a.max_violation - b.max_violation) <= 1e-12
    checks.append({"name": "metrics-worst-case-ratio", "passed": ok_eq,
                   "detail": "sampled worst case equals the minimum ratio"})
    checks.append({"name": "metrics-permutation", "passed": ok_sym,
                   "detail": "fairness scan is permutation invariant"})


def cmd_verify(cfg: RunConfig) -> int:
    checks: list = []
    target = cfg.target
    if target in ("all", "rounding"):
        _verify_rounding(cfg, checks)
    if target in ("all", "offline"):
        _verify_offline(cfg, checks)
    if target in ("all", "online-linear"):
        _verify_online_linear(cfg, checks)
    if target in ("all", "online-ratio"):
        _verify_online_ratio(cfg, checks)
    if target in ("all", "metrics"):
        _verify_metrics(cfg, checks)
    passed = all(c["passed"] for c in checks)
    report = {
        "schema": SCHEMA_VERSION,
        "config": _config_block(cfg),
        "checks": checks,
        "passed": passed,
    }
    _emit(report, cfg)
    return 0 if passed else 3


# -- parser ------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, with_mode=True):
    if with_mode:
        p.add_argument("--mode", choices=MODES, default="offline-linear")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="bucket width for online-linear (in (0,1])")
    p.add_argument("--alpha", type=float, default=0.5,
                   help="pool parameter for online-ratio (in (0,1/2])")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", help="JSONL or CSV candidate file")
    p.add_argument("--gen", help="stream spec: uniform01 | beta(a,b) | "
                                 "two-point{s:c,...} | adversarial-boundary[(eps)]")
    p.add_argument("--n", type=int, help="stream length for --gen")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fair-cohort",
        description="Fairness-preserving cohort selection with optimal utility.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="run one seeded selection")
    _add_common(p)
    p.add_argument("--trace", action="store_true",
                   help="stream per-step JSONL trace records to stderr")
    p.add_argument("--oracle-attempts", type=int, default=0,
                   help="also probe the marginals for improvements")

    p = sub.add_parser("marginals", help="report analytic marginals")
    _add_common(p)
    p.add_argument("--oracle-attempts", type=int, default=0)

    p = sub.add_parser("simulate", help="Monte Carlo marginal estimation")
    _add_common(p)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--trace", action="store_true")

    p = sub.add_parser("verify", help="run invariant batteries (exit 3 on failure)")
    p.add_argument("target", nargs="?", choices=VERIFY_TARGETS, default="all")
    p.add_argument("--cases", type=int, default=60)
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("baseline", help="reference selection rules")
    _add_common(p, with_mode=False)
    p.add_argument("--which", choices=("weighted", "uniform"), default="weighted")
    return parser


def _to_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in ("mode", "k", "epsilon", "alpha", "seed", "trials", "input",
                 "gen", "n", "trace", "out", "format", "which", "target", "cases"):
        if hasattr(args, name):
            value = getattr(args, name)
            if value is not None:
                setattr(cfg, name, value)
    if hasattr(args, "oracle_attempts"):
        cfg.oracle_attempts = args.oracle_attempts
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _to_config(args)
        handler = {
            "select": cmd_select,
            "marginals": cmd_marginals,
            "simulate": cmd_simulate,
            "verify": cmd_verify,
            "baseline": cmd_baseline,
        }[args.command]
        return handler(cfg)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
