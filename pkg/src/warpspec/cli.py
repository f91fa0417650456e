"""Command-line driver.

    warpspec predict --n 4 --a -1 --b -1
    warpspec compute --config run.toml [--p 0] [--kmax 2] [--ladder 40,80,160] [--out DIR]
    warpspec verify [--mutate] [--log verify.jsonl]

Exit codes: 0 success, 1 numeric/predicted mismatch (or verifier gate
failure), 2 usage error, 3 solver error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .eigensolver import ConvergenceError, GridPolicy, SpectrumEstimate, essential_bottom
from .metric import QuadratureError, WarpParams, arclength, build_profile
from .predictor import Band, aggregate_modes, classify_regime, predict, predict_mode
from .reduction import reduced_operator
from .sphere_modes import coclosed_eigenvalues
from . import verifier

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
CSV_COLUMNS = ("mode_k", "lambda", "L", "bottom", "uncertainty", "classification")
KINDS = ("I", "II", "III")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    N: int
    a: float
    b: float
    epsilon: float = 1.0
    c: float = 2.0
    p: list[int] = field(default_factory=lambda: [0])
    kinds: list[str] = field(default_factory=lambda: ["I"])
    kmax: int = 2
    ladder: list[float] = field(default_factory=lambda: [40.0, 80.0, 160.0])
    n: int = 4096
    r_min: float | None = None
    ratio: float = 1.02
    cutoff: float = 50.0
    max_states: int = 40
    out: str = "out"

    def params(self) -> WarpParams:
        return WarpParams(self.N, self.a, self.b, self.epsilon, self.c)

    def policy(self) -> GridPolicy:
        return GridPolicy(n=self.n, r_min=self.r_min, ratio=self.ratio)


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def load_config(path: str | os.PathLike, overrides: dict | None = None) -> RunConfig:
    """Read a TOML run configuration; ``overrides`` (from flags) win."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"bad TOML in {path}: {exc}") from exc
    prm = raw.get("params", {})
    modes = raw.get("modes", {})
    solver = raw.get("solver", {})
    output = raw.get("output", {})
    try:
        cfg = RunConfig(
            N=int(prm["N"]), a=float(prm["a"]), b=float(prm["b"]),
            epsilon=float(prm.get("epsilon", 1.0)), c=float(prm.get("c", 2.0)),
            p=[int(v) for v in _as_list(prm.get("p", [0]))],
            kinds=[str(v) for v in _as_list(modes.get("kinds", ["I"]))],
            kmax=int(modes.get("kmax", 2)),
            ladder=[float(v) for v in solver.get("ladder", [40.0, 80.0, 160.0])],
            n=int(solver.get("n", 4096)),
            r_min=None if solver.get("r_min") is None else float(solver["r_min"]),
            ratio=float(solver.get("ratio", 1.02)),
            cutoff=float(solver.get("cutoff", 50.0)),
            max_states=int(solver.get("max_states", 40)),
            out=str(output.get("dir", "out")),
        )
    except KeyError as exc:
        raise UsageError(f"config is missing params.{exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config value: {exc}") from exc
    for key, val in (overrides or {}).items():
        if val is not None:
            setattr(cfg, key, val)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    try:
        cfg.params()
        cfg.policy()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    bad = [k for k in cfg.kinds if k not in KINDS]
    if bad:
        raise UsageError(f"unknown operator kinds {bad}; choose from {KINDS}")
    if len(cfg.ladder) < 3 or any(b <= a for a, b in zip(cfg.ladder, cfg.ladder[1:])):
        raise UsageError("ladder needs at least three increasing lengths")
    if cfg.kmax < 0:
        raise UsageError("kmax must be >= 0")
    if any(not 0 <= p <= cfg.N for p in cfg.p):
        raise UsageError(f"form degrees must lie in [0, {cfg.N}]")


@dataclass(frozen=True)
class ModeJob:
    p: int
    kind: str
    k: int
    lam: float


def mode_jobs(cfg: RunConfig) -> list[ModeJob]:
    """Sphere modes to sweep, in output order: p, then kind, then k."""
    jobs = []
    N = cfg.N
    for p in cfg.p:
        for kind in cfg.kinds:
            if kind == "I" and p <= N - 1:
                modes = coclosed_eigenvalues(N, p, cfg.kmax)
            elif kind == "II" and 1 <= p <= N:
                # closed (p-1)-forms, through the Hodge star
                modes = coclosed_eigenvalues(N, N - p, cfg.kmax)
            elif kind == "III" and 1 <= p <= N - 1:
                modes = [m for m in coclosed_eigenvalues(N, p - 1, cfg.kmax) if m.lam > 0]
            else:
                modes = []
            jobs += [ModeJob(p, kind, m.k, m.lam) for m in modes]
    return jobs


@dataclass(frozen=True)
class ModeResult:
    job: ModeJob
    estimate: SpectrumEstimate | None
    error: str | None


def _run_job(cfg: RunConfig, amap, job: ModeJob) -> ModeResult:
    try:
        op = reduced_operator(job.kind, amap, cfg.N, job.p, job.lam)
        est = essential_bottom(op, cfg.ladder, cfg.policy(), cutoff=cfg.cutoff, max_states=cfg.max_states)
        return ModeResult(job, est, None)
    except (ConvergenceError, QuadratureError, ValueError, RuntimeError) as exc:
        return ModeResult(job, None, f"{type(exc).__name__}: {exc}")


def thread_count(n_jobs: int) -> int:
    raw = os.environ.get("WARP_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError as exc:
            raise UsageError(f"WARP_THREADS must be a positive integer, got {raw!r}") from exc
    return max(1, min(cap, n_jobs))


def run_modes(cfg: RunConfig, jobs: list[ModeJob]) -> list[ModeResult]:
    amap = arclength(build_profile(cfg.params()))
    workers = thread_count(len(jobs))
    if workers == 1:
        return [_run_job(cfg, amap, j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map keeps input order whatever the completion order
        return list(pool.map(lambda j: _run_job(cfg, amap, j), jobs))


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{x:.10g}"


def _tag(cfg: RunConfig, job: ModeJob) -> str:
    return predict(cfg.N, job.p, cfg.a, cfg.b).provenance


def csv_text(cfg: RunConfig, results: list[ModeResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for res in results:
        est = res.estimate
        verdict = "solver error" if est is None else est.verdict
        writer.writerow([
            res.job.k, _num(res.job.lam), _num(max(cfg.ladder)),
            _num(est.bottom if est else None), _num(est.uncertainty if est else None),
            f"{verdict} [{_tag(cfg, res.job)}]",
        ])
    return buf.getvalue()


def _band_json(b: Band) -> dict:
    return {"set": str(b), "bottom": b.bottom}


def build_report(cfg: RunConfig, results: list[ModeResult]) -> dict:
    report = {
        "params": {"N": cfg.N, "a": cfg.a, "b": cfg.b, "epsilon": cfg.epsilon, "c": cfg.c,
                   "kinds": cfg.kinds, "kmax": cfg.kmax, "ladder": cfg.ladder, "n": cfg.n,
                   "cutoff": cfg.cutoff},
        "degrees": [],
    }
    for p in cfg.p:
        mine = [r for r in results if r.job.p == p]
        pred = predict(cfg.N, p, cfg.a, cfg.b)
        entry = {**pred.as_dict(), "modes": []}
        good = [r for r in mine if r.estimate is not None]
        for r in mine:
            j = r.job
            band = predict_mode(j.kind, cfg.N, p, cfg.a, cfg.b, j.lam)
            regime = classify_regime(cfg.N, p, cfg.a, cfg.b, j.lam, kind=j.kind)
            row = {"kind": j.kind, "k": j.k, "lambda": j.lam, "tag": pred.provenance,
                   "predicted": _band_json(band),
                   "regime": {"mechanism": regime.mechanism,
                              "decay_exponent": _num(regime.decay_exponent) or None}}
            if r.estimate is None:
                row.update(numeric=None, verdict="solver error", error=r.error)
            else:
                e = r.estimate
                row["numeric"] = {"bottom": e.bottom, "uncertainty": e.uncertainty,
                                  "count_stable": e.count_stable,
                                  "counts": [lv.count_below for lv in e.levels]}
                row["verdict"] = e.verdict
            entry["modes"].append(row)
        if good:
            agg = aggregate_modes(
                [r.estimate for r in good],
                [predict_mode(r.job.kind, cfg.N, p, cfg.a, cfg.b, r.job.lam) for r in good],
                labels=[f"{r.job.kind}:{r.job.k}" for r in good],
            )
            for row, cmp in zip([m for m in entry["modes"] if m["verdict"] != "solver error"], agg.modes):
                row["deviation"] = cmp.deviation
                row["ok"] = cmp.ok
            entry["numeric"] = {"bottom": agg.numeric_bottom, "deviation": agg.deviation,
                                "predicted_union": str(agg.predicted)}
            entry["verdict"] = "pass" if agg.ok else "fail"
        else:
            entry["numeric"] = None
            entry["verdict"] = "solver error" if mine else "no modes"
        report["degrees"].append(entry)
    return report


def cmd_compute(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    jobs = mode_jobs(cfg)
    if not jobs:
        raise UsageError("the sweep selects no sphere modes")
    results = run_modes(cfg, jobs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for p in cfg.p:
        for kind in cfg.kinds:
            sel = [r for r in results if r.job.p == p and r.job.kind == kind]
            if sel:
                (out / f"spectrum_p{p}_{kind}.csv").write_text(csv_text(cfg, sel), encoding="utf-8")
    report = build_report(cfg, results)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for entry in report["degrees"]:
        print(f"p={entry['params']['p']}: predicted ess {entry['predicted']['ess']}, "
              f"numeric bottom {_num((entry['numeric'] or {}).get('bottom'))}, {entry['verdict']}", file=stdout)
    if any(r.error for r in results):
        return EXIT_SOLVER
    if any(e["verdict"] == "fail" for e in report["degrees"]):
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_predict(N: int, a: float, b: float, as_json: bool = False, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        rows = [predict(N, p, a, b) for p in range(N + 1)]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if as_json:
        print(json.dumps([r.as_dict() for r in rows], indent=2), file=stdout)
        return EXIT_OK
    print(f"{'p':>3}  {'sigma_ess':<24} {'sigma_ac':<20} {'sigma_sc':<20} tag", file=stdout)
    for r in rows:
        print(f"{r.p:>3}  {str(r.sigma_ess):<24} {str(r.sigma_ac):<20} {r.sc_status:<20} {r.provenance}",
              file=stdout)
    return EXIT_OK


def cmd_verify(mutate: bool, log: str | None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    studies = verifier.run_suite(mutate=mutate)
    text = verifier.to_jsonl(studies)
    if log:
        Path(log).write_text(text, encoding="utf-8")
    failed = 0
    for st in studies:
        prm = st.params
        status = "ok" if st.passed else "FAIL"
        failed += not st.passed
        print(f"{st.check} N={prm['N']} p={prm['p']} a={prm['a']} b={prm['b']} support={prm['support']} "
              f"min order {st.min_order:.2f} {status}", file=stdout)
    print(f"{len(studies) - failed}/{len(studies)} checks pass the order gate", file=stdout)
    return EXIT_MISMATCH if failed else EXIT_OK


def _ladder(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad ladder {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="warpspec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("predict", help="closed-form spectral bands for every degree p")
    pp.add_argument("--n", type=int, required=True, dest="N")
    pp.add_argument("--a", type=float, required=True)
    pp.add_argument("--b", type=float, required=True)
    pp.add_argument("--json", action="store_true")

    pc = sub.add_parser("compute", help="numeric band bottoms per sphere mode")
    pc.add_argument("--config", required=True)
    pc.add_argument("--p", type=int)
    pc.add_argument("--kmax", type=int)
    pc.add_argument("--ladder", type=_ladder)
    pc.add_argument("--out")

    pv = sub.add_parser("verify", help="convergence checks of the reduction identities")
    pv.add_argument("--mutate", action="store_true", help="break the identities on purpose")
    pv.add_argument("--log", default="verify.jsonl", help="JSON-lines output path")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "predict":
            return cmd_predict(args.N, args.a, args.b, args.json)
        if args.command == "compute":
            overrides = {"p": None if args.p is None else [args.p], "kmax": args.kmax,
                         "ladder": args.ladder, "out": args.out}
            return cmd_compute(load_config(args.config, overrides))
        return cmd_verify(args.mutate, args.log)
    except UsageError as exc:
        print(f"warpspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
