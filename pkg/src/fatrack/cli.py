"""Command-line front end.

``fatrack run experiment.json`` runs the Monte Carlo comparison and writes a
metrics CSV plus a JSON manifest. ``fatrack denoise samples.csv omega.txt``
runs one sparse-feature recovery and writes the estimates, the recovered
spectrum and the dual polynomial on a frequency grid.

Experiment file (JSON)::

    {
      "scenario": {"M": 4, "N": 80, "dt": 0.5, ...},   # ScenarioConfig fields
      "batch": {"N": 32, "A": 16, ...},                 # optional, BatchConfig fields
      "runs": 200,
      "algorithms": ["baseline", "fa", "augmented"],
      "sweep": [10, 20],                                # optional, feature SNR in dB
      "output": {"metrics": "metrics.csv", "manifest": "manifest.json"}
    }

Exit status is 0 on success and 2 for invalid input.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .association import AssocConfig
from .atomic_admm import DenoiseProblem, solve
from .dual_spectral import DualCertificate, dual_polynomial_grid, locate_frequencies
from .errors import ConfigurationError
from .feature_signal import ObservationPattern
from .pipeline import ALGORITHMS, BatchConfig, RunMetrics, monte_carlo
from .scenario import ScenarioConfig, feature_snr_db, sigma2_for_snr

log = logging.getLogger("fatrack")

METRIC_COLUMNS = ("algorithm", "snr_db", "time_step", "rmse", "nees_mean",
                  "continuity_pct", "feat_rmse", "fvib_rmse")
REQUIRED = ("scenario", "runs", "algorithms")


class SpecError(Exception):
    """Invalid experiment or denoise input; reported with exit status 2."""


@dataclass
class ExperimentSpec:
    scenario: ScenarioConfig
    batch: BatchConfig
    runs: int
    algorithms: tuple[str, ...]
    sweep: tuple[float, ...] | None = None
    output: dict = field(default_factory=lambda: {"metrics": "metrics.csv",
                                                  "manifest": "manifest.json"})

    def snr_points(self) -> list[tuple[float, ScenarioConfig]]:
        if not self.sweep:
            return [(feature_snr_db(1.0, self.scenario.sigma2), self.scenario)]
        return [(float(s), dataclasses.replace(self.scenario, sigma2=sigma2_for_snr(s)))
                for s in self.sweep]


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise SpecError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise SpecError(f"{where}: unknown field(s) {', '.join(unknown)}")
    kw = dict(data)
    for k, v in kw.items():
        if isinstance(v, list):
            kw[k] = tuple(v)
    if cls is BatchConfig and "assoc" in kw:
        kw["assoc"] = _build(AssocConfig, data["assoc"], f"{where}.assoc")
    try:
        return cls(**kw)
    except (ConfigurationError, TypeError) as exc:
        raise SpecError(f"{where}: {exc}") from exc


def parse_spec(text: str, source: str = "<spec>") -> ExperimentSpec:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise SpecError(f"{source}: top level must be an object")
    for key in REQUIRED:
        if key not in raw:
            raise SpecError(f"{source}: missing required field '{key}'")
    extra = set(raw) - set(REQUIRED) - {"batch", "sweep", "output"}
    if extra:
        raise SpecError(f"{source}: unknown field(s) {', '.join(sorted(extra))}")
    runs = raw["runs"]
    if not isinstance(runs, int) or isinstance(runs, bool) or runs < 1:
        raise SpecError(f"{source}: 'runs' must be an integer >= 1")
    algs = raw["algorithms"]
    if not isinstance(algs, list) or not algs or any(a not in ALGORITHMS for a in algs):
        raise SpecError(f"{source}: 'algorithms' must be a nonempty subset of {list(ALGORITHMS)}")
    sweep = raw.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, list) or not all(isinstance(s, (int, float)) and np.isfinite(s)
                                                  for s in sweep):
            raise SpecError(f"{source}: 'sweep' must be a list of finite numbers")
        sweep = tuple(float(s) for s in sweep)
    out = {"metrics": "metrics.csv", "manifest": "manifest.json"}
    out.update(raw.get("output") or {})
    return ExperimentSpec(scenario=_build(ScenarioConfig, raw["scenario"], f"{source}: scenario"),
                          batch=_build(BatchConfig, raw.get("batch", {}), f"{source}: batch"),
                          runs=runs, algorithms=tuple(algs), sweep=sweep, output=out)


def _fmt(v) -> str:
    v = float(v)
    return "nan" if np.isnan(v) else repr(v)


def metric_rows(snr_db: float, results: dict[str, RunMetrics]):
    for alg, m in results.items():
        for t in range(m.continuity_pct.size):
            yield (alg, _fmt(snr_db), str(t), _fmt(m.rmse[t]), _fmt(m.nees_mean[t]),
                   _fmt(m.continuity_pct[t]), _fmt(m.feat_rmse[t]), _fmt(m.fvib_rmse))


def _versions() -> dict:
    import scipy
    return {"fatrack": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def cmd_run(args) -> int:
    path = Path(args.spec)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from exc
    spec = parse_spec(text, str(path))
    if args.seed is not None:
        spec.scenario = dataclasses.replace(spec.scenario, seed=args.seed)
    if args.runs is not None:
        if args.runs < 1:
            raise SpecError("--runs must be >= 1")
        spec.runs = args.runs
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    points, rows = [], []
    for snr, scen in spec.snr_points():
        log.info("running %d runs at %.1f dB", spec.runs, snr)
        res = monte_carlo(scen, spec.batch, spec.runs, spec.algorithms, jobs=args.jobs)
        rows.extend(metric_rows(snr, res))
        points.append({
            "snr_db": snr, "sigma2": scen.sigma2,
            "summary": {a: {"final_continuity_pct": m.final_continuity,
                            "mean_rmse": m.mean_rmse,
                            "feat_rmse": m.overall_feat_rmse,
                            "fvib_rmse": m.fvib_rmse, **m.meta}
                        for a, m in res.items()}})
    wall = time.perf_counter() - t0

    metrics_path = out_dir / spec.output["metrics"]
    with metrics_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        w.writerows(rows)
    manifest = {
        "spec_file": str(path),
        "scenario": spec.scenario.to_dict(),
        "batch": spec.batch.to_dict(),
        "runs": spec.runs,
        "algorithms": list(spec.algorithms),
        "seed": spec.scenario.seed,
        "run_seeds": "numpy SeedSequence(seed).spawn(runs), child i drives run i",
        "feature_snr_definition": "10*log10(b**2 / sigma2) with target strength b = 1",
        "final_tail_refiltered": spec.batch.refilter_final_tail,
        "points": points,
        "versions": _versions(),
        "wall_time_s": wall,
        "metrics_csv": str(metrics_path),
    }
    (out_dir / spec.output["manifest"]).write_text(
        json.dumps(manifest, indent=2, default=_json_default) + "\n")
    print(f"wrote {metrics_path} ({len(rows)} rows) in {wall:.1f} s")
    return 0


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------- denoise

def _read_rows(path: Path) -> list[list[str]]:
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from exc
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]  # header
    return rows


def read_samples(path: Path) -> np.ndarray:
    """Complex samples, one per line as ``re,im`` (a header row is allowed)."""
    out = []
    for i, r in enumerate(_read_rows(path), 1):
        try:
            re, im = (float(c) for c in r[:2]) if len(r) >= 2 else (float(r[0]), 0.0)
        except ValueError as exc:
            raise SpecError(f"{path}:{i}: cannot parse sample {r!r}") from exc
        out.append(complex(re, im))
    return np.asarray(out, dtype=complex)


def read_omega(path: Path) -> np.ndarray:
    """Observed indices, whitespace or comma separated (a header row is allowed)."""
    vals = []
    for i, r in enumerate(_read_rows(path), 1):
        for c in r:
            for tok in c.split():
                try:
                    vals.append(int(tok))
                except ValueError as exc:
                    raise SpecError(f"{path}:{i}: not an integer index: {tok!r}") from exc
    return np.asarray(vals, dtype=int)


def cmd_denoise(args) -> int:
    z = read_samples(Path(args.samples))
    omega = read_omega(Path(args.omega))
    if omega.size == 0:
        raise SpecError(f"{args.omega}: observation set is empty")
    if z.size != omega.size:
        raise SpecError(f"dimension mismatch: {z.size} samples but {omega.size} observed indices")
    N = args.length if args.length is not None else int(omega.max()) + 1
    try:
        pattern = ObservationPattern(omega, N)
        prob = DenoiseProblem(z, pattern, args.gamma, args.lam)
    except ConfigurationError as exc:
        raise SpecError(str(exc)) from exc

    sol = solve(prob, rho=args.rho, max_iter=args.max_iter, tol=args.tol)
    cert = DualCertificate.from_solution(sol)
    spec = locate_frequencies(cert, grid_size=args.grid_size, x_hat=sol.x_hat, source="cli")
    f, Y = dual_polynomial_grid(cert.atomic, args.grid_size)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    e_full = np.zeros(N, complex)
    e_full[omega] = sol.e_hat
    with (out / "estimate.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "observed", "x_re", "x_im", "e_re", "e_im", "q_re", "q_im"))
        obs = pattern.mask
        for t in range(N):
            w.writerow((t, int(obs[t]), _fmt(sol.x_hat[t].real), _fmt(sol.x_hat[t].imag),
                        _fmt(e_full[t].real), _fmt(e_full[t].imag),
                        _fmt(sol.q_hat[t].real), _fmt(sol.q_hat[t].imag)))
    with (out / "spectrum.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("f", "amplitude", "phase", "peak"))
        for k in range(len(spec)):
            w.writerow((_fmt(spec.freqs[k]), _fmt(spec.amplitudes[k]), _fmt(spec.phases[k]),
                        _fmt(spec.peak_values[k])))
    with (out / "dual_polynomial.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("f", "re", "im", "abs"))
        for fi, y in zip(f, Y):
            w.writerow((_fmt(fi), _fmt(y.real), _fmt(y.imag), _fmt(abs(y))))
    flagged = [int(omega[j]) for j in np.flatnonzero(np.abs(sol.e_hat) > 0.1 * args.lam)]
    print(f"{len(spec)} spectral line(s) at f = {np.round(spec.freqs, 6).tolist()}; "
          f"flagged samples {flagged}; iters {sol.iters}, converged {sol.converged}")
    return 0


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fatrack", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a Monte Carlo experiment from a JSON file")
    r.add_argument("spec")
    r.add_argument("--seed", type=int, help="override scenario.seed")
    r.add_argument("--runs", type=int, help="override runs")
    r.add_argument("--out-dir", default=".")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("denoise", help="recover a sparse feature signal from partial samples")
    d.add_argument("samples", help="CSV of observed samples (re,im per line)")
    d.add_argument("omega", help="observed indices, one per line or comma separated")
    d.add_argument("--gamma", type=float, required=True)
    d.add_argument("--lam", type=float, required=True)
    d.add_argument("--length", type=int, help="signal length (default: max index + 1)")
    d.add_argument("--rho", type=float, default=0.1)
    d.add_argument("--max-iter", type=int, default=5000)
    d.add_argument("--tol", type=float, default=1e-7)
    d.add_argument("--grid-size", type=int, default=4096)
    d.add_argument("--out-dir", default=".")
    d.set_defaults(func=cmd_denoise)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
