"""Command-line entry point: solve, compare, sweep, simulate and verify.

Settings come from an optional YAML file (``--config``); any flag given on the
command line overrides the file.  Floats are written with 9 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .bilateral import BilateralEq, solve_bilateral
from .core import ConcessionProfile, GameParams, OutOfRange, Priors, validate
from .partial import PartialObsEq, StepFailure, solve_partial_obs
from .sequential import SeqEquilibrium, seq_benchmark, solve_sequential
from .simulate import simulate
from .star4 import PERIPHERALS, ShootingDivergence, Star4Equilibrium, solve_star4, star4_benchmark
from .trilateral import QuadratureFailure, TriEquilibrium, benchmark_payoffs, solve_trilateral
from .verify import best_response_check

log = logging.getLogger("attrition")

COMMANDS = ("solve", "compare", "sweep", "simulate", "verify")
MODELS = ("bilateral", "trilateral", "sequential", "partial", "star4")
SWEEP_KEYS = ("r", "alpha", "pi_ac", "pi_bc", "z_a", "z_b", "z_c", "z_d")
N_PRIORS = {"bilateral": 2, "trilateral": 3, "sequential": 3, "partial": 1, "star4": 4}

EXIT_OK, EXIT_INVALID, EXIT_FAILURE = 0, 2, 3


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


@dataclass
class SweepAxis:
    parameter: str
    lo: float
    hi: float
    steps: int

    def values(self) -> list[float]:
        return np.linspace(self.lo, self.hi, self.steps).tolist()


@dataclass
class RunConfig:
    command: str = "solve"
    model: str = "trilateral"
    params: GameParams = field(default_factory=lambda: GameParams(1.0, 0.7))
    priors: list[list[float]] = field(default_factory=list)
    sweep_axes: SweepAxis | None = None
    output: str | None = None
    format: str = "csv"
    seed: int | None = None
    n: int | None = None
    grid: int | None = None

    def check(self) -> None:
        if self.command not in COMMANDS:
            raise OutOfRange("command", self.command, f"one of {COMMANDS}")
        if self.model not in MODELS:
            raise OutOfRange("model", self.model, f"one of {MODELS}")
        if self.format not in ("csv", "json"):
            raise OutOfRange("format", self.format, "csv or json")
        if self.sweep_axes is not None and self.command != "sweep":
            raise OutOfRange("sweep_axes", self.sweep_axes, "only with command=sweep")
        if self.command == "sweep" and self.sweep_axes is None:
            raise OutOfRange("sweep_axes", None, "required for command=sweep")
        if self.n is not None and self.command != "simulate":
            raise OutOfRange("n", self.n, "only with command=simulate")
        if self.sweep_axes is not None and self.sweep_axes.parameter not in SWEEP_KEYS:
            raise OutOfRange("sweep_axes.parameter", self.sweep_axes.parameter, f"one of {SWEEP_KEYS}")
        if not self.priors:
            raise OutOfRange("priors", self.priors, "at least one prior vector")
        need = N_PRIORS[self.model]
        for z in self.priors:
            if len(z) != need:
                raise OutOfRange("priors", z, f"{need} values for model {self.model}")
        validate(self.params)
        if self.command == "simulate" and self.model not in ("bilateral", "trilateral"):
            raise OutOfRange("model", self.model, "simulate supports bilateral and trilateral")

    def to_dict(self) -> dict:
        d = {
            "command": self.command,
            "model": self.model,
            "params": dataclasses.asdict(self.params),
            "priors": [list(map(float, z)) for z in self.priors],
            "output": self.output,
            "format": self.format,
        }
        if self.sweep_axes is not None:
            d["sweep_axes"] = dataclasses.asdict(self.sweep_axes)
        for key in ("seed", "n", "grid"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        raw = d.pop("params", None)
        params = GameParams(**{k: float(v) for k, v in raw.items()}) if raw else GameParams(1.0, 0.7)
        axes = d.pop("sweep_axes", None)
        return cls(params=params, sweep_axes=SweepAxis(**axes) if axes else None,
                   priors=[[float(x) for x in z] for z in d.pop("priors", [])], **d)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        return cls.from_dict(yaml.safe_load(text) or {})


# --- solving ------------------------------------------------------------------


def solve_model(model: str, z, params: GameParams):
    if model == "bilateral":
        return solve_bilateral(params.pi_ac, z[0], z[1], params)
    if model == "trilateral":
        return solve_trilateral(Priors(*z), params)
    if model == "sequential":
        return solve_sequential(Priors(*z), params)
    if model == "partial":
        return solve_partial_obs(z[0], params)
    return solve_star4(tuple(z), params)


def payoffs_of(eq) -> dict[str, float]:
    if isinstance(eq, BilateralEq):
        return {"i": eq.payoff_i, "j": eq.payoff_j}
    return dict(eq.payoffs)


def benchmark_of(model: str, z, params: GameParams) -> dict[str, float]:
    if model == "bilateral":
        b = solve_bilateral(params.pi_ac, z[0], z[1], params)
        return {"i": b.payoff_i, "j": b.payoff_j}
    if model == "trilateral":
        return benchmark_payoffs(Priors(*z), params)
    if model == "sequential":
        return seq_benchmark(Priors(*z), params)
    if model == "partial":
        a = params.alpha
        return {"A": 1 - a, "B": 1 - a, "C": 2 * (1 - a)}
    return star4_benchmark(tuple(z), params)


def summary(eq) -> dict:
    """Flat scalar description of an equilibrium, one CSV row."""
    if isinstance(eq, BilateralEq):
        return {"z_i": eq.z_i, "z_j": eq.z_j, "weak": eq.weak_id or "none", "atom": eq.atom_weak,
                "hazard": eq.hazard, "T": eq.terminal, "v_i": eq.payoff_i, "v_j": eq.payoff_j}
    if isinstance(eq, TriEquilibrium):
        row = {"z_A": eq.priors.z_a, "z_B": eq.priors.z_b, "z_C": eq.priors.z_c, "case": eq.case.value,
               "dominant": eq.dominant or "none"}
        row.update({f"F_{k}(0)": v for k, v in eq.atoms.items()})
        row.update({"t_star": eq.t_star, "T": eq.terminal})
        row.update({f"v_{k}": v for k, v in eq.payoffs.items()})
        return row
    if isinstance(eq, SeqEquilibrium):
        row = {"z_A": eq.priors.z_a, "z_B": eq.priors.z_b, "z_C": eq.priors.z_c,
               "atom_holder": eq.atom_holder or "none", "atom": eq.atom_size, "z_bar_A": eq.z_bar_a,
               "z_tilde_A": eq.z_tilde_a, "z_A(0+)": eq.z_a_plus, "z_C(0+)": eq.z_c_plus,
               "t_B": eq.crossing if eq.crossing is not None else float("nan"), "T": eq.terminal}
        row.update({f"v_{k}": v for k, v in eq.payoffs.items()})
        return row
    if isinstance(eq, PartialObsEq):
        row = {"z0": eq.z0, "label": eq.label, "h(0)": eq.h0, "F_C(0)": eq.atom_c, "T": eq.terminal,
               "step_agreement": eq.step_agreement}
        row.update({f"v_{k}": v for k, v in eq.payoffs.items()})
        return row
    row = {f"z_{k}": v for k, v in zip(("1", "2", "3", "C"), eq.priors)}
    row.update({f"F_{k}(0)": v for k, v in eq.atoms.items()})
    times = eq.phase_times
    row.update({f"phase_{m + 1}": t for m, t in enumerate(times[:-1])})
    row["T"] = eq.terminal
    row.update({f"v_{k}": v for k, v in eq.payoffs.items()})
    return row


def to_jsonable(obj):
    """Equilibrium objects as plain JSON data, field by field."""
    if isinstance(obj, Star4Equilibrium):
        d = {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.name != "segments"}
        d["segments"] = [{"t_start": obj.terminal - s.s1, "t_end": obj.terminal - s.s0,
                          "active": [PLAY for PLAY, on in zip(PERIPHERALS + ("C",), s.active) if on]}
                         for s in obj.segments]
        d["phase_times"] = list(obj.phase_times)
        return d
    if isinstance(obj, ConcessionProfile):
        return {"atom0": obj.atom0, "terminal": obj.terminal,
                "segments": [dataclasses.asdict(s) for s in obj.segments]}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


# --- trajectories -----------------------------------------------------------


def _traj_columns(eq) -> tuple[list[str], list[str]]:
    if isinstance(eq, Star4Equilibrium):
        return ["1", "2", "3", "C"], ["t", "z_1", "z_2", "z_3", "z_C", "F_1", "F_2", "F_3", "F_C",
                                       "lambda_1", "lambda_2", "lambda_3", "lambda_C"]
    names = ["A", "B", "C"]
    return names, ["t"] + [f"z_{k}" for k in names] + [f"F_{k}" for k in names] + [f"lambda_{k}" for k in names]


def _traj_row(eq, t: float, pre_atom: bool = False) -> list[float]:
    if isinstance(eq, Star4Equilibrium):
        if pre_atom:
            return [0.0, *eq.priors, 0.0, 0.0, 0.0, 0.0, *eq.hazards(0.0)]
        z = eq.posteriors(t)
        F = np.clip(1.0 - np.asarray(eq.priors) / z, 0.0, 1.0)
        return [t, *z, *F, *eq.hazards(t)]
    if isinstance(eq, TriEquilibrium):
        pri = {"A": eq.priors.z_a, "B": eq.priors.z_b, "C": eq.priors.z_c}
        profs = [eq.profiles[k] for k in "ABC"]
        prior = [pri[k] for k in "ABC"]
    elif isinstance(eq, SeqEquilibrium):
        # B plays no part in stage 1: its reputation stays at the prior
        prior = [eq.priors.z_a, eq.priors.z_b, eq.priors.z_c]
        profs = [eq.profile_a, ConcessionProfile(0.0, (), eq.terminal), eq.profile_c]
    elif isinstance(eq, PartialObsEq):
        zs = [eq.z_a(t), eq.z_a(t), eq.z_c(t) if t > 0 or not pre_atom else eq.prior_c]
        if pre_atom:
            zs = [eq.z0, eq.z0, eq.prior_c]
        F = [1 - eq.z0 / zs[0], 1 - eq.z0 / zs[1], 1 - eq.prior_c / zs[2]]
        lam = eq.params.lam_ag if t < eq.terminal else 0.0
        return [t, *zs, *F, lam, lam, eq.lambda_c(t)]
    else:
        raise TypeError(f"no trajectory for {type(eq).__name__}")
    if pre_atom:
        return [0.0, *prior, 0.0, 0.0, 0.0, *[p.hazard(0.0) for p in profs]]
    F = [p.cdf(t) for p in profs]
    z = [pr / (1 - f) for pr, f in zip(prior, F)]
    return [t, *z, *F, *[p.hazard(t) for p in profs]]


def trajectory_times(eq, grid_n: int) -> list[float]:
    T = eq.terminal
    special = [T]
    if isinstance(eq, TriEquilibrium):
        special.append(eq.t_star)
    elif isinstance(eq, Star4Equilibrium):
        special.extend(eq.phase_times)
    elif isinstance(eq, SeqEquilibrium) and eq.crossing is not None:
        special.append(eq.crossing)
    return sorted(set(np.linspace(0.0, T, grid_n).tolist()) | {t for t in special if 0 < t <= T})


def emit_trajectory(eq, grid_n: int, out) -> None:
    """Write the posterior/cdf/hazard table.

    Two rows carry ``t = 0``: the first holds the priors (before any time-0
    atom), the second the values right after it.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    _, header = _traj_columns(eq)
    own = isinstance(out, (str, Path))
    fh = open(out, "w", newline="") if own else out
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerow([fmt(x) for x in _traj_row(eq, 0.0, pre_atom=True)])
        for t in trajectory_times(eq, grid_n):
            w.writerow([fmt(x) for x in _traj_row(eq, float(t))])
    finally:
        if own:
            fh.close()


# --- commands -----------------------------------------------------------------


def _workers() -> int:
    k = int(os.environ.get("ATTRITION_THREADS", "0") or 0)
    return k if k > 0 else (os.cpu_count() or 1)


def _write_rows(rows: list[dict], cfg: RunConfig, payload=None) -> None:
    if cfg.output is None:
        return
    path = Path(cfg.output)
    if cfg.format == "json":
        path.write_text(json.dumps(to_jsonable(payload if payload is not None else rows), indent=2))
        return
    keys: list[str] = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n", restval="")
        w.writeheader()
        for r in rows:
            w.writerow({k: fmt(v) for k, v in r.items()})


def _line(model: str, z, row: dict, keys) -> str:
    bits = " ".join(f"{k}={fmt(row[k])}" for k in keys if k in row)
    return f"{model} z={','.join(fmt(x) for x in z)} {bits}"


def cmd_solve(cfg: RunConfig) -> int:
    rows, eqs = [], []
    for k, z in enumerate(cfg.priors):
        eq = solve_model(cfg.model, z, cfg.params)
        row = summary(eq)
        rows.append(row)
        eqs.append(eq)
        keys = [c for c in row if c.startswith(("v_", "T", "t_star", "F_", "case", "atom", "h(0)", "phase"))]
        print(_line(cfg.model, z, row, keys))
        if cfg.grid is not None and cfg.output is not None:
            stem = Path(cfg.output)
            suffix = f"_{k}" if len(cfg.priors) > 1 else ""
            emit_trajectory(eq, cfg.grid, stem.with_name(f"{stem.stem}{suffix}.trajectory.csv"))
    _write_rows(rows, cfg, payload=eqs if cfg.format == "json" else None)
    return EXIT_OK


def compare_table(model: str, z, params: GameParams) -> list[dict]:
    """Equilibrium, benchmark and difference rows, one column per player."""
    eq = solve_model(model, z, params)
    got, bench = payoffs_of(eq), benchmark_of(model, z, params)
    return [{"row": "equilibrium", **got},
            {"row": "benchmark", **{p: bench[p] for p in got}},
            {"row": "difference", **{p: got[p] - bench[p] for p in got}}]


def cmd_compare(cfg: RunConfig) -> int:
    rows = []
    for z in cfg.priors:
        table = compare_table(cfg.model, z, cfg.params)
        rows.extend({"z": ",".join(fmt(x) for x in z), **r} for r in table)
        diff = table[-1]
        print(_line(cfg.model, z, {f"d_{p}": v for p, v in diff.items() if p != "row"},
                    [f"d_{p}" for p in diff if p != "row"]))
    _write_rows(rows, cfg)
    return EXIT_OK


def _sweep_point(cfg: RunConfig, z, key: str, value: float) -> dict:
    params = cfg.params
    z = list(z)
    if key in ("r", "alpha", "pi_ac", "pi_bc"):
        params = dataclasses.replace(params, **{key: value})
    else:
        z["abcd".index(key[-1])] = value
    row = {key: value}
    try:
        row.update(summary(solve_model(cfg.model, z, params)))
        row["status"] = "ok"
    except (OutOfRange, QuadratureFailure, StepFailure, ShootingDivergence) as exc:
        row["status"] = f"error: {exc}"
    return row


def cmd_sweep(cfg: RunConfig) -> int:
    ax = cfg.sweep_axes
    jobs = [(z, v) for z in cfg.priors for v in ax.values()]
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rows = list(pool.map(lambda job: _sweep_point(cfg, job[0], ax.parameter, job[1]), jobs))
    for z in cfg.priors:
        print(f"{cfg.model} z={','.join(fmt(x) for x in z)} sweep {ax.parameter} "
              f"[{fmt(ax.lo)}, {fmt(ax.hi)}] x {ax.steps}")
    _write_rows(rows, cfg)
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAILURE


def cmd_simulate(cfg: RunConfig) -> int:
    n = cfg.n or 100_000
    seed = cfg.seed if cfg.seed is not None else 0
    rows, status = [], EXIT_OK
    for z in cfg.priors:
        eq = solve_model(cfg.model, z, cfg.params)
        out = simulate(eq, n, seed)
        exact = payoffs_of(eq)
        bits = []
        for p, v in exact.items():
            zscore = (out.est_payoffs[p] - v) / out.std_err[p] if out.std_err[p] > 0 else 0.0
            rows.append({"z": ",".join(fmt(x) for x in z), "player": p, "analytic": v,
                         "estimate": out.est_payoffs[p], "std_err": out.std_err[p], "z_score": zscore,
                         "n": n, "seed": seed})
            bits.append(f"{p}:{fmt(out.est_payoffs[p])}±{fmt(out.std_err[p])}")
            if abs(zscore) > 3:
                status = EXIT_FAILURE
        print(f"{cfg.model} z={','.join(fmt(x) for x in z)} n={n} seed={seed} " + " ".join(bits)
              + f" joint_close={fmt(out.joint_close_rate)}")
    _write_rows(rows, cfg)
    return status


def cmd_verify(cfg: RunConfig) -> int:
    rows, status = [], EXIT_OK
    grid = cfg.grid or 2000
    for z in cfg.priors:
        eq = solve_model(cfg.model, z, cfg.params)
        if cfg.model == "star4":
            from .star4 import deviation_value  # peripherals only; the center is paid by indifference at 0+
            res = {}
            for i, name in enumerate(PERIPHERALS):
                ts = np.linspace(eq.activation[name], eq.terminal, 25)
                u = [deviation_value(eq, i, float(t)) for t in ts]
                res[name] = max(abs(x - eq.payoffs[name]) for x in u)
            ok = all(v <= 1e-4 for v in res.values())
            rows.append({"z": ",".join(fmt(x) for x in z), "verdict": "pass" if ok else "fail",
                         **{f"support_residual_{k}": v for k, v in res.items()}})
        elif cfg.model == "partial":
            ts = np.linspace(0.0, eq.terminal, 1000, endpoint=False)
            res = max(abs(eq.indifference_residual(float(t))) for t in ts)
            ok = res <= 1e-6
            rows.append({"z": ",".join(fmt(x) for x in z), "verdict": "pass" if ok else "fail",
                         "indifference_residual": res})
        else:
            rep = best_response_check(eq, grid_n=grid)
            ok = rep.passed
            row = {"z": ",".join(fmt(x) for x in z), "verdict": rep.verdict}
            row.update({f"support_residual_{k}": v for k, v in rep.support_residual.items()})
            row.update({f"off_support_slack_{k}": v for k, v in rep.off_support_slack.items()})
            rows.append(row)
        print(f"{cfg.model} z={','.join(fmt(x) for x in z)} verdict={rows[-1]['verdict']}")
        if not ok:
            status = EXIT_FAILURE
    _write_rows(rows, cfg)
    return status


def run(cfg: RunConfig) -> int:
    """Execute one configuration; returns the process exit status."""
    try:
        cfg.check()
    except OutOfRange as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_INVALID
    handler = {"solve": cmd_solve, "compare": cmd_compare, "sweep": cmd_sweep,
               "simulate": cmd_simulate, "verify": cmd_verify}[cfg.command]
    try:
        return handler(cfg)
    except OutOfRange as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except (QuadratureFailure, StepFailure, ShootingDivergence, ArithmeticError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_FAILURE


# --- argument parsing ---------------------------------------------------------


def _parse_z(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad prior vector {text!r}") from exc


def _parse_sweep(text: str) -> SweepAxis:
    try:
        key, lo, hi, steps = text.split(":")
        return SweepAxis(key, float(lo), float(hi), int(steps))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected PARAM:LO:HI:STEPS") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="attrition", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="YAML run configuration; flags override it")
    ap.add_argument("--model", choices=MODELS)
    ap.add_argument("--r", type=float)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--pi-ac", type=float)
    ap.add_argument("--pi-bc", type=float)
    ap.add_argument("--z", type=_parse_z, action="append",
                    help="comma-separated priors; repeat for several vectors")
    ap.add_argument("--sweep", type=_parse_sweep, help="PARAM:LO:HI:STEPS, e.g. pi_ac:1:4:13")
    ap.add_argument("--out", help="output file")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--n", type=int, help="simulation replications")
    ap.add_argument("--grid", type=int, help="trajectory points (solve) or check grid size (verify)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_yaml(args.config.read_text()) if args.config else RunConfig()
    cfg.command = args.command
    if args.model:
        cfg.model = args.model
    over = {k: getattr(args, k) for k in ("r", "alpha", "pi_ac", "pi_bc") if getattr(args, k) is not None}
    if over:
        cfg.params = dataclasses.replace(cfg.params, **over)
    if args.z:
        cfg.priors = args.z
    if args.sweep:
        cfg.sweep_axes = args.sweep
    for key, attr in (("out", "output"), ("format", "format"), ("seed", "seed"), ("n", "n"), ("grid", "grid")):
        if getattr(args, key) is not None:
            setattr(cfg, attr, getattr(args, key))
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except (OSError, yaml.YAMLError, TypeError, ValueError) as exc:
        log.error("cannot read configuration: %s", exc)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
