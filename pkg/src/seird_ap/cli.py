"""Command-line front end.

Usage::

    seird-ap simulate --scenario ic-i --solver both --eps 2e-6 --t-final 1
    seird-ap simulate --config run.yaml --out results/
    seird-ap list
    seird-ap export-config ic-ii > ic-ii.yaml

The output directory is resolved as ``--out``, then ``$SEIRD_AP_OUT``, then
the ``out`` key of the config, then ``./out``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import output
from .analysis import (ComparisonReport, ProbeSeries, beta_sweep, compare, conservation_drift,
                       eps_sweep, sample_times, DEFAULT_PROBE_TIMES)
from .kinetic import INFLOW, LOCAL_EQUILIBRIUM, ZERO, run_kinetic
from .macroscale import MacroState, run_macro
from .model import CONSTANT, PROPORTIONAL, TransmissionRate, beta_for_r0, r0
from .scenarios import SCENARIOS, Scenario, constant_beta_suite, get_scenario, stepwise_beta
from .stepping import BlowUpError, StepSizeError

OUT_ENV = "SEIRD_AP_OUT"
DEFAULT_OUT = "out"

SOLVERS = ("kinetic", "macro", "both")
SWEEPS = ("eps", "beta")
BCS = ("periodic", "inflow", "neumann")
ICS = ("i", "ii", "uniform")
SCHEDULES = ("const", "step1", "step2")

CONFIG_KEYS = ("scenario", "solver", "eps", "t_final", "output_times", "probe_x", "out", "bc",
               "recruitment", "recruitment_value", "ic", "beta_schedule", "beta", "sweep",
               "interval", "init_mode", "deterministic")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    solver: str = "macro"
    eps: float = 2e-6
    t_final: float = 10.0
    output_times: Tuple[float, ...] = ()
    probe_x: Tuple[float, ...] = ()
    out: Optional[str] = None
    sweep: Optional[str] = None
    interval: float = 0.1
    init_mode: str = LOCAL_EQUILIBRIUM
    # Nothing in the solvers is random; kept so configs can state it explicitly.
    deterministic: bool = field(default=True, init=False)

    @property
    def snapshot_times(self) -> Tuple[float, ...]:
        return self.output_times or (0.0, self.t_final)

    @property
    def probes(self) -> Tuple[float, ...]:
        return self.probe_x or (self.scenario.probe_x,)


# -- configuration ---------------------------------------------------------

def _float(key, value) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{key}: must be finite")
    return out


def _floats(key, value) -> Tuple[float, ...]:
    if value is None:
        return ()
    if not isinstance(value, (list, tuple)):
        value = [value]
    return tuple(_float(key, v) for v in value)


def _choice(key, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{key}: expected one of {', '.join(allowed)}, got {value!r}")
    return value


def _resolve_scenario(data: dict) -> Scenario:
    entry = data.get("scenario")
    if entry is None:
        raise ConfigError("scenario: required")
    if isinstance(entry, str):
        try:
            sc = get_scenario(entry)
        except KeyError as exc:
            raise ConfigError(f"scenario: {exc.args[0]}") from None
    elif isinstance(entry, dict):
        try:
            sc = Scenario.from_dict(entry)
        except (KeyError, TypeError, ValueError) as exc:
            msg = exc.args[0] if exc.args else repr(exc)
            raise ConfigError(f"scenario: {msg}") from None
    else:
        raise ConfigError("scenario: expected a registry name or a mapping")

    changes = {}
    if data.get("ic") is not None:
        changes["initial_condition"] = _choice("ic", data["ic"], ICS)
    if data.get("bc") is not None:
        changes["bc"] = _choice("bc", data["bc"], BCS)
    rec = data.get("recruitment")
    if rec is not None or data.get("recruitment_value") is not None:
        rec = _choice("recruitment", rec or sc.params.recruitment, (PROPORTIONAL, CONSTANT))
        value = _float("recruitment_value", data.get("recruitment_value",
                                                     sc.params.recruitment_value))
        changes["params"] = replace(sc.params, recruitment=rec, recruitment_value=value)

    schedule = data.get("beta_schedule")
    beta = data.get("beta")
    if schedule is not None:
        _choice("beta_schedule", schedule, SCHEDULES)
    if schedule in ("step1", "step2"):
        if beta is not None:
            raise ConfigError("beta: cannot be combined with a step-wise beta_schedule")
        changes["rate"] = stepwise_beta(int(schedule[-1]))
    elif beta is not None:
        b = _float("beta", beta)
        if b < 0:
            raise ConfigError("beta: must be nonnegative")
        changes["rate"] = TransmissionRate.constant(b)
    elif schedule == "const" and not sc.rate.is_constant:
        changes["rate"] = TransmissionRate.constant(beta_for_r0(sc.params, 2.0))
    try:
        return sc.with_changes(**changes) if changes else sc
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None


def build_config(data: dict) -> RunConfig:
    """Validate a mapping of config keys into a :class:`RunConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping")
    unknown = [k for k in data if k not in CONFIG_KEYS]
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(map(str, unknown))}")
    if data.get("deterministic", True) is not True:
        raise ConfigError("deterministic: runs are always deterministic; only `true` is accepted")

    scenario = _resolve_scenario(data)
    solver = _choice("solver", data.get("solver") or "macro", SOLVERS)
    sweep = data.get("sweep")
    if sweep is not None:
        _choice("sweep", sweep, SWEEPS)
    eps = _float("eps", data.get("eps", 2e-6))
    if eps <= 0:
        raise ConfigError("eps: must be positive")
    t_final = _float("t_final", data["t_final"]) if data.get("t_final") is not None \
        else scenario.t_final
    if t_final <= 0:
        raise ConfigError("t_final: must be positive")
    times = tuple(sorted(_floats("output_times", data.get("output_times"))))
    bad = [t for t in times if t < 0 or t > t_final]
    if bad:
        raise ConfigError(f"output_times: {bad[0]:g} lies outside [0, t_final={t_final:g}]")
    probes = _floats("probe_x", data.get("probe_x"))
    L = scenario.half_length
    bad = [x for x in probes if abs(x) > L]
    if bad:
        raise ConfigError(f"probe_x: {bad[0]:g} lies outside [-{L:g}, {L:g}]")
    interval = _float("interval", data.get("interval", 0.1))
    if interval <= 0 or interval > t_final:
        raise ConfigError("interval: must lie in (0, t_final]")
    init_mode = _choice("init_mode", data.get("init_mode") or LOCAL_EQUILIBRIUM,
                        (LOCAL_EQUILIBRIUM, ZERO))
    if scenario.bc == INFLOW and solver != "kinetic":
        raise ConfigError("bc: inflow boundaries require solver: kinetic")
    out = data.get("out")
    return RunConfig(scenario, solver, eps, t_final, times, probes,
                     None if out is None else str(out), sweep, interval, init_mode)


def parse_config(text: str) -> RunConfig:
    """Parse a YAML run configuration.  Syntax errors report the line number."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"config parse error{where}: {problem}") from None
    if data is None:
        data = {}
    return build_config(data)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def scenario_document(scenario: Scenario) -> str:
    """YAML run config that reproduces a registry scenario exactly."""
    doc = {"scenario": scenario.to_dict(), "solver": "macro", "t_final": scenario.t_final}
    return yaml.safe_dump(doc, sort_keys=False)


def config_dir() -> Path:
    return Path(__file__).parent / "configs"


# -- running ---------------------------------------------------------------

def _out_dir(config: RunConfig, flag: Optional[str] = None) -> Path:
    return Path(flag or os.environ.get(OUT_ENV) or config.out or DEFAULT_OUT)


def _solvers(config: RunConfig) -> List[str]:
    return ["kinetic", "macro"] if config.solver == "both" else [config.solver]


def _integrate(config: RunConfig, solver: str, times: Sequence[float]) -> List[MacroState]:
    sc = config.scenario
    if solver == "kinetic":
        return run_kinetic(sc, config.eps, config.t_final, times, init_mode=config.init_mode)
    return run_macro(sc, config.t_final, times)


def _by_step(states: Sequence[MacroState], dt: float) -> dict:
    return {int(round(s.t / dt)): s for s in states}


def _pick(table: dict, times: Sequence[float], dt: float) -> List[MacroState]:
    steps = sorted({int(round(t / dt)) for t in times})
    return [table[k] for k in steps]


def _finite(states) -> bool:
    return all(np.isfinite(s.fields()).all() for s in states)


def _fmt_x(x: float) -> str:
    return format(x, "g").replace("-", "m")


def _run_simulation(config: RunConfig, out: Path, log) -> bool:
    sc = config.scenario
    grid, dt = sc.spatial_grid(), sc.dt
    series_times = sample_times(config.t_final, config.interval)
    all_times = sorted(set(config.snapshot_times) | set(series_times.tolist()))
    finished = {}
    for solver in _solvers(config):
        t0 = time.perf_counter()
        table = _by_step(_integrate(config, solver, all_times), dt)
        elapsed = time.perf_counter() - t0
        states = list(table.values())
        if not _finite(states):
            log(f"{solver}: non-finite values in output")
            return False
        snaps = _pick(table, config.snapshot_times, dt)
        output.write_snapshots(out / f"snapshots_{solver}.csv", snaps, grid)
        samples = _pick(table, series_times, dt)
        for x in config.probes:
            j = grid.index_of(x)
            ps = ProbeSeries(solver, float("nan"), float(grid.nodes[j]),
                             np.array([s.t for s in samples]),
                             np.array([s.fields()[:, j] for s in samples]), sc.rate)
            output.write_series(out / f"series_{solver}_x{_fmt_x(x)}.csv", ps)
        drift = conservation_drift(states, grid) if sc.params.recruitment == PROPORTIONAL \
            else float("nan")
        log(f"{solver}: conservation drift {drift:.3e}, wall time {elapsed:.2f} s")
        finished[solver] = snaps
    if len(finished) == 2:
        reports = [compare(k, m, grid, config.eps)
                   for k, m in zip(finished["kinetic"], finished["macro"])]
        output.write_comparison(out / "comparison.csv", reports)
        worst = max(r.relative_l1[n] for r in reports for n in ("S", "E", "I"))
        log(f"kinetic vs macro: max relative L1 (S, E, I) {worst:.3e}")
    return True


def _run_eps_sweep(config: RunConfig, out: Path, log) -> bool:
    sc = config.scenario
    times = config.output_times or tuple(t for t in DEFAULT_PROBE_TIMES if t <= config.t_final) \
        or (config.t_final,)
    t0 = time.perf_counter()
    reports: List[ComparisonReport] = eps_sweep(sc, probe_times=times)
    if not all(np.isfinite(list(r.l1.values())).all() for r in reports):
        log("eps sweep: non-finite distances")
        return False
    output.write_comparison(out / "eps_sweep.csv", reports)
    log(f"eps sweep over {len(sc.eps_list)} values: wall time {time.perf_counter() - t0:.2f} s")
    return True


def _run_beta_sweep(config: RunConfig, out: Path, log) -> bool:
    sc = config.scenario
    suite = constant_beta_suite()
    for solver in _solvers(config):
        t0 = time.perf_counter()
        results = beta_sweep(sc, suite, config.t_final, config.probes[0], config.interval,
                             solver, config.eps)
        for k, ps in enumerate(results):
            if not np.isfinite(ps.values).all():
                log(f"beta sweep ({solver}): non-finite values for {ps.label}")
                return False
            output.write_series(out / f"beta_sweep_{solver}_{k}.csv", ps)
            log(f"  beta={ps.beta:g} ({ps.label}) R0={r0(sc.params, ps.beta):.4f}")
        log(f"beta sweep ({solver}): wall time {time.perf_counter() - t0:.2f} s")
    return True


def run(config: RunConfig, out: Optional[str] = None, stream=None) -> int:
    """Execute a run; returns the process exit status."""
    stream = sys.stdout if stream is None else stream

    def log(msg):
        print(msg, file=stream)

    out_dir = _out_dir(config, out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sc = config.scenario
    log(f"scenario {sc.name}: solver={config.solver} t_final={config.t_final:g} "
        f"bc={sc.bc} out={out_dir}")
    for start, beta in zip(sc.rate.breakpoints, sc.rate.values):
        log(f"  beta={beta:g} from t={start:g}: R0={r0(sc.params, beta):.4f}")
    try:
        if config.sweep == "eps":
            ok = _run_eps_sweep(config, out_dir, log)
        elif config.sweep == "beta":
            ok = _run_beta_sweep(config, out_dir, log)
        else:
            ok = _run_simulation(config, out_dir, log)
    except (BlowUpError, StepSizeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


# -- argument parsing ------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seird-ap",
                                     description="Kinetic and diffusive SEIRD simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write CSV output")
    src = sim.add_mutually_exclusive_group()
    src.add_argument("--scenario", choices=sorted(SCENARIOS), help="registry scenario")
    src.add_argument("--config", help="YAML run configuration")
    sim.add_argument("--solver", choices=SOLVERS)
    sim.add_argument("--eps", type=float, help="Knudsen number for the kinetic solver")
    sim.add_argument("--sweep", choices=SWEEPS)
    sim.add_argument("--t-final", type=float)
    sim.add_argument("--out", help=f"output directory (overrides ${OUT_ENV})")
    sim.add_argument("--bc", choices=BCS)
    sim.add_argument("--ic", choices=ICS)
    sim.add_argument("--beta-schedule", choices=SCHEDULES)
    sim.add_argument("--beta", type=float, help="constant transmission rate")
    sim.add_argument("--probe-x", type=float, action="append",
                     help="probe location; may be repeated")
    sim.add_argument("--output-times", type=float, nargs="+")
    sim.add_argument("--interval", type=float, help="probe sampling interval")
    sim.add_argument("--recruitment", choices=(PROPORTIONAL, CONSTANT))

    sub.add_parser("list", help="list registry scenarios")
    exp = sub.add_parser("export-config", help="print a scenario as a YAML run config")
    exp.add_argument("name", choices=sorted(SCENARIOS))
    return parser


_FLAG_KEYS = {"solver": "solver", "eps": "eps", "sweep": "sweep", "t_final": "t_final",
              "bc": "bc", "ic": "ic", "beta_schedule": "beta_schedule", "beta": "beta",
              "probe_x": "probe_x", "output_times": "output_times", "interval": "interval",
              "recruitment": "recruitment"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError:
            parse_config(text)  # re-raise with line information
            raise
        if not isinstance(data, dict):
            raise ConfigError("config document must be a mapping")
    else:
        data = {"scenario": args.scenario or "ic-i"}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr)
        if value is not None:
            data[key] = value
    return build_config(data)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, sc in SCENARIOS.items():
            print(f"{name}: ic={sc.initial_condition} t_final={sc.t_final:g} "
                  f"beta={list(sc.rate.values)}")
        return 0
    if args.command == "export-config":
        sys.stdout.write(scenario_document(get_scenario(args.name)))
        return 0
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config, out=args.out)


if __name__ == "__main__":
    sys.exit(main())
