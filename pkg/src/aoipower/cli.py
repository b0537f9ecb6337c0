"""
Command-line front end.

Commands::

    aoipower evaluate       analytic AoI/power of a constant, on-off or saved policy
    aoipower simulate       Monte Carlo estimate for the same policies
    aoipower optimize-onoff best on-off policy, written as a policy table
    aoipower optimize-sa    annealed policy started from the best on-off one
    aoipower sweep          one row per power budget on a dBW grid

Power budgets are given in dBW (``10 log10 P``) and stored in watts.
A JSON config file (``--config``) may supply any option; flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .channel import ChannelModel, get_channel
from .core import PowerPolicy, evaluate_policy
from .errors import AoIError
from .optimize import (
    AnnealingConfig,
    OptimizationResult,
    anneal,
    onoff_power_for_tau,
    optimize_onoff,
)
from .sim import SimConfig, simulate

log = logging.getLogger("aoipower")

COMMANDS = ("evaluate", "simulate", "optimize-onoff", "optimize-sa", "sweep")
POLICY_COLUMNS = ("state", "power_w", "eps", "pi")
SWEEP_COLUMNS = ("pbar_dbw", "aoi_const", "aoi_onoff", "aoi_sa")
SIM_COLUMNS = ("aoi_sim_sa", "ci_halfwidth")


def dbw_to_watts(dbw: float) -> float:
    return 10.0 ** (dbw / 10.0)


def watts_to_dbw(watts: float) -> float:
    return 10.0 * math.log10(watts)


@dataclass
class ExperimentSpec:
    command: str = "evaluate"
    rate: float = 1.0
    pbar_dbw: float = 0.0
    pbar_grid_dbw: list = field(default_factory=list)
    states: int = 300
    channel: str = "rayleigh"
    t0: float = 1.0
    tmin: float = 1e-3
    candidates: int = 100
    eps_lo: float = 1e-9
    eps_hi: float = 1.0
    tau_max: int | None = None
    tau: int | None = None
    policy: str | None = None
    slots: int = 10**6
    seed: int = 0
    simulate: bool = False
    jobs: int = 1
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        grid = [float(g) for g in self.pbar_grid_dbw]
        if not all(math.isfinite(g) for g in grid):
            raise ValueError("power grid must be finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("power grid must be strictly increasing")
        self.pbar_grid_dbw = grid
        if self.command == "sweep" and not grid:
            raise ValueError("sweep needs --pbar-grid-dbw")
        if self.states < 1 or self.slots < 1 or self.jobs < 1:
            raise ValueError("states, slots and jobs must be positive")
        get_channel(self.channel)

    @property
    def pbar(self) -> float:
        return dbw_to_watts(self.pbar_dbw)

    @property
    def model(self) -> ChannelModel:
        return get_channel(self.channel)

    def annealing(self, seed: int | None = None) -> AnnealingConfig:
        return AnnealingConfig(self.t0, self.tmin, self.candidates, self.eps_lo, self.eps_hi,
                               self.seed if seed is None else seed)

    def manifest(self) -> dict:
        return asdict(self)


def sub_seed(seed: int, *key: int) -> int:
    """Seed for a sub-job, fixed by the master seed and the job's index path."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


# -- file formats -----------------------------------------------------------

def _write_csv(path, columns, rows, header: dict):
    with open(path, "w", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row.get(c) is None else row.get(c) for c in columns])


def _write_json(path, columns, rows, header: dict):
    doc = dict(header)
    doc["columns"] = list(columns)
    doc["rows"] = [{c: row.get(c) for c in columns} for row in rows]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False, allow_nan=True)
        fh.write("\n")


def write_table(path, columns, rows, header: dict | None = None, fmt: str = "csv") -> None:
    header = header or {}
    writer = _write_csv if fmt == "csv" else _write_json
    try:
        writer(path, columns, rows, header)
    except OSError as exc:
        raise OSError(f"cannot write {fmt} output to {path}: {exc.strerror or exc}") from exc


def read_table(path) -> tuple[dict, list[dict]]:
    """Inverse of :func:`write_table`; numeric cells come back as floats."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rows = doc.pop("rows")
        doc.pop("columns", None)
        return doc, rows
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = json.loads(value)
        else:
            body.append(line)
    rows = []
    for rec in csv.DictReader(body):
        rows.append({k: _cell(v) for k, v in rec.items()})
    return header, rows


def _cell(value: str):
    if value == "":
        return None
    try:
        return float(value)
    except ValueError:
        return value


def policy_rows(result: OptimizationResult) -> list[dict]:
    ss = result.steady
    return [
        {"state": m, "power_w": float(p), "eps": float(e), "pi": float(q)}
        for m, (p, e, q) in enumerate(zip(result.policy.powers, result.profile.eps, ss.pi))
    ]


def export_policy(result: OptimizationResult, path, fmt: str = "csv", spec: dict | None = None) -> None:
    """Write ``(state, power_w, eps, pi)`` rows with the result summary as header."""
    header = {
        "aoi_min": result.aoi,
        "average_power_w": result.average_power,
        "pbar_w": result.pbar,
        "seed": result.seed,
        "method": result.method,
    }
    if spec is not None:
        header["spec"] = spec
    write_table(path, POLICY_COLUMNS, policy_rows(result), header, fmt)


def read_policy(path) -> tuple[PowerPolicy, dict]:
    header, rows = read_table(path)
    rows = sorted(rows, key=lambda r: r["state"])
    return PowerPolicy([r["power_w"] for r in rows]), header


# -- experiments ------------------------------------------------------------

def _policy_for(spec: ExperimentSpec) -> PowerPolicy:
    if spec.policy:
        policy, _ = read_policy(spec.policy)
        return policy
    if spec.tau is not None:
        return onoff_power_for_tau(spec.tau, spec.pbar, spec.model, spec.rate, spec.states)
    return PowerPolicy.constant(spec.pbar, spec.states)


def run_evaluate(spec: ExperimentSpec) -> dict:
    ev = evaluate_policy(_policy_for(spec), spec.model, spec.rate)
    return {"aoi": ev.aoi, "average_power_w": ev.power, "states": ev.policy.states}


def run_simulate(spec: ExperimentSpec) -> dict:
    policy = _policy_for(spec)
    ev = evaluate_policy(policy, spec.model, spec.rate)
    rep = simulate(SimConfig(policy, spec.model, spec.rate, spec.slots, spec.seed))
    return {
        "aoi_sim": rep.aoi,
        "ci_halfwidth": rep.ci_halfwidth,
        "std_error": rep.std_error,
        "cycles": rep.cycles,
        "average_power_sim_w": rep.average_power,
        "aoi_theory": ev.aoi,
        "average_power_w": ev.power,
    }


def run_optimize(spec: ExperimentSpec, annealed: bool) -> OptimizationResult:
    onoff = optimize_onoff(spec.pbar, spec.model, spec.rate, spec.states, spec.tau_max)
    if not annealed:
        return onoff
    return anneal(onoff.policy, spec.annealing(), spec.pbar, spec.model, spec.rate)


def sweep_point(spec: ExperimentSpec, index: int) -> dict:
    """One sweep row; failures are recorded in the ``error`` column."""
    dbw = spec.pbar_grid_dbw[index]
    pbar = dbw_to_watts(dbw)
    model = spec.model
    row = {"pbar_dbw": dbw}
    try:
        row["aoi_const"] = evaluate_policy(PowerPolicy.constant(pbar, spec.states), model, spec.rate).aoi
        onoff = optimize_onoff(pbar, model, spec.rate, spec.states, spec.tau_max)
        row["aoi_onoff"] = onoff.aoi
        sa = anneal(onoff.policy, spec.annealing(sub_seed(spec.seed, index, 0)), pbar, model, spec.rate)
        row["aoi_sa"] = sa.aoi
        if spec.simulate:
            rep = simulate(SimConfig(sa.policy, model, spec.rate, spec.slots, sub_seed(spec.seed, index, 1)))
            row["aoi_sim_sa"] = rep.aoi
            row["ci_halfwidth"] = rep.ci_halfwidth
    except (AoIError, ValueError) as exc:
        log.warning("sweep point %s dBW failed: %s", dbw, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep_columns(spec: ExperimentSpec) -> tuple:
    return SWEEP_COLUMNS + (SIM_COLUMNS if spec.simulate else ()) + ("error",)


def run_sweep(spec: ExperimentSpec) -> list[dict]:
    """Rows in grid order, whatever the number of worker processes."""
    idx = range(len(spec.pbar_grid_dbw))
    if spec.jobs == 1:
        return [sweep_point(spec, i) for i in idx]
    with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
        return list(pool.map(sweep_point, [spec] * len(idx), idx))


# -- argument handling ------------------------------------------------------

def _grid(values):
    out = []
    for v in values:
        out.extend(float(x) for x in str(v).split(",") if x.strip())
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--rate", type=float, help="rate R in bits/slot (default 1)")
    common.add_argument("--pbar-dbw", dest="pbar_dbw", type=float, help="power budget in dBW")
    common.add_argument("--pbar-grid-dbw", dest="pbar_grid_dbw", nargs="+",
                        help="sweep grid in dBW, space or comma separated")
    common.add_argument("--states", type=int, help="tracked NACK states M (default 300)")
    common.add_argument("--channel", help="fading model (default rayleigh)")
    common.add_argument("--t0", type=float, help="initial annealing temperature")
    common.add_argument("--tmin", type=float, help="stopping temperature")
    common.add_argument("--candidates", type=int, help="proposals per temperature stage")
    common.add_argument("--eps-lo", dest="eps_lo", type=float)
    common.add_argument("--eps-hi", dest="eps_hi", type=float)
    common.add_argument("--tau-max", dest="tau_max", type=int, help="largest on-off tau tried")
    common.add_argument("--tau", type=int, help="evaluate the on-off policy with this tau")
    common.add_argument("--policy", help="policy table written by optimize-*")
    common.add_argument("--slots", type=int, help="simulated slots (default 1e6)")
    common.add_argument("--seed", type=int)
    common.add_argument("--simulate", action="store_true", help="add Monte Carlo columns to sweeps")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aoipower", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_spec(argv=None) -> tuple[ExperimentSpec, bool]:
    args = vars(build_parser().parse_args(argv))
    verbose = args.pop("verbose", False)
    values = {}
    config = args.pop("config", None)
    if config:
        values.update(json.loads(Path(config).read_text()))
    values.update(args)
    if "pbar_grid_dbw" in values:
        values["pbar_grid_dbw"] = _grid(values["pbar_grid_dbw"])
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = set(values) - known
    if unknown:
        raise SystemExit(f"unknown option(s): {', '.join(sorted(unknown))}")
    return ExperimentSpec(**values), verbose


def _emit(spec: ExperimentSpec, columns, rows, header):
    if spec.out:
        write_table(spec.out, columns, rows, header, spec.format)
        return
    if spec.format == "json":
        doc = dict(header, columns=list(columns), rows=rows)
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row.get(c) is None else row.get(c) for c in columns])


def main(argv=None) -> int:
    spec, verbose = resolve_spec(argv)
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    header = {"spec": spec.manifest(), "seed": spec.seed}
    try:
        if spec.command == "sweep":
            _emit(spec, sweep_columns(spec), run_sweep(spec), header)
        elif spec.command in ("optimize-onoff", "optimize-sa"):
            result = run_optimize(spec, spec.command == "optimize-sa")
            if spec.out:
                export_policy(result, spec.out, spec.format, spec.manifest())
            else:
                header.update(aoi_min=result.aoi, average_power_w=result.average_power)
                _emit(spec, POLICY_COLUMNS, policy_rows(result), header)
            print(f"aoi_min={result.aoi!r} average_power_w={result.average_power!r}", file=sys.stderr)
        else:
            row = run_evaluate(spec) if spec.command == "evaluate" else run_simulate(spec)
            _emit(spec, tuple(row), [row], header)
    except (AoIError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
