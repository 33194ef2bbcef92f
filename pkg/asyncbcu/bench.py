# Copyright 2026 The asyncbcu developers, MIT license
"""
Command-line harness: experiment plans, runs, speedup tables,
instance verification and generation.

   asyncbcu run PLAN.ini        one CSV trace per (cell, seed) and
                                summary.json
   asyncbcu speedup PLAN.ini    sync vs async timing table
   asyncbcu verify INPUT        invariant suite on an instance file
                                (.npz) or the instance of a plan
   asyncbcu gen -o OUT.npz      generate an instance

Exit codes: 0 success, 1 usage or plan error, 2 numerical, oracle or
engine failure (including failed checks, and async throughput below
MIN_ASYNC_RATIO of sync at 4 nodes), 3 I/O.

**Classes**

   * ExperimentPlan - a parsed plan file
   * Cell           - one run of an experiment

**Functions**

   * parse_plan, expand_cells, run_cell, speedup_table,
     async_throughput_ratio
   * cmd_run, cmd_speedup, cmd_verify, cmd_gen, main

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import argparse
import configparser
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from asyncbcu import checks
from asyncbcu.delay import run_simulated_delay
from asyncbcu.errors import (EngineError, IngestionError, OracleFailure,
                             ParameterError, PlanError, StateError,
                             StructuralError, UnsupportedError)
from asyncbcu.instances import (GeneratorSpec, generate, load_instance,
                                reference_solve, save_instance)
from asyncbcu.parallel import (EngineConfig, delay_stats, run_async,
                               run_sync_parallel)
from asyncbcu.problem import saddle_gap
from asyncbcu.serial import RunConfig, lalm_instance, run
from asyncbcu.stepsize import (async_plan, ensure_lipschitz, serial_plan,
                               sync_plan)
from asyncbcu.trace import RunTrace, json_default

logger = logging.getLogger(__name__)

EXPERIMENTS = ("bp_beta_sweep", "bp_q_sweep", "ncqp_delay", "svm_parallel",
               "custom")
MODES = ("serial", "lalm", "delay", "async", "sync")

FAMILY_OF = {"bp_beta_sweep": "basis_pursuit", "bp_q_sweep": "basis_pursuit",
             "ncqp_delay": "ncqp", "svm_parallel": "dual_svm"}
DEFAULT_BETAS = {"basis_pursuit": [1.0, 10.0, 100.0],
                 "ncqp": [float(np.sqrt(2.0))],
                 "dual_svm": [0.1]}

OUTPUT_ENV     = "ASYNCBCU_OUTPUT_DIR"
DEFAULT_OUTPUT = "asyncbcu-results"

# async iterations/sec at RATIO_NODES must reach this share of sync
MIN_ASYNC_RATIO = 0.95
RATIO_NODES     = 4

KEYS = {"experiment": {"name", "seeds", "output_dir"},
        "instance": {"family", "seed", "q", "n", "nnz", "block_count",
                     "block_width", "c", "source", "n_samples",
                     "n_features", "density", "reference"},
        "solver": {"modes", "betas", "qs", "taus", "stepsize", "alpha", "rho",
                   "workers", "epochs", "trace_every", "feas_tol", "timing",
                   "drop_older_than"}}

#-------------------------------------------------------------------------
# Plan files
#-------------------------------------------------------------------------

@dataclass
class ExperimentPlan:

    """
    A parsed plan file. `workers` counts nodes p (master included).

    |

    """

    experiment: str
    instance: GeneratorSpec
    seeds: list
    output_dir: Optional[str] = None
    reference: bool = False
    modes: list = field(default_factory=lambda: ["serial"])
    betas: list = field(default_factory=lambda: [1.0])
    qs: list = field(default_factory=list)
    taus: list = field(default_factory=lambda: [0])
    stepsize: str = "dependent"
    alpha: float = 1.0
    rho: Optional[float] = None
    workers: list = field(default_factory=lambda: [1])
    epochs: int = 100
    trace_every: int = 1
    feas_tol: Optional[float] = None
    timing: bool = True
    drop_older_than: Optional[int] = None

    def as_dict(self):
        out = dataclasses.asdict(self)
        out["instance"] = self.instance.as_dict()
        return out


def _as_bool(text):
    value = text.strip().lower()
    if (value in ("1", "yes", "true", "on")):
        return True
    if (value in ("0", "no", "false", "off")):
        return False
    raise ValueError("not a boolean: %r" % text)


def _as_list(conv):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        return [conv(t) for t in items]
    return parse


class _Reader:
    """configparser access that reports the dotted field on errors."""

    def __init__(self, cp):
        self.cp = cp

    def get(self, section, key, conv=str, default=None):
        if (not self.cp.has_option(section, key)):
            return default
        try:
            return conv(self.cp.get(section, key))
        except ValueError as exc:
            raise PlanError("%s.%s" % (section, key), str(exc))


def parse_plan(path):
    """
    Reads an INI plan file (sections [experiment], [instance],
    [solver]; lists are comma separated).

    *Returns*

    plan : ExperimentPlan

    |

    """

    path = Path(path)
    cp   = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        try:
            cp.read_file(fh)
        except configparser.Error as exc:
            raise PlanError("file", str(exc).splitlines()[0])

    for section in cp.sections():
        if (section not in KEYS):
            raise PlanError(section, "unknown section")
        for key in cp.options(section):
            if (key not in KEYS[section]):
                raise PlanError("%s.%s" % (section, key), "unknown key")
    if (not cp.has_section("experiment")):
        raise PlanError("experiment", "section missing")
    rd = _Reader(cp)

    name = rd.get("experiment", "name", default="custom")
    if (name not in EXPERIMENTS):
        raise PlanError("experiment.name", "unknown experiment %r" % name)
    seeds = rd.get("experiment", "seeds", _as_list(int), [0])
    if (not seeds):
        raise PlanError("experiment.seeds", "must not be empty")

    family = rd.get("instance", "family", default=FAMILY_OF.get(name))
    if (family is None):
        raise PlanError("instance.family", "required for custom experiments")
    if (name in FAMILY_OF and family != FAMILY_OF[name]):
        raise PlanError("instance.family", "%s needs %s"
                        % (name, FAMILY_OF[name]))

    source = rd.get("instance", "source")
    if (source is not None):
        source = Path(source)
        if (not source.is_absolute()):
            source = path.parent/source
        if (not source.exists()):
            raise PlanError("instance.source", "no such file: %s" % source)
        source = str(source)

    qs = rd.get("solver", "qs", _as_list(int), [])
    if (name == "bp_q_sweep" and not qs):
        raise PlanError("solver.qs", "bp_q_sweep needs a list of q")
    try:
        spec = GeneratorSpec(
            family=family,
            seed=rd.get("instance", "seed", int, 0),
            q=qs[0] if qs else rd.get("instance", "q", int, 0),
            n=rd.get("instance", "n", int, 0),
            nnz=rd.get("instance", "nnz", int, 0),
            block_count=rd.get("instance", "block_count", int),
            block_width=rd.get("instance", "block_width", int),
            C=rd.get("instance", "c", float, 10.0),
            source=source,
            n_samples=rd.get("instance", "n_samples", int, 0),
            n_features=rd.get("instance", "n_features", int, 0),
            density=rd.get("instance", "density", float, 0.05))
    except ParameterError as exc:
        raise PlanError("instance", str(exc))

    modes = rd.get("solver", "modes", _as_list(str), None)
    if (modes is None):
        modes = (["serial", "lalm"] if family == "basis_pursuit"
                 else ["serial"])
    for mode in modes:
        if (mode not in MODES):
            raise PlanError("solver.modes", "unknown mode %r" % mode)

    stepsize = rd.get("solver", "stepsize", default="dependent")
    if (stepsize not in ("dependent", "independent")):
        raise PlanError("solver.stepsize", "dependent or independent")

    workers = rd.get("solver", "workers", _as_list(int), [1])
    if (not workers or min(workers) < 1):
        raise PlanError("solver.workers", "node counts must be >= 1")
    taus = rd.get("solver", "taus", _as_list(int), [0])
    if (not taus or min(taus) < 0):
        raise PlanError("solver.taus", "delays must be >= 0")
    epochs = rd.get("solver", "epochs", int, 100)
    if (epochs < 1):
        raise PlanError("solver.epochs", "must be >= 1")
    betas = rd.get("solver", "betas", _as_list(float),
                   list(DEFAULT_BETAS[family]))
    if (not betas or min(betas) <= 0.0):
        raise PlanError("solver.betas", "must be positive")

    return ExperimentPlan(
        experiment=name, instance=spec, seeds=seeds,
        output_dir=rd.get("experiment", "output_dir"),
        reference=rd.get("instance", "reference", _as_bool, False),
        modes=modes, betas=betas, qs=qs, taus=taus, stepsize=stepsize,
        alpha=rd.get("solver", "alpha", float, 1.0),
        rho=rd.get("solver", "rho", float),
        workers=workers, epochs=epochs,
        trace_every=rd.get("solver", "trace_every", int, 1),
        feas_tol=rd.get("solver", "feas_tol", float),
        timing=rd.get("solver", "timing", _as_bool, True),
        drop_older_than=rd.get("solver", "drop_older_than", int))

#-------------------------------------------------------------------------
# Cells
#-------------------------------------------------------------------------

@dataclass
class Cell:
    """One (configuration, seed) run of an experiment."""
    label: str
    spec: GeneratorSpec
    mode: str
    beta: float
    seed: int
    tau: int = 0
    nodes: int = 1

    def as_dict(self):
        return {"label": self.label, "mode": self.mode, "beta": self.beta,
                "seed": self.seed, "tau": self.tau, "nodes": self.nodes,
                "q": self.spec.q}


def expand_cells(plan):
    """
    The runs of a plan, in a fixed order.

    *Notes*

       bp_beta_sweep : every beta x mode
       bp_q_sweep    : every q with beta = sqrt(q), x mode
       ncqp_delay    : every tau, delay simulator
       svm_parallel  : every node count, sync and async engines
       custom        : every beta x mode, first tau and node count

    |

    """

    cells = []

    def add(label, spec, mode, beta, **kw):
        for seed in plan.seeds:
            cells.append(Cell(label, spec, mode, float(beta), seed, **kw))

    name = plan.experiment
    if (name == "bp_q_sweep"):
        for q in plan.qs:
            spec = dataclasses.replace(plan.instance, q=q)
            for mode in plan.modes:
                add("q%d-%s" % (q, mode), spec, mode, np.sqrt(q))
    elif (name == "ncqp_delay"):
        for beta in plan.betas:
            for tau in plan.taus:
                add("%s-beta%g-tau%d" % (plan.stepsize, beta, tau),
                    plan.instance, "delay", beta, tau=tau)
    elif (name == "svm_parallel"):
        for beta in plan.betas:
            for p in plan.workers:
                for mode in ("sync", "async"):
                    add("%s-beta%g-p%d" % (mode, beta, p), plan.instance,
                        mode, beta, nodes=p)
    else:
        for beta in plan.betas:
            for mode in plan.modes:
                add("%s-beta%g" % (mode, beta), plan.instance, mode, beta,
                    tau=plan.taus[0], nodes=plan.workers[0])
    return cells


class _Instances:
    """Generated instances, one per distinct spec."""

    def __init__(self, plan):
        self.plan  = plan
        self._seen = {}

    def get(self, spec):
        key = json.dumps(spec.as_dict(), sort_keys=True)
        if (key not in self._seen):
            inst = ensure_lipschitz(generate(spec))
            if (self.plan.reference and inst.optimum is None):
                inst = inst.with_optimum(reference_solve(inst))
            self._seen[key] = inst
        return self._seen[key]


def _stepsizes(plan, cell, instance):
    beta = cell.beta
    if (cell.mode == "delay"):
        if (plan.stepsize == "independent"):
            sp = serial_plan(instance, beta).held_for_delay(cell.tau)
        else:
            sp = async_plan(instance, beta, cell.tau, plan.alpha)
    elif (cell.mode == "sync"):
        sp = sync_plan(instance, beta, cell.nodes)
    elif (cell.mode == "async" and plan.drop_older_than is not None
            and plan.stepsize == "dependent"):
        sp = async_plan(instance, beta, plan.drop_older_than, plan.alpha)
    else:
        sp = serial_plan(instance, beta)
    if (plan.rho is not None):
        sp = sp.with_rho(plan.rho)
    return sp


def run_cell(plan, cell, instance):
    """
    Runs one cell.

    *Returns*

    trace : RunTrace
        header extended with the cell description

    |

    """

    if (cell.mode == "lalm"):
        instance = ensure_lipschitz(lalm_instance(instance))
    sp = _stepsizes(plan, cell, instance)
    logger.info("cell %s seed %d", cell.label, cell.seed)

    if (cell.mode in ("serial", "lalm", "delay")):
        cfg = RunConfig(sp, plan.epochs, cell.seed, plan.trace_every,
                        timing=plan.timing)
        if (cell.mode == "delay"):
            state, trace = run_simulated_delay(instance, cfg, cell.tau)
        else:
            state, trace = run(instance, cfg)
    else:
        cfg = EngineConfig(sp, workers=cell.nodes - 1, seed=cell.seed,
                           max_epochs=plan.epochs,
                           drop_older_than=plan.drop_older_than,
                           trace_every=plan.trace_every, timing=plan.timing)
        if (cell.mode == "async"):
            state, trace, stats = run_async(instance, cfg)
        else:
            state, trace = run_sync_parallel(instance, cfg)
    trace.header["cell"] = cell.as_dict()
    opt = instance.optimum
    if (opt is not None and opt.lambda_star is not None):
        trace.header["saddle_gap"] = float(saddle_gap(instance, state.x, opt))
    return trace


def _summary(plan, cell, trace, csv):
    final = trace.final()
    max_d, mean_d, hist = delay_stats(trace)
    entry = {"cell": cell.as_dict(), "csv": csv, "final": final,
             "max_delay": max_d, "mean_delay": mean_d}
    if ("saddle_gap" in trace.header):
        entry["saddle_gap"] = trace.header["saddle_gap"]
    if (plan.feas_tol is not None):
        entry["epochs_to_feas_tol"] = trace.epochs_to(plan.feas_tol)
    return entry


def _output_dir(args_dir, plan):
    out = (args_dir or plan.output_dir or os.environ.get(OUTPUT_ENV)
           or DEFAULT_OUTPUT)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out

#-------------------------------------------------------------------------
# Commands
#-------------------------------------------------------------------------

def cmd_run(args):
    plan = parse_plan(args.plan)
    if (args.epochs is not None):
        plan.epochs = args.epochs
    if (args.seeds is not None):
        plan.seeds = _as_list(int)(args.seeds)
        if (not plan.seeds):
            raise PlanError("experiment.seeds", "must not be empty")
    out   = _output_dir(args.output_dir, plan)
    cells = expand_cells(plan)
    store = _Instances(plan)
    for cell in cells:
        store.get(cell.spec)

    def work(cell):
        trace = run_cell(plan, cell, store.get(cell.spec))
        name  = "%s-seed%d.csv" % (cell.label, cell.seed)
        trace.to_csv(out/name)
        return _summary(plan, cell, trace, name)

    if (args.jobs > 1):
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(work, cells))
    else:
        entries = [work(cell) for cell in cells]

    with open(out/"summary.json", "w") as fh:
        json.dump({"plan": plan.as_dict(), "runs": entries}, fh, indent=2,
                  sort_keys=True, default=json_default)
    logger.info("wrote %d traces to %s", len(entries), out)
    return 0


def speedup_table(rows):
    """
    Time-to-budget and throughput per engine and node count,
    normalized to p = 1.

    *Parameters*

    rows : list of dict
        keys engine, p, wall_ms, iterations_per_sec

    *Returns*

    table : pandas.DataFrame
        one row per p, columns <engine>_ms, <engine>_ips and
        <engine>_speedup

    |

    """

    frame = pd.DataFrame(rows).groupby(["engine", "p"]).mean().reset_index()
    table = None
    for engine, sub in frame.groupby("engine"):
        sub = sub.set_index("p").sort_index()
        base = sub.loc[1, "wall_ms"] if 1 in sub.index else np.nan
        part = pd.DataFrame({
            engine + "_ms": sub["wall_ms"],
            engine + "_ips": sub["iterations_per_sec"],
            engine + "_speedup": base/sub["wall_ms"]})
        table = part if table is None else table.join(part, how="outer")
    return table.reset_index()


def async_throughput_ratio(table, p=RATIO_NODES):
    """
    async_ips/sync_ips at p nodes of a `speedup_table`, None when p
    was not measured.

    |

    """

    table = table.set_index("p")
    if (p not in table.index):
        return None
    return float(table.loc[p, "async_ips"]/table.loc[p, "sync_ips"])


def cmd_speedup(args):
    plan = parse_plan(args.plan)
    if (args.epochs is not None):
        plan.epochs = args.epochs
    nodes = sorted(set([1] + list(plan.workers)))
    cores = os.cpu_count() or 1
    if (nodes[-1] > cores):
        logger.warning("%d nodes requested on %d cores", nodes[-1], cores)

    plan.timing = True
    out   = _output_dir(args.output_dir, plan)
    store = _Instances(plan)
    beta  = plan.betas[0]
    rows  = []
    for p in nodes:
        for engine in ("sync", "async"):
            for seed in plan.seeds:
                cell  = Cell("%s-p%d" % (engine, p), plan.instance, engine,
                             beta, seed, nodes=p)
                final = run_cell(plan, cell, store.get(plan.instance)).final()
                rows.append({"engine": engine, "p": p,
                             "wall_ms": final["wall_ms"],
                             "iterations_per_sec":
                                 final["iterations_per_sec"]})

    table = speedup_table(rows)
    table.to_csv(out/"speedup.csv", index=False)
    sys.stdout.write(table.to_string(index=False) + "\n")

    ratio = async_throughput_ratio(table)
    if (ratio is None):
        logger.info("no %d-node cells, throughput ratio not checked",
                    RATIO_NODES)
        return 0
    logger.info("async/sync iterations per second at p = %d: %.3f",
                RATIO_NODES, ratio)
    if (ratio < MIN_ASYNC_RATIO):
        logger.error("async throughput %.3f of sync at p = %d, below %.2f",
                     ratio, RATIO_NODES, MIN_ASYNC_RATIO)
        return 2
    return 0


def _load_target(path):
    if (str(path).endswith(".npz")):
        return load_instance(path)
    plan = parse_plan(path)
    return generate(plan.instance)


def cmd_verify(args):
    instance = _load_target(args.input)
    trace = RunTrace.from_csv(args.trace) if args.trace else None
    results = checks.verify(instance, seed=args.seed, trace=trace,
                            solve_reference=not args.no_reference)
    for r in results:
        sys.stdout.write(str(r) + "\n")
    return 0 if all(r.passed for r in results) else 2


def cmd_gen(args):
    if (args.plan is not None):
        spec = parse_plan(args.plan).instance
    else:
        if (args.family is None):
            raise PlanError("family", "give --family or --plan")
        try:
            spec = GeneratorSpec(
                family=args.family, seed=args.seed, q=args.q, n=args.n,
                nnz=args.nnz, block_count=args.block_count,
                block_width=args.block_width, C=args.C, source=args.source,
                n_samples=args.n_samples, n_features=args.n_features,
                density=args.density)
        except ParameterError as exc:
            raise PlanError("instance", str(exc))
    instance = generate(spec)
    if (args.reference and instance.optimum is None):
        instance = instance.with_optimum(reference_solve(instance))
    save_instance(instance, args.output)
    return 0

#-------------------------------------------------------------------------
# Entry point
#-------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors become PlanError (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise PlanError("argv", message)


def build_parser():
    parser = _Parser(prog="asyncbcu",
                     description="Randomized primal-dual block updates: "
                                 "serial, delayed, async and sync runs.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("run", help="run every cell of a plan")
    p.add_argument("plan")
    p.add_argument("--output-dir")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seeds", help="comma separated, overrides the plan")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("speedup", help="sync vs async speedup table")
    p.add_argument("plan")
    p.add_argument("--output-dir")
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_speedup)

    p = sub.add_parser("verify", help="invariant checks of an instance")
    p.add_argument("input", help="instance .npz or plan file")
    p.add_argument("--trace", help="trace CSV to validate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-reference", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--plan")
    p.add_argument("--family")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--nnz", type=int, default=0)
    p.add_argument("--block-count", type=int)
    p.add_argument("--block-width", type=int)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--source")
    p.add_argument("--n-samples", type=int, default=0)
    p.add_argument("--n-features", type=int, default=0)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--reference", action="store_true")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    """
    Runs the CLI and returns the exit code.

    |

    """

    try:
        args = build_parser().parse_args(argv)
    except PlanError as exc:
        logger.error("usage: %s", exc)
        return 1

    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose,
                                                      logging.DEBUG)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PlanError, ParameterError, StructuralError,
            UnsupportedError) as exc:
        logger.error("%s", exc)
        return 1
    except (OracleFailure, EngineError, StateError) as exc:
        logger.error("%s", exc)
        return 2
    except (OSError, IngestionError) as exc:
        logger.error("%s", exc)
        return 3
