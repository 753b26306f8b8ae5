"""Command-line interface.

Exit codes: 0 success (optimal), 1 bad input, 2 infeasible, 3 node or time
limit reached, 4 replay mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import (Evaluator, aggregate, format_delta, inventory_log, ledger_json,
                         load_experiment)
from .formulations import (AirpInstance, WalkTable, build_airp_model, build_carp_model,
                           extract_routes)
from .graph import InstanceError, load
from .milp import INFEASIBLE, OPTIMAL, SolverConfig, enumerate_oracle, solve_mip
from .stochastic import simulate_paths

log = logging.getLogger("sdairp")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_LIMIT, EXIT_MISMATCH = 0, 1, 2, 3, 4
MANIFEST = "manifest.json"
ORACLE_MAX_BINARIES = 20


@dataclass
class RunManifest:
    command: str
    argv: list
    instance: str | None = None
    config: str | None = None
    seeds: list = field(default_factory=list)
    out: str = "."
    version: str = __version__
    wall_time: float = 0.0
    outputs: dict = field(default_factory=dict)  # file name -> sha256

    def write(self, out_dir: Path) -> Path:
        return _atomic_write(out_dir / MANIFEST, json.dumps(asdict(self), indent=2,
                                                            sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


class _Run:
    """Collects output files and writes the manifest when done."""

    def __init__(self, args, argv):
        self.out = Path(args.out)
        self.manifest = RunManifest(args.command, list(argv), getattr(args, "instance", None),
                                    getattr(args, "experiment", None), out=str(self.out))
        self.start = time.perf_counter()

    def emit(self, name: str, text: str) -> None:
        path = _atomic_write(self.out / name, text)
        self.manifest.outputs[name] = _sha256(path)

    def finish(self, code: int) -> int:
        self.manifest.wall_time = time.perf_counter() - self.start
        self.manifest.write(self.out)
        return code


def _cfg(args) -> SolverConfig:
    return SolverConfig(node_limit=args.node_limit, time_limit=args.time_limit)


def _status_code(status: str) -> int:
    if status == OPTIMAL:
        return EXIT_OK
    if status == INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


def _floats(text: str, m: int, what: str):
    vals = [float(v) for v in text.split(",")]
    if len(vals) == 1:
        return tuple(vals * m)
    if len(vals) != m:
        raise InstanceError(f"--{what} needs 1 or {m} comma-separated values")
    return tuple(vals)


def cmd_solve_carp(args, run: _Run) -> int:
    net = load(args.instance, binarize=args.binarize)
    model = build_carp_model(net, symmetry_breaking=not args.no_symmetry)
    sol = solve_mip(model, _cfg(args))
    log.info("CARP %s: %s objective=%s nodes=%d", net.name, sol.status, sol.objective, sol.nodes)
    if args.oracle:
        nb = len(model.binaries)
        if nb > ORACLE_MAX_BINARIES:
            log.info("oracle: %d binaries; cross-checking with the walk table instead", nb)
            ref = WalkTable(net).carp_cost(net.demanded)
            ref_status = OPTIMAL if np.isfinite(ref) else INFEASIBLE
        else:
            o = enumerate_oracle(model)
            ref, ref_status = o.objective, o.status
        if sol.status in (OPTIMAL, INFEASIBLE):
            same = ref_status == sol.status and (
                sol.status != OPTIMAL or abs(ref - sol.objective) <= 1e-6)
            if not same:
                print(f"oracle mismatch: solver {sol.status} {sol.objective}, "
                      f"oracle {ref_status} {ref}", file=sys.stderr)
                return EXIT_MISMATCH
        print(f"oracle: {ref_status} {ref}")
    run.emit("solution.json", json.dumps(sol.to_dict(model), indent=2, sort_keys=True) + "\n")
    if sol.status == OPTIMAL:
        routes = extract_routes(model, sol, 1)
        run.emit("routes.json", json.dumps(routes.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"{sol.status} objective={sol.objective} nodes={sol.nodes}")
    return _status_code(sol.status)


def cmd_solve_airp(args, run: _Run) -> int:
    net = load(args.instance, binarize=args.binarize)
    rates = _floats(args.rates, net.m, "rates")
    s0 = _floats(args.s0, net.m, "s0") if args.s0 else tuple(float(a.q) for a in net.arcs)
    inst = AirpInstance(net, args.horizon, _floats(args.h, net.m, "h"), rates, s0)
    model = build_airp_model(inst)
    sol = solve_mip(model, _cfg(args))
    log.info("AIRP %s: %s objective=%s nodes=%d", net.name, sol.status, sol.objective, sol.nodes)
    run.emit("solution.json", json.dumps(sol.to_dict(model), indent=2, sort_keys=True) + "\n")
    if sol.status == OPTIMAL:
        for t in range(1, args.horizon + 1):
            routes = extract_routes(model, sol, t)
            run.emit(f"routes_t{t}.json", json.dumps(routes.to_dict(), indent=2,
                                                     sort_keys=True) + "\n")
    print(f"{sol.status} objective={sol.objective} nodes={sol.nodes}")
    return _status_code(sol.status)


def cmd_simulate(args, run: _Run) -> int:
    spec = load_experiment(args.experiment)
    horizon = args.horizon or max(spec.periods, 1)
    seed = args.seed if args.seed is not None else spec.seeds[0]
    run.manifest.seeds = [seed]
    paths = simulate_paths(spec.params, args.paths or 1, horizon, seed)
    run.emit("paths.csv", paths.to_csv())
    print(f"simulated {paths.P} paths over {horizon} periods")
    return EXIT_OK


def _override(spec, args):
    if args.seed is not None:
        spec = replace(spec, seeds=(args.seed,))
    if args.rho is not None:
        spec = replace(spec, rho=_floats(args.rho, spec.net.m, "rho"))
    pols = []
    for p in spec.policies:
        if p.kind == "sdairp":
            opts = dict(p.options)
            for flag, key in ((args.paths, "P"), (args.basis, "M"), (args.horizon, "T")):
                if flag is not None:
                    opts[key] = flag
            p = replace(p, options=opts)
        pols.append(p)
    return replace(spec, policies=tuple(pols))


def cmd_policy_eval(args, run: _Run) -> int:
    spec = _override(load_experiment(args.experiment), args)
    run.manifest.seeds = list(spec.seeds)
    ev = Evaluator(spec, cfg=_cfg(args))
    start = time.perf_counter()
    results = ev.run_all(args.threads)
    log.info("evaluated %d policies x %d seeds in %.1fs", len(spec.policies), len(spec.seeds),
             time.perf_counter() - start)
    summary = aggregate(results, spec.baseline)
    run.emit("summary.csv", summary.to_csv())
    run.emit("summary.json", summary.to_json() + "\n")
    run.emit("inventory.csv", inventory_log(spec, results))
    ledgers = {label: [json.loads(ledger_json(spec.net, led)) for led in leds]
               for label, leds in results.items()}
    run.emit("ledgers.json", json.dumps(ledgers, sort_keys=True) + "\n")
    for p in spec.policies:
        delta = format_delta(summary.delta(p.label)) if spec.baseline else ""
        print(f"{p.label:<20} total={summary.total(p.label):10.4f} {delta}")
    return EXIT_OK


def cmd_replay(args, run_unused=None) -> int:
    manifest = RunManifest.read(args.manifest)
    with tempfile.TemporaryDirectory() as tmp:
        argv = list(manifest.argv)
        if "--out" in argv:
            argv[argv.index("--out") + 1] = tmp
        else:
            argv += ["--out", tmp]
        code = main(argv)
        if code not in (EXIT_OK, EXIT_INFEASIBLE, EXIT_LIMIT):
            return code
        fresh = RunManifest.read(Path(tmp) / MANIFEST)
    bad = [name for name in sorted(set(manifest.outputs) | set(fresh.outputs))
           if manifest.outputs.get(name) != fresh.outputs.get(name)]
    for name in bad:
        print(f"mismatch: {name}", file=sys.stderr)
    if bad:
        return EXIT_MISMATCH
    print(f"replay ok: {len(manifest.outputs)} outputs identical")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdairp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("instance")
            sp.add_argument("--binarize", action="store_true",
                            help="serve every positive-demand edge (q = 1)")
        sp.add_argument("--node-limit", type=int)
        sp.add_argument("--time-limit", type=float)
        sp.add_argument("--out", default=".")

    sp = sub.add_parser("solve-carp", help="solve the capacitated arc routing model")
    common(sp)
    sp.add_argument("--oracle", action="store_true", help="cross-check with an exact oracle")
    sp.add_argument("--no-symmetry", action="store_true", help="drop vehicle symmetry breaking")

    sp = sub.add_parser("solve-airp", help="solve the deterministic arc inventory routing model")
    common(sp)
    sp.add_argument("--horizon", type=int, default=5)
    sp.add_argument("--rates", default="0", help="consumption rate r (scalar or per arc)")
    sp.add_argument("--h", default="0.1", help="holding cost (scalar or per arc)")
    sp.add_argument("--s0", help="initial inventory (scalar or per arc; default q)")

    for name, helptext in (("simulate", "simulate rate paths of an experiment"),
                           ("policy-eval", "evaluate the policies of an experiment")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("experiment")
        common(sp, instance=False)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--paths", type=int)
        sp.add_argument("--horizon", type=int)
        if name == "policy-eval":
            sp.add_argument("--basis", type=int)
            sp.add_argument("--rho")
            sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("replay", help="re-run a manifest and verify its outputs")
    sp.add_argument("manifest")
    return p


COMMANDS = {"solve-carp": cmd_solve_carp, "solve-airp": cmd_solve_airp,
            "simulate": cmd_simulate, "policy-eval": cmd_policy_eval}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            return cmd_replay(args)
        run = _Run(args, argv)
        code = COMMANDS[args.command](args, run)
        return run.finish(code)
    except (InstanceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
