"""Receding-horizon evaluation of deployment policies on simulated rate paths.

Experiment specs are line-oriented like the instance format::

    experiment monroy
    instance monroy_standin.txt
    periods 5
    seeds 1-30
    rho 10
    h 0.1
    defaults mu 0.5 theta 0.1 sigma 0 s0 0.68
    link 2 3 sigma 0.1 r0 0.5 s0 1
    policy static
    policy myopic
    policy sdairp T 2 M 5 P 100
    baseline myopic

``defaults`` sets per-arc parameters for every demanded arc, ``link``
overrides them for one arc; ``r0`` falls back to ``mu``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .graph import DATA_DIR, InstanceError, Network, load
from .milp import SolverConfig
from .policy import (DecisionRecord, Router, SdairpConfig, StateSnapshot, lsm_decide,
                     myopic_decide, static_decide, static_schedule)
from .stochastic import OUParams, simulate_paths

TRUTH_NAMESPACE = (0,)
POLICY_KINDS = ("static", "myopic", "sdairp")


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    label: str
    options: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass
class ExperimentSpec:
    net: Network
    params: tuple
    s0: tuple
    seeds: tuple
    periods: int
    policies: tuple
    rho: tuple
    h: tuple
    baseline: str | None = None
    name: str = ""
    threads: int = 1
    static_nodes: int = 20000

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise InstanceError("seeds must be distinct")
        if self.periods < 0:
            raise InstanceError("periods must be >= 0")
        m = self.net.m
        for what in ("params", "s0", "rho", "h"):
            if len(getattr(self, what)) != m:
                raise InstanceError(f"{what} needs one entry per arc ({m})")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise InstanceError("policy labels must be unique")
        if self.baseline is not None and self.baseline not in labels:
            raise InstanceError(f"baseline {self.baseline!r} is not in the roster")

    @property
    def mu(self) -> np.ndarray:
        return np.array([p.mu for p in self.params])

    def policy(self, label: str) -> PolicySpec:
        for p in self.policies:
            if p.label == label:
                return p
        raise KeyError(label)


def _range(token, ln):
    out = []
    for part in token.split(","):
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise InstanceError("empty seed list", ln)
    return out


def _kv(tokens, ln):
    if len(tokens) % 2:
        raise InstanceError("expected key/value pairs", ln)
    return {tokens[k]: tokens[k + 1] for k in range(0, len(tokens), 2)}


_ARC_KEYS = {"mu", "theta", "sigma", "r0", "s0", "rho", "h", "threshold"}


def _policy(tokens, ln) -> PolicySpec:
    kind = tokens[0].lower()
    if kind not in POLICY_KINDS:
        raise InstanceError(f"unknown policy {tokens[0]!r}", ln)
    kv = _kv(tokens[1:], ln)
    label = kv.pop("name", None)
    opts = {}
    try:
        for key, val in kv.items():
            if kind == "sdairp" and key in ("T", "M", "P"):
                opts[key] = int(val)
            elif kind == "sdairp" and key == "apriori":
                opts[key] = val
            elif kind == "myopic" and key == "threshold":
                opts[key] = float(val)
            elif kind == "static" and key == "nodes":
                opts[key] = int(val)
            else:
                raise InstanceError(f"option {key!r} not valid for {kind}", ln)
    except ValueError as exc:
        raise InstanceError(str(exc), ln) from None
    if label is None:
        if kind == "sdairp":
            label = f"SDAIRP(T={opts.get('T', 2)},M={opts.get('M', 5)})"
        else:
            label = kind
    return PolicySpec(kind, label, opts)


def parse_experiment(text: str, base: Path | None = None) -> ExperimentSpec:
    kv_top: dict = {}
    defaults: dict = {}
    links: dict = {}
    policies = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        key = tokens[0]
        if key in ("experiment", "instance", "periods", "seeds", "rho", "h", "baseline",
                   "binarize", "threads"):
            if len(tokens) != 2:
                raise InstanceError(f"{key} takes one value", ln)
            kv_top[key] = (tokens[1], ln)
        elif key == "defaults":
            defaults.update(_kv(tokens[1:], ln))
            if defaults.keys() - _ARC_KEYS:
                raise InstanceError(f"unknown field(s) {sorted(defaults.keys() - _ARC_KEYS)}", ln)
        elif key == "link":
            if len(tokens) < 3:
                raise InstanceError("link needs two endpoints", ln)
            try:
                ij = tuple(sorted((int(tokens[1]), int(tokens[2]))))
            except ValueError:
                raise InstanceError("link endpoints must be integers", ln) from None
            kv = _kv(tokens[3:], ln)
            if kv.keys() - _ARC_KEYS:
                raise InstanceError(f"unknown field(s) {sorted(kv.keys() - _ARC_KEYS)}", ln)
            links.setdefault(ij, {}).update(kv)
            links[ij]["_line"] = ln
        elif key == "policy":
            if len(tokens) < 2:
                raise InstanceError("policy needs a kind", ln)
            policies.append(_policy(tokens[1:], ln))
        else:
            raise InstanceError(f"unknown record {key!r}", ln)
    if "instance" not in kv_top:
        raise InstanceError("missing 'instance' record")
    if not policies:
        raise InstanceError("empty policy roster")
    path_token = kv_top["instance"][0]
    path = Path(path_token)
    if not path.is_absolute():
        cands = [(base or Path.cwd()) / path, DATA_DIR / path]
        path = next((c for c in cands if c.exists()), cands[0])
    binarize = kv_top.get("binarize", ("no", 0))[0].lower() in ("1", "yes", "true")
    try:
        net = load(path, binarize=binarize)
    except OSError as exc:
        raise InstanceError(f"cannot read instance {path_token}: {exc}") from None

    def num(key, default):
        val, ln = kv_top.get(key, (default, 0))
        try:
            return float(val)
        except ValueError:
            raise InstanceError(f"{key} must be numeric", ln) from None

    params, s0, rho, h, thr = [], [], [], [], []
    for arc in net.arcs:
        fields = dict(defaults)
        fields.update(links.pop(arc.key, {}))
        fields.pop("_line", None)
        try:
            mu = float(fields.get("mu", 0.0))
            params.append(OUParams(mu, float(fields.get("theta", 1.0)),
                                   float(fields.get("sigma", 0.0)), float(fields.get("r0", mu))))
            s0.append(float(fields.get("s0", arc.q)))
            rho.append(float(fields.get("rho", num("rho", 10.0))))
            h.append(float(fields.get("h", num("h", 0.0))))
            thr.append(float(fields.get("threshold", mu)))
        except ValueError as exc:
            raise InstanceError(f"arc {arc}: {exc}") from None
    if links:
        ij, kv = next(iter(links.items()))
        raise InstanceError(f"link {ij} is not an arc of the instance", kv.get("_line"))
    policies = [replace(p, options={**p.options, "_thresholds": tuple(thr)})
                if p.kind == "myopic" and "threshold" not in p.options else p for p in policies]
    seeds_tok, ln = kv_top.get("seeds", ("0", 0))
    try:
        seeds = tuple(_range(seeds_tok, ln))
        periods = int(kv_top.get("periods", ("5", 0))[0])
        threads = int(kv_top.get("threads", ("1", 0))[0])
    except ValueError:
        raise InstanceError("seeds, periods and threads must be integers") from None
    return ExperimentSpec(net, tuple(params), tuple(s0), seeds, periods, tuple(policies),
                          tuple(rho), tuple(h), kv_top.get("baseline", (None, 0))[0],
                          kv_top.get("experiment", ("", 0))[0], threads)


def load_experiment(path) -> ExperimentSpec:
    path = Path(path)
    if not path.exists() and (DATA_DIR / path.name).exists():
        path = DATA_DIR / path.name
    return parse_experiment(path.read_text(), path.parent)


# -- running ----------------------------------------------------------------------


class Evaluator:
    """Runs policies of one experiment; shares routers and the static schedule."""

    def __init__(self, spec: ExperimentSpec, routing: str = "auto",
                 cfg: SolverConfig | None = None):
        self.spec = spec
        self.router = Router(spec.net, routing, cfg)
        self._schedules: dict = {}

    def truth(self, seed: int) -> np.ndarray:
        """Realised rates ``(periods + 1, m)``; row 0 holds the initial rates."""
        horizon = max(self.spec.periods, 1)
        paths = simulate_paths(self.spec.params, 1, horizon, seed, TRUTH_NAMESPACE)
        return paths.rates[0, : self.spec.periods + 1]

    def schedule(self, pol: PolicySpec):
        key = pol.options.get("nodes", self.spec.static_nodes)
        if key not in self._schedules:
            spec = self.spec
            self._schedules[key] = static_schedule(
                spec.net, max(spec.periods, 1), spec.s0, spec.mu, spec.h, self.router,
                SolverConfig(node_limit=key))
        return self._schedules[key]

    def sdairp_config(self, pol: PolicySpec, seed: int) -> SdairpConfig:
        o = pol.options
        return SdairpConfig(horizon=o.get("T", 2), paths=o.get("P", 100), basis=o.get("M", 5),
                            rho=self.spec.rho, h=self.spec.h, a_priori=o.get("apriori", "cyclic"),
                            seed=seed)

    def run(self, pol: PolicySpec | str, seed: int, trace: list | None = None) -> list:
        spec = self.spec
        if isinstance(pol, str):
            pol = spec.policy(pol)
        rates = self.truth(seed)
        s = np.array(spec.s0, dtype=float)
        ledger = []
        for t in range(1, spec.periods + 1):
            state = StateSnapshot(t, tuple(s - rates[t]), tuple(rates[t]))
            if pol.kind == "static":
                rec = static_decide(self.schedule(pol), state, spec.net, spec.h, spec.rho)
            elif pol.kind == "myopic":
                thr = pol.options.get("threshold", pol.options.get("_thresholds", spec.mu))
                rec = myopic_decide(state, thr, spec.net, self.router, spec.h, spec.rho)
            else:
                rec = lsm_decide(state, self.sdairp_config(pol, seed), spec.net, spec.params,
                                 self.router, trace)
            ledger.append(rec)
            s = np.array(rec.post)
        return ledger

    def run_all(self, threads: int | None = None) -> dict:
        """``{label: [ledger per seed]}`` for the whole roster."""
        threads = threads or self.spec.threads
        out = {}
        for pol in self.spec.policies:
            if pol.kind == "static":
                self.schedule(pol)  # build once before fanning out
            jobs = [(pol, seed) for seed in self.spec.seeds]
            if threads > 1:
                with ThreadPoolExecutor(threads) as pool:
                    out[pol.label] = list(pool.map(lambda j: self.run(*j), jobs))
            else:
                out[pol.label] = [self.run(*j) for j in jobs]
        return out


def run_realization(spec: ExperimentSpec, policy, seed: int) -> list:
    return Evaluator(spec).run(policy, seed)


# -- summaries ---------------------------------------------------------------------


@dataclass
class Summary:
    """Mean X/H/O per policy and period, with totals and baseline deltas."""

    periods: int
    means: dict  # label -> array (periods, 3)
    counts: dict
    totals_se: dict
    baseline: str | None = None

    def total(self, label: str) -> float:
        return float(self.means[label].sum())

    def delta(self, label: str) -> float | None:
        """``(total - baseline) / baseline``, or ``None`` when undefined."""
        if self.baseline is None:
            return None
        base = self.total(self.baseline)
        if base == 0.0:
            return None
        return (self.total(label) - base) / base

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["policy", "period", "X", "H", "O", "total"])
        for label, arr in self.means.items():
            for t, (x, hh, o) in enumerate(arr, start=1):
                w.writerow([label, t, _f(x), _f(hh), _f(o), _f(x + hh + o)])
            tx, th, to = arr.sum(axis=0)
            w.writerow([label, "Total", _f(tx), _f(th), _f(to), _f(tx + th + to)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {"periods": self.periods, "baseline": self.baseline, "policies": {}}
        for label, arr in self.means.items():
            d = self.delta(label)
            out["policies"][label] = {
                "realizations": self.counts[label],
                "periods": [{"X": float(x), "H": float(hh), "O": float(o),
                             "total": float(x + hh + o)} for x, hh, o in arr],
                "X": float(arr[:, 0].sum()), "H": float(arr[:, 1].sum()),
                "O": float(arr[:, 2].sum()), "total": self.total(label),
                "total_se": self.totals_se[label],
                "delta_vs_baseline": "N/A" if d is None else d,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _f(v) -> str:
    return f"{float(v):.4f}"


def format_delta(d: float | None) -> str:
    return "N/A" if d is None else f"{100.0 * d:+.1f}%"


def aggregate(results: dict, baseline: str | None = None) -> Summary:
    """Average ledgers over realizations; ``results`` maps label -> list of ledgers."""
    periods = None
    means, counts, se = {}, {}, {}
    for label, ledgers in results.items():
        if not ledgers:
            raise ValueError(f"policy {label!r} has no realizations")
        lens = {len(led) for led in ledgers}
        if len(lens) != 1 or (periods is not None and lens != {periods}):
            raise ValueError("ledgers have mismatched horizons")
        periods = lens.pop()
        arr = np.array([[[r.X, r.H, r.O] for r in led] for led in ledgers], dtype=float)
        arr = arr.reshape(len(ledgers), periods, 3)
        means[label] = arr.mean(axis=0)
        counts[label] = len(ledgers)
        tot = arr.sum(axis=(1, 2))
        se[label] = float(tot.std(ddof=1) / math.sqrt(len(tot))) if len(tot) > 1 else 0.0
    if baseline is not None and baseline not in means:
        raise ValueError(f"baseline {baseline!r} has no results")
    return Summary(periods or 0, means, counts, se, baseline)


def inventory_log(spec: ExperimentSpec, results: dict) -> str:
    """Per-arc pre/post inventories of every realization as CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["policy", "seed", "period", "i", "j", "pre", "post", "monitored", "stockout"])
    for label, ledgers in results.items():
        for seed, led in zip(spec.seeds, ledgers):
            for rec in led:
                sel = set(rec.selected)
                for a, arc in enumerate(spec.net.arcs):
                    if arc.q == 0:
                        continue
                    w.writerow([label, seed, rec.t, arc.key[0], arc.key[1],
                                f"{rec.pre[a]:.6f}", f"{rec.post[a]:.6f}",
                                int(a in sel), int(rec.pre[a] < 0)])
    return buf.getvalue()


def ledger_json(net: Network, ledger: list) -> str:
    return json.dumps([rec.to_dict(net) for rec in ledger], sort_keys=True)
