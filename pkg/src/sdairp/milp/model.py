"""Mixed-binary linear model container, solver settings and solution record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"

SENSES = ("<=", "=", ">=")


class ModelError(ValueError):
    pass


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = math.inf
    kind: str = CONTINUOUS


@dataclass
class Constraint:
    coefs: dict[int, float]
    sense: str
    rhs: float
    name: str = ""


class LinearModel:
    """A minimisation or maximisation over continuous and binary variables.

    Variables are referenced by the integer index ``add_var`` returns;
    constraints and the objective are sparse ``{index: coefficient}`` maps.
    """

    def __init__(self, name: str = "model", sense: str = "min"):
        self.name = name
        self.vars: list[Variable] = []
        self.constrs: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.obj_constant = 0.0
        self.sense = sense
        self._index: dict[str, int] = {}

    # construction -----------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf,
                kind: str = CONTINUOUS) -> int:
        if name in self._index:
            raise ModelError(f"duplicate variable {name!r}")
        if kind == BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        elif kind != CONTINUOUS:
            raise ModelError(f"unknown variable kind {kind!r}")
        if not lb <= ub:
            raise ModelError(f"variable {name!r}: lb {lb} > ub {ub}")
        self._index[name] = len(self.vars)
        self.vars.append(Variable(name, float(lb), float(ub), kind))
        return len(self.vars) - 1

    def add_binary(self, name: str) -> int:
        return self.add_var(name, 0.0, 1.0, BINARY)

    def add_constr(self, coefs: dict[int, float], sense: str, rhs: float,
                   name: str = "") -> int:
        if sense not in SENSES:
            raise ModelError(f"unknown constraint sense {sense!r}")
        clean = {}
        for k, v in coefs.items():
            v = float(v)
            if not math.isfinite(v):
                raise ModelError(f"non-finite coefficient in {name or 'constraint'}")
            if v != 0.0:
                clean[int(k)] = clean.get(int(k), 0.0) + v
        if not math.isfinite(rhs):
            raise ModelError(f"non-finite rhs in {name or 'constraint'}")
        self.constrs.append(Constraint(clean, sense, float(rhs), name))
        return len(self.constrs) - 1

    def set_objective(self, coefs: dict[int, float], sense: str | None = None,
                      constant: float = 0.0) -> None:
        if sense is not None:
            if sense not in ("min", "max"):
                raise ModelError(f"unknown objective sense {sense!r}")
            self.sense = sense
        self.objective = {int(k): float(v) for k, v in coefs.items() if v != 0.0}
        self.obj_constant = float(constant)

    # queries ------------------------------------------------------------

    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def num_vars(self) -> int:
        return len(self.vars)

    @property
    def binaries(self) -> list[int]:
        return [k for k, v in enumerate(self.vars) if v.kind == BINARY]

    def arrays(self):
        """Dense ``(A, senses, b, c, lb, ub, is_binary)``."""
        n = len(self.vars)
        A = np.zeros((len(self.constrs), n))
        for i, con in enumerate(self.constrs):
            for k, v in con.coefs.items():
                A[i, k] = v
        senses = [con.sense for con in self.constrs]
        b = np.array([con.rhs for con in self.constrs], dtype=float)
        c = np.zeros(n)
        for k, v in self.objective.items():
            c[k] = v
        lb = np.array([v.lb for v in self.vars], dtype=float)
        ub = np.array([v.ub for v in self.vars], dtype=float)
        is_bin = np.array([v.kind == BINARY for v in self.vars], dtype=bool)
        return A, senses, b, c, lb, ub, is_bin

    def objective_value(self, x) -> float:
        return self.obj_constant + sum(v * x[k] for k, v in self.objective.items())

    def violation(self, x) -> float:
        """Largest bound or row violation of assignment ``x``."""
        worst = 0.0
        for k, var in enumerate(self.vars):
            worst = max(worst, var.lb - x[k], x[k] - var.ub)
        for con in self.constrs:
            lhs = sum(v * x[k] for k, v in con.coefs.items())
            if con.sense == "<=":
                worst = max(worst, lhs - con.rhs)
            elif con.sense == ">=":
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst

    def is_feasible(self, x, feas_tol: float = 1e-6, int_tol: float = 1e-6) -> bool:
        if self.violation(x) > feas_tol:
            return False
        return all(abs(x[k] - round(x[k])) <= int_tol for k in self.binaries)

    def relaxed(self) -> "LinearModel":
        """Copy with every binary turned continuous on [0, 1]."""
        out = LinearModel(self.name + "_lp", self.sense)
        for v in self.vars:
            out.add_var(v.name, v.lb, v.ub)
        out.constrs = [Constraint(dict(c.coefs), c.sense, c.rhs, c.name) for c in self.constrs]
        out.objective = dict(self.objective)
        out.obj_constant = self.obj_constant
        return out

    def to_lp(self) -> str:
        """CPLEX-LP text for cross-checking with external solvers."""
        names = [_lp_name(v.name) for v in self.vars]

        def expr(coefs):
            parts = []
            for k, v in sorted(coefs.items()):
                sign = "-" if v < 0 else "+"
                parts.append(f"{sign} {abs(v):.12g} {names[k]}")
            if not parts:
                return "0 " + names[0] if names else "0"
            s = " ".join(parts)
            return s[2:] if s.startswith("+ ") else s

        lines = [f"\\ {self.name}", "Minimize" if self.sense == "min" else "Maximize"]
        lines.append(" obj: " + expr(self.objective))
        lines.append("Subject To")
        for i, con in enumerate(self.constrs):
            label = _lp_name(con.name or f"c{i}")
            lines.append(f" {label}: {expr(con.coefs)} {con.sense} {con.rhs:.12g}")
        lines.append("Bounds")
        for k, v in enumerate(self.vars):
            if v.kind == BINARY:
                continue
            lo = "-inf" if v.lb == -math.inf else f"{v.lb:.12g}"
            hi = "+inf" if v.ub == math.inf else f"{v.ub:.12g}"
            lines.append(f" {lo} <= {names[k]} <= {hi}")
        bins = [names[k] for k in self.binaries]
        if bins:
            lines.append("Binary")
            for i in range(0, len(bins), 8):
                lines.append(" " + " ".join(bins[i:i + 8]))
        lines.append("End")
        return "\n".join(lines) + "\n"


def _lp_name(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "_." else "_" for ch in name)


@dataclass
class SolverConfig:
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    gap: float = 0.0
    node_limit: int | None = None
    time_limit: float | None = None
    record_nodes: bool = False
    dive: bool = True

    def __post_init__(self):
        if self.feas_tol <= 0 or self.int_tol <= 0:
            raise ModelError("tolerances must be positive")
        if self.gap < 0:
            raise ModelError("gap must be non-negative")


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node_limit"
TIME_LIMIT = "time_limit"


@dataclass
class MipSolution:
    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    nodes: int = 0
    wall_time: float = 0.0
    bound: float | None = None
    node_log: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, k: int) -> float:
        return float(self.x[k])

    def to_dict(self, model: LinearModel | None = None) -> dict:
        out = {"status": self.status, "objective": self.objective, "nodes": self.nodes}
        if self.x is not None:
            if model is not None:
                out["values"] = {model.vars[k].name: float(v)
                                 for k, v in enumerate(self.x) if abs(v) > 1e-9}
            else:
                out["values"] = [float(v) for v in self.x]
        return out
