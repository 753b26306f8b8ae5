"""Network model, canonical instance format and the gdb benchmark importer.

Canonical format (one record per line, ``#`` starts a comment)::

    nodes 5 depot 1 K 2 W 50 zeta 0
    arc 1 2 c 3 e 0.3 q 1

The depot is always node 1.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path


class InstanceError(ValueError):
    """Malformed or invalid instance; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class Arc:
    i: int
    j: int
    c: float
    e: float = 0.0
    q: int = 1
    demand: int | None = None  # original integer demand (gdb imports only)

    @property
    def key(self) -> tuple[int, int]:
        return (self.i, self.j) if self.i < self.j else (self.j, self.i)

    def __str__(self):
        return f"({self.i},{self.j})"


@dataclass(frozen=True)
class Network:
    n: int
    arcs: tuple[Arc, ...]
    K: int = 1
    W: float = 1.0
    zeta: int = 0
    depot: int = 1
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        validate(self)

    @property
    def m(self) -> int:
        return len(self.arcs)

    @property
    def demanded(self) -> list[int]:
        return [a for a, arc in enumerate(self.arcs) if arc.q == 1]

    def arc_index(self, i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        for a, arc in enumerate(self.arcs):
            if arc.key == key:
                return a
        raise KeyError((i, j))

    def directed(self) -> list[tuple[int, int, int]]:
        """``(tail, head, arc index)`` for both orientations of every arc."""
        out = []
        for a, arc in enumerate(self.arcs):
            out.append((arc.i, arc.j, a))
            out.append((arc.j, arc.i, a))
        return out

    def with_demand(self, q) -> "Network":
        """Copy with demand flags replaced (``q`` indexed like ``arcs``)."""
        arcs = tuple(replace(arc, q=int(bool(v))) for arc, v in zip(self.arcs, q))
        return replace(self, arcs=arcs)

    def with_fleet(self, K: int | None = None, W: float | None = None,
                   zeta: int | None = None) -> "Network":
        return replace(self, K=self.K if K is None else K, W=self.W if W is None else W,
                       zeta=self.zeta if zeta is None else zeta)


def validate(net: Network) -> None:
    if not net.arcs:
        raise InstanceError("empty arc set")
    if net.n < 1:
        raise InstanceError("node count must be positive")
    if net.depot != 1:
        raise InstanceError("depot must be node 1")
    if net.K < 1:
        raise InstanceError("fleet size K must be >= 1")
    if not net.W > 0:
        raise InstanceError("fuel capacity W must be > 0")
    if net.zeta < 0 or int(net.zeta) != net.zeta:
        raise InstanceError("recharge periods zeta must be a non-negative integer")
    seen = set()
    for arc in net.arcs:
        for v in (arc.i, arc.j):
            if not 1 <= v <= net.n:
                raise InstanceError(f"arc {arc}: endpoint {v} outside [1, {net.n}]")
        if arc.i == arc.j:
            raise InstanceError(f"arc {arc}: self-loop")
        if arc.key in seen:
            raise InstanceError(f"arc {arc}: duplicate undirected pair")
        seen.add(arc.key)
        if not arc.c > 0:
            raise InstanceError(f"arc {arc}: traversal cost must be > 0")
        if arc.e < 0:
            raise InstanceError(f"arc {arc}: service cost must be >= 0")
        if arc.q not in (0, 1):
            raise InstanceError(f"arc {arc}: demand flag must be 0 or 1")
    reach = _reachable(net)
    for arc in net.arcs:
        if arc.q == 1 and arc.i not in reach:
            raise InstanceError(f"demanded arc {arc} is disconnected from the depot")


def _reachable(net: Network) -> set[int]:
    adj: dict[int, list[int]] = {}
    for arc in net.arcs:
        adj.setdefault(arc.i, []).append(arc.j)
        adj.setdefault(arc.j, []).append(arc.i)
    seen = {net.depot}
    todo = deque([net.depot])
    while todo:
        u = todo.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


# -- canonical text format ---------------------------------------------------

def _num(token: str, line: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise InstanceError(f"{what}: expected a number, got {token!r}", line) from None


def _int(token: str, line: int, what: str) -> int:
    v = _num(token, line, what)
    if v != int(v):
        raise InstanceError(f"{what}: expected an integer, got {token!r}", line)
    return int(v)


def _pairs(tokens, line):
    if len(tokens) % 2:
        raise InstanceError("expected key/value pairs", line)
    return {tokens[k]: tokens[k + 1] for k in range(0, len(tokens), 2)}


def parse_canonical(text: str, name: str = "") -> Network:
    header = None
    arcs = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        if tokens[0] == "nodes":
            if header is not None:
                raise InstanceError("duplicate header", ln)
            kv = _pairs(tokens, ln)
            missing = {"nodes", "K", "W"} - kv.keys()
            if missing:
                raise InstanceError(f"header lacks {sorted(missing)}", ln)
            unknown = kv.keys() - {"nodes", "depot", "K", "W", "zeta"}
            if unknown:
                raise InstanceError(f"unknown header field(s) {sorted(unknown)}", ln)
            header = dict(
                n=_int(kv["nodes"], ln, "nodes"),
                depot=_int(kv.get("depot", "1"), ln, "depot"),
                K=_int(kv["K"], ln, "K"),
                W=_num(kv["W"], ln, "W"),
                zeta=_int(kv.get("zeta", "0"), ln, "zeta"),
            )
            if header["depot"] != 1:
                raise InstanceError("depot must be node 1", ln)
        elif tokens[0] == "arc":
            if len(tokens) < 3:
                raise InstanceError("arc needs two endpoints", ln)
            i = _int(tokens[1], ln, "arc tail")
            j = _int(tokens[2], ln, "arc head")
            kv = _pairs(tokens[3:], ln)
            unknown = kv.keys() - {"c", "e", "q"}
            if unknown or "c" not in kv:
                raise InstanceError("arc fields are c <cost> [e <cost>] [q <0|1>]", ln)
            arcs.append(Arc(i, j, _num(kv["c"], ln, "c"), _num(kv.get("e", "0"), ln, "e"),
                            _int(kv.get("q", "1"), ln, "q")))
        else:
            raise InstanceError(f"unknown record {tokens[0]!r}", ln)
    if header is None:
        raise InstanceError("missing 'nodes' header")
    depot = header.pop("depot")
    return Network(arcs=tuple(arcs), depot=depot, name=name, **header)


def _fmt(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def serialize(net: Network) -> str:
    lines = [f"nodes {net.n} depot {net.depot} K {net.K} W {_fmt(net.W)} zeta {net.zeta}"]
    for arc in net.arcs:
        lines.append(f"arc {arc.i} {arc.j} c {_fmt(arc.c)} e {_fmt(arc.e)} q {arc.q}")
    return "\n".join(lines) + "\n"


def normalize(text: str) -> str:
    return serialize(parse_canonical(text))


# -- gdb (DeArmon) benchmark format -------------------------------------------

_GDB_KEYS = {
    "NOMBRE": "name", "NAME": "name",
    "COMENTARIO": "comment", "COMMENT": "comment",
    "VERTICES": "vertices",
    "ARISTAS_REQ": "req", "REQUIRED_EDGES": "req",
    "ARISTAS_NOREQ": "noreq", "NON_REQUIRED_EDGES": "noreq",
    "VEHICULOS": "vehicles", "VEHICLES": "vehicles",
    "CAPACIDAD": "capacity", "CAPACITY": "capacity",
    "TIPO_COSTES_ARISTAS": "cost_type", "COST_TYPE": "cost_type",
    "COSTE_TOTAL_REQ": "total_cost", "TOTAL_COST": "total_cost",
    "LISTA_ARISTAS_REQ": "list_req", "LIST_REQUIRED_EDGES": "list_req",
    "LISTA_ARISTAS_NOREQ": "list_noreq", "LIST_NON_REQUIRED_EDGES": "list_noreq",
    "DEPOSITO": "depot", "DEPOT": "depot",
}
_EDGE = re.compile(
    r"^\(\s*(\d+)\s*,\s*(\d+)\s*\)\s+(?:coste|cost)\s+(\d+(?:\.\d+)?)"
    r"(?:\s+(?:demanda|demand)\s+(\d+))?\s*$", re.IGNORECASE)


def import_gdb(text: str, service_ratio: float = 0.1) -> Network:
    """Read a DeArmon/Belenguer ``.dat`` file.

    Demand flags come back all zero; the integer demands sit on
    ``Arc.demand`` until :func:`binarize_demands` is applied. Service cost
    is ``service_ratio * c``. A depot other than 1 is swapped with node 1.
    """
    fields: dict[str, str] = {}
    edges: list[tuple[int, int, float, int, int]] = []
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("("):
            if section not in ("list_req", "list_noreq"):
                raise InstanceError("edge outside an edge list", ln)
            mt = _EDGE.match(line)
            if not mt:
                raise InstanceError(f"bad edge record {line!r}", ln)
            i, j = int(mt.group(1)), int(mt.group(2))
            dem = int(mt.group(4)) if mt.group(4) is not None else 0
            if section == "list_noreq":
                dem = 0
            edges.append((i, j, float(mt.group(3)), dem, ln))
            continue
        if ":" not in line:
            raise InstanceError(f"unrecognised line {line!r}", ln)
        key, _, value = line.partition(":")
        key = key.strip().upper()
        if key not in _GDB_KEYS:
            raise InstanceError(f"unknown keyword {key!r}", ln)
        section = _GDB_KEYS[key]
        fields[section] = value.strip()
    for need in ("vertices", "vehicles", "capacity"):
        if need not in fields:
            raise InstanceError(f"missing {need} keyword")
    n = int(fields["vertices"])
    depot = int(fields.get("depot", "1") or 1)
    if not 1 <= depot <= n:
        raise InstanceError(f"depot {depot} outside [1, {n}]")

    def relabel(v):
        return 1 if v == depot else depot if v == 1 else v

    arcs = []
    for i, j, c, dem, ln in edges:
        for v in (i, j):
            if not 1 <= v <= n:
                raise InstanceError(f"edge ({i},{j}) references vertex {v} outside [1, {n}]", ln)
        arcs.append(Arc(relabel(i), relabel(j), c, service_ratio * c, 0, dem))
    return Network(
        n=n, arcs=tuple(arcs), K=int(fields["vehicles"]), W=float(fields["capacity"]),
        zeta=0, name=fields.get("name", ""),
        meta={"comment": fields.get("comment", ""), "depot_in_file": depot,
              "required_edges": int(fields.get("req", len(arcs)))},
    )


def binarize_demands(net: Network) -> Network:
    """q = 1 where the original demand is positive. Arcs without an
    original demand keep their flag."""
    q = [arc.q if arc.demand is None else int(arc.demand > 0) for arc in net.arcs]
    return net.with_demand(q)


def load(path: str | Path, binarize: bool = False, service_ratio: float = 0.1) -> Network:
    """Read either format, sniffing gdb files by their keywords."""
    path = Path(path)
    text = path.read_text()
    head = text.lstrip().split(":", 1)[0].strip().upper()
    if head in _GDB_KEYS:
        net = import_gdb(text, service_ratio)
    else:
        net = parse_canonical(text, name=path.stem)
    if binarize:
        net = binarize_demands(net)
    if not net.name:
        net = replace(net, name=path.stem)
    return net


DATA_DIR = Path(__file__).with_name("data")


def bundled(name: str) -> Path:
    """Path of a fixture shipped in ``sdairp/data``."""
    return DATA_DIR / name
