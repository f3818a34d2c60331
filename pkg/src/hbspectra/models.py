"""Concrete chains: single-site heat bath for spin systems, the 2x2-subsquare
contingency-table chain, and Swendsen-Wang dynamics written as R T R*.

The Potts coupling is parametrised by ``w = e^beta``, required rational, so
every weight (``w^k``, ``w - 1``, ``1/w``) stays exact.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .heatbath import HeatBathSpec, Label, build_chain, build_label_kernel, require_valid
from .matrixcore import (
    ZERO,
    RationalMatrix,
    StateSpace,
    StochasticMatrix,
    TargetDistribution,
    parse_rational,
)
from .transfer import compose_transfer, verify_transfer_conditions

MAX_STATES = 20_000
MAX_LIFTED_STATES = 200_000


class CapExceededError(ValueError):
    pass


def state_cap() -> int:
    env = os.environ.get("HBSPECTRA_MAX_STATES")
    return int(env) if env else MAX_STATES


def lifted_cap() -> int:
    env = os.environ.get("HBSPECTRA_MAX_STATES")
    return int(env) if env else MAX_LIFTED_STATES


# --- graphs -----------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        n = len(self.vertices)
        if len(set(self.vertices)) != n:
            raise ValueError("duplicate vertex names")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {self.vertices[u]!r}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) references a missing vertex")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"parallel edge {self.vertices[u]!r}-{self.vertices[v]!r}")
            seen.add(key)

    @classmethod
    def from_edges(cls, edges: Sequence[tuple], vertices: Sequence | None = None) -> "Graph":
        names: list[str] = [str(v) for v in vertices] if vertices is not None else []
        index = {v: i for i, v in enumerate(names)}
        idx_edges = []
        for u, v in edges:
            for name in (str(u), str(v)):
                if name not in index:
                    index[name] = len(names)
                    names.append(name)
            idx_edges.append((index[str(u)], index[str(v)]))
        return cls(tuple(names), tuple(idx_edges))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(tuple(str(i) for i in range(n)), tuple((i, i + 1) for i in range(n - 1)))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(tuple(str(i) for i in range(n)), tuple((i, (i + 1) % n) for i in range(n)))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(tuple(str(i) for i in range(n)),
                   tuple(itertools.combinations(range(n), 2)))


def parse_graph(text: str) -> Graph:
    """One ``u v`` edge per line; a lone token declares an isolated vertex;
    ``#`` starts a comment."""
    vertices: list[str] = []
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) == 1:
            if toks[0] not in vertices:
                vertices.append(toks[0])
        elif len(toks) == 2:
            for t in toks:
                if t not in vertices:
                    vertices.append(t)
            edges.append((toks[0], toks[1]))
        else:
            raise ValueError(f"line {lineno}: expected 'u v', got {raw!r}")
    if not vertices:
        raise ValueError("graph file has no vertices")
    return Graph.from_edges(edges, vertices)


def read_graph(path) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())


# --- spin systems ---------------------------------------------------------------


def spin_names(q: int) -> tuple[str, ...]:
    if q <= 26:
        return tuple(chr(ord("A") + i) for i in range(q))
    return tuple(str(i + 1) for i in range(q))


def assignment_label(sigma: Sequence[int], spins: Sequence[str]) -> str:
    names = [spins[s] for s in sigma]
    if all(len(s) == 1 for s in spins):
        return "".join(names)
    return ",".join(names)


@dataclass(frozen=True)
class SpinSystem:
    """Spin assignments V -> S, optionally restricted by a hard constraint,
    with target weights proportional to ``weight(sigma)``.

    ``sigma`` is passed to the callbacks as a tuple of spin indices in vertex
    order.
    """

    graph: Graph
    spins: tuple[str, ...]
    weight: Callable[[tuple[int, ...]], Fraction]
    admissible: Callable[[tuple[int, ...]], bool] | None = None

    def enumerate(self) -> list[tuple[int, ...]]:
        total = len(self.spins) ** len(self.graph.vertices)
        if total > state_cap():
            raise CapExceededError(
                f"|S|^|V| = {total} exceeds the state cap {state_cap()} "
                "(set HBSPECTRA_MAX_STATES to raise it)"
            )
        out = [s for s in itertools.product(range(len(self.spins)),
                                            repeat=len(self.graph.vertices))
               if self.admissible is None or self.admissible(s)]
        if not out:
            raise ValueError("spin system has no admissible configuration")
        return out


def monochromatic(graph: Graph, sigma: Sequence[int]) -> tuple[int, ...]:
    return tuple(i for i, (u, v) in enumerate(graph.edges) if sigma[u] == sigma[v])


def potts(graph: Graph, q: int, w) -> SpinSystem:
    """Potts model: weight w^(number of monochromatic edges)."""
    if q < 2:
        raise ValueError("Potts model needs q >= 2")
    w = parse_rational(w)
    if w <= 0:
        raise ValueError("w = e^beta must be positive")
    return SpinSystem(graph, spin_names(q), lambda s: w ** len(monochromatic(graph, s)))


def ising(graph: Graph, w) -> SpinSystem:
    return potts(graph, 2, w)


def proper_colourings(graph: Graph, q: int) -> SpinSystem:
    if q < 1:
        raise ValueError("need at least one colour")
    return SpinSystem(graph, spin_names(q), lambda s: Fraction(1),
                      lambda s: not monochromatic(graph, s))


def build_spin_heatbath(sys: SpinSystem, *, check_rule: bool = True) -> HeatBathSpec:
    """Single-site heat bath: labels are vertices (uniform), and the block of
    sigma under v is {sigma^(v,k) : k admissible at v}."""
    configs = sys.enumerate()
    space = StateSpace(assignment_label(s, sys.spins) for s in configs)
    pi = TargetDistribution.from_weights(space, [sys.weight(s) for s in configs])
    n_v = len(sys.graph.vertices)
    labels = []
    for v, name in enumerate(sys.graph.vertices):
        groups: dict[tuple, list[int]] = {}
        for i, s in enumerate(configs):
            groups.setdefault(s[:v] + s[v + 1:], []).append(i)
        labels.append(Label(name, Fraction(1, n_v), tuple(tuple(g) for g in groups.values())))
    spec = HeatBathSpec(space, pi, tuple(labels))
    require_valid(spec)
    if check_rule and len(configs) <= 512:
        assert build_chain(spec) == _spin_rule_matrix(sys, configs, space, pi)
    return spec


def _spin_rule_matrix(sys, configs, space, pi) -> RationalMatrix:
    # P(sigma, sigma^(v,k)) = 1/|V| sum_v pi(sigma^(v,k)) / sum_{l in S_v^sigma} pi(sigma^(v,l))
    pos = {s: i for i, s in enumerate(configs)}
    n = len(configs)
    n_v = len(sys.graph.vertices)
    rows = [[ZERO] * n for _ in range(n)]
    for i, s in enumerate(configs):
        for v in range(n_v):
            nbrs = []
            for k in range(len(sys.spins)):
                t = s[:v] + (k,) + s[v + 1:]
                if t in pos:
                    nbrs.append(pos[t])
            z = sum((pi.probs[j] for j in nbrs), ZERO)
            for j in nbrs:
                rows[i][j] += pi.probs[j] / z / n_v
    return RationalMatrix(tuple(map(tuple, rows)), space, space)


# --- contingency tables -----------------------------------------------------------


@dataclass(frozen=True)
class ContingencyInstance:
    r: tuple[int, ...]
    c: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(int(x) for x in self.r))
        object.__setattr__(self, "c", tuple(int(x) for x in self.c))
        if not self.r or not self.c:
            raise ValueError("need at least one row and one column")
        if any(x < 1 for x in self.r + self.c):
            raise ValueError("margins must be positive integers")
        if sum(self.r) != sum(self.c):
            raise ValueError(f"row sums total {sum(self.r)} but column sums total {sum(self.c)}")


def table_label(table: Sequence[Sequence[int]]) -> str:
    return "/".join(" ".join(str(v) for v in row) for row in table)


def enumerate_tables(inst: ContingencyInstance) -> list[tuple[tuple[int, ...], ...]]:
    """All tables with the given margins, lexicographic in the flattened entries."""
    m, n = len(inst.r), len(inst.c)
    cap = state_cap()
    bound = math.prod(math.comb(ri + n - 1, n - 1) for ri in inst.r)
    out: list[tuple[tuple[int, ...], ...]] = []
    cells = [[0] * n for _ in range(m)]
    col_left = list(inst.c)

    def fill(i, j, row_left):
        if j == n - 1:
            v = row_left
            if v > col_left[j]:
                return
            if i == m - 1 and col_left[j] != v:
                return
            cells[i][j] = v
            col_left[j] -= v
            if i == m - 1:
                out.append(tuple(tuple(r) for r in cells))
                if len(out) > cap:
                    raise CapExceededError(f"more than {cap} tables (state cap)")
            else:
                fill(i + 1, 0, inst.r[i + 1])
            col_left[j] += v
            return
        if i == m - 1:
            v = col_left[j]
            if v > row_left:
                return
            vals = (v,)
        else:
            vals = range(min(row_left, col_left[j]) + 1)
        for v in vals:
            cells[i][j] = v
            col_left[j] -= v
            fill(i, j + 1, row_left - v)
            col_left[j] += v

    if bound > 50 * cap:
        raise CapExceededError(f"table-count bound {bound} far exceeds the state cap {cap}")
    fill(0, 0, inst.r[0])
    return out


def table_space(inst: ContingencyInstance) -> StateSpace:
    return StateSpace(table_label(t) for t in enumerate_tables(inst))


def subsquares(m: int, n: int) -> list[tuple[int, int, int, int]]:
    return [(i1, i2, j1, j2) for i1, i2 in itertools.combinations(range(m), 2)
            for j1, j2 in itertools.combinations(range(n), 2)]


def build_contingency_chain(inst: ContingencyInstance) -> HeatBathSpec:
    """Labels are 2x2 subsquare positions (uniform); a block groups the tables
    that agree outside the subsquare; pi is uniform."""
    tables = enumerate_tables(inst)
    space = StateSpace(table_label(t) for t in tables)
    pi = TargetDistribution.uniform(space)
    m, n = len(inst.r), len(inst.c)
    squares = subsquares(m, n)
    if not squares:
        # a single row or column admits exactly one table; no moves at all
        labels = (Label("none", Fraction(1), tuple((i,) for i in range(len(tables)))),)
        return HeatBathSpec(space, pi, labels)
    labels = []
    for (i1, i2, j1, j2) in squares:
        inside = {(i1, j1), (i1, j2), (i2, j1), (i2, j2)}
        groups: dict[tuple, list[int]] = {}
        for idx, t in enumerate(tables):
            key = tuple(t[i][j] for i in range(m) for j in range(n) if (i, j) not in inside)
            groups.setdefault(key, []).append(idx)
        labels.append(Label(f"r{i1}{i2}c{j1}{j2}" if max(m, n) <= 10
                            else f"r{i1}.{i2}c{j1}.{j2}",
                            Fraction(1, len(squares)),
                            tuple(tuple(g) for g in groups.values())))
    spec = HeatBathSpec(space, pi, tuple(labels))
    require_valid(spec)
    return spec


# --- Swendsen-Wang ---------------------------------------------------------------


@dataclass(frozen=True)
class SwendsenWang:
    graph: Graph
    q: int
    w: Fraction
    pi: TargetDistribution
    mu: TargetDistribution
    R: RationalMatrix
    T: StochasticMatrix
    P: StochasticMatrix
    t_spec: HeatBathSpec


def _potts_configs(graph: Graph, q: int) -> list[tuple[int, ...]]:
    total = q ** len(graph.vertices)
    if total > state_cap():
        raise CapExceededError(f"q^|V| = {total} exceeds the state cap {state_cap()}")
    return list(itertools.product(range(q), repeat=len(graph.vertices)))


def _check_sw_params(q: int, w) -> Fraction:
    if q < 2:
        raise ValueError("Swendsen-Wang needs q >= 2")
    w = parse_rational(w)
    if w <= 1:
        raise ValueError("Swendsen-Wang needs beta > 0, i.e. w = e^beta > 1")
    return w


def potts_distribution(graph: Graph, q: int, w) -> TargetDistribution:
    configs = _potts_configs(graph, q)
    space = StateSpace(assignment_label(s, spin_names(q)) for s in configs)
    w = parse_rational(w)
    return TargetDistribution.from_weights(
        space, [w ** len(monochromatic(graph, s)) for s in configs])


def build_swendsen_wang(graph: Graph, q: int, w) -> SwendsenWang:
    """Lifted space of (sigma, A) with A a set of monochromatic edges of sigma.

    mu(sigma, A) = (w-1)^|A| / Z, R(sigma, (sigma, A)) = w^-|E(sigma)| (w-1)^|A|,
    and T redraws sigma uniformly among colourings compatible with A, which is
    a one-label heat-bath kernel whose blocks group lifted states by A.
    """
    w = _check_sw_params(q, w)
    spins = spin_names(q)
    configs = _potts_configs(graph, q)
    mono = [monochromatic(graph, s) for s in configs]
    n_lift = sum(2 ** len(e) for e in mono)
    if n_lift > lifted_cap():
        raise CapExceededError(f"|lifted space| = {n_lift} exceeds the cap {lifted_cap()}")
    space = StateSpace(assignment_label(s, spins) for s in configs)
    z = sum((w ** len(e) for e in mono), ZERO)
    pi = TargetDistribution(space, tuple(w ** len(e) / z for e in mono))
    lifted = []  # (sigma index, A as tuple of edge indices)
    for i, e in enumerate(mono):
        for mask in range(2 ** len(e)):
            lifted.append((i, tuple(e[b] for b in range(len(e)) if mask >> b & 1)))
    lift_space = StateSpace(f"{space.label(i)}|{','.join(map(str, a))}" for i, a in lifted)
    mu = TargetDistribution(lift_space, tuple((w - 1) ** len(a) / z for _, a in lifted))
    r_rows = [[ZERO] * len(lifted) for _ in configs]
    for j, (i, a) in enumerate(lifted):
        r_rows[i][j] = (w - 1) ** len(a) / w ** len(mono[i])
    r_mat = RationalMatrix(tuple(map(tuple, r_rows)), space, lift_space)
    groups: dict[tuple, list[int]] = {}
    for j, (_, a) in enumerate(lifted):
        groups.setdefault(a, []).append(j)
    t_spec = HeatBathSpec(lift_space, mu,
                          (Label("bonds", Fraction(1), tuple(tuple(g) for g in groups.values())),))
    t_mat = build_label_kernel(t_spec, "bonds").matrix
    rep = verify_transfer_conditions(r_mat, t_mat, pi, mu, t_heat_bath=True)
    assert rep.ok, rep.failed()
    p = compose_transfer(r_mat, t_mat, pi, mu, t_heat_bath=True)
    return SwendsenWang(graph, q, w, pi, mu, r_mat, t_mat, p, t_spec)


def _components(n: int, edges: Sequence[tuple[int, int]]) -> list[int]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    roots = [find(x) for x in range(n)]
    relabel = {r: i for i, r in enumerate(dict.fromkeys(roots))}
    return [relabel[r] for r in roots]


def direct_swendsen_wang(graph: Graph, q: int, w) -> StochasticMatrix:
    """Swendsen-Wang matrix by summing over every bond subset and recolouring.

    Each monochromatic edge is kept with probability 1 - 1/w; every component
    of the kept subgraph then takes a uniform colour.  Shares nothing with
    :func:`build_swendsen_wang` beyond the state ordering.
    """
    w = _check_sw_params(q, w)
    configs = _potts_configs(graph, q)
    spins = spin_names(q)
    pos = {s: i for i, s in enumerate(configs)}
    n = len(configs)
    n_v = len(graph.vertices)
    keep = 1 - 1 / w
    drop = 1 / w
    rows = [[ZERO] * n for _ in range(n)]
    for i, s in enumerate(configs):
        e = monochromatic(graph, s)
        row = rows[i]
        for mask in range(2 ** len(e)):
            bonds = [graph.edges[e[b]] for b in range(len(e)) if mask >> b & 1]
            prob = keep ** len(bonds) * drop ** (len(e) - len(bonds))
            comp = _components(n_v, bonds)
            n_comp = max(comp) + 1
            share = prob / q ** n_comp
            for colours in itertools.product(range(q), repeat=n_comp):
                row[pos[tuple(colours[c] for c in comp)]] += share
    space = StateSpace(assignment_label(s, spins) for s in configs)
    return StochasticMatrix(tuple(map(tuple, rows)), space, space)
