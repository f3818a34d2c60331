"""Exact-rational dense matrices over labelled finite state spaces.

Every structural test in the package (stochasticity, idempotence, detailed
balance, zero columns, rank) is decided here with :class:`fractions.Fraction`
arithmetic.  Floating point only enters through :meth:`RationalMatrix.to_numpy`,
which the spectral code uses for eigenvalues.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Sequence

import numpy as np

ZERO = Fraction(0)
ONE = Fraction(1)


class DimensionError(ValueError):
    """Raised when operands do not share a state space or shape."""


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"``, a decimal string or a number into an exact Fraction.

    Floats are converted through ``repr`` so that ``0.1`` means one tenth,
    not the nearest binary double.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(repr(text))
    return Fraction(str(text).strip())


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


@dataclass(frozen=True)
class StateSpace:
    """Ordered, duplicate-free list of opaque state labels."""

    states: tuple[str, ...]
    index: dict = field(init=False, repr=False, compare=False)

    def __init__(self, states: Iterable):
        labels = tuple(str(s) for s in states)
        if not labels:
            raise ValueError("a state space needs at least one state")
        index = {s: i for i, s in enumerate(labels)}
        if len(index) != len(labels):
            seen = set()
            dup = next(s for s in labels if s in seen or seen.add(s))
            raise ValueError(f"duplicate state label {dup!r}")
        object.__setattr__(self, "states", labels)
        object.__setattr__(self, "index", index)

    @classmethod
    def range(cls, n: int) -> "StateSpace":
        return cls(str(i) for i in range(n))

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def label(self, i: int) -> str:
        return self.states[i]

    def position(self, label) -> int:
        try:
            return self.index[str(label)]
        except KeyError:
            raise KeyError(f"unknown state {label!r}") from None


@dataclass(frozen=True)
class TargetDistribution:
    """A strictly positive probability vector on a state space."""

    space: StateSpace
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        probs = tuple(parse_rational(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) != len(self.space):
            raise DimensionError(
                f"distribution has {len(probs)} entries for {len(self.space)} states"
            )
        for i, p in enumerate(probs):
            if p <= 0:
                raise ValueError(
                    f"probability of state {self.space.label(i)!r} is {p}, must be positive"
                )
        total = sum(probs, ZERO)
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_weights(cls, space: StateSpace, weights: Sequence) -> "TargetDistribution":
        w = [parse_rational(x) for x in weights]
        z = sum(w, ZERO)
        if z <= 0:
            raise ValueError("weights must have a positive total")
        return cls(space, tuple(x / z for x in w))

    @classmethod
    def uniform(cls, space: StateSpace) -> "TargetDistribution":
        n = len(space)
        return cls(space, (Fraction(1, n),) * n)

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, i: int) -> Fraction:
        return self.probs[i]

    @property
    def pi_min(self) -> Fraction:
        return min(self.probs)

    def mass(self, indices: Iterable[int]) -> Fraction:
        return sum((self.probs[i] for i in indices), ZERO)

    def to_numpy(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])


@dataclass(frozen=True, eq=False)
class RationalMatrix:
    """Dense matrix of Fractions with row and column state spaces.

    Rows and columns may be indexed by different spaces, which is how the
    rectangular lifting matrices of the transfer module are stored.
    """

    rows: tuple[tuple[Fraction, ...], ...]
    row_space: StateSpace
    col_space: StateSpace

    def __post_init__(self):
        rows = tuple(tuple(parse_rational(v) for v in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if len(rows) != len(self.row_space):
            raise DimensionError(
                f"{len(rows)} rows for a row space of {len(self.row_space)} states"
            )
        width = len(self.col_space)
        for i, r in enumerate(rows):
            if len(r) != width:
                raise DimensionError(f"row {i} has {len(r)} entries, expected {width}")

    @classmethod
    def from_rows(cls, rows, row_space=None, col_space=None):
        rows = [list(r) for r in rows]
        if row_space is None:
            row_space = StateSpace.range(len(rows))
        if col_space is None:
            col_space = row_space if len(rows) and len(rows[0]) == len(rows) else \
                StateSpace.range(len(rows[0]) if rows else 0)
        return cls(tuple(tuple(r) for r in rows), row_space, col_space)

    @classmethod
    def identity(cls, space: StateSpace):
        n = len(space)
        return cls(
            tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)),
            space,
            space,
        )

    @classmethod
    def zeros(cls, row_space: StateSpace, col_space: StateSpace | None = None):
        col_space = row_space if col_space is None else col_space
        return cls(
            tuple((ZERO,) * len(col_space) for _ in range(len(row_space))),
            row_space,
            col_space,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_space), len(self.col_space)

    @property
    def is_square(self) -> bool:
        return self.row_space == self.col_space

    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    @cached_property
    def nonzeros(self) -> tuple[tuple[tuple[int, Fraction], ...], ...]:
        """Sparse view: for each row, the (column, value) pairs that are nonzero."""
        return tuple(tuple((j, v) for j, v in enumerate(r) if v) for r in self.rows)

    def row_sums(self) -> tuple[Fraction, ...]:
        return tuple(sum(r, ZERO) for r in self.rows)

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(r[j] for r in self.rows)

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(tuple(zip(*self.rows)) if self.rows[0] else (), self.col_space,
                              self.row_space)

    def matmul(self, other: "RationalMatrix") -> "RationalMatrix":
        """Exact product; skips zero entries, which dominate block-structured kernels."""
        if len(self.col_space) != len(other.row_space):
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
        width = len(other.col_space)
        right = other.nonzeros
        out = []
        for row in self.nonzeros:
            acc = [ZERO] * width
            for k, a in row:
                for j, b in right[k]:
                    acc[j] += a * b
            out.append(tuple(acc))
        return RationalMatrix(tuple(out), self.row_space, other.col_space)

    __matmul__ = matmul

    def scale(self, c) -> "RationalMatrix":
        c = parse_rational(c)
        return RationalMatrix(tuple(tuple(c * v for v in r) for r in self.rows),
                              self.row_space, self.col_space)

    def add(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return RationalMatrix(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)),
            self.row_space,
            self.col_space,
        )

    __add__ = add

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix(
            tuple(tuple(self.rows[i][j] for j in col_idx) for i in row_idx),
            StateSpace(self.row_space.label(i) for i in row_idx),
            StateSpace(self.col_space.label(j) for j in col_idx),
        )

    def permuted(self, order: Sequence[int]) -> "RationalMatrix":
        """Return AᵀMA, i.e. rows and columns both reordered by ``order``."""
        if not self.is_square:
            raise DimensionError("permutation similarity needs a square matrix")
        return self.submatrix(order, order)

    def power(self, k: int) -> "RationalMatrix":
        if k < 0:
            raise ValueError("negative matrix power")
        result = RationalMatrix.identity(self.row_space)
        base = self
        while k:
            if k & 1:
                result = result @ base
            k >>= 1
            if k:
                base = base @ base
        return result

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.rows], dtype=float).reshape(self.shape)

    def to_stochastic(self) -> "StochasticMatrix":
        return StochasticMatrix(self.rows, self.row_space, self.col_space)


class StochasticMatrix(RationalMatrix):
    """Nonnegative matrix whose rows each sum to exactly one."""

    def __post_init__(self):
        super().__post_init__()
        for i, r in enumerate(self.rows):
            if any(v < 0 for v in r):
                raise ValueError(f"row {i} has a negative entry")
            s = sum(r, ZERO)
            if s != 1:
                raise ValueError(f"row {i} sums to {s}, not 1")


def as_matrix(m) -> RationalMatrix:
    if isinstance(m, RationalMatrix):
        return m
    return RationalMatrix.from_rows(m)


# --- structure tests -------------------------------------------------------


def check_stochastic(m) -> str:
    """Classify a square matrix as 'stochastic', 'substochastic' or 'neither'.

    Substochastic here means nonnegative with every row sum at most one and at
    least one row sum strictly below one.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if any(v < 0 for r in m.rows for v in r):
        return "neither"
    sums = m.row_sums()
    if all(s == 1 for s in sums):
        return "stochastic"
    if all(s <= 1 for s in sums):
        return "substochastic"
    return "neither"


def check_reversible(m, pi: TargetDistribution) -> bool:
    """Exact detailed balance: pi(x) M(x,y) == pi(y) M(y,x) for all x, y."""
    m = as_matrix(m)
    n = len(pi)
    if m.shape != (n, n):
        raise DimensionError(f"matrix shape {m.shape} does not match {n} states")
    p = pi.probs
    rows = m.rows
    for x in range(n):
        for y in range(x + 1, n):
            if p[x] * rows[x][y] != p[y] * rows[y][x]:
                return False
    return True


def is_stationary(m, pi: TargetDistribution) -> bool:
    """Exact test of pi M == pi."""
    m = as_matrix(m)
    n = len(pi)
    acc = [ZERO] * n
    for x, row in enumerate(m.nonzeros):
        px = pi.probs[x]
        for y, v in row:
            acc[y] += px * v
    return tuple(acc) == pi.probs


def find_reversing_measure(m) -> tuple[Fraction, ...] | None:
    """Positive probability vector w.r.t. which ``m`` is reversible, or None.

    Propagates ratios d(y) = d(x) M(x,y) / M(y,x) along a spanning forest of
    the support graph and then checks every pair exactly.  The vector is
    unique up to scaling on each connected piece of the support; each piece
    is given mass proportional to its size.
    """
    m = as_matrix(m)
    n, n2 = m.shape
    if n != n2:
        raise DimensionError("expected a square matrix")
    rows = m.rows
    for x in range(n):
        for y in range(x + 1, n):
            if (rows[x][y] > 0) != (rows[y][x] > 0):
                return None
            if rows[x][y] < 0 or rows[y][x] < 0:
                return None
    d: list[Fraction | None] = [None] * n
    pieces = []
    for root in range(n):
        if d[root] is not None:
            continue
        d[root] = ONE
        piece = [root]
        stack = [root]
        while stack:
            x = stack.pop()
            for y, v in m.nonzeros[x]:
                if d[y] is None:
                    d[y] = d[x] * v / rows[y][x]
                    piece.append(y)
                    stack.append(y)
        pieces.append(piece)
    for x in range(n):
        for y, v in m.nonzeros[x]:
            if d[x] * v != d[y] * rows[y][x]:
                return None
    out = [ZERO] * n
    for piece in pieces:
        z = sum((d[i] for i in piece), ZERO)
        share = Fraction(len(piece), n)
        for i in piece:
            out[i] = share * d[i] / z
    return tuple(out)


def lazify(m) -> StochasticMatrix:
    """Return (I + M) / 2."""
    m = as_matrix(m)
    if not m.is_square and m.shape[0] != m.shape[1]:
        raise DimensionError("lazify needs a square matrix")
    half = Fraction(1, 2)
    rows = tuple(
        tuple(half * (v + (ONE if i == j else ZERO)) for j, v in enumerate(r))
        for i, r in enumerate(m.rows)
    )
    return StochasticMatrix(rows, m.row_space, m.col_space)


def zero_columns(m) -> frozenset[int]:
    m = as_matrix(m)
    n_cols = m.shape[1]
    hit = [False] * n_cols
    for row in m.nonzeros:
        for j, _ in row:
            hit[j] = True
    return frozenset(j for j in range(n_cols) if not hit[j])


def is_idempotent(m) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    return (m @ m) == m


def rank(m) -> int:
    """Exact rank by fraction-free (Bareiss) elimination on an integer scaling."""
    m = as_matrix(m)
    a = []
    for r in m.rows:
        den = lcm(*(v.denominator for v in r)) if r else 1
        a.append([int(v * den) for v in r])
    n_rows, n_cols = m.shape
    r = 0
    prev = 1
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        for i in range(r + 1, n_rows):
            aic = a[i][c]
            row_i = a[i]
            row_r = a[r]
            for j in range(c + 1, n_cols):
                row_i[j] = (p * row_i[j] - aic * row_r[j]) // prev
            row_i[c] = 0
        prev = p
        r += 1
    return r


@dataclass(frozen=True)
class CommunicatingClass:
    states: tuple[int, ...]
    recurrent: bool

    @property
    def kind(self) -> str:
        return "recurrent" if self.recurrent else "transient"


@dataclass(frozen=True)
class CommunicatingStructure:
    classes: tuple[CommunicatingClass, ...]

    @property
    def is_irreducible(self) -> bool:
        return len(self.classes) == 1

    def class_of(self, x: int) -> CommunicatingClass:
        for c in self.classes:
            if x in c.states:
                return c
        raise KeyError(x)


def strongly_connected_components(adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """Iterative Tarjan; components are returned with sorted members."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(adj[v]):
                work[-1] = (v, i + 1)
                w = adj[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def communicating_structure(m) -> CommunicatingStructure:
    """Strongly connected components of the support graph x -> y iff M(x,y) > 0.

    A class is recurrent when no positive entry leaves it.  Classes are
    ordered by their smallest state index.
    """
    m = as_matrix(m)
    adj = [[j for j, v in row if v > 0] for row in m.nonzeros]
    comps = strongly_connected_components(adj)
    owner = {}
    for ci, comp in enumerate(comps):
        for x in comp:
            owner[x] = ci
    classes = []
    for ci, comp in enumerate(comps):
        closed = all(owner[y] == ci for x in comp for y in adj[x])
        classes.append(CommunicatingClass(tuple(comp), closed))
    classes.sort(key=lambda c: c.states[0])
    return CommunicatingStructure(tuple(classes))


# --- CSV I/O --------------------------------------------------------------


def read_matrix_csv(source) -> RationalMatrix:
    """Read a square matrix: header row of labels, then rows of rationals.

    ``source`` may be a path or an open text stream.  Entries may be written
    as ``p/q`` or as decimal strings.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, newline="") as fh:
            text = fh.read()
    lines = [row for row in csv.reader(io.StringIO(text)) if row and any(c.strip() for c in row)]
    if not lines:
        raise ValueError("empty matrix file")
    labels = [c.strip() for c in lines[0]]
    body = lines[1:]
    try:
        rows = [[parse_rational(c) for c in row] for row in body]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad matrix entry: {exc}") from None
    space = StateSpace(labels)
    if len(rows) != len(space):
        # a rectangular file carries only column labels
        return RationalMatrix(tuple(map(tuple, rows)), StateSpace.range(len(rows)), space)
    return RationalMatrix(tuple(map(tuple, rows)), space, space)


def write_matrix_csv(m: RationalMatrix, dest=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(m.col_space.states)
    for r in m.rows:
        writer.writerow([format_rational(v) for v in r])
    text = buf.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
    return text
