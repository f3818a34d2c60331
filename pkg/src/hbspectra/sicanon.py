"""Stochastic idempotent (SI) matrices: classification, canonical form, settling.

An SI matrix is, up to a simultaneous reordering of rows and columns, a
direct sum of rank-one blocks ``1 pi_i`` followed by a group of zero columns
whose rows are mixtures ``sum_i p_i pi_i`` of the block rows.  The
decomposition below reads that form off a matrix and can rebuild the
matrix from it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .matrixcore import (
    ZERO,
    RationalMatrix,
    TargetDistribution,
    as_matrix,
    check_reversible,
    check_stochastic,
    communicating_structure,
    find_reversing_measure,
    format_rational,
    is_idempotent,
    rank,
    zero_columns,
)


class DecompositionError(RuntimeError):
    """Block extraction contradicted an SI verdict; indicates a bug."""


@dataclass(frozen=True)
class SiVerdict:
    kind: str  # "not_stochastic" | "not_idempotent" | "SI"
    t: int | None = None
    r: int | None = None

    @property
    def is_si(self) -> bool:
        return self.kind == "SI"

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.is_si:
            out.update(t=self.t, r=self.r)
        return out


def si_classify(m) -> SiVerdict:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1] or check_stochastic(m) != "stochastic":
        return SiVerdict("not_stochastic")
    if not is_idempotent(m):
        return SiVerdict("not_idempotent")
    return SiVerdict("SI", t=len(zero_columns(m)), r=rank(m))


@dataclass(frozen=True)
class SiBlock:
    states: tuple[int, ...]
    pi: tuple[Fraction, ...]


@dataclass(frozen=True)
class SiDecomposition:
    n: int
    permutation: tuple[int, ...]
    blocks: tuple[SiBlock, ...]
    ephemeral: tuple[int, ...]
    # p[e][i]: weight that ephemeral row e puts on block i
    p: tuple[tuple[Fraction, ...], ...]

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def t(self) -> int:
        return len(self.ephemeral)

    def coupling(self, i: int) -> list[list[Fraction]]:
        """C_i = p_i pi_i restricted to (ephemeral rows) x (block i columns)."""
        return [[self.p[e][i] * w for w in self.blocks[i].pi] for e in range(self.t)]

    def canonical(self) -> RationalMatrix:
        """The permuted form U: block diagonal part, then coupling rows, last t columns zero."""
        size = self.n
        pos = {x: i for i, x in enumerate(self.permutation)}
        rows = [[ZERO] * size for _ in range(size)]
        for blk in self.blocks:
            cols = [pos[y] for y in blk.states]
            for x in blk.states:
                r = rows[pos[x]]
                for c, w in zip(cols, blk.pi):
                    r[c] = w
        for e, x in enumerate(self.ephemeral):
            r = rows[pos[x]]
            for i, blk in enumerate(self.blocks):
                for y, w in zip(blk.states, blk.pi):
                    r[pos[y]] = self.p[e][i] * w
        return RationalMatrix.from_rows(rows)

    def reassemble(self) -> RationalMatrix:
        """Undo the permutation of :meth:`canonical`, giving back the original matrix."""
        u = self.canonical()
        pos = {x: i for i, x in enumerate(self.permutation)}
        idx = [pos[x] for x in range(self.n)]
        return RationalMatrix.from_rows(
            [[u.rows[idx[x]][idx[y]] for y in range(self.n)] for x in range(self.n)]
        )

    def to_dict(self) -> dict:
        return {
            "permutation": list(self.permutation),
            "blocks": [
                {"states": list(b.states), "pi": [format_rational(v) for v in b.pi]}
                for b in self.blocks
            ],
            "ephemeral": {
                "states": list(self.ephemeral),
                "p": [[format_rational(v) for v in row] for row in self.p],
            },
            "k": self.k,
            "t": self.t,
        }


def si_decompose(m) -> SiDecomposition:
    """Canonical form of an SI matrix.

    Zero columns (ephemeral states) and their rows are removed; the rest
    splits into communicating classes, each of which must be closed with
    identical positive rows.  Ephemeral rows are then expressed as
    p_i-weighted mixtures of the block rows.
    """
    m = as_matrix(m)
    verdict = si_classify(m)
    if not verdict.is_si:
        raise ValueError(f"matrix is not SI ({verdict.kind})")
    n = m.shape[0]
    eph = sorted(zero_columns(m))
    eph_set = set(eph)
    keep = [x for x in range(n) if x not in eph_set]
    sub = m.submatrix(keep, keep)
    struct = communicating_structure(sub)
    blocks = []
    for cls in struct.classes:
        states = tuple(keep[i] for i in cls.states)
        if not cls.recurrent:
            raise DecompositionError(f"non-ephemeral transient class {states}")
        first = m.rows[states[0]]
        pi_blk = tuple(first[y] for y in states)
        if any(w <= 0 for w in pi_blk):
            raise DecompositionError(f"block {states} row is not positive")
        for x in states:
            row = m.rows[x]
            if tuple(row[y] for y in states) != pi_blk:
                raise DecompositionError(f"block {states} rows differ at state {x}")
            if sum(pi_blk, ZERO) != 1:
                raise DecompositionError(f"block {states} leaks mass")
        blocks.append(SiBlock(states, pi_blk))
    blocks.sort(key=lambda b: b.states[0])
    p_rows = []
    for x in eph:
        row = m.rows[x]
        weights = []
        for blk in blocks:
            c = [row[y] for y in blk.states]
            pw = sum(c, ZERO)
            if c != [pw * w for w in blk.pi]:
                raise DecompositionError(f"coupling row {x} is not p_i * pi_i on {blk.states}")
            weights.append(pw)
        if sum(weights, ZERO) != 1:
            raise DecompositionError(f"coupling weights of row {x} sum to {sum(weights)}")
        p_rows.append(tuple(weights))
    permutation = tuple(x for b in blocks for x in b.states) + tuple(eph)
    dec = SiDecomposition(n, permutation, tuple(blocks), tuple(eph), tuple(p_rows))
    assert dec.reassemble() == m
    return dec


def compose_si(blocks: Sequence[tuple[Sequence[int], Sequence]], ephemeral: Sequence[int],
               p: Sequence[Sequence], n: int | None = None) -> RationalMatrix:
    """Build an SI matrix from its canonical-form data (the converse direction)."""
    size = n if n is not None else sum(len(s) for s, _ in blocks) + len(ephemeral)
    dec = SiDecomposition(
        size,
        tuple(x for s, _ in blocks for x in s) + tuple(ephemeral),
        tuple(SiBlock(tuple(s), tuple(Fraction(v) for v in w)) for s, w in blocks),
        tuple(ephemeral),
        tuple(tuple(Fraction(v) for v in row) for row in p),
    )
    return dec.reassemble()


@dataclass(frozen=True)
class ReversibleSiEquivalence:
    no_zero_columns: bool
    direct_sum: bool
    reversible: bool
    # diagonal of the stationary weighting diag(pi_1) + ... + diag(pi_k)
    witness: tuple[Fraction, ...] | None

    def conjugator(self) -> tuple[Fraction, ...] | None:
        """Diagonal E with E^-1 M E = M^T, which is the inverse of ``witness``."""
        if self.witness is None:
            return None
        return tuple(1 / w for w in self.witness)

    def to_dict(self) -> dict:
        return {
            "no_zero_columns": self.no_zero_columns,
            "direct_sum": self.direct_sum,
            "reversible": self.reversible,
            "witness": None if self.witness is None else [format_rational(v) for v in self.witness],
        }


def _is_direct_sum(m: RationalMatrix) -> bool:
    # every communicating class closed and of the form 1 pi_i with pi_i positive
    for cls in communicating_structure(m).classes:
        if not cls.recurrent:
            return False
        first = m.rows[cls.states[0]]
        block = tuple(first[y] for y in cls.states)
        if any(w <= 0 for w in block):
            return False
        if any(tuple(m.rows[x][y] for y in cls.states) != block for x in cls.states):
            return False
    return True


def diag_conjugate(m: RationalMatrix, d: Sequence[Fraction]) -> RationalMatrix:
    """D^-1 M D for a positive diagonal given as a vector."""
    return RationalMatrix(
        tuple(tuple(v * d[y] / d[x] for y, v in enumerate(r)) for x, r in enumerate(m.rows)),
        m.row_space, m.col_space,
    )


def reversible_si_equivalence(m) -> ReversibleSiEquivalence:
    """Evaluate the three equivalent conditions for an SI matrix independently.

    ``no_zero_columns`` counts columns, ``direct_sum`` inspects the
    communicating classes, and ``reversible`` searches for any positive
    reversing measure.  When they hold, ``witness`` is the concatenated block
    distributions; M is checked exactly to be reversible w.r.t. it.
    """
    m = as_matrix(m)
    verdict = si_classify(m)
    if not verdict.is_si:
        raise ValueError(f"matrix is not SI ({verdict.kind})")
    no_zero = not zero_columns(m)
    direct = _is_direct_sum(m)
    measure = find_reversing_measure(m)
    reversible = measure is not None
    assert no_zero == direct == reversible, (no_zero, direct, reversible)
    witness = None
    if reversible:
        dec = si_decompose(m)
        w = [ZERO] * m.shape[0]
        for blk in dec.blocks:
            for x, v in zip(blk.states, blk.pi):
                w[x] = v
        witness = tuple(w)
        mt = m.transpose()
        inv = tuple(1 / v for v in witness)
        assert diag_conjugate(m, inv) == mt
        assert check_reversible(m, TargetDistribution.from_weights(m.row_space, witness))
    return ReversibleSiEquivalence(no_zero, direct, reversible, witness)


# --- finite convergence --------------------------------------------------


@dataclass(frozen=True)
class FiniteConvergenceReport:
    settles: bool
    m: int | None
    spectrum_binary: bool
    recurrent_blocks: tuple[tuple[int, ...], ...]
    strict_form: bool | None
    cap: int

    def to_dict(self) -> dict:
        return {
            "settles": self.settles,
            "m": self.m,
            "spectrum_binary": self.spectrum_binary,
            "recurrent_blocks": [list(b) for b in self.recurrent_blocks],
            "strict_form": self.strict_form,
            "cap": self.cap,
        }


def settle_analysis(m, m_cap: int | None = None) -> FiniteConvergenceReport:
    """Find the least m <= m_cap with M^(m+1) == M^m, exactly.

    ``strict_form`` asks whether M itself already has the block shape with
    only zero columns outside the recurrent blocks; settling matrices need
    not satisfy it (e.g. a path 0 -> 1 -> 2 absorbing at 2).
    """
    m = as_matrix(m)
    if check_stochastic(m) != "stochastic":
        raise ValueError("settle_analysis needs a stochastic matrix")
    n = m.shape[0]
    cap = n if m_cap is None else m_cap
    if cap < 1:
        raise ValueError("m_cap must be at least 1")
    cur = m
    for k in range(1, cap + 1):
        nxt = cur @ m
        if nxt == cur:
            return _settled(m, cur, k, cap)
        cur = nxt
    return FiniteConvergenceReport(False, None, False, (), None, cap)


def _settled(m: RationalMatrix, mk: RationalMatrix, k: int, cap: int) -> FiniteConvergenceReport:
    # M^(k+d) == M^k for d = 1, 2, 3 and M^(2k) == M^k
    pw = mk
    for _ in range(3):
        pw = pw @ m
        assert pw == mk
    assert mk @ mk == mk
    dec = si_decompose(mk)
    recurrent = tuple(b.states for b in dec.blocks)
    in_blocks = {x for b in recurrent for x in b}
    zeros = zero_columns(m)
    # outside the recurrent blocks only zero columns, and M already equals 1 pi_i on each block
    strict = all(x in zeros for x in range(m.shape[0]) if x not in in_blocks) and all(
        m.rows[x] == mk.rows[x] for b in recurrent for x in b
    )
    # M^k (M - I) = 0 forces every eigenvalue into {0, 1}
    return FiniteConvergenceReport(True, k, True, recurrent, strict, cap)


@dataclass(frozen=True)
class IdempotenceVerdict:
    idempotent: bool
    m: int
    message: str


class PreconditionError(ValueError):
    pass


def reversible_settles_implies_idempotent(m, pi: TargetDistribution) -> IdempotenceVerdict:
    """For a chain reversible w.r.t. positive ``pi`` that settles, confirm M^2 == M."""
    m = as_matrix(m)
    if not check_reversible(m, pi):
        raise PreconditionError("matrix is not reversible w.r.t. pi")
    rep = settle_analysis(m)
    if not rep.settles:
        raise PreconditionError(f"matrix does not settle within {rep.cap} steps")
    ok = is_idempotent(m)
    if not ok:
        return IdempotenceVerdict(False, rep.m, f"falsification: reversible chain settles at m={rep.m} "
                                          "but M^2 != M")
    return IdempotenceVerdict(True, rep.m, "idempotent confirmed")

