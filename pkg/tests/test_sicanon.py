import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import F
from hbspectra import zoo
from hbspectra.matrixcore import (
    RationalMatrix,
    StateSpace,
    TargetDistribution,
    check_reversible,
    is_idempotent,
    rank,
)
from hbspectra.sicanon import (
    PreconditionError,
    diag_conjugate,
    reversible_settles_implies_idempotent,
    reversible_si_equivalence,
    settle_analysis,
    si_classify,
    si_decompose,
)

h = Fraction(1, 2)
q = Fraction(1, 4)
I3 = RationalMatrix.identity(StateSpace.range(3))


def test_is_idempotent_examples():
    t = Fraction(2, 3)
    assert is_idempotent(F([t, 1 - t], [t, 1 - t]))
    assert is_idempotent(I3)


def test_printed_matrix_is_not_idempotent():
    # Regression: the structure-theory section presents this matrix as an
    # idempotent example, but exact multiplication disagrees.
    m = F([h, h, 0], [1, 0, 0], [0, 1, 0])
    assert not is_idempotent(m)
    assert (m @ m).rows[0] == (3 * q, q, 0)
    assert si_classify(m).kind == "not_idempotent"


def test_classify_examples():
    v = si_classify(F([h, h, 0], [h, h, 0], [h, h, 0]))
    assert (v.kind, v.t, v.r) == ("SI", 1, 1)
    v = si_classify(F([h, h], [h, h]))
    assert (v.kind, v.t, v.r) == ("SI", 0, 1)
    assert si_classify(zoo.swap_matrix()).kind == "not_idempotent"
    assert si_classify(F([h, 0], [0, 1])).kind == "not_stochastic"


def test_decompose_examples():
    d = si_decompose(F([h, h, 0], [h, h, 0], [h, h, 0]))
    assert (d.k, d.t) == (1, 1)
    assert d.blocks[0].states == (0, 1) and d.blocks[0].pi == (h, h)
    assert d.ephemeral == (2,) and d.p == ((1,),)
    d = si_decompose(F([h, h, 0], [h, h, 0], [0, 0, 1]))
    assert (d.k, d.t) == (2, 0)
    assert [b.pi for b in d.blocks] == [(h, h), (1,)]
    d = si_decompose(F([q, q, h], [q, q, h], [q, q, h]))
    assert (d.k, d.t) == (1, 0) and d.blocks[0].pi == (q, q, h)


def test_decompose_refuses_non_si():
    with pytest.raises(ValueError):
        si_decompose(zoo.swap_matrix())


def test_coupling_is_outer_product():
    rng = random.Random(8)
    for _ in range(50):
        m, _, _ = zoo.random_si(rng)
        d = si_decompose(m)
        for i, blk in enumerate(d.blocks):
            c = d.coupling(i)
            for e, row in enumerate(c):
                assert row == [d.p[e][i] * v for v in blk.pi]
        assert all(sum(row) == 1 for row in d.p)


def test_round_trip_and_rank_law():
    rng = random.Random(1234)
    for _ in range(150):
        m, blocks, eph = zoo.random_si(rng)
        d = si_decompose(m)
        assert d.reassemble() == m
        assert d.k == len(blocks) == rank(m) == si_classify(m).r
        assert d.ephemeral == eph
        assert sorted(b.states for b in d.blocks) == sorted(b[0] for b in blocks)


def test_equivalence_examples():
    e = reversible_si_equivalence(F([h, h, 0], [h, h, 0], [0, 0, 1]))
    assert e.no_zero_columns and e.direct_sum and e.reversible
    assert e.witness == (h, h, 1)
    e = reversible_si_equivalence(F([h, h, 0], [h, h, 0], [h, h, 0]))
    assert not (e.no_zero_columns or e.direct_sum or e.reversible)
    assert e.witness is None
    e = reversible_si_equivalence(I3)
    assert e.witness == (1, 1, 1)


def test_witness_conjugation_convention():
    # diag(pi) gives D M D^-1 = M^T; the D^-1 M D form needs 1/pi instead.
    m = F([q, 3 * q], [q, 3 * q])
    e = reversible_si_equivalence(m)
    assert e.witness == (q, 3 * q)
    assert diag_conjugate(m, e.conjugator()) == m.transpose()
    assert diag_conjugate(m, e.witness) != m.transpose()
    d = e.witness
    dmd = RationalMatrix(tuple(tuple(d[x] * v / d[y] for y, v in enumerate(r))
                               for x, r in enumerate(m.rows)), m.row_space, m.col_space)
    assert dmd == m.transpose()


def test_settle_examples():
    r = settle_analysis(F([0, 1, 0], [0, 0, 1], [0, 0, 1]))
    assert (r.settles, r.m, r.recurrent_blocks, r.strict_form) == (True, 2, ((2,),), False)
    r = settle_analysis(F([h, h, 0], [h, h, 0], [h, h, 0]))
    assert (r.settles, r.m, r.strict_form) == (True, 1, True)
    r = settle_analysis(zoo.swap_matrix(), m_cap=50)
    assert not r.settles and r.m is None


def test_settling_implies_binary_spectrum():
    rng = random.Random(3)
    for _ in range(60):
        n = rng.randint(2, 6)
        # strictly upper-triangular flow into an absorbing last state settles
        rows = []
        for x in range(n - 1):
            w = zoo.random_weights(rng, n - 1 - x, lo=0)
            rows.append([0] * (x + 1) + w)
        rows.append([0] * (n - 1) + [1])
        m = F(*rows)
        r = settle_analysis(m)
        assert r.settles and r.m <= n
        eig = np.linalg.eigvals(m.to_numpy())
        assert np.all(np.minimum(np.abs(eig), np.abs(eig - 1)) <= 1e-6)


def test_reversible_settling_examples():
    t = Fraction(2, 3)
    sp = StateSpace.range(2)
    v = reversible_settles_implies_idempotent(F([t, 1 - t], [t, 1 - t]),
                                              TargetDistribution(sp, (t, 1 - t)))
    assert v.idempotent and v.m == 1
    assert reversible_settles_implies_idempotent(I3, TargetDistribution.uniform(I3.row_space)).idempotent
    with pytest.raises(PreconditionError):
        reversible_settles_implies_idempotent(zoo.swap_matrix(), TargetDistribution.uniform(sp))
    with pytest.raises(PreconditionError):
        reversible_settles_implies_idempotent(F([0, 1], [0, 1]), TargetDistribution.uniform(sp))


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_permutation_invariance(rng):
    m, _, _ = zoo.random_si(rng, max_size=12)
    n = m.shape[0]
    perm = list(range(n))
    rng.shuffle(perm)
    u = m.permuted(perm)
    a, b = si_classify(m), si_classify(u)
    assert (a.kind, a.t, a.r) == (b.kind, b.t, b.r)
    sa, sb = settle_analysis(m), settle_analysis(u)
    assert (sa.settles, sa.m, sa.strict_form) == (sb.settles, sb.m, sb.strict_form)


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_direct_sums_are_reversible(rng):
    m, pi = zoo.direct_sum_1si(rng)
    assert check_reversible(m, pi)
    e = reversible_si_equivalence(m)
    assert e.reversible and e.direct_sum and e.no_zero_columns
