import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import F
from hbspectra import zoo
from hbspectra.heatbath import build_chain, build_label_kernel
from hbspectra.matrixcore import StateSpace, TargetDistribution, lazify
from hbspectra.spectral import (
    AsymmetricMatrixError,
    MixingBoundError,
    NotReversibleError,
    certify_psd,
    eigenvalues_symmetric,
    mixing_time_bound,
    symmetrize,
)

h = Fraction(1, 2)


def char_poly_roots(a):
    """Closed-form eigenvalues of a symmetric 2x2 or 3x3 matrix (trig method)."""
    a = np.asarray(a, dtype=float)
    if a.shape == (2, 2):
        tr, det = a[0, 0] + a[1, 1], a[0, 0] * a[1, 1] - a[0, 1] ** 2
        disc = math.sqrt(max(tr * tr / 4 - det, 0.0))
        return sorted([tr / 2 + disc, tr / 2 - disc], reverse=True)
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    q = np.trace(a) / 3
    p2 = sum((a[i, i] - q) ** 2 for i in range(3)) + 2 * p1
    p = math.sqrt(p2 / 6)
    if p == 0:
        return [q, q, q]
    b = (a - q * np.eye(3)) / p
    r = max(-1.0, min(1.0, np.linalg.det(b) / 2))
    phi = math.acos(r) / 3
    e1 = q + 2 * p * math.cos(phi)
    e3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
    return sorted([e1, 3 * q - e1 - e3, e3], reverse=True)


def test_symmetrize_is_symmetric_for_nonuniform_pi():
    spec = zoo.random_spec(random.Random(2), max_states=8)
    q = symmetrize(build_chain(spec), spec.pi)
    assert np.max(np.abs(q - q.T)) <= 1e-15


def test_symmetrize_refuses_nonreversible():
    c = F([0, Fraction(2, 3), Fraction(1, 3)], [Fraction(1, 3), 0, Fraction(2, 3)],
          [Fraction(2, 3), Fraction(1, 3), 0])
    with pytest.raises(NotReversibleError):
        symmetrize(c, TargetDistribution.uniform(StateSpace.range(3)))


def test_eigenvalues_examples(backend):
    assert eigenvalues_symmetric(np.eye(3), backend=backend) == pytest.approx([1, 1, 1])
    assert eigenvalues_symmetric([[0, 1], [1, 0]], backend=backend) == pytest.approx([1, -1])
    e = eigenvalues_symmetric([[0.5, 0.5], [0.5, 0.5]], backend=backend)
    assert e == pytest.approx([1, 0], abs=1e-14)
    with pytest.raises(AsymmetricMatrixError):
        eigenvalues_symmetric([[0, 1], [0, 0]], backend=backend)


def test_eigenvalues_against_closed_form(backend):
    rng = np.random.default_rng(4)
    for n in (2, 3):
        for _ in range(200):
            a = rng.normal(size=(n, n))
            a = a + a.T
            got = eigenvalues_symmetric(a, backend=backend)
            assert np.max(np.abs(got - char_poly_roots(a))) <= 1e-9


@pytest.mark.parametrize("n", [5, 20, 60])
def test_eigenvalues_against_lapack(backend, n):
    rng = np.random.default_rng(n)
    a = rng.normal(size=(n, n))
    a = a + a.T
    got = eigenvalues_symmetric(a, backend=backend)
    ref = np.sort(np.linalg.eigvalsh(a))[::-1]
    assert np.max(np.abs(got - ref)) <= 1e-10 * max(1, np.abs(ref).max())


def test_backends_agree():
    from hbspectra import _backend

    if len(_backend.available()) < 2:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(9)
    a = rng.normal(size=(30, 30))
    a = a + a.T
    x = eigenvalues_symmetric(a, backend="python")
    y = eigenvalues_symmetric(a, backend="cython")
    assert np.max(np.abs(x - y)) <= 1e-11


def test_worked_example_report():
    spec = zoo.worked_example()
    rep = certify_psd(build_chain(spec), spec.pi, epsilon=0.01)
    assert rep.eigenvalues == pytest.approx([1, 0.75, 0.25], abs=1e-10)
    assert rep.psd and rep.is_ergodic
    assert rep.lambda_star == pytest.approx(0.75, abs=1e-12)
    assert rep.mixing_bound["tau_upper"] == pytest.approx(4 * math.log(300), abs=1e-4)


def test_swap_is_not_psd_and_bound_refused():
    pi = TargetDistribution.uniform(StateSpace.range(2))
    rep = certify_psd(zoo.swap_matrix(), pi, epsilon=0.01)
    assert not rep.psd
    assert rep.lambda_min == pytest.approx(-1, abs=1e-12)
    assert rep.mixing_bound is None
    with pytest.raises(MixingBoundError):
        mixing_time_bound(rep, pi, 0.01)


def test_idempotent_gets_exact_certificate():
    spec = zoo.worked_example()
    k = build_label_kernel(spec, "a").matrix
    rep = certify_psd(k, spec.pi)
    assert rep.certificate == "exact-idempotent"
    assert sorted(round(v, 9) for v in rep.eigenvalues) == [0, 1, 1]
    assert not rep.is_ergodic
    with pytest.raises(MixingBoundError):
        mixing_time_bound(rep, spec.pi, 0.1)


def test_mixing_bound_rejects_bad_epsilon():
    spec = zoo.worked_example()
    rep = certify_psd(build_chain(spec), spec.pi)
    for eps in (0, 1, -0.5, 2):
        with pytest.raises(MixingBoundError):
            mixing_time_bound(rep, spec.pi, eps)


def test_kernel_spectrum_multiplicity_is_block_count():
    rng = random.Random(21)
    for _ in range(40):
        spec = zoo.random_spec(rng)
        for lab in spec.labels:
            rep = certify_psd(build_label_kernel(spec, lab.id).matrix, spec.pi)
            eig = np.array(rep.eigenvalues)
            assert np.all(np.minimum(np.abs(eig), np.abs(eig - 1)) <= 1e-9)
            assert int(np.sum(np.abs(eig - 1) <= 1e-9)) == len(lab.blocks)


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False))
def test_heat_bath_chains_are_psd(rng):
    spec = zoo.random_spec(rng)
    rep = certify_psd(build_chain(spec), spec.pi)
    assert rep.psd and rep.lambda_min >= -1e-9
    assert rep.eigenvalues[0] == pytest.approx(1, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_lazy_chain_bound_uses_lambda_1(rng):
    spec = zoo.random_spec(rng, max_states=8)
    lazy = lazify(build_chain(spec))
    rep = certify_psd(lazy, spec.pi)
    assert rep.lambda_min >= -1e-12
    if rep.lambda_1 is not None:
        assert rep.lambda_star == rep.lambda_1


