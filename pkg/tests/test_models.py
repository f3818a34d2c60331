import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hbspectra import zoo
from hbspectra.heatbath import build_chain, validate_spec
from hbspectra.matrixcore import communicating_structure, is_idempotent, is_stationary, lazify
from hbspectra.models import (
    CapExceededError,
    ContingencyInstance,
    Graph,
    build_contingency_chain,
    build_spin_heatbath,
    build_swendsen_wang,
    direct_swendsen_wang,
    enumerate_tables,
    ising,
    parse_graph,
    potts,
    proper_colourings,
)
from hbspectra.spectral import certify_psd

h = Fraction(1, 2)


def brute_tables(r, c):
    top = max(r)
    out = []
    for flat in itertools.product(range(top + 1), repeat=len(r) * len(c)):
        t = [flat[i * len(c):(i + 1) * len(c)] for i in range(len(r))]
        if all(sum(row) == ri for row, ri in zip(t, r)) and all(
                sum(t[i][j] for i in range(len(r))) == cj for j, cj in enumerate(c)):
            out.append(tuple(map(tuple, t)))
    return out


def test_graph_parsing():
    g = parse_graph("# comment\na b\nb c\n\nd\n")
    assert g.vertices == ("a", "b", "c", "d")
    assert g.edges == ((0, 1), (1, 2))
    with pytest.raises(ValueError):
        parse_graph("a a\n")
    with pytest.raises(ValueError):
        parse_graph("a b\nb a\n")


def test_ising_single_edge():
    spec = build_spin_heatbath(ising(Graph.path(2), 2))
    assert spec.space.states == ("AA", "AB", "BA", "BB")
    assert spec.pi.probs == (Fraction(1, 3), Fraction(1, 6), Fraction(1, 6), Fraction(1, 3))
    p = build_chain(spec)
    assert p.rows[0][1] == Fraction(1, 6)
    assert p.rows[0][0] == Fraction(2, 3)


def test_zero_temperature_is_uniform_in_blocks():
    spec = build_spin_heatbath(potts(Graph.cycle(4), 3, 1))
    for lab in spec.labels:
        for block in lab.blocks:
            assert len({spec.pi.probs[x] for x in block}) == 1


def test_proper_two_colourings_of_edge():
    spec = build_spin_heatbath(proper_colourings(Graph.path(2), 2))
    assert spec.space.states == ("AB", "BA")
    assert all(len(b) == 1 for lab in spec.labels for b in lab.blocks)
    assert build_chain(spec).rows == ((1, 0), (0, 1))


def test_empty_colourings_rejected():
    with pytest.raises(ValueError):
        build_spin_heatbath(proper_colourings(Graph.complete(3), 2))


def test_spin_zoo_is_psd():
    for name, spec in zoo.spin_zoo().items():
        assert validate_spec(spec).ok, name
        rep = certify_psd(build_chain(spec), spec.pi)
        assert rep.psd and rep.lambda_min >= -1e-9, name


@pytest.mark.parametrize("r, c, count", [((1, 1), (1, 1), 2), ((2, 2), (2, 2), 3),
                                         ((1, 1, 1), (1, 1, 1), 6)])
def test_table_counts(r, c, count):
    assert len(enumerate_tables(ContingencyInstance(r, c))) == count


@pytest.mark.parametrize("r, c", zoo.CONTINGENCY_ZOO)
def test_enumeration_matches_brute_force(r, c):
    assert enumerate_tables(ContingencyInstance(r, c)) == sorted(brute_tables(r, c))


def test_contingency_margin_errors():
    with pytest.raises(ValueError):
        ContingencyInstance((1, 2), (1, 1))
    with pytest.raises(ValueError):
        ContingencyInstance((0, 2), (1, 1))


def test_contingency_examples():
    p = build_chain(build_contingency_chain(ContingencyInstance((1, 1), (1, 1))))
    assert p.rows == ((h, h), (h, h))
    spec = build_contingency_chain(ContingencyInstance((2, 2), (2, 2)))
    p = build_chain(spec)
    third = Fraction(1, 3)
    assert all(v == third for row in p.rows for v in row)
    assert certify_psd(p, spec.pi).eigenvalues == pytest.approx([1, 0, 0], abs=1e-12)


def test_contingency_zoo_properties():
    for name, spec in zoo.contingency_zoo().items():
        p = build_chain(spec)
        assert is_stationary(p, spec.pi), name
        assert communicating_structure(p).is_irreducible, name
        assert certify_psd(p, spec.pi).lambda_min >= -1e-9
        assert certify_psd(lazify(p), spec.pi).lambda_min >= -1e-12


def test_swendsen_wang_single_edge():
    sw = build_swendsen_wang(Graph.path(2), 2, 2)
    assert sw.P == direct_swendsen_wang(Graph.path(2), 2, 2)
    assert is_idempotent(sw.T)
    rep = certify_psd(sw.P, sw.pi)
    assert rep.eigenvalues == pytest.approx([1, 0.25, 0, 0], abs=1e-10)


@pytest.mark.parametrize("graph, q, w", [
    (Graph.path(3), 2, 2), (Graph.cycle(3), 2, Fraction(3, 2)), (Graph.path(3), 3, 5),
    (Graph.complete(4), 2, 3), (Graph.from_edges([], ["a", "b"]), 3, 2)])
def test_swendsen_wang_matches_direct(graph, q, w):
    sw = build_swendsen_wang(graph, q, w)
    assert sw.P == direct_swendsen_wang(graph, q, w)
    assert is_stationary(sw.P, sw.pi)


def test_swendsen_wang_empty_graph_is_uniform():
    g = Graph.from_edges([], ["a", "b"])
    p = direct_swendsen_wang(g, 2, 2)
    assert all(v == Fraction(1, 4) for row in p.rows for v in row)


def test_swendsen_wang_large_w_concentrates():
    g = Graph.path(2)
    lo = direct_swendsen_wang(g, 2, 2)
    hi = direct_swendsen_wang(g, 2, 1000)
    # from AA, kept bond recolours both ends together: AA and BB gain mass
    assert hi.rows[0][3] > lo.rows[0][3]
    assert hi.rows[0][1] < lo.rows[0][1]


def test_swendsen_wang_float_w():
    w = Fraction(math.exp(0.7))
    sw = build_swendsen_wang(Graph.path(3), 2, w)
    d = direct_swendsen_wang(Graph.path(3), 2, w)
    assert np.max(np.abs(sw.P.to_numpy() - d.to_numpy())) <= 1e-12


def test_parameter_checks():
    with pytest.raises(ValueError):
        build_swendsen_wang(Graph.path(2), 1, 2)
    with pytest.raises(ValueError):
        build_swendsen_wang(Graph.path(2), 2, 1)
    with pytest.raises(ValueError):
        potts(Graph.path(2), 1, 2)


def test_caps(monkeypatch):
    monkeypatch.setenv("HBSPECTRA_MAX_STATES", "10")
    with pytest.raises(CapExceededError):
        build_spin_heatbath(ising(Graph.path(4), 2))
    with pytest.raises(CapExceededError):
        enumerate_tables(ContingencyInstance((3, 3, 3), (3, 3, 3)))
