import json
import random
from fractions import Fraction

import pytest

from conftest import F
from hbspectra import zoo
from hbspectra.heatbath import (
    HeatBathSpec,
    InvalidSpecError,
    Label,
    ReconstructionError,
    build_chain,
    build_label_kernel,
    reconstruct_spec,
    spec_from_dict,
    spec_to_dict,
    validate_spec,
)
from hbspectra.matrixcore import (
    RationalMatrix,
    StateSpace,
    TargetDistribution,
    check_reversible,
    is_idempotent,
)

h = Fraction(1, 2)
third = Fraction(1, 3)


def spec3(*labels, pi=None):
    sp = StateSpace.range(3)
    return HeatBathSpec(sp, pi or TargetDistribution.uniform(sp), tuple(labels))


def test_validate_examples():
    assert validate_spec(spec3(Label("a", 1, ((0, 1), (2,))))).ok
    rep = validate_spec(spec3(Label("a", 1, ((0, 1), (1, 2)))))
    assert not rep.ok
    assert any(v.axiom == "(II)" and v.witness == 1 and "overlapping" in v.message
               for v in rep.violations)
    rep = validate_spec(spec3(Label("a", 1, ((0,), (2,)))))
    assert [v.message for v in rep.violations] == ["(II): state 1 uncovered"]


def test_validate_reports_malformed_instead_of_raising():
    rep = validate_spec(spec3(Label("a", 1, ((0, 1, 7), (2,)))))
    assert any(v.axiom == "index" and v.witness == 7 for v in rep.violations)
    rep = validate_spec(spec3(Label("a", h, ((0, 1, 2),))))
    assert any(v.axiom == "rho" for v in rep.violations)
    rep = validate_spec(spec3())
    assert any(v.axiom == "labels" for v in rep.violations)


def test_label_kernel_examples():
    k = build_label_kernel(spec3(Label("a", 1, ((0, 1), (2,)))), "a").matrix
    assert k == F([h, h, 0], [h, h, 0], [0, 0, 1])
    k = build_label_kernel(spec3(Label("a", 1, ((0,), (1,), (2,)))), "a").matrix
    assert k == RationalMatrix.identity(StateSpace.range(3))
    sp = StateSpace.range(2)
    t = Fraction(2, 3)
    s = HeatBathSpec(sp, TargetDistribution(sp, (t, 1 - t)), (Label("a", 1, ((0, 1),)),))
    assert build_label_kernel(s, "a").matrix == F([t, 1 - t], [t, 1 - t])
    with pytest.raises(KeyError):
        build_label_kernel(s, "zz")


def test_build_chain_examples():
    p = build_chain(zoo.worked_example())
    q = Fraction(1, 4)
    assert p == F([3 * q, q, 0], [q, h, q], [0, q, 3 * q])
    s = spec3(Label("a", 1, ((0, 1, 2),)), pi=TargetDistribution(
        StateSpace.range(3), (Fraction(1, 6), Fraction(1, 3), h)))
    assert all(row == s.pi.probs for row in build_chain(s).rows)
    s = spec3(Label("a", h, ((0,), (1,), (2,))), Label("b", h, ((0,), (1,), (2,))))
    assert build_chain(s) == RationalMatrix.identity(StateSpace.range(3))


def test_build_chain_refuses_invalid():
    with pytest.raises(InvalidSpecError) as info:
        build_chain(spec3(Label("a", 1, ((0, 1), (1, 2)))))
    assert not info.value.report.ok


def test_random_kernels_idempotent_and_balanced():
    rng = random.Random(5)
    for _ in range(100):
        spec = zoo.random_spec(rng)
        for lab in spec.labels:
            k = build_label_kernel(spec, lab.id).matrix
            assert k @ k == k
            assert check_reversible(k, spec.pi)
        p = build_chain(spec)
        assert all(p.rows[x][x] > 0 for x in range(len(spec.space)))
        for lab in spec.labels:
            block_of = lab.block_of()
            for x in range(len(spec.space)):
                for y in block_of[x]:
                    assert set(block_of[y]) == set(block_of[x])


def test_reconstruct_examples():
    sp = StateSpace.range(3)
    u = TargetDistribution.uniform(sp)
    s = reconstruct_spec([(F([h, h, 0], [h, h, 0], [0, 0, 1]), 1)], u)
    assert s.labels[0].id == "k0"
    assert s.labels[0].blocks == ((0, 1), (2,))
    s = reconstruct_spec([(RationalMatrix.identity(sp), 1)], u)
    assert s.labels[0].blocks == ((0,), (1,), (2,))
    t = Fraction(2, 3)
    sp2 = StateSpace.range(2)
    s = reconstruct_spec([(F([t, 1 - t], [t, 1 - t]), 1)],
                         TargetDistribution(sp2, (t, 1 - t)))
    assert s.labels[0].blocks == ((0, 1),)


def test_reconstruct_errors_are_separate():
    sp = StateSpace.range(3)
    u = TargetDistribution.uniform(sp)
    with pytest.raises(ReconstructionError) as e:
        reconstruct_spec([(F([0, 1, 0], [1, 0, 0], [0, 0, 1]), 1)], u)
    assert e.value.reason == "not SI"
    with pytest.raises(ReconstructionError) as e:
        reconstruct_spec([(F([h, h, 0], [h, h, 0], [h, h, 0]), 1)], u)
    assert e.value.reason == "zero column"
    q = Fraction(1, 4)
    with pytest.raises(ReconstructionError) as e:
        reconstruct_spec([(F([q, 3 * q, 0], [q, 3 * q, 0], [0, 0, 1]), 1)], u)
    assert e.value.reason == "not reversible"


def test_round_trip_random_specs():
    rng = random.Random(17)
    for _ in range(150):
        spec = zoo.random_spec(rng)
        kernels = [(build_label_kernel(spec, lab.id).matrix, lab.rho) for lab in spec.labels]
        back = reconstruct_spec(kernels, spec.pi)
        assert [lab.id for lab in back.labels] == [f"k{i}" for i in range(len(kernels))]
        assert list(back.partitions().values()) == list(spec.partitions().values())
        assert build_chain(back) == build_chain(spec)


def test_json_round_trip():
    spec = zoo.worked_example()
    text = json.dumps(spec_to_dict(spec))
    again = spec_from_dict(json.loads(text))
    assert again == spec
    data = json.loads(text)
    assert data["pi"] == ["1/3", "1/3", "1/3"]
    assert data["labels"][0] == {"id": "a", "rho": "1/2", "blocks": [[0, 1], [2]]}
    data["pi"] = ["1/2", "1/2", "0"]
    with pytest.raises(ValueError):
        spec_from_dict(data)


def test_idempotent_kernel_is_idempotent_exactly():
    spec = zoo.worked_example()
    for lab in spec.labels:
        assert is_idempotent(build_label_kernel(spec, lab.id).matrix)
