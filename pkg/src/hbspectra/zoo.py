"""Random and fixed test instances: heat-bath specs, SI matrices, spin and
contingency chains.  Every generator takes an explicit ``random.Random``."""

from __future__ import annotations

import random
from fractions import Fraction

from .heatbath import HeatBathSpec, Label
from .matrixcore import RationalMatrix, StateSpace, TargetDistribution
from .models import (
    ContingencyInstance,
    Graph,
    build_contingency_chain,
    build_spin_heatbath,
    ising,
    potts,
    proper_colourings,
)
from .sicanon import compose_si


def random_weights(rng: random.Random, n: int, lo: int = 1, hi: int = 9) -> list[Fraction]:
    w = [rng.randint(lo, hi) for _ in range(n)]
    if not any(w):
        w[rng.randrange(n)] = 1
    z = sum(w)
    return [Fraction(x, z) for x in w]


def random_partition(rng: random.Random, n: int) -> tuple[tuple[int, ...], ...]:
    n_blocks = rng.randint(1, n)
    owner = [rng.randrange(n_blocks) for _ in range(n)]
    blocks: dict[int, list[int]] = {}
    for x, b in enumerate(owner):
        blocks.setdefault(b, []).append(x)
    return tuple(tuple(b) for b in blocks.values())


def random_spec(rng: random.Random, max_states: int = 12, max_labels: int = 4,
                shared_partition: bool = False) -> HeatBathSpec:
    n = rng.randint(1, max_states)
    n_labels = rng.randint(1, max_labels)
    space = StateSpace.range(n)
    pi = TargetDistribution(space, tuple(random_weights(rng, n)))
    rho = random_weights(rng, n_labels, lo=0)
    part = random_partition(rng, n)
    labels = tuple(
        Label(f"a{i}", rho[i], part if shared_partition else random_partition(rng, n))
        for i in range(n_labels)
    )
    return HeatBathSpec(space, pi, labels)


def random_si(rng: random.Random, max_blocks: int = 5, max_block_size: int = 6,
              max_ephemeral: int = 3, max_size: int = 25):
    """Random SI matrix from canonical-form data, then randomly permuted.

    Returns ``(matrix, blocks, ephemeral)`` with blocks as (states, pi_i).
    """
    while True:
        k = rng.randint(1, max_blocks)
        sizes = [rng.randint(1, max_block_size) for _ in range(k)]
        t = rng.randint(0, max_ephemeral)
        if sum(sizes) + t <= max_size:
            break
    n = sum(sizes) + t
    perm = list(range(n))
    rng.shuffle(perm)
    blocks = []
    pos = 0
    for s in sizes:
        blocks.append((tuple(sorted(perm[pos:pos + s])), random_weights(rng, s)))
        pos += s
    ephemeral = tuple(sorted(perm[pos:]))
    p_rows = [random_weights(rng, k, lo=0) if rng.random() < 0.8 else _point(rng, k)
              for _ in ephemeral]
    m = compose_si(blocks, ephemeral, p_rows, n)
    return m, blocks, ephemeral


def _point(rng: random.Random, k: int) -> list[Fraction]:
    out = [Fraction(0)] * k
    out[rng.randrange(k)] = Fraction(1)
    return out


def direct_sum_1si(rng: random.Random, max_blocks: int = 4, max_block_size: int = 5):
    """A permuted direct sum of 1-SI blocks with the pi it is reversible for."""
    m, blocks, _ = random_si(rng, max_blocks, max_block_size, max_ephemeral=0)
    n = m.shape[0]
    mass = random_weights(rng, len(blocks))
    probs = [Fraction(0)] * n
    for (states, ws), c in zip(blocks, mass):
        for x, w in zip(states, ws):
            probs[x] = c * w
    return m, TargetDistribution(m.row_space, tuple(probs))


def spin_zoo() -> dict[str, HeatBathSpec]:
    """Ising/Potts on paths, cycles and complete graphs plus proper colourings."""
    out = {}
    for name, g in [("path3", Graph.path(3)), ("path5", Graph.path(5)),
                    ("cycle4", Graph.cycle(4)), ("cycle6", Graph.cycle(6)),
                    ("K4", Graph.complete(4)), ("K6", Graph.complete(6)),
                    ("K8", Graph.complete(8))]:
        out[f"ising-{name}-w2"] = build_spin_heatbath(ising(g, 2), check_rule=False)
    out["ising-edge-w3/2"] = build_spin_heatbath(ising(Graph.path(2), Fraction(3, 2)))
    out["potts3-path3-w2"] = build_spin_heatbath(potts(Graph.path(3), 3, 2))
    out["potts3-cycle4-w3"] = build_spin_heatbath(potts(Graph.cycle(4), 3, 3))
    out["potts4-K3-w5/4"] = build_spin_heatbath(potts(Graph.complete(3), 4, Fraction(5, 4)))
    out["col3-path4"] = build_spin_heatbath(proper_colourings(Graph.path(4), 3))
    out["col3-cycle5"] = build_spin_heatbath(proper_colourings(Graph.cycle(5), 3))
    out["col4-K3"] = build_spin_heatbath(proper_colourings(Graph.complete(3), 4))
    out["col2-edge"] = build_spin_heatbath(proper_colourings(Graph.path(2), 2))
    return out


CONTINGENCY_ZOO = [
    ((1, 1), (1, 1)),
    ((2, 2), (2, 2)),
    ((1, 1, 1), (1, 1, 1)),
    ((2, 1), (1, 2)),
    ((3, 2), (2, 2, 1)),
    ((2, 2, 2), (3, 3)),
    ((2, 2, 1), (2, 2, 1)),
    ((3, 3, 2), (2, 3, 3)),
]


def contingency_zoo() -> dict[str, HeatBathSpec]:
    return {
        f"r={','.join(map(str, r))};c={','.join(map(str, c))}":
            build_contingency_chain(ContingencyInstance(r, c))
        for r, c in CONTINGENCY_ZOO
    }


def worked_example() -> HeatBathSpec:
    """Three states, uniform pi, labels a: {0,1}/{2} and b: {0}/{1,2}, rho uniform."""
    space = StateSpace(["0", "1", "2"])
    pi = TargetDistribution.uniform(space)
    half = Fraction(1, 2)
    return HeatBathSpec(space, pi, (Label("a", half, ((0, 1), (2,))),
                                    Label("b", half, ((0,), (1, 2)))))


def swap_matrix() -> RationalMatrix:
    return RationalMatrix.from_rows([[0, 1], [1, 0]])
