"""Seeded trajectories and total-variation checks.

Random numbers come from numpy's PCG64 bit generator seeded with a 64-bit
integer.  A heat-bath step consumes exactly two uniforms, first for the label
and then for the state inside the block; a transfer step consumes three
(lift, lifted move, project back).  Drawing ``k`` uniforms in one call yields
the same stream as ``k`` single draws, so :func:`trajectory` and repeated
:func:`step` calls agree step for step.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _backend
from .heatbath import HeatBathSpec, require_valid
from .matrixcore import RationalMatrix, TargetDistribution
from .transfer import adjoint


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class TrajectoryConfig:
    seed: int
    steps: int
    start: int | Sequence = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")


def _cumulative(weights: Sequence[Fraction]) -> list[float]:
    # exact running sums, rounded once; the final entry is exactly 1.0
    total = sum(weights, Fraction(0))
    out = []
    acc = Fraction(0)
    for w in weights:
        acc += w
        out.append(float(acc / total))
    out[-1] = 1.0
    return out


class SamplingTables:
    """Flat per-label lookup tables used by both trajectory kernels."""

    def __init__(self, spec: HeatBathSpec):
        require_valid(spec)
        n = len(spec.space)
        n_labels = len(spec.labels)
        self.n = n
        self.label_cum = np.array(_cumulative([lab.rho for lab in spec.labels]))
        self.order = np.zeros((n_labels, n), dtype=np.int64)
        self.cum = np.zeros((n_labels, n))
        self.start = np.zeros((n_labels, n), dtype=np.int64)
        self.stop = np.zeros((n_labels, n), dtype=np.int64)
        for a, lab in enumerate(spec.labels):
            k = 0
            for block in lab.blocks:
                cum = _cumulative([spec.pi.probs[y] for y in block])
                for off, y in enumerate(block):
                    self.order[a, k + off] = y
                    self.cum[a, k + off] = cum[off]
                for y in block:
                    self.start[a, y] = k
                    self.stop[a, y] = k + len(block)
                k += len(block)

    def step(self, x: int, u_label: float, u_state: float) -> int:
        a = min(bisect_right(self.label_cum, u_label), len(self.label_cum) - 1)
        lo, hi = int(self.start[a, x]), int(self.stop[a, x])
        i = min(lo + bisect_right(self.cum[a, lo:hi], u_state), hi - 1)
        return int(self.order[a, i])


_tables_cache: dict[int, tuple[HeatBathSpec, SamplingTables]] = {}


def _tables(spec: HeatBathSpec) -> SamplingTables:
    hit = _tables_cache.get(id(spec))
    if hit is not None and hit[0] is spec:
        return hit[1]
    tab = SamplingTables(spec)
    _tables_cache.clear()
    _tables_cache[id(spec)] = (spec, tab)
    return tab


def step(spec: HeatBathSpec, x: int, rng: np.random.Generator) -> int:
    """One heat-bath move from state index ``x``."""
    u = rng.random(2)
    return _tables(spec).step(x, float(u[0]), float(u[1]))


def trajectory(spec: HeatBathSpec, config: TrajectoryConfig, *,
               backend: str | None = None) -> np.ndarray:
    """State indices visited, of length ``steps + 1`` (the start included)."""
    tab = _tables(spec)
    rng = make_rng(config.seed)
    start = config.start
    if not isinstance(start, (int, np.integer)):
        start = int(_sample(np.asarray([float(p) for p in start]), rng.random()))
    uniforms = rng.random((config.steps, 2))
    kern = _backend.kernels if backend is None else _backend.get(backend)
    return kern.heatbath_trajectory(tab.label_cum, tab.order, tab.cum, tab.start, tab.stop,
                                    np.ascontiguousarray(uniforms), int(start))


def _sample(probs: np.ndarray, u: float) -> int:
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    return int(min(np.searchsorted(cum, u, side="right"), len(cum) - 1))


class TransferSampler:
    """Precomputed float rows of R, T and R* for :func:`transfer_step`."""

    def __init__(self, r: RationalMatrix, t: RationalMatrix, pi: TargetDistribution,
                 mu: TargetDistribution):
        self.r = r.to_numpy()
        self.t = t.to_numpy()
        self.r_star = adjoint(r, pi, mu).to_numpy()

    def step(self, x: int, u: Sequence[float]) -> int:
        lifted = _sample(self.r[x], u[0])
        moved = _sample(self.t[lifted], u[1])
        return _sample(self.r_star[moved], u[2])


def transfer_step(r, t, pi, mu, x: int, rng: np.random.Generator, *,
                  sampler: TransferSampler | None = None) -> int:
    """Lift with R(x, .), move with T, project back with R*."""
    sampler = sampler or TransferSampler(r, t, pi, mu)
    return sampler.step(x, rng.random(3))


def tv_distance(p: Sequence, q: Sequence):
    """Half the L1 distance; exact when both inputs are Fractions."""
    if len(p) != len(q):
        raise ValueError(f"distributions of sizes {len(p)} and {len(q)}")
    if all(isinstance(v, (Fraction, int)) for v in p) and all(
            isinstance(v, (Fraction, int)) for v in q):
        return sum((abs(Fraction(a) - Fraction(b)) for a, b in zip(p, q)), Fraction(0)) / 2
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


def worst_tv_after(p: RationalMatrix, pi: TargetDistribution, steps: int) -> float:
    """max_x tv(P^steps(x, .), pi) with float matrix powers."""
    pf = np.linalg.matrix_power(p.to_numpy(), steps)
    target = pi.to_numpy()
    return float(np.max(0.5 * np.sum(np.abs(pf - target[None, :]), axis=1)))


def empirical_rows(path: Sequence[int], n: int) -> np.ndarray:
    """Transition frequency matrix from consecutive pairs of a path."""
    counts = np.zeros((n, n))
    path = np.asarray(path)
    np.add.at(counts, (path[:-1], path[1:]), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, counts / np.maximum(totals, 1), 0.0), totals.ravel()


def dump_trajectory(path: Sequence[int], labels: Sequence[str], dest=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "state"])
    for k, x in enumerate(path):
        writer.writerow([k, labels[int(x)]])
    text = buf.getvalue()
    if dest is not None:
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    return text
