"""Heat-bath chains: partition axioms, per-label kernels and their mixture.

A spec lists, for every label ``a``, a partition of the states into blocks.
The label kernel resamples inside the current block from the target
distribution restricted to that block, and the chain picks a label by its
weight ``rho`` before each move.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .matrixcore import (
    ZERO,
    RationalMatrix,
    StateSpace,
    StochasticMatrix,
    TargetDistribution,
    check_reversible,
    format_rational,
    is_idempotent,
    parse_rational,
)


class InvalidSpecError(ValueError):
    """A heat-bath spec violates its axioms; ``report`` holds the witnesses."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("; ".join(v.message for v in report.violations))


@dataclass(frozen=True)
class Label:
    id: str
    rho: Fraction
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "rho", parse_rational(self.rho))
        # canonical order: sorted members, blocks keyed by their minimum
        try:
            blocks = tuple(tuple(sorted(b)) for b in self.blocks)
            blocks = tuple(sorted(blocks, key=lambda b: (b[0],) if b else (-1,)))
        except TypeError:
            # malformed indices; left for validate_spec to report
            blocks = tuple(tuple(b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)

    def block_of(self) -> dict[int, tuple[int, ...]]:
        out = {}
        for b in self.blocks:
            for x in b:
                out.setdefault(x, b)
        return out


@dataclass(frozen=True)
class HeatBathSpec:
    space: StateSpace
    pi: TargetDistribution
    labels: tuple[Label, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))

    def label(self, a: str) -> Label:
        for lab in self.labels:
            if lab.id == a:
                return lab
        raise KeyError(f"unknown label {a!r}")

    def partitions(self) -> dict[str, frozenset[frozenset[int]]]:
        return {
            lab.id: frozenset(frozenset(b) for b in lab.blocks) for lab in self.labels
        }


@dataclass(frozen=True)
class LabelKernel:
    label: str
    matrix: StochasticMatrix


@dataclass(frozen=True)
class Violation:
    axiom: str
    message: str
    label: str | None = None
    witness: object = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {
            "valid": self.ok,
            "violations": [
                {"axiom": v.axiom, "label": v.label, "message": v.message,
                 "witness": v.witness}
                for v in self.violations
            ],
        }


def validate_spec(spec: HeatBathSpec) -> ValidationReport:
    """Check conditions (I) and (II) for every label, plus the label weights.

    Nothing is raised; every problem becomes a :class:`Violation`.  For labels
    that pass, the block-consistency implication (y in block(x) implies
    block(y) == block(x)) is re-derived and asserted.
    """
    out: list[Violation] = []
    n = len(spec.space)
    if not spec.labels:
        out.append(Violation("labels", "label set is empty"))
    ids = [lab.id for lab in spec.labels]
    for a in sorted({a for a in ids if ids.count(a) > 1}):
        out.append(Violation("labels", f"duplicate label id {a!r}", a, a))
    total = ZERO
    for lab in spec.labels:
        if lab.rho < 0:
            out.append(Violation("rho", f"label {lab.id!r} has negative weight {lab.rho}",
                                 lab.id, format_rational(lab.rho)))
        total += lab.rho
    if spec.labels and total != 1:
        out.append(Violation("rho", f"label weights sum to {total}, not 1", None,
                             format_rational(total)))
    for lab in spec.labels:
        label_ok = True
        seen: dict[int, int] = {}
        for bi, block in enumerate(lab.blocks):
            if not block:
                out.append(Violation("(II)", f"label {lab.id!r}: empty block", lab.id, bi))
                label_ok = False
            for x in block:
                if not isinstance(x, int) or not 0 <= x < n:
                    out.append(Violation("index", f"label {lab.id!r}: state index {x!r} "
                                         f"out of range 0..{n - 1}", lab.id, x))
                    label_ok = False
                    continue
                if x in seen and seen[x] != bi:
                    out.append(Violation("(II)", f"(II): overlapping blocks, witness state {x}",
                                         lab.id, x))
                    label_ok = False
                elif x in seen:
                    out.append(Violation("(II)", f"(II): state {x} repeated in one block",
                                         lab.id, x))
                    label_ok = False
                seen[x] = bi
        for x in range(n):
            if x not in seen:
                out.append(Violation("(II)", f"(II): state {x} uncovered", lab.id, x))
                label_ok = False
        if label_ok:
            block_of = lab.block_of()
            for x in range(n):
                # (I): x lies in its own block
                assert x in block_of[x]
                for y in block_of[x]:
                    assert block_of[y] == block_of[x]
    return ValidationReport(tuple(out))


def require_valid(spec: HeatBathSpec) -> None:
    report = validate_spec(spec)
    if not report.ok:
        raise InvalidSpecError(report)


def _kernel_rows(spec: HeatBathSpec, lab: Label) -> list[list[Fraction]]:
    n = len(spec.space)
    pi = spec.pi.probs
    rows = [[ZERO] * n for _ in range(n)]
    for block in lab.blocks:
        mass = spec.pi.mass(block)
        template = [(y, pi[y] / mass) for y in block]
        for x in block:
            r = rows[x]
            for y, v in template:
                r[y] = v
    return rows


def build_label_kernel(spec: HeatBathSpec, a: str, *, check: bool = True) -> LabelKernel:
    """Kernel P_a(x, y) = pi(y) / pi(block of x) for y in x's block, else 0."""
    lab = spec.label(a)
    if check:
        require_valid(spec)
    rows = _kernel_rows(spec, lab)
    mat = StochasticMatrix(tuple(map(tuple, rows)), spec.space, spec.space)
    if check:
        assert is_idempotent(mat), f"kernel {a!r} is not idempotent"
        assert check_reversible(mat, spec.pi), f"kernel {a!r} violates detailed balance"
    return LabelKernel(lab.id, mat)


def build_chain(spec: HeatBathSpec) -> StochasticMatrix:
    """P = sum over labels of rho(a) * P_a, exactly."""
    require_valid(spec)
    n = len(spec.space)
    acc = [[ZERO] * n for _ in range(n)]
    for lab in spec.labels:
        if lab.rho == 0:
            continue
        rows = _kernel_rows(spec, lab)
        for x in range(n):
            ax = acc[x]
            for y, v in enumerate(rows[x]):
                if v:
                    ax[y] += lab.rho * v
    p = StochasticMatrix(tuple(map(tuple, acc)), spec.space, spec.space)
    assert all(p.rows[x][x] > 0 for x in range(n)), "heat-bath chain lost a self-loop"
    assert check_reversible(p, spec.pi)
    return p


class ReconstructionError(ValueError):
    """A kernel handed to reconstruct_spec fails one of the required properties."""

    def __init__(self, index: int, reason: str, detail: str):
        self.index = index
        self.reason = reason
        super().__init__(f"kernel {index}: {reason}: {detail}")


def reconstruct_spec(kernels: Sequence[tuple[RationalMatrix, object]],
                     pi: TargetDistribution) -> HeatBathSpec:
    """Recover a heat-bath spec from weighted SI kernels without zero columns.

    Every kernel must be stochastic and idempotent, have no zero column and be
    reversible with respect to ``pi``; each failure is raised separately as a
    :class:`ReconstructionError` with ``reason`` one of ``"not SI"``,
    ``"zero column"`` or ``"not reversible"``.  Labels are named k0, k1, ...
    in input order.
    """
    from .sicanon import si_classify, si_decompose

    labels = []
    total = ZERO
    for idx, (mat, weight) in enumerate(kernels):
        w = parse_rational(weight)
        if w < 0:
            raise ValueError(f"kernel {idx}: negative weight {w}")
        total += w
        verdict = si_classify(mat)
        if not verdict.is_si:
            raise ReconstructionError(idx, "not SI", verdict.kind)
        if verdict.t:
            raise ReconstructionError(idx, "zero column", f"{verdict.t} zero column(s)")
        if not check_reversible(mat, pi):
            raise ReconstructionError(idx, "not reversible", "detailed balance fails for pi")
        dec = si_decompose(mat)
        for blk in dec.blocks:
            mass = pi.mass(blk.states)
            for x in blk.states:
                for y in blk.states:
                    assert mat.rows[x][y] == pi.probs[y] / mass
        labels.append(Label(f"k{idx}", w, tuple(blk.states for blk in dec.blocks)))
    if total != 1:
        raise ValueError(f"kernel weights sum to {total}, not 1")
    spec = HeatBathSpec(pi.space, pi, tuple(labels))
    require_valid(spec)
    return spec


# --- JSON -----------------------------------------------------------------


def spec_to_dict(spec: HeatBathSpec) -> dict:
    return {
        "states": list(spec.space.states),
        "pi": [format_rational(p) for p in spec.pi.probs],
        "labels": [
            {"id": lab.id, "rho": format_rational(lab.rho), "blocks": [list(b) for b in lab.blocks]}
            for lab in spec.labels
        ],
    }


def spec_from_dict(data: dict) -> HeatBathSpec:
    """Build a spec from its JSON form.  Structural problems with the blocks
    are left for :func:`validate_spec`; a malformed ``pi`` raises ValueError."""
    try:
        space = StateSpace(data["states"])
        pi = TargetDistribution(space, tuple(parse_rational(p) for p in data["pi"]))
        labels = tuple(
            Label(lab["id"], parse_rational(lab["rho"]),
                  tuple(tuple(b) for b in lab["blocks"]))
            for lab in data.get("labels", [])
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed heat-bath spec: missing or bad field {exc}") from None
    except ZeroDivisionError:
        raise ValueError("malformed heat-bath spec: zero denominator") from None
    return HeatBathSpec(space, pi, labels)


def dump_spec(spec: HeatBathSpec, path=None) -> str:
    text = json.dumps(spec_to_dict(spec), indent=2) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_spec(path) -> HeatBathSpec:
    with open(path) as fh:
        data = json.load(fh)
    return spec_from_dict(data)


def uniform_spec(space: StateSpace, pi: TargetDistribution,
                 partitions: dict[str, Sequence[Sequence[int]]]) -> HeatBathSpec:
    """Spec with uniform label weights; ``partitions`` maps label id to blocks."""
    n_labels = len(partitions)
    return HeatBathSpec(
        space, pi,
        tuple(Label(a, Fraction(1, n_labels), tuple(tuple(b) for b in blocks))
              for a, blocks in partitions.items()),
    )


def singleton_blocks(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple((i,) for i in range(n))

