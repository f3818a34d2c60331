"""Spectra of reversible chains, PSD certificates and the mixing-time bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .matrixcore import (
    RationalMatrix,
    TargetDistribution,
    check_reversible,
    communicating_structure,
    is_idempotent,
)

DEFAULT_TOL = 1e-9
SYMMETRY_TOL = 1e-10
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


class NotReversibleError(ValueError):
    pass


class AsymmetricMatrixError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class MixingBoundError(ValueError):
    pass


def symmetrize(p: RationalMatrix, pi: TargetDistribution) -> np.ndarray:
    """Q = D P D^-1 with D = diag(sqrt(pi)); refuses chains that are not reversible.

    Entries are formed as sqrt(pi(x)/pi(y)) * P(x,y), and the result is
    averaged with its transpose to remove the last-bit asymmetry of the two
    square roots.
    """
    if not check_reversible(p, pi):
        raise NotReversibleError("chain is not reversible w.r.t. pi; symmetrization is invalid")
    root = np.sqrt(pi.to_numpy())
    pf = p.to_numpy()
    q = pf * root[:, None] / root[None, :]
    q = 0.5 * (q + q.T)
    return q


def eigenvalues_symmetric(q, *, backend: str | None = None, tol: float = JACOBI_TOL,
                          max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, in descending order (cyclic Jacobi)."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise AsymmetricMatrixError(f"expected a square matrix, got shape {q.shape}")
    if q.size and np.max(np.abs(q - q.T)) > SYMMETRY_TOL:
        raise AsymmetricMatrixError(
            f"matrix asymmetric by {np.max(np.abs(q - q.T)):.3g} (> {SYMMETRY_TOL})"
        )
    kern = _backend.kernels if backend is None else _backend.get(backend)
    eig, sweeps, off = kern.jacobi_eigenvalues(q, tol, max_sweeps)
    if off >= tol and off > 1e-10 * max(1.0, float(np.linalg.norm(q))):
        raise ConvergenceError(f"Jacobi stopped after {sweeps} sweeps with off-norm {off:.3g}")
    return np.sort(eig)[::-1]


@dataclass
class SpectralReport:
    eigenvalues: list[float]
    lambda_1: float | None
    lambda_min: float
    lambda_star: float | None
    psd: bool
    tolerance: float
    is_ergodic: bool
    certificate: str = "numeric"
    mixing_bound: dict | None = None
    pi_min: float = field(default=float("nan"), repr=False)

    def to_dict(self) -> dict:
        out = {
            "eigenvalues": self.eigenvalues,
            "lambda_1": self.lambda_1,
            "lambda_min": self.lambda_min,
            "lambda_star": self.lambda_star,
            "psd": self.psd,
            "tolerance": self.tolerance,
            "certificate": self.certificate,
            "is_ergodic": self.is_ergodic,
        }
        if self.mixing_bound is not None:
            out["mixing_bound"] = self.mixing_bound
        return out


def is_ergodic(p: RationalMatrix) -> bool:
    """Irreducible support graph and at least one self-loop."""
    if not communicating_structure(p).is_irreducible:
        return False
    return any(p.rows[x][x] > 0 for x in range(p.shape[0]))


def certify_psd(p: RationalMatrix, pi: TargetDistribution, tol: float = DEFAULT_TOL,
                *, epsilon: float | None = None, backend: str | None = None) -> SpectralReport:
    """Spectral report for a chain reversible w.r.t. ``pi``.

    An exactly idempotent ``p`` gets the exact certificate (spectrum inside
    {0, 1}); otherwise the verdict is lambda_min >= -tol.  When ``epsilon`` is
    given and the chain is ergodic the mixing bound is attached.
    """
    q = symmetrize(p, pi)
    eig = eigenvalues_symmetric(q, backend=backend)
    n = len(eig)
    lam_min = float(eig[-1])
    lam_1 = float(eig[1]) if n >= 2 else None
    lam_star = max(lam_1, abs(lam_min)) if n >= 2 else None
    certificate = "numeric"
    psd = lam_min >= -tol
    if is_idempotent(p):
        certificate = "exact-idempotent"
        psd = True
    report = SpectralReport(
        eigenvalues=[float(v) for v in eig],
        lambda_1=lam_1,
        lambda_min=lam_min,
        lambda_star=lam_star,
        psd=psd,
        tolerance=tol,
        is_ergodic=is_ergodic(p),
        certificate=certificate,
        pi_min=float(pi.pi_min),
    )
    if epsilon is not None and report.is_ergodic and n >= 2 and 1 - lam_star >= 1e-12:
        report.mixing_bound = {
            "epsilon": epsilon,
            "tau_upper": mixing_time_bound(report, pi, epsilon),
        }
    return report


def mixing_time_bound(report: SpectralReport, pi: TargetDistribution, epsilon: float) -> float:
    """Upper bound (1 - lambda*)^-1 * ln(1 / (epsilon * pi_min)) on tau(epsilon).

    The true mixing time may be much smaller; this is only the spectral bound.
    """
    if not 0 < epsilon < 1:
        raise MixingBoundError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not report.is_ergodic:
        raise MixingBoundError("chain is not ergodic (reducible or periodic); bound is meaningless")
    if report.lambda_star is None:
        gap = 1.0
    else:
        gap = 1.0 - report.lambda_star
    if gap < 1e-12:
        raise MixingBoundError(f"lambda* = {report.lambda_star!r} is 1 within tolerance")
    return math.log(1.0 / (epsilon * float(pi.pi_min))) / gap
