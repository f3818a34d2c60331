"""Lifting a chain through an auxiliary space: P = R T R*.

``R`` maps each state to a distribution on the lifted space, ``T`` moves in
the lifted space, and the adjoint ``R*`` maps back.  If ``T`` is positive
semidefinite and reversible for the lifted distribution ``mu``, so is ``P``
for ``pi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .matrixcore import (
    ZERO,
    RationalMatrix,
    StochasticMatrix,
    TargetDistribution,
    check_reversible,
    check_stochastic,
    is_idempotent,
    is_stationary,
)
from .spectral import DEFAULT_TOL, certify_psd


class TransferError(ValueError):
    pass


@dataclass(frozen=True)
class LiftedSpace:
    space: object
    mu: TargetDistribution


def push_forward(pi: TargetDistribution, r: RationalMatrix) -> tuple:
    """pi R as an exact vector."""
    acc = [ZERO] * r.shape[1]
    for x, row in enumerate(r.nonzeros):
        px = pi.probs[x]
        for y, v in row:
            acc[y] += px * v
    return tuple(acc)


def adjoint(r: RationalMatrix, pi: TargetDistribution, mu: TargetDistribution) -> StochasticMatrix:
    """R*(y, x) = pi(x) R(x, y) / mu(y); rows are stochastic exactly when pi R == mu."""
    if r.shape != (len(pi), len(mu)):
        raise TransferError(f"R has shape {r.shape}, expected {(len(pi), len(mu))}")
    if push_forward(pi, r) != mu.probs:
        raise TransferError("pi R != mu; the adjoint would not be stochastic")
    n_lift = len(mu)
    rows = [[ZERO] * len(pi) for _ in range(n_lift)]
    for x, row in enumerate(r.nonzeros):
        px = pi.probs[x]
        for y, v in row:
            rows[y][x] = px * v / mu.probs[y]
    return StochasticMatrix(tuple(map(tuple, rows)), r.col_space, r.row_space)


@dataclass
class TransferReport:
    checks: dict = field(default_factory=dict)
    t_psd_method: str | None = None
    t_lambda_min: float | None = None

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": dict(self.checks), "t_psd_method": self.t_psd_method,
                "t_lambda_min": self.t_lambda_min}


def verify_transfer_conditions(r: RationalMatrix, t: RationalMatrix, pi: TargetDistribution,
                               mu: TargetDistribution, tol: float = DEFAULT_TOL,
                               t_heat_bath: bool = False) -> TransferReport:
    """Check each hypothesis of the transfer lemma separately.

    T's positive semidefiniteness is certified exactly when T is idempotent or
    the caller vouches that T was built as a heat-bath chain
    (``t_heat_bath``); otherwise it is decided numerically at ``tol``.
    """
    rep = TransferReport()
    shape_ok = r.shape == (len(pi), len(mu)) and t.shape == (len(mu), len(mu))
    rep.checks["shapes"] = shape_ok
    if not shape_ok:
        return rep
    rep.checks["R_nonnegative"] = all(v >= 0 for row in r.rows for v in row)
    rep.checks["R_rows_sum_to_one"] = all(s == 1 for s in r.row_sums())
    rep.checks["pi_R_equals_mu"] = push_forward(pi, r) == mu.probs
    t_stoch = check_stochastic(t) == "stochastic"
    rep.checks["T_stochastic"] = t_stoch
    t_rev = t_stoch and check_reversible(t, mu)
    rep.checks["T_reversible"] = t_rev
    if not t_rev:
        rep.checks["T_psd"] = False
        return rep
    if is_idempotent(t):
        rep.t_psd_method = "exact-idempotent"
        rep.checks["T_psd"] = True
    elif t_heat_bath:
        rep.t_psd_method = "heat-bath"
        rep.checks["T_psd"] = True
    else:
        srep = certify_psd(t, mu, tol)
        rep.t_psd_method = "numeric"
        rep.t_lambda_min = srep.lambda_min
        rep.checks["T_psd"] = srep.psd
    return rep


def compose_transfer(r: RationalMatrix, t: RationalMatrix, pi: TargetDistribution,
                     mu: TargetDistribution, tol: float = DEFAULT_TOL,
                     t_heat_bath: bool = False) -> StochasticMatrix:
    """P = R T R*, checked to be stochastic, pi-reversible and PSD."""
    rep = verify_transfer_conditions(r, t, pi, mu, tol, t_heat_bath)
    if not rep.ok:
        raise TransferError(f"transfer conditions fail: {', '.join(rep.failed())}")
    r_star = adjoint(r, pi, mu)
    p = (r @ t) @ r_star
    p = StochasticMatrix(p.rows, pi.space, pi.space)
    assert check_reversible(p, pi)
    assert is_stationary(p, pi)
    srep = certify_psd(p, pi, tol)
    assert srep.psd, f"transfer output has eigenvalue {srep.lambda_min}"
    return p
