"""Small Levenberg-Marquardt solver shared by the fitters.

Kept in-house so every fitter reports the same cost trace and convergence
record; Jacobians are forward differences unless supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .exceptions import ConvergenceError


@dataclass
class LsqResult:
    x: np.ndarray
    covariance: np.ndarray
    cost: float
    cost_trace: List[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False
    dof: int = 0

    @property
    def stderr(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def _jacobian(fun, x, r0, step):
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        dx = step * max(abs(x[j]), 1e-3)
        xp = x.copy()
        xp[j] += dx
        J[:, j] = (fun(xp) - r0) / dx
    return J


def levenberg_marquardt(
    fun: Callable[[np.ndarray], np.ndarray],
    x0,
    jac: Optional[Callable] = None,
    ftol: float = 1e-10,
    max_iter: int = 200,
    lam0: float = 1e-3,
    step: float = 1e-7,
    raise_on_failure: bool = False,
) -> LsqResult:
    """Minimise ``sum(fun(x)**2)``.

    Converges when the relative decrease of the cost between accepted steps
    drops below ``ftol``. The covariance is ``inv(J^T J) * cost / dof``.
    """
    x = np.array(x0, dtype=float)
    r = np.asarray(fun(x), dtype=float)
    cost = float(r @ r)
    trace = [cost]
    lam = lam0
    converged = False
    it = 0
    J = jac(x) if jac is not None else _jacobian(fun, x, r, step)
    while it < max_iter:
        it += 1
        g = J.T @ r
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        accepted = False
        for _ in range(30):
            try:
                delta = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = x + delta
            r_new = np.asarray(fun(x_new), dtype=float)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no downhill step at any damping: at a minimum to machine precision
            converged = True
            break
        rel = (cost - cost_new) / max(cost, 1e-300)
        x, r, cost = x_new, r_new, cost_new
        trace.append(cost)
        lam = max(lam / 10.0, 1e-15)
        if rel < ftol or cost == 0.0:
            converged = True
            break
        J = jac(x) if jac is not None else _jacobian(fun, x, r, step)
    if jac is None:
        J = _jacobian(fun, x, r, step)
    else:
        J = jac(x)
    dof = max(r.size - x.size, 1)
    try:
        cov = np.linalg.pinv(J.T @ J) * cost / dof
    except np.linalg.LinAlgError:
        cov = np.full((x.size, x.size), np.nan)
    result = LsqResult(x, cov, cost, trace, it, converged, dof)
    if raise_on_failure and not converged:
        raise ConvergenceError(
            f"least squares did not converge in {max_iter} iterations", partial=result
        )
    return result
