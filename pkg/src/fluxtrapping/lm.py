"""Small damped Gauss-Newton (Levenberg-Marquardt) least-squares solver.

Kept in-house rather than wrapping ``scipy.optimize.least_squares`` so the
fits can report the accepted-cost history and enforce simple box bounds by
projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    residuals: np.ndarray
    jacobian: np.ndarray
    n_iterations: int
    converged: bool
    history: list = field(default_factory=list)
    x_scale: np.ndarray | None = None

    def covariance(self) -> np.ndarray:
        """Parameter covariance scaled by the residual variance."""
        m, p = self.jacobian.shape
        scale = np.ones(p) if self.x_scale is None else self.x_scale
        js = self.jacobian * scale
        dof = max(m - p, 1)
        s2 = 2.0 * self.cost / dof
        cov = np.linalg.pinv(js.T @ js) * s2 * np.outer(scale, scale)
        return 0.5 * (cov + cov.T)


def jacobian(fun, x, r0, scale, lower, upper, rel_step=1e-6, abs_step=1e-9):
    """Forward-difference Jacobian with respect to x, step taken in scaled units."""
    jac = np.empty((r0.size, x.size))
    for k in range(x.size):
        z = x[k] / scale[k]
        h = max(rel_step * abs(z), abs_step) * scale[k]
        if x[k] + h > upper[k]:
            h = -h
        xk = x.copy()
        xk[k] += h
        jac[:, k] = (fun(xk) - r0) / h
    return jac


def levenberg_marquardt(
    fun,
    x0,
    *,
    x_scale=None,
    lower=None,
    upper=None,
    rtol: float = 1e-10,
    max_iter: int = 200,
    lam0: float = 1e-3,
) -> LMResult:
    """Minimize 0.5 * ||fun(x)||**2.

    Stops when an accepted step lowers the cost by less than ``rtol``
    relative, when the cost is exactly zero, or when no damped step can lower
    it any further (the minimum is resolved to machine precision).
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    scale = np.ones(n) if x_scale is None else np.asarray(x_scale, dtype=float)
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(x, lower, upper)

    r = np.asarray(fun(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise ConvergenceError("residuals are not finite at the starting point")
    cost = 0.5 * float(r @ r)
    history = [cost]
    lam = lam0
    converged = False
    it = 0
    jac = jacobian(fun, x, r, scale, lower, upper)
    for it in range(1, max_iter + 1):
        if cost == 0.0:
            converged = True
            break
        js = jac * scale
        g = js.T @ r
        a = js.T @ js
        diag = np.diag(a).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(), 1e-300))
        accepted = False
        while lam < 1e16:
            try:
                dz = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = np.clip(x + dz * scale, lower, upper)
            r_new = np.asarray(fun(x_new), dtype=float)
            cost_new = 0.5 * float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if cost_new < cost:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            converged = True
            break
        drop = (cost - cost_new) / cost
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        lam = max(lam / 3.0, 1e-12)
        jac = jacobian(fun, x, r, scale, lower, upper)
        if drop < rtol:
            converged = True
            break
    return LMResult(x, cost, r, jac, it, converged, history, scale)


def condition_number(jac: np.ndarray, x_scale) -> float:
    js = jac * np.asarray(x_scale, dtype=float)
    s = np.linalg.svd(js, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else np.inf
