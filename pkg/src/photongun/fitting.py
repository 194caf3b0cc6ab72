"""Least-squares recovery of saturation and noise-model parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .emitter import SaturationParams, detected_rate, excited_population, solve_saturation_energy
from .errors import ConvergenceError, DomainError, SingularGeometryError
from .statistics import expected_noise_ratio

MAX_ITER = 500
XTOL = 1e-10
FTOL = 1e-10


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    jac: np.ndarray
    iterations: int
    converged: bool
    message: str


def _jacobian(fun, x, h_rel=1e-6):
    cols = []
    for i in range(x.size):
        h = h_rel * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((fun(xp) - fun(xm)) / (2 * h))
    return np.column_stack(cols)


def levenberg_marquardt(fun, x0, scale: float | None = None, max_iter: int = MAX_ITER,
                        xtol: float = XTOL, ftol: float = FTOL) -> LMResult:
    """Minimize ``sum(fun(x)**2)`` with a damped Gauss-Newton iteration.

    Converges when the accepted step moves the residual vector by less than
    ``xtol * scale`` and lowers the cost by less than ``ftol`` relative, or
    when the cost reaches the floating-point floor. ``scale`` is the norm of
    the data the residuals are measured against.
    """
    x = np.array(x0, dtype=float)
    r = fun(x)
    cost = float(r @ r)
    if scale is None:
        scale = math.sqrt(cost) + 1.0
    floor = (1e-15 * scale) ** 2
    lam = 1e-3
    J = _jacobian(fun, x)
    for it in range(1, max_iter + 1):
        A = J.T @ J
        g = J.T @ r
        d = np.diag(A).copy()
        d[d <= 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                with np.errstate(over="ignore", invalid="ignore"):
                    r_new = fun(x + step)
                    cost_new = float(r_new @ r_new)
                if np.isfinite(cost_new) and cost_new <= cost:
                    break
            lam *= 4.0
            if lam > 1e20:
                # no descent direction left at working precision
                return LMResult(x, cost, J, it, True, "no further decrease possible")
        moved = float(np.linalg.norm(J @ step))
        drop = (cost - cost_new) / cost if cost > 0 else 0.0
        x = x + step
        r, cost = r_new, cost_new
        lam = max(lam / 3.0, 1e-12)
        J = _jacobian(fun, x)
        if cost <= floor:
            return LMResult(x, cost, J, it, True, "residual at numerical precision")
        if moved < xtol * scale and drop < ftol:
            return LMResult(x, cost, J, it, True, "relative step and cost change below tolerance")
    return LMResult(x, cost, J, max_iter, False, f"no convergence in {max_iter} iterations")


@dataclass(frozen=True)
class SaturationDataset:
    """Measured count rate against pulse energy, with the fixed pulse/lifetime times."""

    E_p: np.ndarray
    rate: np.ndarray
    tau_p: float
    tau_r: float
    weight: np.ndarray | None = None
    integration_time: float | None = None
    f_rep: float | None = None

    def __post_init__(self):
        E = np.asarray(self.E_p, dtype=float)
        R = np.asarray(self.rate, dtype=float)
        object.__setattr__(self, "E_p", E)
        object.__setattr__(self, "rate", R)
        if self.weight is not None:
            object.__setattr__(self, "weight", np.asarray(self.weight, dtype=float))
        if E.shape != R.shape or E.ndim != 1:
            raise DomainError("E_p and rate must be 1-D arrays of equal length")
        if E.size < 4:
            raise SingularGeometryError(f"need at least 4 points for 3 free parameters, got {E.size}")
        if np.any(E < 0) or np.unique(E).size != E.size:
            raise DomainError("E_p values must be distinct and nonnegative")
        if not self.tau_p > 0 or not self.tau_r > 0:
            raise DomainError("tau_p and tau_r must be positive")

    @classmethod
    def from_points(cls, points, tau_p: float, tau_r: float, **kw) -> "SaturationDataset":
        pts = [tuple(p) for p in points]
        E = [p[0] for p in pts]
        R = [p[1] for p in pts]
        W = [p[2] for p in pts] if pts and all(len(p) > 2 and p[2] is not None for p in pts) else None
        return cls(E, R, tau_p, tau_r, weight=W, **kw)

    def weights(self) -> np.ndarray:
        if self.weight is not None:
            return self.weight
        if self.integration_time:
            # Poisson: var(rate) = rate / t
            return self.integration_time / np.maximum(self.rate, 1.0 / self.integration_time)
        return np.ones_like(self.rate)


@dataclass(frozen=True)
class FitResult:
    params: SaturationParams
    residual_norm: float
    stderr: dict
    converged: bool
    iterations: int
    init: SaturationParams
    message: str = ""
    fixed: dict = field(default_factory=dict)


def default_init(data: SaturationDataset) -> SaturationParams:
    """Starting point read off the data.

    R_0 from the largest rate, alpha from the slope between the two highest
    energies, and E_s chosen so that the model reaches half of R_0 at the
    energy where the background-corrected data cross R_0/2.
    """
    order = np.argsort(data.E_p)
    E, R = data.E_p[order], data.rate[order]
    R0 = float(R.max())
    slope = (R[-1] - R[-2]) / (E[-1] - E[-2])
    alpha = max(float(slope), 1e-6 * R0 / max(E[-1], 1e-300))
    signal = R - alpha * E
    E_s = math.nan
    above = np.flatnonzero(signal >= R0 / 2)
    if above.size and above[0] > 0:
        i = above[0]
        E_half = float(np.interp(R0 / 2, [signal[i - 1], signal[i]], [E[i - 1], E[i]]))
        E_s = solve_saturation_energy(E_half, 0.5, data.tau_p, data.tau_r)
    if not math.isfinite(E_s) or E_s <= 0:
        E_s = float(np.median(E[E > 0])) if np.any(E > 0) else 1.0
    return SaturationParams(R0, E_s, alpha, data.tau_p, data.tau_r)


def fit_saturation(data: SaturationDataset, init: SaturationParams | None = None,
                   fix_alpha: float | None = None) -> FitResult:
    """Weighted least-squares fit of ``R0*rho(E_p) + alpha*E_p``.

    Parameters are fitted in log space to keep them positive. With
    ``fix_alpha`` the background slope is held at that value.
    """
    if init is None:
        init = default_init(data)
    sw = np.sqrt(data.weights())
    E, y = data.E_p, data.rate
    tau_p, tau_r = data.tau_p, data.tau_r

    def unpack(theta):
        theta = np.clip(theta, -700.0, 700.0)
        R0, Es = math.exp(theta[0]), math.exp(theta[1])
        alpha = fix_alpha if fix_alpha is not None else math.exp(theta[2])
        return R0, Es, alpha

    def residuals(theta):
        R0, Es, alpha = unpack(theta)
        rho = excited_population(E, Es, tau_p, tau_r)
        return sw * (R0 * rho + alpha * E - y)

    theta0 = [math.log(init.R_0), math.log(init.E_s)]
    if fix_alpha is None:
        theta0.append(math.log(max(init.alpha, 1e-300)))
    res = levenberg_marquardt(residuals, theta0, scale=float(np.linalg.norm(sw * y)))

    R0, Es, alpha = unpack(res.x)
    params = SaturationParams(R0, Es, alpha, tau_p, tau_r)

    rho_top = excited_population(E.max(), Es, tau_p, tau_r)
    JtJ = res.jac.T @ res.jac
    cond = np.linalg.cond(JtJ[:2, :2])
    if rho_top < 0.05 or not np.isfinite(cond) or cond > 1e14:
        raise SingularGeometryError(
            f"saturation energy not identifiable: fitted rho at max E_p is {rho_top:.3g} "
            f"(E_s={Es:.4g} pJ, condition number {cond:.3g}); extend the E_p range into saturation")

    names = ["R_0", "E_s"] + (["alpha"] if fix_alpha is None else [])
    values = np.array([R0, Es] + ([alpha] if fix_alpha is None else []))
    dof = E.size - len(names)
    stderr = {}
    try:
        J_nat = res.jac / values  # d r / d p = (d r / d log p) / p
        cov = np.linalg.inv(J_nat.T @ J_nat) * (res.cost / dof if dof > 0 else math.nan)
        for i, name in enumerate(names):
            stderr[name] = float(math.sqrt(cov[i, i])) if cov[i, i] >= 0 else math.nan
    except np.linalg.LinAlgError:
        stderr = {name: math.nan for name in names}
    if fix_alpha is not None:
        stderr["alpha"] = 0.0

    return FitResult(
        params=params,
        residual_norm=math.sqrt(res.cost),
        stderr=stderr,
        converged=res.converged,
        iterations=res.iterations,
        init=init,
        message=res.message,
        fixed={"tau_p": tau_p, "tau_r": tau_r, **({"alpha": fix_alpha} if fix_alpha is not None else {})},
    )


def extract_rho_curve(fit: FitResult, E_grid) -> np.ndarray:
    """Excited-state population on ``E_grid`` from a fitted saturation curve.

    Returns an ``(n, 2)`` array of ``(E_p, rho)`` rows.
    """
    if not fit.converged:
        raise ConvergenceError(f"fit did not converge: {fit.message}")
    p = fit.params
    E = np.atleast_1d(np.asarray(E_grid, dtype=float))
    return np.column_stack([E, excited_population(E, p.E_s, p.tau_p, p.tau_r)])


@dataclass(frozen=True)
class NoiseFit:
    zeta: float
    stderr: float
    residual_norm: float
    converged: bool
    iterations: int


def _invert_noise_ratio(rho, ratio, n_pulses, n_bg):
    # (1 - r^2) split between binomial signal and Poisson background, solved for p = zeta*rho
    a = 1.0 - ratio**2
    if n_pulses <= 0 or n_bg == 0:
        p = a
    else:
        p = (n_pulses * a + math.sqrt((n_pulses * a) ** 2 + 4 * n_pulses * a * n_bg)) / (2 * n_pulses)
    return p / rho


def fit_noise_curve(points, background=0.0, pulses_per_bin: float = 15.0) -> NoiseFit:
    """Least-squares detection efficiency from ``(rho, ratio)`` pairs.

    ``background`` is the mean background count per bin, either one value
    for all points or one per point; ``pulses_per_bin`` is ``f_rep * bin_width``
    and only matters when background is present.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    rho, ratio = pts[:, 0], pts[:, 1]
    if pts.shape[0] < 1:
        raise DomainError("need at least one point")
    if np.any(rho < 0) or np.any(rho > 1):
        raise DomainError("rho must lie in [0, 1]")
    if rho.max() < 1e-6:
        raise SingularGeometryError("zeta is unidentifiable when every rho is ~0")
    n_bg = np.broadcast_to(np.asarray(background, dtype=float), rho.shape)

    def residuals(theta):
        p = np.clip(theta[0] * rho, 0.0, 1.0)
        return expected_noise_ratio(p, pulses_per_bin, n_bg) - ratio

    use = rho > 1e-6
    starts = [_invert_noise_ratio(r, q, pulses_per_bin, b) for r, q, b in zip(rho[use], ratio[use], n_bg[use])]
    z0 = float(np.clip(np.median(starts), 1e-6, 1.0 / rho.max()))
    res = levenberg_marquardt(residuals, [z0], scale=float(np.linalg.norm(ratio)))
    dof = rho.size - 1
    jtj = float(res.jac[:, 0] @ res.jac[:, 0])
    se = math.sqrt(res.cost / dof / jtj) if dof > 0 and jtj > 0 else math.nan
    return NoiseFit(float(res.x[0]), se, math.sqrt(res.cost), res.converged, res.iterations)
