"""Least-squares recovery of device parameters from measured or simulated curves."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import gaussian as g
from .homodyne import VACUUM_VARIANCE, cal_peak_power, lock_phase, readout_vector
from .nonlinear import eta_from_percent, eta_to_percent, shg_power, squeezing_ratio


class FitError(RuntimeError):
    """Raised when an iterative fit does not converge; ``diagnostics`` holds the solver state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class FitResult:
    params: dict[str, float]
    sigma: dict[str, float]
    residual_mse: float
    covariance: np.ndarray
    n_points: int = 0
    r_squared: float = float("nan")
    degenerate: bool = False
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "sigma": self.sigma,
            "residual_mse": self.residual_mse,
            "covariance": np.asarray(self.covariance).tolist(),
            "n_points": self.n_points,
            "r_squared": self.r_squared,
            "degenerate": self.degenerate,
            "info": self.info,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=float)


def _as_xy(xs, ys, min_points):
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if x.size < min_points:
        raise ValueError(f"need at least {min_points} points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("data must be finite")
    return x, y


def _r_squared(y, resid):
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else float("nan")


def fit_linear(xs, ys) -> FitResult:
    """Ordinary least-squares line; sigmas from the residual mean squared error."""
    x, y = _as_xy(xs, ys, 3)
    a = np.column_stack([x, np.ones_like(x)])
    if np.linalg.matrix_rank(a) < 2:
        raise np.linalg.LinAlgError("degenerate abscissa: all xs equal")
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    mse = float(resid @ resid) / (x.size - 2)
    cov = mse * np.linalg.inv(a.T @ a)
    return FitResult(
        params={"slope": float(coef[0]), "intercept": float(coef[1])},
        sigma={"slope": float(np.sqrt(cov[0, 0])), "intercept": float(np.sqrt(cov[1, 1]))},
        residual_mse=mse,
        covariance=cov,
        n_points=x.size,
        r_squared=_r_squared(y, resid),
    )


def levenberg_marquardt(residual: Callable, jacobian: Callable, p0, gtol=1e-9, xtol=1e-15,
                        max_iter=500, lam0=1e-3):
    """Damped Gauss-Newton minimisation of ``sum(residual(p)**2)``.

    The damping grows tenfold whenever a trial step increases the residual and
    shrinks tenfold on success. Converged when the gradient norm falls below
    ``gtol`` times its initial value, or when the accepted step stalls at
    ``xtol`` relative size.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = residual(p)
    cost = float(r @ r)
    jac = jacobian(p)
    grad = jac.T @ r
    g0 = float(np.linalg.norm(grad))
    lam = lam0
    history = []
    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(grad))
        if g0 == 0 or gnorm <= gtol * g0:
            return p, {"iterations": it - 1, "cost": cost, "grad_norm": gnorm,
                       "grad_norm0": g0, "reason": "gradient"}
        jtj = jac.T @ jac
        diag = np.diag(np.diag(jtj))
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(jtj + lam * diag, -grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            r_new = residual(p + step)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 10
        if not accepted:
            return p, {"iterations": it, "cost": cost, "grad_norm": gnorm,
                       "grad_norm0": g0, "reason": "damping-limit"}
        p = p + step
        stalled = np.all(np.abs(step) <= xtol * (np.abs(p) + xtol))
        r, cost = r_new, cost_new
        jac = jacobian(p)
        grad = jac.T @ r
        lam = max(lam / 10, 1e-12)
        history.append(cost)
        if stalled:
            return p, {"iterations": it, "cost": cost, "grad_norm": float(np.linalg.norm(grad)),
                       "grad_norm0": g0, "reason": "step"}
    raise FitError("Levenberg-Marquardt did not converge",
                   {"iterations": max_iter, "cost": cost, "params": p.tolist(),
                    "grad_norm": float(np.linalg.norm(grad)), "grad_norm0": g0})


def numeric_jacobian(fun: Callable, p, rel_step=1e-6):
    p = np.asarray(p, dtype=float)
    f0 = fun(p)
    jac = np.empty((f0.size, p.size))
    for k in range(p.size):
        h = rel_step * max(abs(p[k]), 1e-12)
        dp = np.zeros_like(p)
        dp[k] = h
        jac[:, k] = (fun(p + dp) - fun(p - dp)) / (2 * h)
    return jac


def _nonlinear_result(names, p, resid, jac, y, info, scale=1.0):
    n, k = y.size, p.size
    mse = float(resid @ resid) / max(n - k, 1)
    try:
        cov = mse * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        cov = np.full((k, k), np.inf)
    sig = np.sqrt(np.clip(np.diag(cov), 0, None))
    return FitResult(
        params={nm: float(v) for nm, v in zip(names, p)},
        sigma={nm: float(s) for nm, s in zip(names, sig)},
        residual_mse=mse * scale ** 2,
        covariance=cov,
        n_points=n,
        r_squared=_r_squared(y, resid),
        info=info,
    )


# --- LO calibration tone -------------------------------------------------------------------------

def cal_model_amplitude(v_pp, p_lo, responsivity, impedance):
    """Tone power per unit eps with Vpi factored out: P = amp * eps / Vpi * sin^2(pi V / Vpi)."""
    return 2 * responsivity ** 2 * p_lo ** 2 / impedance * (np.pi / 2) ** 3 * v_pp


def _cal_jacobian(p, v, amp):
    eps, vpi = p
    phase = np.pi * v / vpi
    s2 = np.sin(phase) ** 2
    d_eps = amp / vpi * s2
    # d/dVpi of (eps/Vpi) sin^2(pi V/Vpi)
    d_vpi = amp * eps * (-s2 / vpi ** 2 - np.sin(2 * phase) * np.pi * v / vpi ** 3)
    return np.column_stack([d_eps, d_vpi])


def _initial_vpi(v, y, amp):
    """Vpi with the best linear fit of sin^2(pi V / Vpi) over a log grid of candidate periods."""
    span = v.max() - v.min()
    dv = np.min(np.diff(np.unique(v)))
    cands = np.geomspace(2.0 * dv, 4.0 * max(span, dv), 4000)
    best, best_cost = cands[0], np.inf
    for vpi in cands:
        basis = np.sin(np.pi * v / vpi) ** 2
        denom = basis @ basis
        if denom == 0:
            continue
        coef = max((basis @ y) / denom, 0.0)
        cost = float(np.sum((y - coef * basis) ** 2))
        if cost < best_cost * (1 - 1e-9):
            best, best_cost = vpi, cost
    return best


def fit_cal_curve(v_dc, powers, v_pp, p_lo, responsivity, impedance, p0=None) -> FitResult:
    """Recover leakage ratio ``eps`` and ``vpi`` from LO calibration-tone power vs DC bias."""
    v, y = _as_xy(v_dc, powers, 6)
    amp = cal_model_amplitude(v_pp, p_lo, responsivity, impedance)
    if np.all(y == 0):
        return FitResult(params={"eps": 0.0, "vpi": float("nan")},
                         sigma={"eps": 0.0, "vpi": float("inf")},
                         residual_mse=0.0, covariance=np.full((2, 2), np.nan),
                         n_points=v.size, degenerate=True,
                         info={"reason": "all-zero powers: Vpi unidentifiable"})
    scale = float(np.max(np.abs(y)))
    ys = y / scale
    amp_s = amp / scale
    if p0 is None:
        vpi0 = _initial_vpi(v, ys, amp_s)
        basis = np.sin(np.pi * v / vpi0) ** 2
        eps0 = max((basis @ ys) / (basis @ basis), 1e-12) * vpi0 / amp_s
        p0 = (eps0, vpi0)

    def resid(p):
        return amp_s * p[0] / p[1] * np.sin(np.pi * v / p[1]) ** 2 - ys

    p, info = levenberg_marquardt(resid, lambda p: _cal_jacobian(p, v, amp_s), p0)
    vpi = abs(p[1])
    # sin^2 is even in Vpi only jointly with eps; keep the positive branch
    p = np.array([p[0] * vpi / p[1], vpi])
    r = resid(p)
    return _nonlinear_result(("eps", "vpi"), p, r, _cal_jacobian(p, v, amp_s), ys, info, scale)


# --- SHG efficiency ------------------------------------------------------------------------------

def fit_shg_efficiency(p_fh, p_sh, length, model="quadratic") -> FitResult:
    """Normalized efficiency from SH vs FH power; reported in %/(W cm^2).

    ``model='quadratic'`` fits P_SH = eta L^2 P_FH^2 and requires low-conversion
    data (L sqrt(eta P) < 0.3); ``model='tanh2'`` fits the depleted-pump curve.
    """
    x, y = _as_xy(p_fh, p_sh, 2)
    if np.any(x < 0) or np.any(y < 0):
        raise ValueError("powers must be non-negative")
    basis = length ** 2 * x ** 2
    if np.all(y == 0):
        return FitResult(params={"eta": 0.0, "eta_percent": 0.0}, sigma={"eta": 0.0, "eta_percent": 0.0},
                         residual_mse=0.0, covariance=np.zeros((1, 1)), n_points=x.size)
    eta_q = float(basis @ y / (basis @ basis))
    if model == "quadratic":
        arg = length * np.sqrt(eta_q * x.max())
        if arg >= 0.3:
            raise ValueError(f"data not in the low-conversion regime (L sqrt(eta P) = {arg:.3f}); "
                             "use model='tanh2'")
        resid = basis * eta_q - y
        jac = basis[:, None]
        res = _nonlinear_result(("eta",), np.array([eta_q]), resid, jac, y,
                                {"model": "quadratic", "max_tanh_argument": float(arg)})
    elif model == "tanh2":
        scale = float(y.max())

        def r_fun(p):
            return (shg_power(x, max(p[0], 0.0), length) - y) / scale

        def j_fun(p):
            eta = max(p[0], 1e-300)
            gx = length * np.sqrt(eta * x)
            th = np.tanh(gx)
            # d/d eta of P tanh^2(L sqrt(eta P)) = P * 2 th sech^2 * L sqrt(P) / (2 sqrt(eta))
            d = x * 2 * th * (1 - th ** 2) * length * np.sqrt(x) / (2 * np.sqrt(eta))
            return (d / scale)[:, None]

        p, info = levenberg_marquardt(r_fun, j_fun, [eta_q])
        info["model"] = "tanh2"
        res = _nonlinear_result(("eta",), p, r_fun(p), j_fun(p), y / scale, info, scale)
    else:
        raise ValueError(f"unknown model {model!r}")
    res.params["eta_percent"] = eta_to_percent(res.params["eta"])
    res.sigma["eta_percent"] = eta_to_percent(res.sigma["eta"])
    return res


def quadratic_residuals(p_fh, p_sh, length, eta) -> np.ndarray:
    """Residuals of the low-conversion law at a given ``eta``; documents depletion curvature."""
    x = np.asarray(p_fh, dtype=float)
    return np.asarray(p_sh, dtype=float) - eta * length ** 2 * x ** 2


# --- squeezing model band ------------------------------------------------------------------------

@dataclass
class ModelBand:
    phi: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    nominal: np.ndarray

    def contains(self, value: float) -> bool:
        return bool(self.lower.min() <= value <= self.upper.max())

    def minimum_range(self) -> tuple[float, float]:
        """Span of the curve minimum over the band (deepest squeezing it allows)."""
        return float(self.lower.min()), float(self.upper.min())

    def maximum_range(self) -> tuple[float, float]:
        return float(self.lower.max()), float(self.upper.max())


def squeezed_path_state(onchip_ratio: float, zeta: float, offset: float = 0.0) -> g.GaussianState:
    """Two-mode state (squeezed path, LO-path vacuum) at the detector, squeezed axis at ``offset``."""
    r = -0.5 * np.log(onchip_ratio)
    st = g.apply_squeezer(g.vacuum_state(2), 0, r)
    st = g.apply_phase_rotation(st, 0, offset)
    return g.apply_loss(st, 0, zeta)


def locked_noise_from_state(state: g.GaussianState, eps: float, phi_lo, convention="derived"):
    phi_lo = np.atleast_1d(np.asarray(phi_lo, dtype=float))
    phi2 = lock_phase(eps, phi_lo)
    vecs = np.array([readout_vector(eps, a, b, convention) for a, b in zip(phi2, phi_lo)])
    return np.einsum("ni,ij,nj->n", vecs, state.cov, vecs) / VACUUM_VARIANCE


def noise_model_band(eta_percent, sigma_eta_percent, offset, sigma_offset, eps, zeta, p_in, length,
                     phi_lo=None, n_box=5, convention="derived") -> ModelBand:
    """Envelope of the locked noise ratio over the box eta +- sigma, offset +- sigma."""
    if sigma_eta_percent < 0 or sigma_offset < 0:
        raise ValueError("uncertainties must be >= 0")
    if phi_lo is None:
        phi_lo = np.linspace(0, 2 * np.pi, 361)
    phi_lo = np.asarray(phi_lo, dtype=float)

    def curve(eta_pct, off):
        ratio = float(squeezing_ratio(p_in, eta_from_percent(eta_pct), length))
        return locked_noise_from_state(squeezed_path_state(ratio, zeta, off), eps, phi_lo, convention)

    nominal = curve(eta_percent, offset)
    etas = np.unique(np.linspace(eta_percent - sigma_eta_percent, eta_percent + sigma_eta_percent, n_box))
    offs = np.unique(np.linspace(offset - sigma_offset, offset + sigma_offset, n_box))
    curves = np.array([curve(e, o) for e in etas for o in offs])
    return ModelBand(phi_lo, curves.min(axis=0), curves.max(axis=0), nominal)
