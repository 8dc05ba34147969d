"""Exponent fits, transition detection, and the scaling-collapse optimizer.

The dynamical transition shows up in the system-size scaling of the minimal
squeezed variance, Var_min ~ N^p: p = 0 in the fully collective phase, p > 0
in the partially collective phase.  The critical exponents (d_V, d_tau, nu,
delta) of the scaling ansatz

    Var[O^-] a_z^{-d_V} N^{d_V delta/d - nu} = f[(t - t_min) a_z^{-d_tau} N^{delta d_tau/d}]

are extracted in stages: p first, then (d_V, d_tau) from the single-size
collapse over a_z, then delta from the full system-size collapse (nu is tied
to the other exponents by nu = p - d_V (1 - delta)/d, which also removes nu
from the delta optimization), and nu last from the constraint.

Collapse quality is measured by an interpolation-based cost: every pair of
rescaled datasets is compared on an equally spaced grid over their mutual
x-overlap, each squared difference weighted by the summed squared
uncertainties, and the total normalized by the number of terms.  A good
collapse has S_min <= 2; exponent uncertainties are the half-widths of the
region where S <= S_min + 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "DataSet",
    "CollapseResult",
    "AnalysisError",
    "fit_power_law",
    "detect_transition",
    "cost_function",
    "optimize_collapse_2d",
    "optimize_collapse_1d",
    "derive_nu",
    "default_sigma",
]

SIGMA_FRACTION = 0.04  # uniform uncertainty estimate, fraction of Var_min


class AnalysisError(RuntimeError):
    pass


@dataclass
class DataSet:
    """One curve with a scaling label (a_z or N) and pointwise uncertainties.

    group_value carries the second label (the system size N) when a curve
    participates in the full system-size collapse.
    """

    label_value: float
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    group_value: float | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if not (self.x.size == self.y.size == self.sigma.size):
            raise ValueError("x, y, sigma must have equal lengths")
        if self.x.size < 2:
            raise ValueError("dataset needs at least 2 points")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("x must be strictly increasing")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive")


@dataclass
class CollapseResult:
    """Exponents of the scaling ansatz with S_min+1 uncertainties."""

    d_v: float
    d_tau: float
    delta: float
    nu: float
    p: float
    unc_d_v: float
    unc_d_tau: float
    unc_delta: float
    unc_nu: float
    unc_p: float
    s_min_dv_dtau: float
    s_min_delta: float
    s_min_p: float

    def to_json_dict(self) -> dict:
        return {
            "d_V": self.d_v,
            "d_tau": self.d_tau,
            "delta": self.delta,
            "nu": self.nu,
            "p": self.p,
            "unc_d_V": self.unc_d_v,
            "unc_d_tau": self.unc_d_tau,
            "unc_delta": self.unc_delta,
            "unc_nu": self.unc_nu,
            "unc_p": self.unc_p,
            "S_min_dV_dtau": self.s_min_dv_dtau,
            "S_min_delta": self.s_min_delta,
            "S_min_p": self.s_min_p,
        }


# ---------------------------------------------------------------------------
# power-law fit and transition detection
# ---------------------------------------------------------------------------

def fit_power_law(points) -> tuple[float, float]:
    """Weighted least-squares fit y ~ c N^p in log-log space.

    points is an iterable of (N, y, sigma_y); returns (p, uncertainty) with
    the uncertainty taken from the covariance of the slope.
    """
    pts = [(float(n), float(y), float(s)) for n, y, s in points]
    if len(pts) < 3:
        raise ValueError("power-law fit needs at least 3 points")
    n, y, s = (np.array(v) for v in zip(*pts))
    if np.any(y <= 0):
        raise ValueError("power-law fit requires positive y")
    log_n = np.log(n)
    log_y = np.log(y)
    w = (y / s) ** 2  # 1/sigma_log^2
    design = np.column_stack([np.ones_like(log_n), log_n])
    ata = design.T @ (w[:, None] * design)
    beta = np.linalg.solve(ata, design.T @ (w * log_y))
    cov = np.linalg.inv(ata)
    return float(beta[1]), float(np.sqrt(cov[1, 1]))


def detect_transition(p_curve, threshold: float = 0.05) -> float:
    """Critical abscissa where the exponent p drops to zero.

    p_curve is an iterable of (abscissa, p, uncertainty).  A point is inside
    the partially collective phase when p exceeds both the threshold and
    twice its uncertainty; the critical abscissa is the largest such point,
    refined by linear interpolation to the p = threshold crossing when the
    neighbouring point still has p > 0.
    """
    pts = sorted((float(x), float(p), float(u)) for x, p, u in p_curve)
    if len(pts) < 2:
        raise ValueError("transition detection needs at least 2 points")
    significant = [p > threshold and p > 2 * u for _, p, u in pts]
    if not any(significant):
        raise AnalysisError("no partially collective points in range")
    i = max(idx for idx, sig in enumerate(significant) if sig)
    if i == len(pts) - 1:
        raise AnalysisError("no collective phase in range")
    x_i, p_i, _ = pts[i]
    x_j, p_j, _ = pts[i + 1]
    if 0.0 < p_j < p_i:
        return x_i + (x_j - x_i) * (p_i - threshold) / (p_i - p_j)
    return x_i


# ---------------------------------------------------------------------------
# collapse cost function
# ---------------------------------------------------------------------------

def _rescaled(ds: DataSet, d_x: float, d_y: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = ds.label_value
    return ds.x * g**d_x, ds.y * g**d_y, ds.sigma * g**d_y


def _pairwise_cost(rescaled: list[tuple[np.ndarray, np.ndarray, np.ndarray]]) -> float:
    """Normalized chi^2-like mismatch of a family of rescaled curves."""
    total = 0.0
    count = 0
    n_sets = len(rescaled)
    for i in range(n_sets):
        xi, yi, si = rescaled[i]
        for k in range(i + 1, n_sets):
            xk, yk, sk = rescaled[k]
            lo = max(xi[0], xk[0])
            hi = min(xi[-1], xk[-1])
            if hi <= lo:
                warnings.warn(
                    f"rescaled datasets {i} and {k} do not overlap; pair skipped",
                    stacklevel=3,
                )
                continue
            n_pts = max(xi.size, xk.size)
            grid = np.linspace(lo, hi, n_pts)
            fi = np.interp(grid, xi, yi)
            fk = np.interp(grid, xk, yk)
            di = np.interp(grid, xi, si)
            dk = np.interp(grid, xk, sk)
            total += float(np.sum((fi - fk) ** 2 / (di**2 + dk**2)))
            count += n_pts
    if count == 0:
        raise AnalysisError("no dataset pair has overlapping x-ranges")
    return total / count


def cost_function(datasets: list[DataSet], d_x: float, d_y: float) -> float:
    """Collapse cost S for trial rescaling exponents (d_x, d_y).

    Each set is rescaled by (x g^d_x, y g^d_y, sigma g^d_y) with g its label;
    pairs without x-overlap are skipped with a warning.
    """
    if len(datasets) < 2:
        raise ValueError("cost function needs at least 2 datasets")
    return _pairwise_cost([_rescaled(ds, d_x, d_y) for ds in datasets])


# ---------------------------------------------------------------------------
# uncertainty from the S <= S_min + 1 region
# ---------------------------------------------------------------------------

def _smin_plus_one_halfwidth(fn, x_opt: float, s_min: float, span: float) -> float:
    """Half-width of the region where fn <= s_min + 1 along one axis."""
    target = s_min + 1.0

    def edge(direction: float) -> float:
        step = span / 50.0
        x_in = x_opt
        x_out = None
        for _ in range(200):
            x_try = x_in + direction * step
            if fn(x_try) > target:
                x_out = x_try
                break
            x_in = x_try
            step *= 1.6
            if abs(x_in - x_opt) > 50.0 * span:
                warnings.warn("S_min+1 region unbounded; flat cost landscape", stacklevel=4)
                return abs(x_in - x_opt)
        if x_out is None:
            return abs(x_in - x_opt)
        for _ in range(60):
            mid = 0.5 * (x_in + x_out)
            if fn(mid) > target:
                x_out = mid
            else:
                x_in = mid
        return abs(0.5 * (x_in + x_out) - x_opt)

    return 0.5 * (edge(+1.0) + edge(-1.0))


# ---------------------------------------------------------------------------
# collapse optimizers
# ---------------------------------------------------------------------------

def optimize_collapse_2d(
    datasets: list[DataSet],
    d_v_window: tuple[float, float] = (-3.0, 1.0),
    d_tau_window: tuple[float, float] = (-1.0, 2.0),
    n_grid: int = 41,
) -> tuple[float, float, float, float, float]:
    """Simultaneous (d_V, d_tau) from the fixed-size collapse over a_z.

    datasets are Var[O^-](t - t_min) curves labelled by a_z at the largest
    system size.  Coarse grid scan, then simplex refinement; uncertainties
    are S_min+1 half-widths along each axis through the optimum.

    Returns (d_v, d_tau, unc_d_v, unc_d_tau, s_min).
    """

    def s_of(d_v: float, d_tau: float) -> float:
        return cost_function(datasets, d_x=-d_tau, d_y=-d_v)

    dv_grid = np.linspace(*d_v_window, n_grid)
    dt_grid = np.linspace(*d_tau_window, n_grid)
    best = (np.inf, dv_grid[0], dt_grid[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # overlap warnings during the scan
        for dv in dv_grid:
            for dt in dt_grid:
                s = s_of(dv, dt)
                if s < best[0]:
                    best = (s, dv, dt)
    res = minimize(
        lambda v: s_of(v[0], v[1]),
        x0=np.array(best[1:]),
        method="Nelder-Mead",
        options={"xatol": 1e-5, "fatol": 1e-10},
    )
    d_v, d_tau = (float(v) for v in res.x)
    s_min = float(res.fun)
    unc_v = _smin_plus_one_halfwidth(lambda v: s_of(v, d_tau), d_v, s_min,
                                     span=(d_v_window[1] - d_v_window[0]) / n_grid)
    unc_t = _smin_plus_one_halfwidth(lambda v: s_of(d_v, v), d_tau, s_min,
                                     span=(d_tau_window[1] - d_tau_window[0]) / n_grid)
    return d_v, d_tau, unc_v, unc_t, s_min


def optimize_collapse_1d(
    datasets: list[DataSet],
    d_v: float,
    d_tau: float,
    p: float,
    d: int,
    delta_window: tuple[float, float] = (-2.0, 8.0),
    n_grid: int = 201,
) -> tuple[float, float, float]:
    """One-dimensional delta optimization of the full system-size collapse.

    Every dataset carries label_value = a_z and group_value = N.  With the
    constraint nu = p - d_V (1 - delta)/d substituted into the ansatz, the
    y-rescaling a_z^{-d_V} N^{d_V/d - p} is delta-independent and only the
    x-rescaling N^{delta d_tau / d} varies, so the collapse is a genuine 1D
    problem.  Returns (delta, uncertainty, s_min).
    """
    if any(ds.group_value is None for ds in datasets):
        raise ValueError("full collapse needs group_value = N on every dataset")

    def rescale_all(delta: float):
        out = []
        for ds in datasets:
            a_z = ds.label_value
            n = float(ds.group_value)
            xs = ds.x * a_z ** (-d_tau) * n ** (delta * d_tau / d)
            yf = a_z ** (-d_v) * n ** (d_v / d - p)
            out.append((xs, ds.y * yf, ds.sigma * yf))
        return out

    def s_of(delta: float) -> float:
        return _pairwise_cost(rescale_all(delta))

    grid = np.linspace(*delta_window, n_grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        costs = [s_of(g) for g in grid]
    i0 = int(np.argmin(costs))
    res = minimize(
        lambda v: s_of(v[0]),
        x0=np.array([grid[i0]]),
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-10},
    )
    delta = float(res.x[0])
    s_min = float(res.fun)
    unc = _smin_plus_one_halfwidth(s_of, delta, s_min,
                                   span=(delta_window[1] - delta_window[0]) / n_grid)
    return delta, unc, s_min


def derive_nu(
    p: float,
    d_v: float,
    delta: float,
    d: int,
    unc_p: float = 0.0,
    unc_d_v: float = 0.0,
    unc_delta: float = 0.0,
) -> tuple[float, float]:
    """nu from the exponent constraint, with first-order error propagation."""
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d}")
    nu = p - d_v * (1.0 - delta) / d
    unc = np.sqrt(
        unc_p**2 + ((1.0 - delta) / d * unc_d_v) ** 2 + (d_v / d * unc_delta) ** 2
    )
    return float(nu), float(unc)


def default_sigma(var_min: float, factor: float = SIGMA_FRACTION) -> float:
    """Uniform per-point uncertainty: a fixed fraction of the minimal variance."""
    if not var_min > 0:
        raise ValueError("Var_min must be positive")
    return factor * var_min
