"""Momentum-space stability analysis of the polarized bilayer.

Linearizing the spin dynamics around the oppositely polarized layers gives,
per momentum k, an intralayer magnon dispersion eps_k (the k = 0 value is
subtracted, so eps_0 = 0 exactly) and an interlayer pairing amplitude
omega_k.  Modes with |omega_k| > eps_k grow exponentially with rate

    growth_k = sqrt(|omega_k|^2 - eps_k^2),

stable modes oscillate with quasi-energy sqrt(eps_k^2 - |omega_k|^2).  The
k = 0 mode is always unstable for any nonzero interlayer coupling; the
transition out of the fully collective regime happens when a second mode
turns unstable, and the critical layer spacing a_z* is located by bisection
on the largest non-collective growth rate.

Both Fourier sums are per-site sums over displacements from one reference
site, evaluated on the periodic torus via FFT (open boundaries fall back to
direct sums).  Rates are quoted in variance units: the k = 0 growth rate
equals |omega_0|, which is also the exponential rate N*V_av of the
two-mode-squeezing variance prediction.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import Boundary, Geometry, LatticeSpec, parse_geometry

__all__ = [
    "MomentumGrid",
    "DispersionData",
    "StabilityReport",
    "TmsPrediction",
    "ScalingPrediction",
    "momentum_grid",
    "fourier_intralayer",
    "fourier_interlayer",
    "quasi_energy",
    "stability_spectrum",
    "dispersion_data",
    "unstable_modes",
    "critical_az",
    "fit_dispersion_exponent",
    "predicted_critical_scaling",
    "tms_prediction",
]

# treat growth rates below this as zero when classifying stability
GROWTH_TOL = 1e-10


@dataclass(frozen=True)
class MomentumGrid:
    """Reciprocal grid k = 2*pi*n/L per Bravais direction, n in [0, L)."""

    spec: LatticeSpec
    n_int: np.ndarray  # (n_k, d) unwrapped integer coordinates
    n_wrapped: np.ndarray  # (n_k, d) wrapped to (-L/2, L/2]
    k_cart: np.ndarray  # (n_k, 2) Cartesian components (ky = 0 in 1D)
    abs_k: np.ndarray  # (n_k,)

    @property
    def n_points(self) -> int:
        return self.n_int.shape[0]

    @property
    def k1_index(self) -> int:
        """Index of the nonzero point of smallest |k| (lexicographic tie-break)."""
        order = np.lexsort(
            tuple(self.n_wrapped[:, c] for c in reversed(range(self.n_wrapped.shape[1])))
            + (self.abs_k,)
        )
        for idx in order:
            if self.abs_k[idx] > 0:
                return int(idx)
        raise ValueError("grid has no nonzero momentum (L < 2?)")


def _reciprocal_basis(geometry: Geometry) -> np.ndarray:
    """Rows b_j with a_i . b_j = delta_ij (in-plane components only)."""
    a = geometry.bravais_vectors[:, : geometry.dim]
    return np.linalg.inv(a).T


def momentum_grid(spec: LatticeSpec) -> MomentumGrid:
    L, d = spec.L, spec.dim
    n_int = np.array(list(itertools.product(range(L), repeat=d)), dtype=int)
    n_wrapped = np.where(n_int > L // 2, n_int - L, n_int)
    b = _reciprocal_basis(spec.geometry)
    k_d = (2.0 * np.pi / L) * (n_wrapped @ b)
    k_cart = np.zeros((n_int.shape[0], 2))
    k_cart[:, :d] = k_d
    abs_k = np.sqrt(np.einsum("ij,ij->i", k_cart, k_cart))
    return MomentumGrid(spec=spec, n_int=n_int, n_wrapped=n_wrapped, k_cart=k_cart, abs_k=abs_k)


# ---------------------------------------------------------------------------
# coupling grids and Fourier blocks
# ---------------------------------------------------------------------------

def _cell_grid(spec: LatticeSpec) -> np.ndarray:
    return np.array(list(itertools.product(range(spec.L), repeat=spec.dim)), dtype=int)


def _min_image_dist2(spec: LatticeSpec, tau_diff: np.ndarray) -> np.ndarray:
    """Min-image in-plane squared distances from site (cell 0, sub a) to every
    cell, for sublattice offset difference tau_diff.  Shape (L,)*d."""
    bravais = spec.geometry.bravais_vectors[:, :2]
    cells = _cell_grid(spec)
    d2 = np.full(cells.shape[0], np.inf)
    for shift in itertools.product((-spec.L, 0, spec.L), repeat=spec.dim):
        disp = (cells + np.asarray(shift)) @ bravais + tau_diff
        np.minimum(d2, np.einsum("ij,ij->i", disp, disp), out=d2)
    return d2.reshape((spec.L,) * spec.dim)


def _open_displacements(spec: LatticeSpec, tau_diff: np.ndarray) -> np.ndarray:
    """Raw displacements from the reference site under open boundaries."""
    bravais = spec.geometry.bravais_vectors[:, :2]
    return _cell_grid(spec) @ bravais + tau_diff


def _torus_fourier(spec: LatticeSpec, vgrid: np.ndarray) -> np.ndarray:
    """Sum_m vgrid[m] exp(+i k.r_m) for every grid k, flattened in grid order."""
    return (spec.n_cells * np.fft.ifftn(vgrid)).reshape(-1)


def _sub_pairs(spec: LatticeSpec):
    offsets = spec.geometry.sublattice_offsets[:, :2]
    n_sub = spec.geometry.n_sublattices
    for a in range(n_sub):
        for b_ in range(n_sub):
            yield a, b_, offsets[b_] - offsets[a]


def intralayer_blocks(spec: LatticeSpec, grid: MomentumGrid | None = None) -> np.ndarray:
    """Sublattice-resolved intralayer Fourier sums, shape (n_k, n_sub, n_sub).

    Entry (a, b) is sum over cells R of V(|R + tau_b - tau_a|) e^{ik.(R+tau)},
    excluding the reference site itself.
    """
    grid = grid or momentum_grid(spec)
    n_sub = spec.geometry.n_sublattices
    out = np.zeros((grid.n_points, n_sub, n_sub), dtype=complex)
    for a, b_, tau in _sub_pairs(spec):
        if spec.boundary is Boundary.PERIODIC:
            d2 = _min_image_dist2(spec, tau)
            v = np.zeros_like(d2)
            mask = d2 > 1e-12
            v[mask] = d2[mask] ** (-spec.alpha / 2.0)
            ft = _torus_fourier(spec, v)
        else:
            disp = _open_displacements(spec, tau)
            d2 = np.einsum("ij,ij->i", disp, disp)
            mask = d2 > 1e-12
            v = np.zeros_like(d2)
            v[mask] = d2[mask] ** (-spec.alpha / 2.0)
            ft = np.exp(1j * disp @ grid.k_cart.T).T @ v
        phase = np.exp(1j * grid.k_cart @ tau)
        out[:, a, b_] = ft * phase
    return out


def interlayer_blocks(
    spec: LatticeSpec, grid: MomentumGrid | None = None, a_z: float | None = None
) -> np.ndarray:
    """Sublattice-resolved interlayer Fourier sums (lambda included),
    shape (n_k, n_sub, n_sub).  Includes the directly-above pair (r = 0)."""
    grid = grid or momentum_grid(spec)
    a_z = spec.a_z if a_z is None else a_z
    n_sub = spec.geometry.n_sublattices
    out = np.zeros((grid.n_points, n_sub, n_sub), dtype=complex)
    for a, b_, tau in _sub_pairs(spec):
        if spec.boundary is Boundary.PERIODIC:
            d2 = _min_image_dist2(spec, tau) + a_z**2
            ft = _torus_fourier(spec, d2 ** (-spec.alpha / 2.0))
        else:
            disp = _open_displacements(spec, tau)
            d2 = np.einsum("ij,ij->i", disp, disp) + a_z**2
            ft = np.exp(1j * disp @ grid.k_cart.T).T @ (d2 ** (-spec.alpha / 2.0))
        phase = np.exp(1j * grid.k_cart @ tau)
        out[:, a, b_] = spec.lam * ft * phase
    return out


def _grid_index(spec: LatticeSpec, grid: MomentumGrid, k) -> int:
    """Resolve k given as flat index or integer grid coordinates."""
    if np.isscalar(k):
        idx = int(k)
        if not 0 <= idx < grid.n_points:
            raise ValueError(f"momentum index {k} outside grid")
        return idx
    coords = np.mod(np.atleast_1d(np.asarray(k, dtype=int)), spec.L)
    if coords.shape != (spec.dim,):
        raise ValueError(f"momentum {k} has wrong dimension for d={spec.dim}")
    idx = 0
    for c in coords:
        idx = idx * spec.L + int(c)
    return idx


def fourier_intralayer(spec: LatticeSpec, k) -> float:
    """Raw intralayer Fourier sum eps_tilde_k at one grid point.

    Single-sublattice geometries only; the imaginary part vanishes by
    inversion symmetry and is asserted below 1e-10 before being dropped.
    """
    if spec.geometry.n_sublattices != 1:
        raise ValueError("scalar intralayer sum is defined for single-sublattice geometries")
    grid = momentum_grid(spec)
    idx = _grid_index(spec, grid, k)
    val = intralayer_blocks(spec, grid)[idx, 0, 0]
    assert abs(val.imag) < 1e-10, f"intralayer sum not real at k index {idx}: {val}"
    return float(val.real)


def fourier_interlayer(spec: LatticeSpec, k) -> complex:
    """Interlayer Fourier sum omega_k (factor lambda included) at one grid point."""
    if spec.geometry.n_sublattices != 1:
        raise ValueError("scalar interlayer sum is defined for single-sublattice geometries")
    grid = momentum_grid(spec)
    idx = _grid_index(spec, grid, k)
    return complex(interlayer_blocks(spec, grid)[idx, 0, 0])


def quasi_energy(eps_k: float, omega_k: complex) -> tuple[float, float]:
    """(oscillation energy, growth rate) of one Bogoliubov mode.

    Stable modes (eps_k^2 >= |omega_k|^2) oscillate at sqrt(eps^2 - |omega|^2)
    and have zero growth; unstable modes grow at sqrt(|omega|^2 - eps^2).
    """
    disc = eps_k**2 - abs(omega_k) ** 2
    if disc >= 0:
        return float(np.sqrt(disc)), 0.0
    return 0.0, float(np.sqrt(-disc))


# ---------------------------------------------------------------------------
# stability spectra
# ---------------------------------------------------------------------------

def _honeycomb_growth(eps_blocks: np.ndarray, omega_blocks: np.ndarray) -> np.ndarray:
    """Growth rates from the sublattice-resolved Bogoliubov dynamical matrix.

    For each k builds the equation-of-motion matrix in the (layer-A boson,
    layer-B conjugate boson) x sublattice basis and returns the two largest
    positive imaginary parts of its eigenvalues, shape (n_k, 2), descending.
    """
    n_k, n_sub, _ = eps_blocks.shape
    # all intralayer couplings from one reference site = row sum of the k=0 block
    diag_sum = float(np.sum(eps_blocks[0]).real) / n_sub
    a_block = eps_blocks - diag_sum * np.eye(n_sub)[None, :, :]
    m = np.zeros((n_k, 2 * n_sub, 2 * n_sub), dtype=complex)
    m[:, :n_sub, :n_sub] = a_block
    m[:, :n_sub, n_sub:] = omega_blocks.conj()
    m[:, n_sub:, :n_sub] = -np.transpose(omega_blocks, (0, 2, 1))
    m[:, n_sub:, n_sub:] = -np.transpose(a_block, (0, 2, 1))
    eig = np.linalg.eigvals(m)
    im = np.sort(eig.imag, axis=1)[:, ::-1][:, :n_sub]
    return np.where(im > 0, im, 0.0)


def stability_spectrum(spec: LatticeSpec, k) -> list[float]:
    """Growth rates of all Bogoliubov branches at one grid point.

    Single-sublattice geometries reduce exactly to quasi_energy (one branch);
    the honeycomb returns the two branches of the 4x4 dynamical matrix.
    """
    grid = momentum_grid(spec)
    idx = _grid_index(spec, grid, k)
    eps_blocks = intralayer_blocks(spec, grid)
    omega_blocks = interlayer_blocks(spec, grid)
    if spec.geometry.n_sublattices == 1:
        eps0 = eps_blocks[0, 0, 0].real
        eps = eps0 - eps_blocks[idx, 0, 0].real
        _, growth = quasi_energy(eps, complex(omega_blocks[idx, 0, 0]))
        return [growth]
    growth = _honeycomb_growth(eps_blocks, omega_blocks)
    return [float(g) for g in growth[idx]]


@dataclass(frozen=True)
class DispersionData:
    """Per-momentum stability picture over the whole grid.

    eps_k is the magnon dispersion referenced to k = 0 (eps_0 = 0 exactly,
    non-negative for positive couplings); omega_k the interlayer pairing
    amplitude; growth_rate is nonzero exactly on the unstable modes.  For the
    honeycomb eps_k is the acoustic branch, omega_k the dominant eigenvalue
    of the pairing block, and growth_rate the largest branch.
    """

    spec: LatticeSpec
    grid: MomentumGrid
    eps_tilde_k: np.ndarray
    eps_k: np.ndarray
    omega_k: np.ndarray
    energy: np.ndarray
    growth_rate: np.ndarray


def dispersion_data(spec: LatticeSpec) -> DispersionData:
    grid = momentum_grid(spec)
    eps_blocks = intralayer_blocks(spec, grid)
    omega_blocks = interlayer_blocks(spec, grid)
    if spec.geometry.n_sublattices == 1:
        eps_tilde = eps_blocks[:, 0, 0]
        assert np.max(np.abs(eps_tilde.imag)) < 1e-10, "intralayer sum acquired an imaginary part"
        eps_tilde = eps_tilde.real
        eps = eps_tilde[0] - eps_tilde  # >= 0 for positive couplings, 0 at k=0
        if np.min(eps) < -1e-10:
            warnings.warn(
                f"magnon dispersion negative at some k (min {np.min(eps):.3g}); "
                "couplings are not all ferromagnetic-sign",
                stacklevel=2,
            )
        omega = omega_blocks[:, 0, 0]
        disc = eps**2 - np.abs(omega) ** 2
        energy = np.sqrt(np.maximum(disc, 0.0))
        growth = np.sqrt(np.maximum(-disc, 0.0))
    else:
        diag_sum = float(np.sum(eps_blocks[0]).real) / spec.geometry.n_sublattices
        herm = 0.5 * (eps_blocks + np.transpose(eps_blocks.conj(), (0, 2, 1)))
        branches = np.linalg.eigvalsh(diag_sum * np.eye(2)[None, :, :] - herm)
        eps = branches[:, 0]  # acoustic branch
        eps_tilde = diag_sum - eps
        om_eig = np.linalg.eigvalsh(0.5 * (omega_blocks + np.transpose(omega_blocks.conj(), (0, 2, 1))))
        omega = om_eig[np.arange(om_eig.shape[0]), np.argmax(np.abs(om_eig), axis=1)].astype(complex)
        rates = _honeycomb_growth(eps_blocks, omega_blocks)
        growth = rates[:, 0]
        energy = np.zeros_like(growth)
    return DispersionData(
        spec=spec,
        grid=grid,
        eps_tilde_k=np.asarray(eps_tilde, dtype=float),
        eps_k=np.asarray(eps, dtype=float),
        omega_k=np.asarray(omega, dtype=complex),
        energy=energy,
        growth_rate=growth,
    )


@dataclass(frozen=True)
class StabilityReport:
    """Which grid points host unstable modes."""

    spec: LatticeSpec
    unstable_k: list[tuple]  # wrapped integer coordinates of unstable points
    is_fully_collective: bool


def unstable_modes(spec: LatticeSpec) -> StabilityReport:
    """Evaluate the stability spectrum on every grid point.

    Fully collective means the k = 0 point is the only unstable one.
    """
    data = dispersion_data(spec)
    mask = data.growth_rate > GROWTH_TOL
    pts = [tuple(int(c) for c in data.grid.n_wrapped[i]) for i in np.nonzero(mask)[0]]
    zero = tuple([0] * spec.dim)
    return StabilityReport(
        spec=spec,
        unstable_k=pts,
        is_fully_collective=(pts == [zero]),
    )


# ---------------------------------------------------------------------------
# critical layer spacing
# ---------------------------------------------------------------------------

class NoTransitionError(RuntimeError):
    """The non-collective growth rate does not change sign in the bracket."""


def _noncollective_growth_fn(
    geometry: Geometry, L: int, alpha: float, lam: float, boundary: Boundary
) -> Callable[[float], float]:
    """Largest growth rate outside the collective mode, as a function of a_z.

    Intralayer sums do not depend on a_z, so they are precomputed; each call
    only rebuilds the interlayer Fourier blocks.
    """
    spec = LatticeSpec(geometry=geometry, L=L, a_z=1.0, alpha=alpha, lam=lam, boundary=boundary)
    grid = momentum_grid(spec)
    eps_blocks = intralayer_blocks(spec, grid)
    zero_idx = _grid_index(spec, grid, tuple([0] * spec.dim))
    if spec.geometry.n_sublattices == 1:
        eps_tilde = eps_blocks[:, 0, 0].real
        eps = eps_tilde[zero_idx] - eps_tilde

        def growth_max(a_z: float) -> float:
            omega = interlayer_blocks(spec, grid, a_z=a_z)[:, 0, 0]
            disc = np.abs(omega) ** 2 - eps**2
            disc[zero_idx] = -np.inf  # collective mode excluded
            top = np.max(disc)
            return float(np.sqrt(top)) if top > 0 else 0.0

    else:

        def growth_max(a_z: float) -> float:
            omega_blocks = interlayer_blocks(spec, grid, a_z=a_z)
            rates = _honeycomb_growth(eps_blocks, omega_blocks)
            rates[zero_idx, 0] = 0.0  # collective (dominant k=0) branch excluded
            return float(np.max(rates))

    return growth_max


def critical_az(
    geometry: Geometry | str,
    L: int,
    alpha: float,
    lam: float,
    boundary: Boundary = Boundary.PERIODIC,
    rel_tol: float = 1e-6,
) -> float:
    """Layer spacing at which the second Bogoliubov mode turns stable.

    Bisection on the largest non-collective growth rate; the initial bracket
    [0.1, 10 L] is expanded geometrically until it straddles the crossing.
    Raises NoTransitionError if no sign change is found.
    """
    geometry = parse_geometry(geometry)
    if lam <= 0:
        raise ValueError("critical_az requires lambda > 0")
    growth_max = _noncollective_growth_fn(geometry, L, alpha, lam, boundary)

    lo, hi = 0.1, 10.0 * L
    unstable = lambda a_z: growth_max(a_z) > GROWTH_TOL
    expansions = 0
    while not unstable(lo):
        lo *= 0.5
        expansions += 1
        if expansions > 60:
            raise NoTransitionError(
                f"mode already stable at a_z={lo:.3g}; no transition in bracket"
            )
    expansions = 0
    while unstable(hi):
        hi *= 2.0
        expansions += 1
        if expansions > 60:
            raise NoTransitionError(
                f"mode still unstable at a_z={hi:.3g}; no transition in bracket"
            )
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# dispersion fits and analytic scaling
# ---------------------------------------------------------------------------

def fit_dispersion_exponent(dispersion: DispersionData, k_max: float) -> tuple[float, float]:
    """Least-squares fit of eps_k to A |k|^s over 0 < |k| <= k_max.

    Returns (A, s).  Requires at least 4 usable grid points.
    """
    abs_k = dispersion.grid.abs_k
    mask = (abs_k > 0) & (abs_k <= k_max) & (dispersion.eps_k > 0)
    if np.count_nonzero(mask) < 4:
        raise ValueError(
            f"need >= 4 grid points with 0 < |k| <= {k_max}, found {np.count_nonzero(mask)}"
        )
    x = np.log(abs_k[mask])
    y = np.log(dispersion.eps_k[mask])
    s, log_a = np.polyfit(x, y, 1)
    return float(np.exp(log_a)), float(s)


@dataclass(frozen=True)
class ScalingPrediction:
    """Predicted system-size scaling of the critical layer spacing.

    kind is one of "linear" (a_z* ~ L), "log" (a_z* ~ L / sqrt(log L)) or
    "power" (a_z* ~ L^exponent with exponent = 2/(alpha-d) < 1).
    """

    kind: str
    exponent: float | None = None


def predicted_critical_scaling(alpha: float, d: int) -> ScalingPrediction:
    """Classify the a_z*(L) scaling regime from the interaction range."""
    if alpha <= d:
        raise ValueError(f"alpha={alpha} <= d={d}: interlayer sum is not integrable")
    if alpha < d + 2:
        return ScalingPrediction(kind="linear", exponent=1.0)
    if alpha == d + 2:
        return ScalingPrediction(kind="log")
    return ScalingPrediction(kind="power", exponent=2.0 / (alpha - d))


# ---------------------------------------------------------------------------
# two-mode-squeezing reference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TmsPrediction:
    """Closed-form collective variance curves Var[O_-+] = (N/2) e^{-+ N V_av t}.

    V_av is the average interlayer coupling per spin, N V_av = omega_0 the
    collective growth rate; var_minus * var_plus = (N/2)^2 at all times.
    """

    n_per_layer: int
    v_av: float

    @property
    def rate(self) -> float:
        return self.n_per_layer * self.v_av

    def var_minus(self, t) -> np.ndarray:
        return (self.n_per_layer / 2.0) * np.exp(-self.rate * np.asarray(t, dtype=float))

    def var_plus(self, t) -> np.ndarray:
        return (self.n_per_layer / 2.0) * np.exp(+self.rate * np.asarray(t, dtype=float))


def tms_prediction(spec: LatticeSpec) -> TmsPrediction:
    """Collective two-mode-squeezing prediction for a spec.

    The rate is the per-site interlayer coupling sum (the k = 0 collective
    growth rate), so V_av = omega_0 / N with N spins per layer.
    """
    grid = momentum_grid(spec)
    blocks = interlayer_blocks(spec, grid)
    zero_idx = _grid_index(spec, grid, tuple([0] * spec.dim))
    omega0 = float(np.abs(np.sum(blocks[zero_idx]).real) / spec.geometry.n_sublattices)
    n = spec.spins_per_layer
    return TmsPrediction(n_per_layer=n, v_av=omega0 / n)
