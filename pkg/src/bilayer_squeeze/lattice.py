"""Bilayer lattice geometries and power-law coupling tables.

Two identical layers (A and B) of a Bravais lattice are stacked at vertical
separation ``a_z``, measured in units of the in-layer nearest-neighbour
spacing (``a_lat = 1``).  Every pair of spins interacts with strength

    V_ij = |r_i - r_j|^(-alpha),

and all interlayer couplings additionally carry the dimensionless rescaling
factor ``lambda``.  Supported geometries are a 1D ladder and square,
triangular and honeycomb bilayers; the honeycomb has two sublattices per
layer, the others one.

Boundary conditions are periodic by default (minimum-image distances over
the in-layer lattice translations; the vertical direction is never wrapped),
with open boundaries available as a flag.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "Geometry",
    "Boundary",
    "LatticeSpec",
    "SiteIndex",
    "CouplingTable",
    "build_positions",
    "displacement",
    "coupling_strength",
    "build_coupling_table",
]


class Geometry(enum.Enum):
    """Lattice geometry of each layer."""

    LADDER_1D = "ladder_1d"
    SQUARE = "square"
    TRIANGULAR = "triangular"
    HONEYCOMB = "honeycomb"

    @property
    def dim(self) -> int:
        return 1 if self is Geometry.LADDER_1D else 2

    @property
    def n_sublattices(self) -> int:
        return 2 if self is Geometry.HONEYCOMB else 1

    @property
    def bravais_vectors(self) -> np.ndarray:
        """Primitive in-layer translation vectors, shape (dim, 3).

        Nearest-neighbour spacing is 1 in every geometry; for the honeycomb
        this makes the Bravais constant sqrt(3).
        """
        if self is Geometry.LADDER_1D:
            vecs = [(1.0, 0.0, 0.0)]
        elif self is Geometry.SQUARE:
            vecs = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
        elif self is Geometry.TRIANGULAR:
            vecs = [(1.0, 0.0, 0.0), (0.5, np.sqrt(3.0) / 2.0, 0.0)]
        else:  # honeycomb, bond length 1
            vecs = [
                (1.5, np.sqrt(3.0) / 2.0, 0.0),
                (1.5, -np.sqrt(3.0) / 2.0, 0.0),
            ]
        return np.asarray(vecs)

    @property
    def sublattice_offsets(self) -> np.ndarray:
        """Cartesian basis offsets within one cell, shape (n_sublattices, 3)."""
        if self is Geometry.HONEYCOMB:
            return np.asarray([(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)])
        return np.zeros((1, 3))


class Boundary(enum.Enum):
    PERIODIC = "periodic"
    OPEN = "open"


_GEOMETRY_ALIASES = {
    "ladder_1d": Geometry.LADDER_1D,
    "ladder": Geometry.LADDER_1D,
    "1d": Geometry.LADDER_1D,
    "square": Geometry.SQUARE,
    "triangular": Geometry.TRIANGULAR,
    "honeycomb": Geometry.HONEYCOMB,
}


def parse_geometry(name: str | Geometry) -> Geometry:
    if isinstance(name, Geometry):
        return name
    try:
        return _GEOMETRY_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown geometry {name!r}; expected one of {sorted(_GEOMETRY_ALIASES)}"
        ) from None


def parse_boundary(name: str | Boundary) -> Boundary:
    if isinstance(name, Boundary):
        return name
    try:
        return Boundary(name.strip().lower())
    except ValueError:
        raise ValueError(
            f"unknown boundary {name!r}; expected 'periodic' or 'open'"
        ) from None


@dataclass(frozen=True)
class LatticeSpec:
    """Full parameter point of the bilayer model.

    L counts unit cells per direction, so each layer holds
    ``n_sublattices * L**dim`` spins (honeycomb: N = 2 L^2 per layer).
    """

    geometry: Geometry
    L: int
    a_z: float
    alpha: float
    lam: float
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "geometry", parse_geometry(self.geometry))
        object.__setattr__(self, "boundary", parse_boundary(self.boundary))
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"L must be an integer >= 2, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if not self.a_z > 0:
            raise ValueError(f"a_z must be positive, got {self.a_z}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @property
    def n_cells(self) -> int:
        return self.L**self.dim

    @property
    def spins_per_layer(self) -> int:
        return self.geometry.n_sublattices * self.n_cells

    @property
    def n_sites(self) -> int:
        return 2 * self.spins_per_layer

    def to_json_dict(self) -> dict:
        return {
            "geometry": self.geometry.value,
            "L": self.L,
            "a_z": self.a_z,
            "alpha": self.alpha,
            "lambda": self.lam,
            "boundary": self.boundary.value,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "LatticeSpec":
        return cls(
            geometry=parse_geometry(d["geometry"]),
            L=int(d["L"]),
            a_z=float(d["a_z"]),
            alpha=float(d["alpha"]),
            lam=float(d["lambda"]),
            boundary=parse_boundary(d.get("boundary", "periodic")),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "LatticeSpec":
        return cls.from_json_dict(json.loads(s))


@dataclass(frozen=True, order=True)
class SiteIndex:
    """Canonical site label: layer, integer cell coordinates, sublattice."""

    layer: str  # "A" or "B"
    cell: tuple
    sublattice: int = 0


def _iter_cells(spec: LatticeSpec) -> Iterable[tuple]:
    return itertools.product(range(spec.L), repeat=spec.dim)


def build_positions(spec: LatticeSpec) -> list[tuple[SiteIndex, np.ndarray]]:
    """Enumerate all sites with their Cartesian positions.

    Layer A sits at z = 0, layer B at z = a_z.  Ordering is deterministic:
    layer, then cell in lexicographic order, then sublattice.
    """
    bravais = spec.geometry.bravais_vectors
    offsets = spec.geometry.sublattice_offsets
    out = []
    for layer, z in (("A", 0.0), ("B", spec.a_z)):
        for cell in _iter_cells(spec):
            base = np.asarray(cell, dtype=float) @ bravais
            for sub in range(spec.geometry.n_sublattices):
                pos = base + offsets[sub]
                out.append((SiteIndex(layer, cell, sub), pos + np.array([0.0, 0.0, z])))
    return out


def _min_image_inplane(spec: LatticeSpec, cell_delta: np.ndarray, sub_offset: np.ndarray) -> np.ndarray:
    """In-plane displacement under the minimum-image convention.

    cell_delta holds integer cell differences; sub_offset the Cartesian
    sublattice offset difference.  Candidate images shift the (mod-L-folded)
    cell difference by -L, 0, +L per Bravais direction, which covers the
    Wigner-Seitz cell of every supported (reduced-basis) geometry.
    """
    bravais = spec.geometry.bravais_vectors
    folded = np.mod(cell_delta, spec.L)
    best = None
    best_norm2 = np.inf
    for shift in itertools.product((-spec.L, 0, spec.L), repeat=spec.dim):
        disp = (folded + np.asarray(shift, dtype=float)) @ bravais + sub_offset
        n2 = float(disp @ disp)
        if n2 < best_norm2 - 1e-12:
            best_norm2 = n2
            best = disp
    return best


def displacement(spec: LatticeSpec, i: SiteIndex, j: SiteIndex) -> np.ndarray:
    """Displacement vector r_j - r_i; minimum image in-plane when periodic.

    The z component (interlayer separation) is never wrapped.
    """
    if i == j:
        raise ValueError("displacement requires two distinct sites")
    offsets = spec.geometry.sublattice_offsets
    dz = (0.0 if j.layer == "A" else spec.a_z) - (0.0 if i.layer == "A" else spec.a_z)
    cell_delta = np.asarray(j.cell, dtype=int) - np.asarray(i.cell, dtype=int)
    sub_offset = offsets[j.sublattice] - offsets[i.sublattice]
    if spec.boundary is Boundary.PERIODIC:
        inplane = _min_image_inplane(spec, cell_delta, sub_offset)
    else:
        inplane = cell_delta.astype(float) @ spec.geometry.bravais_vectors + sub_offset
    return inplane + np.array([0.0, 0.0, dz])


def coupling_strength(r: float, alpha: float) -> float:
    """Power-law pair coupling r^(-alpha)."""
    if r <= 0:
        raise ValueError(f"coincident sites (r={r}); coupling undefined")
    return float(r) ** (-alpha)


@dataclass(frozen=True)
class CouplingTable:
    """All pairwise couplings of a spec, enumerated once per unordered pair.

    Sites are integers into the canonical ordering of build_positions; the
    first spins_per_layer indices are layer A.  Intralayer strengths are
    independent of a_z and lambda; interlayer strengths carry the sqrt(r^2 +
    a_z^2) distance and scale linearly in lambda.
    """

    spec: LatticeSpec
    intra_i: np.ndarray
    intra_j: np.ndarray
    intra_v: np.ndarray
    inter_i: np.ndarray
    inter_j: np.ndarray
    inter_v: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    @property
    def intra_pairs(self) -> list[tuple[int, int, float]]:
        return list(zip(self.intra_i.tolist(), self.intra_j.tolist(), self.intra_v.tolist()))

    @property
    def inter_pairs(self) -> list[tuple[int, int, float]]:
        return list(zip(self.inter_i.tolist(), self.inter_j.tolist(), self.inter_v.tolist()))

    def intra_matrix(self) -> np.ndarray:
        """Dense symmetric (n, n) matrix of intralayer strengths."""
        n = self.n_sites
        w = np.zeros((n, n))
        w[self.intra_i, self.intra_j] = self.intra_v
        w[self.intra_j, self.intra_i] = self.intra_v
        return w

    def inter_matrix(self) -> np.ndarray:
        """Dense symmetric (n, n) matrix of interlayer strengths (lambda included)."""
        n = self.n_sites
        w = np.zeros((n, n))
        w[self.inter_i, self.inter_j] = self.inter_v
        w[self.inter_j, self.inter_i] = self.inter_v
        return w


def pairwise_distances(spec: LatticeSpec) -> np.ndarray:
    """(n, n) matrix of pair distances under the spec's boundary convention."""
    sites = build_positions(spec)
    pos = np.asarray([p for _, p in sites])
    n = len(sites)
    if spec.boundary is Boundary.OPEN:
        delta = pos[None, :, :] - pos[:, None, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", delta, delta))
    # periodic: minimise over the 3^dim in-layer images of the folded delta
    bravais = spec.geometry.bravais_vectors
    cells = np.asarray([s.cell for s, _ in sites], dtype=int)
    subpos = pos - cells.astype(float) @ bravais  # sublattice offset + layer z
    cell_delta = np.mod(cells[None, :, :] - cells[:, None, :], spec.L)
    base = subpos[None, :, :] - subpos[:, None, :]
    d2 = np.full((n, n), np.inf)
    for shift in itertools.product((-spec.L, 0, spec.L), repeat=spec.dim):
        disp = (cell_delta + np.asarray(shift)) @ bravais + base
        np.minimum(d2, np.einsum("ijk,ijk->ij", disp, disp), out=d2)
    return np.sqrt(d2)


def build_coupling_table(spec: LatticeSpec) -> CouplingTable:
    """Enumerate every unordered pair with its coupling strength.

    No cutoff is applied: all O(n^2) pairs are kept exactly, since the
    long-range regime is the regime of interest.
    """
    n = spec.n_sites
    n_layer = spec.spins_per_layer
    dist = pairwise_distances(spec)
    iu, ju = np.triu_indices(n, k=1)
    r = dist[iu, ju]
    if np.any(r <= 0):
        raise ValueError("coincident sites in lattice construction")
    v = r ** (-spec.alpha)
    same_layer = (iu < n_layer) == (ju < n_layer)
    return CouplingTable(
        spec=spec,
        intra_i=iu[same_layer],
        intra_j=ju[same_layer],
        intra_v=v[same_layer],
        inter_i=iu[~same_layer],
        inter_j=ju[~same_layer],
        inter_v=spec.lam * v[~same_layer],
    )
