"""Phase-space grids, distribution storage, and normalization regimes.

Conventions used throughout the package (everything is dimensionless):

* Space is a periodic or wall-bounded box, 1 or 2 dimensions, uniform cells,
  cell centers at x_i = (i + 1/2) dx.
* Velocity is a cube, 1 or 3 dimensions, truncated at +-v_max, with
  staggered half-integer nodes v_j = (j + 1/2) dv for j in
  {-n_v/2, ..., n_v/2 - 1}.  The node set is symmetric under v -> -v and
  never contains v = 0, so coefficients like 1/|v|^3 are finite on every
  node.
* Distribution values are cell averages of f; moments are plain sums with
  weight dv^dim_v (midpoint quadrature).

Two scaling regimes are supported.  In plasma-frequency units
(time ~ 1/omega_pe, space ~ lambda_D, velocity ~ v_th) the field equations
read

    dE/dt - (1/beta^2) curl B = n u,        div E = 1 - n,

with beta = v_th/c and collision prefactors nu (electron-ion) and nu/Z
(electron-electron), nu = nu_ei/omega_pe.  In collision-frequency units
(time ~ 1/nu_ei, space ~ lambda_ei) the sources pick up 1/alpha^2,
alpha = nu_ei/omega_pe, and the collision prefactors become 1 and 1/Z.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as _const

__all__ = [
    "PhaseGrid",
    "DistributionField",
    "FieldSet",
    "Normalization",
    "PhysicalScales",
    "build_grid",
    "maxwellian",
    "apply_scaling",
    "save_snapshot",
    "load_snapshot",
]


# ---------------------------------------------------------------------------
# grid geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseGrid:
    """Uniform phase-space grid: ``dim_x`` space by ``dim_v`` velocity dims.

    ``dim_v`` is 3 for the physical operators; the reduced 1D velocity mode
    (``dim_v=1``) exists so the electrostatic beam benchmarks run in seconds.
    Collision operators require ``dim_v=3``.
    """

    dim_x: int
    n_x: tuple[int, ...]
    length: tuple[float, ...]
    n_v: int
    v_max: float
    dim_v: int = 3

    def __post_init__(self):
        if self.dim_x not in (1, 2):
            raise ValueError(f"dim_x must be 1 or 2, got {self.dim_x}")
        if self.dim_v not in (1, 3):
            raise ValueError(f"dim_v must be 1 or 3, got {self.dim_v}")
        if len(self.n_x) != self.dim_x or len(self.length) != self.dim_x:
            raise ValueError("n_x and length must have dim_x entries")
        if any(n < 4 for n in self.n_x):
            raise ValueError("need at least 4 cells per space dimension")
        if min(self.length) <= 0 or self.v_max <= 0:
            raise ValueError("domain sizes must be positive")
        if self.n_v < 8 or self.n_v % 2 != 0:
            raise ValueError(f"n_v must be even and >= 8, got {self.n_v}")

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.length, self.n_x))

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.n_v

    @property
    def v_nodes(self) -> np.ndarray:
        """Staggered velocity nodes (j + 1/2) dv, symmetric, zero-free."""
        return (np.arange(self.n_v) - self.n_v / 2 + 0.5) * self.dv

    def x_nodes(self, d: int = 0) -> np.ndarray:
        return (np.arange(self.n_x[d]) + 0.5) * self.dx[d]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.n_x) + (self.n_v,) * self.dim_v

    @property
    def space_axes(self) -> tuple[int, ...]:
        return tuple(range(self.dim_x))

    @property
    def velocity_axes(self) -> tuple[int, ...]:
        return tuple(range(self.dim_x, self.dim_x + self.dim_v))

    @property
    def cell_volume_x(self) -> float:
        return float(np.prod(self.dx))

    @property
    def cell_volume_v(self) -> float:
        return self.dv**self.dim_v


def build_grid(dim_x: int, n_x, length, n_v: int, v_max: float,
               dim_v: int = 3) -> PhaseGrid:
    """Construct a :class:`PhaseGrid`.

    ``n_x`` and ``length`` may be scalars (same value per space dimension)
    or sequences of length ``dim_x``.
    """
    if np.isscalar(n_x):
        n_x = (int(n_x),) * dim_x
    if np.isscalar(length):
        length = (float(length),) * dim_x
    return PhaseGrid(dim_x=dim_x, n_x=tuple(int(n) for n in n_x),
                     length=tuple(float(L) for L in length),
                     n_v=int(n_v), v_max=float(v_max), dim_v=dim_v)


# ---------------------------------------------------------------------------
# field containers
# ---------------------------------------------------------------------------

@dataclass
class DistributionField:
    """Cell-averaged electron distribution on a :class:`PhaseGrid`."""

    values: np.ndarray
    grid: PhaseGrid
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"shape {self.grid.shape}")

    def copy(self) -> "DistributionField":
        return DistributionField(self.values.copy(), self.grid, self.time)

    def mass(self) -> float:
        w = self.grid.cell_volume_x * self.grid.cell_volume_v
        return float(np.sum(self.values)) * w


@dataclass
class FieldSet:
    """Collocated field samples per space cell: E1, E2, B3 plus currents."""

    E1: np.ndarray
    E2: np.ndarray
    B3: np.ndarray
    J1: np.ndarray
    J2: np.ndarray

    def __post_init__(self):
        shape = self.E1.shape
        for name in ("E2", "B3", "J1", "J2"):
            if getattr(self, name).shape != shape:
                raise ValueError("all field arrays must share one space shape")

    @classmethod
    def zeros(cls, space_shape) -> "FieldSet":
        return cls(*[np.zeros(space_shape) for _ in range(5)])

    def copy(self) -> "FieldSet":
        return FieldSet(self.E1.copy(), self.E2.copy(), self.B3.copy(),
                        self.J1.copy(), self.J2.copy())


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

PLASMA_FREQUENCY = "plasma_frequency"
COLLISION_FREQUENCY = "collision_frequency"


@dataclass(frozen=True)
class Normalization:
    """Dimensionless parameter set for one of the two scaling regimes.

    ``nu_ratio`` always stores nu_ei/omega_pe.  In plasma-frequency units it
    multiplies the collision operators (nu, nu/Z); in collision-frequency
    units it enters the Maxwell sources as 1/alpha^2 while the collision
    prefactors are 1 and 1/Z.
    """

    mode: str = PLASMA_FREQUENCY
    beta: float = 0.05
    Z: float = 1.0
    nu_ratio: float = 0.01

    def __post_init__(self):
        if self.mode not in (PLASMA_FREQUENCY, COLLISION_FREQUENCY):
            raise ValueError(f"unknown scaling mode {self.mode!r}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.Z < 1.0:
            raise ValueError("Z must be >= 1")
        if self.nu_ratio <= 0.0:
            raise ValueError("nu_ratio must be positive")

    @property
    def maxwell_source(self) -> float:
        """Coefficient of the n*u source in the Ampere equation."""
        if self.mode == COLLISION_FREQUENCY:
            return 1.0 / self.nu_ratio**2
        return 1.0

    @property
    def gauss_source(self) -> float:
        """Coefficient of (1 - n) in the Gauss monitor."""
        return self.maxwell_source

    @property
    def coeff_ei(self) -> float:
        """Prefactor of the electron-ion collision operator."""
        return self.nu_ratio if self.mode == PLASMA_FREQUENCY else 1.0

    @property
    def coeff_ee(self) -> float:
        """Prefactor of the electron-electron collision operator."""
        return self.coeff_ei / self.Z


@dataclass(frozen=True)
class PhysicalScales:
    """Reference scales derived from raw plasma parameters (SI + eV)."""

    omega_pe: float
    lambda_D: float
    v_th: float
    omega_ce: float
    nu_ei: float
    lambda_ei: float
    alpha: float          # nu_ei / omega_pe
    beta: float           # v_th / c
    B_tilde_plasma: float      # omega_ce / omega_pe
    B_tilde_collision: float   # omega_ce / nu_ei
    plasma: Normalization = field(repr=False, default=None)
    collision: Normalization = field(repr=False, default=None)


def apply_scaling(n0: float, T0_eV: float, Z: float, lnLambda: float,
                  B: float = 0.0) -> PhysicalScales:
    """Reduce raw plasma parameters to both dimensionless parameter sets.

    Parameters
    ----------
    n0 : electron density [m^-3]
    T0_eV : electron temperature [eV]
    Z : ion charge number
    lnLambda : Coulomb logarithm
    B : magnetic field [T]
    """
    if min(n0, T0_eV, Z, lnLambda) <= 0 or B < 0:
        raise ValueError("physical inputs must be positive (B >= 0)")
    e, me, eps0, c = _const.e, _const.m_e, _const.epsilon_0, _const.c
    T0 = T0_eV * e
    omega_pe = np.sqrt(n0 * e**2 / (eps0 * me))
    v_th = np.sqrt(T0 / me)
    lambda_D = v_th / omega_pe
    omega_ce = e * B / me
    nu_ei = Z * n0 * e**4 * lnLambda / (8 * np.pi * eps0**2 * me**2 * v_th**3)
    lambda_ei = v_th / nu_ei
    alpha = nu_ei / omega_pe
    beta = v_th / c
    plasma = Normalization(PLASMA_FREQUENCY, beta=beta, Z=Z, nu_ratio=alpha)
    collision = Normalization(COLLISION_FREQUENCY, beta=beta, Z=Z,
                              nu_ratio=alpha)
    return PhysicalScales(
        omega_pe=omega_pe, lambda_D=lambda_D, v_th=v_th, omega_ce=omega_ce,
        nu_ei=nu_ei, lambda_ei=lambda_ei, alpha=alpha, beta=beta,
        B_tilde_plasma=omega_ce / omega_pe,
        B_tilde_collision=omega_ce / nu_ei if nu_ei > 0 else np.inf,
        plasma=plasma, collision=collision)


# ---------------------------------------------------------------------------
# Maxwellians
# ---------------------------------------------------------------------------

def maxwellian(grid: PhaseGrid, n: float, u, T: float,
               time: float = 0.0) -> DistributionField:
    """Point-sampled Maxwellian n (2 pi T)^(-dim_v/2) exp(-|v-u|^2 / 2T).

    Sampled at cell-center velocity nodes; the resulting discrete moments
    match (n, u, T) up to O(dv^2) plus the +-v_max truncation error.
    """
    if n <= 0 or T <= 0:
        raise ValueError("density and temperature must be positive")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.size == 1 and grid.dim_v == 3:
        u = np.repeat(u, 3)
    if u.size != grid.dim_v:
        raise ValueError(f"u must have {grid.dim_v} components")
    v = grid.v_nodes
    if grid.dim_v == 1:
        q = (v - u[0])**2
    else:
        q = ((v[:, None, None] - u[0])**2
             + (v[None, :, None] - u[1])**2
             + (v[None, None, :] - u[2])**2)
    fv = n * (2.0 * np.pi * T)**(-grid.dim_v / 2.0) * np.exp(-q / (2.0 * T))
    values = np.broadcast_to(fv, grid.shape).copy()
    return DistributionField(values, grid, time)


# ---------------------------------------------------------------------------
# snapshot file format
# ---------------------------------------------------------------------------
# One header line
#     dim_x dim_v n_x... length... n_v v_max time
# followed by the cell values in row-major order, decimal text, one value
# per line, 17 significant digits (exact float64 round trip).

def save_snapshot(f: DistributionField, path) -> None:
    g = f.grid
    header = [str(g.dim_x), str(g.dim_v)]
    header += [str(n) for n in g.n_x]
    header += [repr(L) for L in g.length]
    header += [str(g.n_v), repr(g.v_max), repr(float(f.time))]
    with open(path, "w") as fh:
        fh.write(" ".join(header) + "\n")
        np.savetxt(fh, f.values.ravel(), fmt="%.17g")


def load_snapshot(path) -> DistributionField:
    with open(path) as fh:
        head = fh.readline().split()
        dim_x = int(head[0])
        dim_v = int(head[1])
        n_x = tuple(int(s) for s in head[2:2 + dim_x])
        length = tuple(float(s) for s in head[2 + dim_x:2 + 2 * dim_x])
        n_v = int(head[2 + 2 * dim_x])
        v_max = float(head[3 + 2 * dim_x])
        time = float(head[4 + 2 * dim_x])
        values = np.loadtxt(fh)
    grid = PhaseGrid(dim_x, n_x, length, n_v, v_max, dim_v)
    return DistributionField(values.reshape(grid.shape), grid, time)
