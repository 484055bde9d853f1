"""Implicit centered update of the collocated (E1, E2, B3) fields.

The fields are advanced with the trapezoidal (theta = 1/2) rule

    (E1' - E1)/dt                              = src J1  (+ curl term in 2D),
    (E2' - E2)/dt + (1/beta^2) Dc B3^{1/2}     = src J2,
    (B3' - B3)/dt + Dc E2^{1/2}                = 0,

where X^{1/2} = (X + X')/2, Dc is the centered first difference
(one-sided at non-periodic walls), src is 1 in plasma-frequency units and
1/alpha^2 in collision-frequency units, and the currents are evaluated at
the *old* time from the distribution moments

    J1_i = dv^dim_v sum_j v_j1 f_ij,    J2_i likewise.

With J = 0 and periodic boundaries the update conserves the discrete
electromagnetic energy sum (|E|^2 + |B|^2/beta^2)/2 exactly; coupled to the
unlimited transport stage it conserves the total (kinetic + field) energy.

The 1D implicit system is solved by a direct factorization, precomputed
once per (grid, dt); the 2D system by a damped fixed-point iteration on
the eliminated B3 equation, converged to ``linear_solver_tol``.

Gauss's law is a monitored compatibility condition only:
``gauss_residual`` reports div E - src (1 - n) per cell and nothing is
ever projected or cleaned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .grid import DistributionField, FieldSet, Normalization

__all__ = [
    "MaxwellSolveConfig",
    "compute_current",
    "step_maxwell_1d",
    "step_maxwell_2d",
    "gauss_residual",
]


@dataclass(frozen=True)
class MaxwellSolveConfig:
    theta: float = 0.5
    linear_solver_tol: float = 1e-12
    max_iterations: int = 200

    def __post_init__(self):
        if self.theta != 0.5:
            raise ValueError("the field update is defined for theta = 1/2 only")


# ---------------------------------------------------------------------------
# current closure
# ---------------------------------------------------------------------------

def compute_current(f: DistributionField) -> tuple[np.ndarray, np.ndarray]:
    """First-moment currents (J1, J2) = (sum dv^d v1 f, sum dv^d v2 f).

    Signs follow the dimensionless field equations, whose Ampere source is
    +n u; the second component is identically zero in the reduced 1D
    velocity mode.
    """
    g = f.grid
    v = g.v_nodes
    w = g.cell_volume_v
    vaxes = g.velocity_axes
    if g.dim_v == 1:
        J1 = np.tensordot(f.values, v, axes=(vaxes[0], 0)) * w
        return J1, np.zeros_like(J1)
    rest = tuple(range(g.dim_x, g.dim_x + 2))
    J1 = np.tensordot(f.values, v, axes=(vaxes[0], 0)).sum(axis=rest) * w
    J2 = np.tensordot(f.values, v, axes=(vaxes[1], 0)).sum(axis=rest) * w
    return J1, J2


# ---------------------------------------------------------------------------
# centered differences
# ---------------------------------------------------------------------------

def _dc_1d(u: np.ndarray, dx: float, bc: str) -> np.ndarray:
    if bc == "periodic":
        return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * dx)
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - u[:-2]) / (2.0 * dx)
    out[0] = (u[1] - u[0]) / dx
    out[-1] = (u[-1] - u[-2]) / dx
    return out


def _dc_matrix(n: int, dx: float, bc: str) -> np.ndarray:
    m = np.zeros((n, n))
    for i in range(1, n - 1):
        m[i, i + 1] = 0.5 / dx
        m[i, i - 1] = -0.5 / dx
    if bc == "periodic":
        m[0, 1] = 0.5 / dx
        m[0, -1] = -0.5 / dx
        m[-1, 0] = 0.5 / dx
        m[-1, -2] = -0.5 / dx
    else:
        m[0, 0], m[0, 1] = -1.0 / dx, 1.0 / dx
        m[-1, -2], m[-1, -1] = -1.0 / dx, 1.0 / dx
    return m


def _dc_axis(u: np.ndarray, dx: float, axis: int) -> np.ndarray:
    return (np.roll(u, -1, axis=axis) - np.roll(u, 1, axis=axis)) / (2.0 * dx)


_lu_cache_1d: dict = {}


def step_maxwell_1d(fields: FieldSet, J1: np.ndarray, J2: np.ndarray,
                    dt: float, dx: float, norm: Normalization,
                    bc: str = "periodic") -> FieldSet:
    """Advance (E1, E2, B3) one step on a 1D space line.

    E1 is local (no spatial coupling); (E2, B3) solve the coupled centered
    implicit system through a cached direct factorization.
    """
    if not (np.all(np.isfinite(J1)) and np.all(np.isfinite(J2))):
        raise ValueError("non-finite current")
    n = fields.E1.shape[0]
    src = norm.maxwell_source
    a = 0.5 * dt / norm.beta**2
    b = 0.5 * dt

    E1 = fields.E1 + dt * src * J1

    rE2 = fields.E2 - a * _dc_1d(fields.B3, dx, bc) + dt * src * J2
    rB = fields.B3 - b * _dc_1d(fields.E2, dx, bc)

    key = (n, dx, dt, norm.beta, bc)
    if key not in _lu_cache_1d:
        dc = _dc_matrix(n, dx, bc)
        _lu_cache_1d[key] = lu_factor(np.eye(n) - a * b * (dc @ dc))
    E2 = lu_solve(_lu_cache_1d[key], rE2 - a * _dc_1d(rB, dx, bc))
    B3 = rB - b * _dc_1d(E2, dx, bc)
    return FieldSet(E1, E2, B3, J1.copy(), J2.copy())


def step_maxwell_2d(fields: FieldSet, J1: np.ndarray, J2: np.ndarray,
                    dt: float, dx: float, dy: float, norm: Normalization,
                    config: MaxwellSolveConfig | None = None) -> FieldSet:
    """Advance the planar transverse-electric system (E1, E2, B3), periodic.

    The eliminated B3 equation (I - ab(Dx^2 + Dy^2)) B3' = rhs is solved by
    fixed-point iteration to ``linear_solver_tol`` (the operator is a small
    perturbation of the identity for resolved time steps).
    """
    config = config or MaxwellSolveConfig()
    if not (np.all(np.isfinite(J1)) and np.all(np.isfinite(J2))):
        raise ValueError("non-finite current")
    src = norm.maxwell_source
    a = 0.5 * dt / norm.beta**2
    b = 0.5 * dt

    def dxc(u):
        return _dc_axis(u, dx, 0)

    def dyc(u):
        return _dc_axis(u, dy, 1)

    rE1 = fields.E1 + a * dyc(fields.B3) + dt * src * J1
    rE2 = fields.E2 - a * dxc(fields.B3) + dt * src * J2
    rB = fields.B3 - b * (dxc(fields.E2) - dyc(fields.E1))

    rhs = rB - b * dxc(rE2) + b * dyc(rE1)
    B3 = rhs.copy()
    tol = config.linear_solver_tol * max(1.0, float(np.max(np.abs(rhs))))
    for _ in range(config.max_iterations):
        lap = dxc(dxc(B3)) + dyc(dyc(B3))
        resid = rhs + a * b * lap - B3
        B3 = B3 + resid
        if float(np.max(np.abs(resid))) <= tol:
            break
    else:
        raise RuntimeError(
            f"2D field solve did not converge: residual "
            f"{float(np.max(np.abs(resid))):.3e} after "
            f"{config.max_iterations} iterations")
    E1 = rE1 + a * dyc(B3)
    E2 = rE2 - a * dxc(B3)
    return FieldSet(E1, E2, B3, J1.copy(), J2.copy())


# ---------------------------------------------------------------------------
# Gauss monitor
# ---------------------------------------------------------------------------

def gauss_residual(fields: FieldSet, f: DistributionField,
                   norm: Normalization, bc: str = "periodic") -> np.ndarray:
    """Per-cell residual of div E = src (1 - n); monitoring only."""
    g = f.grid
    n = f.values.sum(axis=g.velocity_axes) * g.cell_volume_v
    if g.dim_x == 1:
        div = _dc_1d(fields.E1, g.dx[0], bc)
    else:
        div = _dc_axis(fields.E1, g.dx[0], 0) + _dc_axis(fields.E2, g.dx[1], 1)
    return div - norm.gauss_source * (1.0 - n)
