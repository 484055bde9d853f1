"""Semi-analytical linear-theory oracles.

Three independent reference solutions validate the solver:

* Electrostatic dispersion relations.  For a perturbation ~ e^{i(kx - wt)}
  of a 1D equilibrium f0,

      R(w) = 1 + int  v f0'(v) / (w (w - k v)) dv = 0,

  together with the semi-discrete analogue on the staggered velocity grid

      R_dv(w) = 1 + sum_j  v_j / (w (w - k v_j)) (f0_{j+1} - f0_{j-1})/2,

  whose roots converge to the continuous ones at O(dv^2); replacing v_j by
  v_j - dv (the "shifted" closure one obtains from a staggered current
  moment) degrades this to O(dv).
* The Green-kernel integral equation for the density of the linearized
  periodic electrostatic system:

      nhat(t) = M(t) + int_0^t K(t - s) nhat(s) ds,
      K(t) = (i/k) int f0'(v) e^{-i k v t} dv,
      M(t) = int f10(v) e^{-i k v t} dv,

  solved by trapezoidal quadrature / forward substitution, with
  Ehat = i nhat / k.  Real fields follow the convention
  q(x) = Re[qhat e^{ikx}], so the electrostatic energy of the mode is
  L |nhat|^2 / (2 k^2).
* The cold-fluid transverse-wave branch in a background field B0 e_z:
  the refractive-index relation

      k^2/(beta^2 w^2) = 1 - (w^2 - 1)/(w^2 (w^2 - 1 - B0^2))

  (quadratic in w^2 after clearing denominators), and the kinetic
  eigenmode construction that seeds a single wave of frequency w: the
  azimuthal Fourier coefficients fhat_n(v_perp), n = -2..2, of the
  distribution perturbation, with amplitudes tied to Bhat3 = A through

      Ehat2 = w A / k,
      Ehat1 = -i A (w^4 b^2 - w^2 k^2 - w^2 b^2 - B0^2 w^2 b^2 + B0^2 k^2)
                  / (k b^2 B0),   b = beta.

  The small-k v_perp simplification of the coefficients is used, matching
  how the benchmark is initialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import DistributionField, FieldSet, PhaseGrid

__all__ = [
    "DispersionProblem",
    "two_stream_problem",
    "maxwellian_problem",
    "dispersion_residual_continuous",
    "dispersion_residual_discrete",
    "find_root",
    "two_stream_root",
    "discrete_two_stream_root",
    "xmode_dispersion_roots",
    "xmode_amplitudes",
    "xmode_fluid_residuals",
    "xmode_initial_data",
    "green_kernels",
    "two_stream_kernels",
    "volterra_solve",
    "mode_electrostatic_energy",
]


# ---------------------------------------------------------------------------
# equilibrium descriptions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DispersionProblem:
    """1D-reduced electrostatic dispersion problem.

    ``f0`` and ``f0_prime`` are callables of the reduced velocity; the
    transverse directions are assumed already integrated out.
    ``v_support`` bounds the integration/summation range.
    """

    k1: float
    f0: Callable[[np.ndarray], np.ndarray]
    f0_prime: Callable[[np.ndarray], np.ndarray]
    v_support: float = 16.0

    def __post_init__(self):
        if self.k1 == 0.0:
            raise ValueError("k1 must be nonzero")


def _gauss(v, c):
    return np.exp(-((v - c) ** 2) / 2.0) / np.sqrt(2.0 * np.pi)


def two_stream_problem(k1: float, v_d: float = 4.0,
                       v_support: float | None = None) -> DispersionProblem:
    """Symmetric counter-streaming beams 0.5 [M(v - v_d) + M(v + v_d)]."""
    def f0(v):
        return 0.5 * (_gauss(v, v_d) + _gauss(v, -v_d))

    def f0p(v):
        return 0.5 * (-(v - v_d) * _gauss(v, v_d) - (v + v_d) * _gauss(v, -v_d))

    return DispersionProblem(k1, f0, f0p,
                             v_support or (abs(v_d) + 12.0))


def maxwellian_problem(k1: float, T: float = 1.0) -> DispersionProblem:
    s = np.sqrt(T)

    def f0(v):
        return np.exp(-v**2 / (2 * T)) / np.sqrt(2 * np.pi * T)

    def f0p(v):
        return -v / T * f0(v)

    return DispersionProblem(k1, f0, f0p, 12.0 * s)


# ---------------------------------------------------------------------------
# dispersion residuals and roots
# ---------------------------------------------------------------------------

def dispersion_residual_continuous(omega: complex,
                                   problem: DispersionProblem) -> complex:
    """1 + int v f0'(v)/(omega (omega - k v)) dv, adaptive to ~1e-10."""
    if omega.imag == 0.0:
        raise ValueError("omega must have a nonzero imaginary part "
                         "(integrand poles on the real axis)")
    from scipy.integrate import quad
    k = problem.k1
    vs = problem.v_support

    def integrand(v, part):
        val = v * problem.f0_prime(v) / (omega * (omega - k * v))
        return val.real if part == 0 else val.imag

    re, _ = quad(integrand, -vs, vs, args=(0,), limit=400,
                 epsabs=1e-12, epsrel=1e-12)
    im, _ = quad(integrand, -vs, vs, args=(1,), limit=400,
                 epsabs=1e-12, epsrel=1e-12)
    return 1.0 + re + 1j * im


def _staggered_nodes(dv: float, v_support: float) -> np.ndarray:
    half = int(np.ceil(v_support / dv))
    j = np.arange(-half, half)
    return (j + 0.5) * dv


def dispersion_residual_discrete(omega: complex, problem: DispersionProblem,
                                 dv: float, shifted: bool = False) -> complex:
    """Finite-sum dispersion residual on the staggered velocity grid."""
    k = problem.k1
    v = _staggered_nodes(dv, problem.v_support)
    if np.min(np.abs(omega - k * v)) < 1e-12 * max(1.0, abs(omega)):
        raise ValueError("omega coincides with a resonance k v_j")
    df0 = 0.5 * (problem.f0(v + dv) - problem.f0(v - dv))
    v_eff = v - dv if shifted else v
    return 1.0 + complex(np.sum(v_eff * df0 / (omega * (omega - k * v))))


def find_root(fn, z0: complex, tol: float = 1e-13,
              max_iter: int = 80) -> complex:
    """Complex Newton with central-difference derivative."""
    z = complex(z0)
    for _ in range(max_iter):
        r = fn(z)
        if abs(r) < tol:
            return z
        h = 1e-7 * (1.0 + abs(z))
        dr = (fn(z + h) - fn(z - h)) / (2.0 * h)
        if dr == 0:
            raise RuntimeError("Newton derivative vanished")
        z = z - r / dr
    raise RuntimeError(f"Newton did not converge: |residual| = {abs(fn(z)):.3e}")


def two_stream_root(problem: DispersionProblem,
                    guess: complex = 0.5j) -> complex:
    """Unstable root of the continuous residual (pure imaginary by beam
    symmetry)."""
    return find_root(lambda w: dispersion_residual_continuous(w, problem),
                     guess)


def discrete_two_stream_root(problem: DispersionProblem, dv: float,
                             shifted: bool = False,
                             guess: complex = 0.5j) -> complex:
    return find_root(
        lambda w: dispersion_residual_discrete(w, problem, dv, shifted),
        guess)


# ---------------------------------------------------------------------------
# transverse branch in a background magnetic field
# ---------------------------------------------------------------------------

def xmode_dispersion_roots(k1: float, B0: float, beta: float) -> np.ndarray:
    """Real positive roots omega of the cold transverse-wave relation.

    Clearing denominators gives a polynomial in w = omega^2,

        beta^2 w^2 - (beta^2 (2 + B0^2) + k1^2) w
                   + beta^2 + k1^2 (1 + B0^2) = 0,

    solved exactly; every returned root satisfies the original relation to
    better than 1e-12.
    """
    if B0 < 0 or not 0 < beta < 1:
        raise ValueError("need B0 >= 0 and beta in (0, 1)")
    b2 = beta**2
    coeffs = [b2, -(b2 * (2.0 + B0**2) + k1**2), b2 + k1**2 * (1.0 + B0**2)]
    w = np.roots(coeffs)
    w = w[np.abs(w.imag) < 1e-9 * np.abs(w)].real
    w = w[w > 0]
    roots = np.sort(np.sqrt(w))
    # clearing the resonant denominator can introduce spurious roots
    # (e.g. w = 1 when B0 = 0); keep only roots of the original relation
    keep = []
    for om in roots:
        res = _xmode_residual(om, k1, B0, beta)
        if np.isfinite(res) and abs(res) < 1e-12:
            keep.append(om)
    return np.array(keep)


def _xmode_residual(omega: float, k1: float, B0: float, beta: float) -> float:
    w = omega**2
    return (k1**2 / (beta**2 * w)
            - (1.0 - (w - 1.0) / (w * (w - 1.0 - B0**2))))


def xmode_amplitudes(A: float, k1: float, B0: float, beta: float,
                     omega: float) -> tuple[complex, complex, complex]:
    """(E1hat, E2hat, B3hat) of the eigenmode with B3hat = A."""
    if B0 <= 0:
        raise ValueError("the transverse eigenmode construction needs B0 > 0")
    b2 = beta**2
    w = omega
    B3 = complex(A)
    E2 = w * B3 / k1
    E1 = -1j * B3 * (w**4 * b2 - w**2 * k1**2 - w**2 * b2
                     - B0**2 * w**2 * b2 + B0**2 * k1**2) / (k1 * b2 * B0)
    return E1, E2, B3


def xmode_fluid_residuals(omega: float, k1: float, B0: float, beta: float,
                          E1: complex, E2: complex,
                          B3: complex) -> np.ndarray:
    """Residuals of the six linearized fluid equations at the mode.

    The currents and density are reconstructed from three of the equations;
    the returned array holds the residuals of all six.
    """
    w = omega
    # from -i w E2 = -(i k1/beta^2) B3 + j2:
    j2 = -1j * w * E2 + 1j * k1 * B3 / beta**2
    j1 = (E2 - 1j * w * j2) / B0          # from -i w j2 + E2 - B0 j1 = 0
    nh = -1j * k1 * E1                    # from i k1 E1 = -n
    res = np.array([
        -1j * w * j1 + E1 + B0 * j2,
        -1j * w * j2 + E2 - B0 * j1,
        -1j * w * nh + 1j * k1 * j1,
        1j * k1 * E1 + nh,
        -1j * w * E2 + 1j * k1 * B3 / beta**2 - j2,
        -1j * w * B3 + 1j * k1 * E2,
    ])
    return np.abs(res)


def xmode_initial_data(A: float, k1: float, B0: float, beta: float,
                       omega: float, grid: PhaseGrid
                       ) -> tuple[DistributionField, FieldSet]:
    """Realize the transverse eigenmode on a 1D x 3V phase grid.

    f(0, x, v) = f0(|v|^2) + Re[sum_{n=-2..2} fhat_n(v_perp)
    e^{i(k1 x + n psi)}] with psi = atan2(v2, v1),
    v_perp = sqrt(v1^2 + v2^2), and the unit Maxwellian
    f0 = (2 pi)^{-3/2} exp(-|v|^2/2); fields are the real parts of the
    Fourier amplitudes, B3 shifted by the background B0.
    """
    if grid.dim_x != 1 or grid.dim_v != 3:
        raise ValueError("eigenmode construction needs a 1D x 3V grid")
    E1, E2, B3h = xmode_amplitudes(A, k1, B0, beta, omega)
    w = omega
    Dhat = w * (64.0 * B0**4 + 16.0 * w**4 - 80.0 * B0**2 * w**2)
    if abs(Dhat) < 1e-10 * max(1.0, w**5):
        raise ValueError("resonant degeneracy: denominator of the mode "
                         "coefficients vanishes")

    v = grid.v_nodes
    v1 = v[:, None, None]
    v2 = v[None, :, None]
    v3 = v[None, None, :]
    vperp = np.sqrt(v1**2 + v2**2) + 0.0 * v3
    psi = np.arctan2(v2, v1) + 0.0 * v3
    vsq = v1**2 + v2**2 + v3**2
    f0 = (2.0 * np.pi) ** -1.5 * np.exp(-vsq / 2.0)

    B, Bn2 = B0, B0**2
    fh = {
        -2: 1j * vperp**2 * k1 * (
            -4 * w**3 * E1 - 4j * w**3 * E2 + 12j * w**2 * B * E2
            + 12 * w**2 * B * E1 - 8 * Bn2 * w * E1 - 8j * Bn2 * w * E2),
        -1: 2j * vperp * (
            4j * B * w**3 * E2 - 16 * B**3 * w * E1 - 16j * B**3 * w * E2
            - 4 * E1 * w**4 + 16 * E1 * Bn2 * w**2 + 16j * E2 * Bn2 * w**2
            + 4 * B * w**3 * E1 - 4j * E2 * w**4),
        0: 2j * vperp**2 * k1 * (
            16 * Bn2 * w * E1 + k1**2 * vperp**2 * w * E1 - 4 * w**3 * E1
            + 4j * w**2 * B * E2 - 16j * B**3 * E2),
        1: 2j * (w - 2 * B) * vperp * (
            -12 * w**2 * B * E1 + 12j * w**2 * B * E2 - 4 * w**3 * E1
            + 4j * w**3 * E2 - 8 * Bn2 * w * E1 + 8j * Bn2 * w * E2),
        2: 1j * k1 * vperp**2 * (
            -12 * w**2 * B * E1 + 12j * w**2 * B * E2 - 4 * w**3 * E1
            + 4j * w**3 * E2 - 8 * Bn2 * w * E1 + 8j * Bn2 * w * E2),
    }

    x = grid.x_nodes()
    phase_x = np.exp(1j * k1 * x)
    pert_v = sum(fh[n] * f0 * np.exp(1j * n * psi) for n in range(-2, 3)) / Dhat
    values = f0[None, ...] + np.real(phase_x[:, None, None, None]
                                     * pert_v[None, ...])
    if float(np.min(values)) < 0.0:
        raise ValueError("perturbed distribution has negative values; "
                         "lower the amplitude A")
    f = DistributionField(values, grid, 0.0)

    fields = FieldSet.zeros((grid.n_x[0],))
    fields.E1[:] = np.real(E1 * phase_x)
    fields.E2[:] = np.real(E2 * phase_x)
    fields.B3[:] = B0 + np.real(B3h * phase_x)
    return f, fields


# ---------------------------------------------------------------------------
# Green-kernel integral equation
# ---------------------------------------------------------------------------

def _oscillatory_nodes(k1: float, t_max: float, v_support: float):
    """Composite Gauss-Legendre nodes resolving phases up to k t_max v."""
    max_phase = abs(k1) * max(t_max, 1e-12) * 2.0 * v_support
    panels = max(8, int(np.ceil(max_phase / 3.0)))
    xg, wg = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(-v_support, v_support, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


def green_kernels(k1: float, f0_prime, f10, times
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Sample K(t) = (i/k) int f0' e^{-ikvt} dv and M(t) = int f10 e^{-ikvt} dv.

    ``f0_prime`` and ``f10`` are 1D-reduced callables (pass None for a
    vanishing initial perturbation).  Quadrature is composite
    Gauss-Legendre with panels sized to the largest phase, accurate to
    ~1e-10 absolute for Gaussian-type profiles.
    """
    times = np.asarray(times, dtype=float)
    vs = 18.0
    nodes, weights = _oscillatory_nodes(k1, float(times.max()), vs)
    osc = np.exp(-1j * k1 * np.outer(times, nodes))
    K = (1j / k1) * osc @ (weights * f0_prime(nodes))
    if f10 is None:
        M = np.zeros(times.size, dtype=complex)
    else:
        M = osc @ (weights * np.asarray(f10(nodes), dtype=complex))
    return K, M


def two_stream_kernels(k1: float, v_d: float, A: float, times):
    """Kernels of the counter-streaming benchmark with the seeded mode.

    The initial perturbation coefficient (convention
    f = f0 + Re[fhat e^{ikx}]) is fhat = (A/2)[M(v - v_d) - M(v + v_d)].
    """
    def f0p(v):
        return 0.5 * (-(v - v_d) * _gauss(v, v_d) - (v + v_d) * _gauss(v, -v_d))

    def f10(v):
        return 0.5 * A * (_gauss(v, v_d) - _gauss(v, -v_d))

    return green_kernels(k1, f0p, f10, times)


def volterra_solve(K_values, M_values, dt: float) -> np.ndarray:
    """Forward substitution of the trapezoidal discretization.

    nhat_n (1 - dt K_0/2) = M_n + dt (K_n nhat_0 / 2
                                      + sum_{0<j<n} K_{n-j} nhat_j).
    """
    K = np.asarray(K_values, dtype=complex)
    M = np.asarray(M_values, dtype=complex)
    if K.shape != M.shape:
        raise ValueError("kernel arrays must share one time grid")
    denom = 1.0 - 0.5 * dt * K[0]
    if abs(denom) < 1e-12:
        raise ValueError("time step too large: trapezoidal factor vanishes")
    n = K.size
    nh = np.zeros(n, dtype=complex)
    nh[0] = M[0]
    for i in range(1, n):
        acc = 0.5 * K[i] * nh[0]
        if i > 1:
            acc += np.dot(K[i - 1:0:-1], nh[1:i])
        nh[i] = (M[i] + dt * acc) / denom
    return nh


def mode_electrostatic_energy(n_hat, k1: float, L: float) -> np.ndarray:
    """Energy (1/2) int E^2 dx of E(x) = Re[(i nhat/k) e^{ikx}]:
    L |nhat|^2 / (4 k^2)."""
    return L * np.abs(np.asarray(n_hat))**2 / (4.0 * k1**2)
