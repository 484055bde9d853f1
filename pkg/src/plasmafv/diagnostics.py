"""Moments, energy/entropy ledgers, and transport-theory references.

Moment conventions (dimensionless, electron mass 1, elementary charge 1,
electron charge -1):

    n     = sum f dv^3                  u = (1/n) sum v f dv^3
    T     = (1/3n) sum |v - u|^2 f      p = n T
    Pi    = sum (v-u)(x)(v-u) f - p I   (traceless)
    j     = -n u                        (electron current)
    q     = 1/2 sum |v|^2 v f           (lab/ion-frame heat flux)
    q_loc = 1/2 sum |v-u|^2 (v-u) f     (intrinsic heat flux)
    R     = sum v C_ei(f) dv^3          (ion-electron friction)

These satisfy the frame identity

    q_loc = q + [ (5/2) p I + Pi ] . j / n + (1/2) |u|^2 j.

Local-transport references: with the Hall parameter
chi = c0 B3 T^(3/2) / Z, c0 = 3 sqrt(pi) / (2 sqrt(2)), and the
dimensionless coefficient table (functions of Z and chi, loaded from a
data file), the reference heat flux and field profiles for a 1D gradient
along x are

    q1 = -(5/2) T j1/n - c0 T^(5/2)/Z kappa_perp  dT/dx - T (bp j1 - bw j2)
    q2 = -(5/2) T j2/n - c0 T^(5/2)/Z kappa_wedge dT/dx - T (bp j2 + bw j1)
    E1 = j2 B3/n - (dp/dx)/n - bp dT/dx + Z/(c0 T^(3/2)) (ap j1 + aw j2)/n
    E2 = -j1 B3/n          - bw dT/dx + Z/(c0 T^(3/2)) (ap j2 - aw j1)/n

written with the combinations chi/B3 and B3/chi reduced so the B3 -> 0
(field-free) limit is regular.  The field-free kappa_perp(0) limit defines
the reference flux for nonlocal-conduction ratios, which are compared with
the analytic reduction formula

    kappa/kappa_ref = 1 / (1 + (30 k lambda_ei beta_Z)^(4/3)),
    beta_Z = sqrt((3 pi/128) 3.2 (0.24 + Z)/(1 + 0.24 Z)) sqrt(Z)/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .grid import DistributionField, FieldSet, Normalization

__all__ = [
    "MomentSet",
    "TransportCoefficients",
    "CoefficientTable",
    "load_transport_coefficients",
    "default_coefficient_table",
    "moments",
    "braginskii_reference",
    "spitzer_harm_flux",
    "effective_conductivity_ratio",
    "analytic_ratio",
    "knudsen",
    "energy_entropy_ledger",
    "cross_gradient",
    "magnetic_energy_spectrum",
    "spectrum_peak_frequency",
    "estimate_gradient_wavenumber",
]

HALL_C0 = 3.0 * np.sqrt(np.pi) / (2.0 * np.sqrt(2.0))


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

@dataclass
class MomentSet:
    n: float
    u: np.ndarray
    T: float
    p: float
    Pi: np.ndarray
    j: np.ndarray
    q: np.ndarray
    q_loc: np.ndarray
    R: np.ndarray | None = None


def moments(fv: np.ndarray, dv: float, coeff_ei: float | None = None
            ) -> MomentSet:
    """Velocity moments of one space cell's 3D velocity cube.

    When ``coeff_ei`` is given, the friction force R is evaluated through
    the electron-ion collision operator with that prefactor.
    """
    fv = np.asarray(fv, dtype=float)
    if fv.ndim != 3:
        raise ValueError("moments expects a single (n,n,n) velocity cube")
    nv = fv.shape[0]
    v = (np.arange(nv) - nv / 2 + 0.5) * dv
    w = dv**3
    n = float(fv.sum()) * w
    if n <= 0:
        raise ValueError("zero or negative mass in moment evaluation")
    v1 = v[:, None, None]
    v2 = v[None, :, None]
    v3 = v[None, None, :]
    u = np.array([float((fv * c).sum()) * w for c in (v1, v2, v3)]) / n
    c1, c2, c3 = v1 - u[0], v2 - u[1], v3 - u[2]
    csq = c1**2 + c2**2 + c3**2
    T = float((fv * csq).sum()) * w / (3.0 * n)
    p = n * T
    comps = (c1, c2, c3)
    Pi = np.empty((3, 3))
    for a in range(3):
        for b in range(a, 3):
            Pi[a, b] = Pi[b, a] = float((fv * comps[a] * comps[b]).sum()) * w
    Pi -= p * np.eye(3)
    vsq = v1**2 + v2**2 + v3**2
    q = 0.5 * np.array([float((fv * vsq * c).sum()) * w
                        for c in (v1, v2, v3)])
    q_loc = 0.5 * np.array([float((fv * csq * c).sum()) * w
                            for c in comps])
    R = None
    if coeff_ei is not None:
        from .collisions import lorentz_apply
        C = lorentz_apply(fv, dv, coeff_ei)
        R = np.array([float((C * c).sum()) * w for c in (v1, v2, v3)])
    return MomentSet(n=n, u=u, T=T, p=p, Pi=Pi, j=-n * u, q=q, q_loc=q_loc,
                     R=R)


# ---------------------------------------------------------------------------
# transport coefficient table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransportCoefficients:
    alpha_perp: float
    alpha_wedge: float
    beta_perp: float
    beta_wedge: float
    kappa_perp: float
    kappa_wedge: float


class CoefficientTable:
    """Dimensionless transport coefficients tabulated over (Z, chi).

    Plain-text rows ``Z chi a_perp a_wedge b_perp b_wedge k_perp k_wedge``
    with ``#`` comments; linear interpolation in chi within a Z block.
    """

    _COLS = ("alpha_perp", "alpha_wedge", "beta_perp", "beta_wedge",
             "kappa_perp", "kappa_wedge")

    def __init__(self, rows: np.ndarray):
        if rows.ndim != 2 or rows.shape[1] != 8:
            raise ValueError("coefficient table needs 8 columns")
        self._blocks = {}
        for z in np.unique(rows[:, 0]):
            blk = rows[rows[:, 0] == z]
            order = np.argsort(blk[:, 1])
            self._blocks[float(z)] = blk[order]

    @property
    def z_values(self):
        return sorted(self._blocks)

    def _block(self, Z: float) -> np.ndarray:
        for z, blk in self._blocks.items():
            if abs(z - Z) < 1e-9:
                return blk
        raise KeyError(f"no coefficient data for Z = {Z}")

    def interpolate(self, Z: float, chi) -> dict:
        blk = self._block(Z)
        chi = np.asarray(chi, dtype=float)
        if np.any(chi < blk[0, 1] - 1e-12) or np.any(chi > blk[-1, 1] + 1e-12):
            raise ValueError(
                f"chi = {float(np.max(chi)):.3g} outside tabulated range "
                f"[{blk[0, 1]:.3g}, {blk[-1, 1]:.3g}] for Z = {Z}")
        return {name: np.interp(chi, blk[:, 1], blk[:, 2 + i])
                for i, name in enumerate(self._COLS)}

    def at(self, Z: float, chi: float) -> TransportCoefficients:
        vals = self.interpolate(Z, chi)
        return TransportCoefficients(**{k: float(v) for k, v in vals.items()})


def load_transport_coefficients(path) -> CoefficientTable:
    return CoefficientTable(np.loadtxt(path, comments="#", ndmin=2))


def default_coefficient_table() -> CoefficientTable:
    ref = resources.files("plasmafv") / "data" / "transport_coefficients.txt"
    with resources.as_file(ref) as p:
        return load_transport_coefficients(p)


# ---------------------------------------------------------------------------
# local-transport references
# ---------------------------------------------------------------------------

def _grad_1d(u: np.ndarray, dx: float, bc: str = "wall") -> np.ndarray:
    out = np.empty_like(u)
    if bc == "periodic":
        return (np.roll(u, -1) - np.roll(u, 1)) / (2 * dx)
    out[1:-1] = (u[2:] - u[:-2]) / (2 * dx)
    out[0] = (u[1] - u[0]) / dx
    out[-1] = (u[-1] - u[-2]) / dx
    return out


def braginskii_reference(T, n, B3, j1, j2, table: CoefficientTable,
                         dx: float, Z: float = 1.0, bc: str = "wall"):
    """Reference (q1, q2, E1, E2) profiles of local transport theory."""
    T = np.asarray(T, dtype=float)
    n = np.asarray(n, dtype=float)
    B3 = np.broadcast_to(np.asarray(B3, dtype=float), T.shape)
    chi = HALL_C0 * B3 * T**1.5 / Z
    co = table.interpolate(Z, chi)
    dT = _grad_1d(T, dx, bc)
    dp = _grad_1d(n * T, dx, bc)
    chi_over_B = HALL_C0 * T**1.5 / Z       # chi / B3, regular at B3 = 0
    B_over_chi = Z / (HALL_C0 * T**1.5)     # B3 / chi
    q1 = (-2.5 * T * j1 / n - chi_over_B * T * dT * co["kappa_perp"]
          - T * (co["beta_perp"] * j1 - co["beta_wedge"] * j2))
    q2 = (-2.5 * T * j2 / n - chi_over_B * T * dT * co["kappa_wedge"]
          - T * (co["beta_perp"] * j2 + co["beta_wedge"] * j1))
    E1 = (j2 * B3 / n - dp / n - dT * co["beta_perp"]
          + B_over_chi * (co["alpha_perp"] * j1 + co["alpha_wedge"] * j2) / n)
    E2 = (-j1 * B3 / n - dT * co["beta_wedge"]
          + B_over_chi * (co["alpha_perp"] * j2 - co["alpha_wedge"] * j1) / n)
    return q1, q2, E1, E2


def spitzer_harm_flux(T, table: CoefficientTable, dx: float, Z: float = 1.0,
                      bc: str = "wall") -> np.ndarray:
    """Field-free, current-free reference flux -c0 T^(5/2)/Z kappa(0) dT/dx."""
    T = np.asarray(T, dtype=float)
    kappa0 = table.at(Z, 0.0).kappa_perp
    return -HALL_C0 * T**2.5 / Z * kappa0 * _grad_1d(T, dx, bc)


def effective_conductivity_ratio(q1_measured: float, q_ref: float) -> float:
    if q_ref == 0.0:
        raise ZeroDivisionError("reference flux vanishes")
    return q1_measured / q_ref


def analytic_ratio(k_lambda: float, Z: float = 1.0) -> float:
    """Nonlocal flux-reduction factor 1/(1 + (30 k lambda beta_Z)^(4/3))."""
    beta_z = np.sqrt((3.0 * np.pi / 128.0) * 3.2 * (0.24 + Z)
                     / (1.0 + 0.24 * Z)) * np.sqrt(Z) / 2.0
    return 1.0 / (1.0 + (30.0 * k_lambda * beta_z) ** (4.0 / 3.0))


def knudsen(T, dx: float, lambda_ref: float = 1.0,
            bc: str = "wall") -> np.ndarray:
    """Per-cell ratio of mean free path to gradient length.

    lambda_ei scales as T^2 (collision-frequency units: = lambda_ref at
    T = 1) and the gradient length is T/|dT/dx|, so K_n = lambda_ref T |dT/dx|.
    """
    T = np.asarray(T, dtype=float)
    return lambda_ref * T * np.abs(_grad_1d(T, dx, bc))


# ---------------------------------------------------------------------------
# ledgers and spectra
# ---------------------------------------------------------------------------

def energy_entropy_ledger(f: DistributionField, fields: FieldSet,
                          norm: Normalization) -> dict:
    """Mass, kinetic/field/total energy, and entropy sums.

    The "total" column is the exact invariant of the coupled update:
    kinetic + field energy weighted so the Ampere source factor cancels.
    """
    g = f.grid
    wx = g.cell_volume_x
    wv = g.cell_volume_v
    v = g.v_nodes
    vsq = sum(v.reshape((1,) * g.dim_x + tuple(
        g.n_v if a == i else 1 for a in range(g.dim_v)))**2
        for i in range(g.dim_v))
    kinetic = 0.5 * float(np.sum(f.values * vsq)) * wx * wv
    em_form = 0.5 * float(np.sum(fields.E1**2 + fields.E2**2
                                 + fields.B3**2 / norm.beta**2)) * wx
    total = kinetic + em_form / norm.maxwell_source
    vals = f.values
    H = float(np.sum(np.where(vals > 0.0, vals * np.log(
        np.where(vals > 0.0, vals, 1.0)), 0.0))) * wx * wv
    return {
        "mass": float(np.sum(vals)) * wx * wv,
        "kinetic": kinetic,
        "em": em_form,
        "total": total,
        "entropy": H,
    }


def cross_gradient(f: DistributionField) -> np.ndarray:
    """Out-of-plane component of grad(m3) x grad(m5) on a 2D space grid,
    with m_p = sum |v|^p f dv^3 (periodic centered gradients)."""
    g = f.grid
    if g.dim_x != 2 or g.dim_v != 3:
        raise ValueError("cross_gradient needs a 2D x 3V field")
    v = g.v_nodes
    vmag = np.sqrt(v[:, None, None]**2 + v[None, :, None]**2
                   + v[None, None, :]**2)
    w = g.cell_volume_v
    m3 = np.tensordot(f.values, vmag**3, axes=([2, 3, 4], [0, 1, 2])) * w
    m5 = np.tensordot(f.values, vmag**5, axes=([2, 3, 4], [0, 1, 2])) * w

    def gx(u):
        return (np.roll(u, -1, 0) - np.roll(u, 1, 0)) / (2 * g.dx[0])

    def gy(u):
        return (np.roll(u, -1, 1) - np.roll(u, 1, 1)) / (2 * g.dx[1])

    return gx(m3) * gy(m5) - gy(m3) * gx(m5)


def magnetic_energy_spectrum(series, dt: float
                             ) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed amplitude spectrum of a scalar time series.

    The mean is removed first (energy series carry a large offset).
    """
    series = np.asarray(series, dtype=float)
    if series.size < 8:
        raise ValueError("need at least 8 samples for a spectrum")
    x = series - series.mean()
    win = np.hanning(series.size)
    amp = np.abs(np.fft.rfft(x * win))
    freqs = np.fft.rfftfreq(series.size, d=dt)
    return freqs, amp


def spectrum_peak_frequency(series, dt: float) -> float:
    """Dominant frequency by parabolic interpolation of the three bins
    around the spectral maximum."""
    freqs, amp = magnetic_energy_spectrum(series, dt)
    i = int(np.argmax(amp[1:])) + 1
    if i == 0 or i >= amp.size - 1:
        return float(freqs[i])
    ym, y0, yp = amp[i - 1], amp[i], amp[i + 1]
    denom = ym - 2 * y0 + yp
    shift = 0.5 * (ym - yp) / denom if denom != 0 else 0.0
    return float((i + shift) * (freqs[1] - freqs[0]))


def estimate_gradient_wavenumber(T, dx: float) -> tuple[float, float, float]:
    """Dominant wavenumber of the dT/dx profile with a one-bin bracket."""
    T = np.asarray(T, dtype=float)
    gradT = _grad_1d(T, dx, "wall")
    x = gradT - gradT.mean()
    amp = np.abs(np.fft.rfft(x * np.hanning(x.size)))
    i = int(np.argmax(amp[1:])) + 1
    dk = 2 * np.pi / (x.size * dx)
    if 0 < i < amp.size - 1:
        ym, y0, yp = amp[i - 1], amp[i], amp[i + 1]
        denom = ym - 2 * y0 + yp
        shift = 0.5 * (ym - yp) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    k = (i + shift) * dk
    return k, max(k - dk, dk * 0.25), k + dk
