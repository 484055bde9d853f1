"""Velocity-space Coulomb collision operators.

Both operators are built from one-sided difference stencils: for a sign
vector eps in {+1, -1}^3,

    (D^eps_s psi)(j) = eps_s (psi(j + eps_s e_s) - psi(j)) / dv,

with formal adjoint -D^{-eps}.  The shifted nodes
vtilde_s = v_s + eps_s dv/2 satisfy D^eps_s |v|^2 = 2 vtilde_s, which is
what makes the energy sums below vanish identically.

Electron-ion (fixed ions): the log-weak form

    C_ei(f) = 1/8 sum_eps  -D^{*,eps}[ (1/|v|^3) S(vtilde) f D^eps log f ],
    S(u) = |u|^2 Id - u (x) u,

conserves mass and energy exactly (S(vtilde) vtilde = 0), dissipates
H = sum f log f dv^3, and, because the eight stencils are averaged with a
reflection-balanced summation tree, preserves any mirror symmetry
f(v) = f(v^k) bitwise.

Electron-electron: the log-weak bilinear form

    rho_j = dv^3 sum_m f_j f_m Phi(v_j - v_m) (D log f_j - D log f_m),
    C_ee(f)_j = -(D* rho)_j,
    Phi(u) = (|u|^2 Id - u (x) u) / |u|^3,

again averaged over the eight stencils.  The pair sum is a convolution in
j - m, so the direct O(n_v^6) summation is evaluated exactly through
zero-padded FFTs of the precomputed Phi tables (identical values, only
round-off-level reordering).  Mass, the three momentum components, and
energy are conserved to round-off; Maxwellians are exact fixed points
because D^eps log M is affine in vtilde.

Boundary closure: for each stencil the operator acts on the interior set
of nodes whose full diagonal neighbor j + eps lies on the grid; outside
that set the flux vector is zero.  This keeps every conservation identity
exact on the truncated cube.

Positivity: ``collision_step`` advances f by explicit Euler substeps whose
size is capped by safety * min f/|C| over cells being depleted, so the
update can never cross zero.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as _sfft

__all__ = [
    "phi",
    "lorentz_apply",
    "landau_apply_direct",
    "collision_step",
]

# guards log f against exact zeros only.  A floor anywhere near the
# occupied range would misrepresent the log-gradient of deeply truncated
# Maxwellian tails (the operator would then drain those cells forever and
# stall the positivity substepping), so it sits at the bottom of the
# double range.
F_FLOOR = 1e-300

# stencil signs ordered so that pairing adjacent terms flips component 1,
# pairing pairs flips component 2, etc.; summing with that bracketing makes
# the eight-operator average invariant under each mirror reflection at the
# floating-point level
_EPS_ORDER = [(e1, e2, e3)
              for e3 in (1, -1) for e2 in (1, -1) for e1 in (1, -1)]


def phi(u) -> np.ndarray:
    """Relative-velocity tensor (|u|^2 Id - u u^T)/|u|^3; zero at u = 0."""
    u = np.asarray(u, dtype=float)
    norm = float(np.sqrt(np.dot(u, u)))
    if norm < 1e-14:
        return np.zeros((3, 3))
    return (norm**2 * np.eye(3) - np.outer(u, u)) / norm**3


# ---------------------------------------------------------------------------
# stencil helpers (arrays may carry leading batch axes; the velocity cube
# occupies the last three axes)
# ---------------------------------------------------------------------------

def _vsl(nd: int, axis: int, s: slice) -> tuple:
    idx = [slice(None)] * nd
    idx[axis] = s
    return tuple(idx)


def _one_sided(logf: np.ndarray, eps_s: int, axis: int, dv: float):
    """w_s(j) = eps_s (logf(j + eps_s) - logf(j))/dv, zero on missing links."""
    nd = logf.ndim
    d = (logf[_vsl(nd, axis, slice(1, None))]
         - logf[_vsl(nd, axis, slice(None, -1))]) / dv
    w = np.zeros_like(logf)
    if eps_s == 1:
        w[_vsl(nd, axis, slice(None, -1))] = d
    else:
        w[_vsl(nd, axis, slice(1, None))] = d
    return w


def _adjoint_divergence(G: list[np.ndarray], eps, dv: float) -> np.ndarray:
    """-(D* G)(j) = sum_s eps_s (G_s(j) - G_s(j - eps_s e_s))/dv, zero-padded."""
    nd = G[0].ndim
    out = np.zeros_like(G[0])
    for s, eps_s in enumerate(eps):
        axis = nd - 3 + s
        g = G[s]
        if eps_s == 1:
            out[_vsl(nd, axis, slice(0, 1))] += g[_vsl(nd, axis, slice(0, 1))] / dv
            out[_vsl(nd, axis, slice(1, None))] += (
                g[_vsl(nd, axis, slice(1, None))]
                - g[_vsl(nd, axis, slice(None, -1))]) / dv
        else:
            out[_vsl(nd, axis, slice(-1, None))] -= (
                g[_vsl(nd, axis, slice(-1, None))] / dv)
            out[_vsl(nd, axis, slice(None, -1))] += (
                g[_vsl(nd, axis, slice(1, None))]
                - g[_vsl(nd, axis, slice(None, -1))]) / dv
    return out


def _interior_mask(n: int, eps) -> np.ndarray:
    """Nodes whose diagonal neighbor j + eps lies fully on the grid."""
    masks = []
    for eps_s in eps:
        m = np.ones(n, dtype=bool)
        if eps_s == 1:
            m[-1] = False
        else:
            m[0] = False
        masks.append(m)
    return (masks[0][:, None, None] & masks[1][None, :, None]
            & masks[2][None, None, :])


def _v_nodes(n: int, dv: float) -> np.ndarray:
    return (np.arange(n) - n / 2 + 0.5) * dv


def _pairwise_eps_sum(terms: list[np.ndarray]) -> np.ndarray:
    while len(terms) > 1:
        terms = [terms[i] + terms[i + 1] for i in range(0, len(terms), 2)]
    return terms[0]


def _check_positive(f: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{name}: non-finite distribution values")
    if float(np.min(f)) < 0.0:
        raise ValueError(f"{name}: negative distribution values")


# ---------------------------------------------------------------------------
# electron-ion (Lorentz) operator
# ---------------------------------------------------------------------------

def lorentz_apply(f: np.ndarray, dv: float, coeff: float = 1.0,
                  floor: float = F_FLOOR) -> np.ndarray:
    """df/dt from electron-ion collisions on one velocity cube.

    ``f`` has shape (..., n, n, n); leading axes are independent space
    cells.  ``coeff`` is the scaling-regime prefactor (nu_ei/omega_pe in
    plasma-frequency units, 1 in collision-frequency units).
    """
    f = np.asarray(f, dtype=float)
    _check_positive(f, "lorentz_apply")
    n = f.shape[-1]
    nd = f.ndim
    v = _v_nodes(n, dv)
    vsq = (v[:, None, None]**2 + v[None, :, None]**2
           + v[None, None, :]**2)
    inv_vcube = vsq**-1.5
    logf = np.log(np.maximum(f, floor))

    terms = []
    for eps in _EPS_ORDER:
        w = [_one_sided(logf, eps[s], nd - 3 + s, dv) for s in range(3)]
        tv = [v.reshape((n, 1, 1)) + eps[0] * dv / 2.0,
              v.reshape((1, n, 1)) + eps[1] * dv / 2.0,
              v.reshape((1, 1, n)) + eps[2] * dv / 2.0]
        tv2 = tv[0]**2 + tv[1]**2 + tv[2]**2
        tv_dot_w = tv[0] * w[0] + tv[1] * w[1] + tv[2] * w[2]
        mask = _interior_mask(n, eps)
        base = f * inv_vcube * mask
        G = [base * (tv2 * w[s] - tv[s] * tv_dot_w) for s in range(3)]
        terms.append(_adjoint_divergence(G, eps, dv))
    return (coeff / 8.0) * _pairwise_eps_sum(terms)


# ---------------------------------------------------------------------------
# electron-electron (bilinear) operator
# ---------------------------------------------------------------------------

_phi_fft_cache: dict = {}
_PHI_PAIRS = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]


def _phi_kernel_ffts(n: int, dv: float):
    """rfftn of the six independent Phi components on the wrapped 2n cube."""
    key = (n, dv)
    if key in _phi_fft_cache:
        return _phi_fft_cache[key]
    m = 2 * n
    d = np.arange(m)
    d = np.where(d < n, d, d - m) * dv
    u1 = d[:, None, None]
    u2 = d[None, :, None]
    u3 = d[None, None, :]
    usq = u1**2 + u2**2 + u3**2
    with np.errstate(divide="ignore", invalid="ignore"):
        inv3 = np.where(usq > 0.0, usq**-1.5, 0.0)
    comp = {(0, 0): (usq - u1 * u1), (1, 1): (usq - u2 * u2),
            (2, 2): (usq - u3 * u3), (0, 1): -u1 * u2,
            (0, 2): -u1 * u3, (1, 2): -u2 * u3}
    ffts = {p: _sfft.rfftn(comp[p] * inv3) for p in _PHI_PAIRS}
    _phi_fft_cache[key] = ffts
    return ffts


# FFT worker threads (scipy parallelizes over the batch axis; results are
# bitwise independent of the setting)
FFT_WORKERS = 1


def _conv(phat, ghat, m: int, n: int) -> np.ndarray:
    full = _sfft.irfftn(phat * ghat, s=(m, m, m), axes=(-3, -2, -1),
                        workers=FFT_WORKERS)
    return full[..., :n, :n, :n]


def landau_apply_direct(f: np.ndarray, dv: float, coeff: float = 1.0,
                        floor: float = F_FLOOR) -> np.ndarray:
    """df/dt from electron-electron collisions (direct pair sum).

    ``f`` has shape (..., n, n, n).  ``coeff`` is nu/Z in plasma-frequency
    units, 1/Z in collision-frequency units.  The pair sum over m is
    evaluated through zero-padded FFT convolutions of the precomputed
    Phi(v_j - v_m) tables; this is the exact direct sum up to summation
    order.
    """
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("landau_apply_direct: non-finite distribution values")
    _check_positive(f, "landau_apply_direct")
    n = f.shape[-1]
    nd = f.ndim
    m = 2 * n
    logf = np.log(np.maximum(f, floor))
    ffts = _phi_kernel_ffts(n, dv)

    pad_shape = f.shape[:-3] + (m, m, m)
    terms = []
    for eps in _EPS_ORDER:
        mask = _interior_mask(n, eps)
        g = f * mask
        w = [_one_sided(logf, eps[s], nd - 3 + s, dv) for s in range(3)]

        gpad = np.zeros(pad_shape)
        gpad[..., :n, :n, :n] = g
        ghat = _sfft.rfftn(gpad, axes=(-3, -2, -1), workers=FFT_WORKERS)
        hhat = []
        for s in range(3):
            gpad[..., :n, :n, :n] = g * w[s]
            hhat.append(_sfft.rfftn(gpad, axes=(-3, -2, -1),
                                    workers=FFT_WORKERS))

        # rho_s = dv^3 1_L f [ sum_s' A_ss' w_s' - b_s ]
        rho = [np.zeros_like(f) for _ in range(3)]
        for (s, sp) in _PHI_PAIRS:
            phat = ffts[(s, sp)]
            A = _conv(phat, ghat, m, n)
            rho[s] += A * w[sp]
            rho[s] -= _conv(phat, hhat[sp], m, n)
            if s != sp:
                rho[sp] += A * w[s]
                rho[sp] -= _conv(phat, hhat[s], m, n)
        base = dv**3 * g
        rho = [base * r for r in rho]
        terms.append(_adjoint_divergence(rho, eps, dv))
    return (coeff / 8.0) * _pairwise_eps_sum(terms)


# ---------------------------------------------------------------------------
# positivity-preserving explicit stepping
# ---------------------------------------------------------------------------

def collision_step(f: np.ndarray, dt_target: float, dv: float,
                   coeff_ei: float = 0.0, coeff_ee: float = 0.0,
                   safety: float = 0.5,
                   floor: float = F_FLOOR) -> tuple[np.ndarray, float]:
    """Advance f by dt_target with explicit Euler substeps that keep f >= 0.

    Each substep uses dt_sub = min(remaining, safety * min f/|C| over cells
    with C < 0).  Raises if the substep underflows below
    1e-12 * dt_target (stiff cell with vanishing occupancy).
    """
    if dt_target < 0:
        raise ValueError("dt_target must be nonnegative")
    _check_positive(f, "collision_step")
    fcur = np.array(f, dtype=float)
    remaining = float(dt_target)
    taken = 0.0
    while remaining > 0.0:
        C = np.zeros_like(fcur)
        if coeff_ei != 0.0:
            C += lorentz_apply(fcur, dv, coeff_ei, floor)
        if coeff_ee != 0.0:
            C += landau_apply_direct(fcur, dv, coeff_ee, floor)
        neg = C < 0.0
        if np.any(neg):
            dt_pos = safety * float(np.min(fcur[neg] / -C[neg]))
        else:
            dt_pos = remaining
        dt_sub = min(remaining, dt_pos)
        if dt_sub < 1e-12 * dt_target:
            raise RuntimeError(
                f"collision substep underflow: dt_sub = {dt_sub:.3e} after "
                f"{taken:.3e} of {dt_target:.3e} (stiff depleted cell)")
        fcur = fcur + dt_sub * C
        remaining -= dt_sub
        taken += dt_sub
    return fcur, taken
