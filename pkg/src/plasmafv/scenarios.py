"""Config-driven orchestration of the benchmark experiments.

A step of the coupled system advances, in order:

1. currents J^n from the current distribution moments;
2. the implicit field update (J^n as source), which also yields the
   half-step averaged fields (E + E')/2, (B + B')/2;
3. one unsplit explicit transport stage using those half-step fields --
   this pairing is what cancels the J.E exchange term exactly and keeps
   the total discrete energy constant when limiters are inactive;
4. collision substeps, cell by cell in velocity space (each space cell
   substeps with its own positivity bound, so results never depend on how
   cells are batched across workers);
5. ledger/snapshot output at the configured cadence.

Configs are flat ``key = value`` text with bracketed section headers and
round-trip exactly (parse -> serialize -> parse is the identity).
Scenario defaults reproduce the benchmark parameter tables; every value
can be overridden in the file or programmatically.

Boundary conditions: "periodic", or "reflect" for specular walls
(v1 -> -v1 at the x faces), which makes the wall current vanish and
conserves mass to round-off.
"""

from __future__ import annotations

import configparser
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dc_fields, replace

import numpy as np

from . import diagnostics, lintheory
from .collisions import landau_apply_direct, lorentz_apply
from .grid import (COLLISION_FREQUENCY, PLASMA_FREQUENCY, DistributionField,
                   FieldSet, Normalization, PhaseGrid, build_grid, maxwellian,
                   save_snapshot)
from .maxwell import compute_current, gauss_residual, step_maxwell_1d, \
    step_maxwell_2d
from .transport import LimiterChoice, cfl_dt, vlasov_step_transport

__all__ = [
    "ScenarioConfig",
    "default_config",
    "load_config",
    "save_config",
    "config_to_text",
    "config_from_text",
    "init_two_stream",
    "init_temp_gradient",
    "init_hot_spot_2d",
    "init_xmode",
    "build_scenario",
    "run",
    "RunResult",
]

SCENARIOS = ("twostream", "xmode", "tempgrad", "hotspot2d", "custom")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ScenarioConfig:
    # [scenario]
    scenario: str = "twostream"
    # [grid]
    dim_x: int = 1
    dim_v: int = 1
    n_x: int = 256
    length: float = 25.0
    n_v: int = 256
    v_max: float = 12.0
    # [physics]
    mode: str = PLASMA_FREQUENCY
    beta: float = 0.05
    Z: float = 1.0
    nu_ratio: float = 0.01
    collisions_ee: bool = False
    collisions_ei: bool = False
    # [numerics]
    order: int = 2
    limiter: str = "extrema"      # "extrema" | "minmod:<b>" | "none"
    dt_policy: str = "fixed"      # "fixed" | "cfl"
    dt: float = 0.005
    cfl_safety: float = 0.9
    bc: str = "periodic"
    threads: int = 1
    # [time]
    t_end: float = 50.0
    # [output]
    output_every: int = 1
    snapshot_every: int = 0
    # [initial]
    amplitude: float = 0.1
    v_drift: float = 4.0
    mode_number: int = 1
    B0: float = 2.0
    branch: str = "upper"
    T_left: float = 0.8
    T_right: float = 1.2
    steepness: float = 10.0
    B3_init: float = 0.001
    spot_dT: float = 0.12
    spot_radius: float = 5.6
    seed_asymmetry: float = 0.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")

    @property
    def k1(self) -> float:
        return 2.0 * np.pi * self.mode_number / self.length

    @property
    def normalization(self) -> Normalization:
        return Normalization(self.mode, beta=self.beta, Z=self.Z,
                             nu_ratio=self.nu_ratio)

    @property
    def limiter_choice(self) -> LimiterChoice:
        if self.limiter == "none":
            return LimiterChoice("none")
        if self.limiter == "extrema":
            return LimiterChoice("extrema")
        if self.limiter.startswith("minmod"):
            b = float(self.limiter.split(":", 1)[1]) if ":" in self.limiter \
                else 2.0
            return LimiterChoice("minmod", b=b)
        raise ValueError(f"unknown limiter {self.limiter!r}")

    def grid(self) -> PhaseGrid:
        return build_grid(self.dim_x, self.n_x, self.length, self.n_v,
                          self.v_max, dim_v=self.dim_v)


_SECTIONS = {
    "scenario": ("scenario",),
    "grid": ("dim_x", "dim_v", "n_x", "length", "n_v", "v_max"),
    "physics": ("mode", "beta", "Z", "nu_ratio", "collisions_ee",
                "collisions_ei"),
    "numerics": ("order", "limiter", "dt_policy", "dt", "cfl_safety", "bc",
                 "threads"),
    "time": ("t_end",),
    "output": ("output_every", "snapshot_every"),
    "initial": ("amplitude", "v_drift", "mode_number", "B0", "branch",
                "T_left", "T_right", "steepness", "B3_init", "spot_dT",
                "spot_radius", "seed_asymmetry"),
}


def config_to_text(cfg: ScenarioConfig) -> str:
    out = io.StringIO()
    for section, keys in _SECTIONS.items():
        out.write(f"[{section}]\n")
        for key in keys:
            val = getattr(cfg, key)
            if isinstance(val, float):
                out.write(f"{key} = {val!r}\n")
            else:
                out.write(f"{key} = {val}\n")
        out.write("\n")
    return out.getvalue()


def config_from_text(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str          # keys are case-sensitive (Z)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed config: {exc}") from exc
    types = {f.name: f.type for f in dc_fields(ScenarioConfig)}
    kwargs = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ValueError(
                    f"unknown key {key!r} in section [{section}]")
            t = types[key]
            if t == "bool":
                kwargs[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif t == "int":
                kwargs[key] = int(raw)
            elif t == "float":
                kwargs[key] = float(raw)
            else:
                kwargs[key] = raw.strip()
    return ScenarioConfig(**kwargs)


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return config_from_text(fh.read())


def save_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(config_to_text(cfg))


def default_config(name: str) -> ScenarioConfig:
    """Benchmark defaults per scenario."""
    if name == "twostream":
        return ScenarioConfig(
            scenario="twostream", dim_x=1, dim_v=1, n_x=256, length=25.0,
            n_v=256, v_max=12.0, mode=PLASMA_FREQUENCY, order=2,
            limiter="extrema", dt_policy="fixed", dt=1.0 / 200.0, t_end=50.0,
            amplitude=0.1, v_drift=4.0, mode_number=1)
    if name == "xmode":
        return ScenarioConfig(
            scenario="xmode", dim_x=1, dim_v=3, n_x=126, length=25.0,
            n_v=64, v_max=7.0, mode=PLASMA_FREQUENCY, beta=0.05, order=2,
            limiter="extrema", dt_policy="fixed", dt=1.0 / 200.0, t_end=30.0,
            amplitude=0.1, B0=2.0, mode_number=1)
    if name == "tempgrad":
        return ScenarioConfig(
            scenario="tempgrad", dim_x=1, dim_v=3, n_x=126, length=5400.0,
            n_v=32, v_max=6.0, mode=COLLISION_FREQUENCY, beta=0.05, Z=1.0,
            nu_ratio=0.01, collisions_ee=True, collisions_ei=True, order=4,
            limiter="none", dt_policy="fixed", dt=1.0 / 500.0, bc="reflect",
            t_end=40.0, T_left=0.8, T_right=1.2, steepness=10.0,
            B3_init=0.001, output_every=10)
    if name == "hotspot2d":
        return ScenarioConfig(
            scenario="hotspot2d", dim_x=2, dim_v=3, n_x=100, length=70.0,
            n_v=32, v_max=6.0, mode=COLLISION_FREQUENCY, beta=0.05, Z=1.0,
            nu_ratio=0.003, collisions_ee=False, collisions_ei=True, order=4,
            limiter="none", dt_policy="fixed", dt=1.0 / 500.0, bc="periodic",
            t_end=8.0, spot_dT=0.12, spot_radius=5.6, output_every=10)
    raise ValueError(f"no defaults for scenario {name!r}")


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------

def init_two_stream(cfg: ScenarioConfig
                    ) -> tuple[DistributionField, FieldSet]:
    """Counter-modulated symmetric beams with zero initial field."""
    if cfg.amplitude >= 1.0:
        raise ValueError("amplitude must be < 1 (f would go negative)")
    g = cfg.grid()
    x = g.x_nodes()
    v = g.v_nodes
    k = cfg.k1
    vd = cfg.v_drift
    cosx = 1.0 + cfg.amplitude * np.cos(k * x)
    cosm = 2.0 - cosx
    if g.dim_v == 1:
        gp = np.exp(-(v - vd)**2 / 2) / np.sqrt(2 * np.pi)
        gm = np.exp(-(v + vd)**2 / 2) / np.sqrt(2 * np.pi)
        vals = 0.5 * (cosx[:, None] * gp[None, :]
                      + cosm[:, None] * gm[None, :])
    else:
        mp = maxwellian(g, 1.0, [vd, 0, 0], 1.0).values[0]
        mm = maxwellian(g, 1.0, [-vd, 0, 0], 1.0).values[0]
        vals = 0.5 * (cosx[:, None, None, None] * mp[None]
                      + cosm[:, None, None, None] * mm[None])
    f = DistributionField(vals, g, 0.0)
    return f, FieldSet.zeros(tuple(g.n_x))


def _gradient_step_profile(cfg: ScenarioConfig, x: np.ndarray) -> np.ndarray:
    """Two cubic arcs in (x - x_m): values/slopes match at the midpoint,
    endpoint values are T_left/T_right with zero slope at the walls."""
    if cfg.T_left <= 0 or cfg.T_right <= 0:
        raise ValueError("wall temperatures must be positive")
    L = cfg.length
    xm = 0.5 * L
    slope = (cfg.T_right - cfg.T_left) / (L / cfg.steepness)
    mid = 0.5 * (cfg.T_left + cfg.T_right)

    def cubic(x0, t0, s0, x1, t1, s1):
        # coefficients of sum c_p (x - xm)^p matching value/slope at both ends
        A = np.array([[1, x0, x0**2, x0**3],
                      [0, 1, 2 * x0, 3 * x0**2],
                      [1, x1, x1**2, x1**3],
                      [0, 1, 2 * x1, 3 * x1**2]], dtype=float)
        return np.linalg.solve(A, np.array([t0, s0, t1, s1], dtype=float))

    cl = cubic(-xm, cfg.T_left, 0.0, 0.0, mid, slope)
    cr = cubic(0.0, mid, slope, L - xm, cfg.T_right, 0.0)
    xi = x - xm
    powers = np.vstack([np.ones_like(xi), xi, xi**2, xi**3])
    return np.where(xi <= 0.0, cl @ powers, cr @ powers)


def init_temp_gradient(cfg: ScenarioConfig
                       ) -> tuple[DistributionField, FieldSet]:
    """Local Maxwellians along a smoothed temperature step, n = 1,
    E = 0 and a uniform initial B3."""
    if cfg.mode != COLLISION_FREQUENCY:
        raise ValueError("the gradient scenario runs in collision-frequency "
                         "units")
    g = cfg.grid()
    T = _gradient_step_profile(cfg, g.x_nodes())
    vals = _local_maxwellians(g, T)
    fields = FieldSet.zeros(tuple(g.n_x))
    fields.B3[:] = cfg.B3_init
    return DistributionField(vals, g, 0.0), fields


def _local_maxwellians(g: PhaseGrid, T: np.ndarray) -> np.ndarray:
    v = g.v_nodes
    vsq = (v[:, None, None]**2 + v[None, :, None]**2
           + v[None, None, :]**2)
    Tx = T.reshape(T.shape + (1, 1, 1))
    return (2 * np.pi * Tx) ** -1.5 * np.exp(-vsq / (2 * Tx))


def init_hot_spot_2d(cfg: ScenarioConfig
                     ) -> tuple[DistributionField, FieldSet]:
    """Radially symmetric temperature bump on a periodic square, n = 1,
    zero fields; electron-ion collisions only."""
    g = cfg.grid()
    x = g.x_nodes(0) - 0.5 * cfg.length
    y = g.x_nodes(1) - 0.5 * cfg.length
    r2 = x[:, None]**2 + y[None, :]**2
    T = 1.0 + cfg.spot_dT * np.exp(-r2 / cfg.spot_radius**2)
    if cfg.seed_asymmetry:
        xs = g.x_nodes(0)
        ys = g.x_nodes(1)
        bump = (np.cos(2 * np.pi * xs / cfg.length)[:, None]
                + np.cos(2 * np.pi * ys / cfg.length)[None, :])
        T = T * (1.0 + cfg.seed_asymmetry * bump)
    vals = _local_maxwellians(g, T)
    return (DistributionField(vals, g, 0.0),
            FieldSet.zeros(tuple(g.n_x)))


def init_xmode(cfg: ScenarioConfig) -> tuple[DistributionField, FieldSet]:
    """Single transverse eigenmode seeded from the magnetic amplitude."""
    g = cfg.grid()
    roots = lintheory.xmode_dispersion_roots(cfg.k1, cfg.B0, cfg.beta)
    if roots.size == 0:
        raise ValueError("no propagating branch for these parameters")
    omega = roots[-1] if cfg.branch == "upper" else roots[0]
    return lintheory.xmode_initial_data(cfg.amplitude, cfg.k1, cfg.B0,
                                        cfg.beta, omega, g)


def build_scenario(cfg: ScenarioConfig
                   ) -> tuple[DistributionField, FieldSet]:
    builders = {
        "twostream": init_two_stream,
        "xmode": init_xmode,
        "tempgrad": init_temp_gradient,
        "hotspot2d": init_hot_spot_2d,
    }
    if cfg.scenario not in builders:
        raise ValueError(f"scenario {cfg.scenario!r} has no initializer")
    return builders[cfg.scenario](cfg)


# ---------------------------------------------------------------------------
# collision driver (per-cell substepping, batch-evaluated)
# ---------------------------------------------------------------------------

def _collision_cells(fv: np.ndarray, dt: float, dv: float, coeff_ei: float,
                     coeff_ee: float, safety: float = 0.5) -> np.ndarray:
    """Advance every space cell by dt with its own positivity substeps.

    ``fv`` has shape (ncells, n, n, n).  Each cell's substep sequence
    depends on that cell alone, so any partitioning of cells across
    workers reproduces identical results.
    """
    out = fv.copy()
    remaining = np.full(fv.shape[0], dt)
    while True:
        active = remaining > 0.0
        if not np.any(active):
            return out
        sub = out[active]
        C = np.zeros_like(sub)
        if coeff_ei:
            C += lorentz_apply(sub, dv, coeff_ei)
        if coeff_ee:
            C += landau_apply_direct(sub, dv, coeff_ee)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(C < 0.0, sub / np.where(C < 0.0, -C, 1.0), np.inf)
        dt_pos = safety * ratio.min(axis=(1, 2, 3))
        dt_sub = np.minimum(remaining[active], dt_pos)
        if np.any(dt_sub < 1e-12 * dt):
            raise RuntimeError("collision substep underflow in scenario step")
        out[active] = sub + dt_sub[:, None, None, None] * C
        remaining[active] -= dt_sub


def _apply_collisions(f: DistributionField, dt: float, norm: Normalization,
                      cfg: ScenarioConfig, pool: ThreadPoolExecutor | None
                      ) -> None:
    g = f.grid
    coeff_ei = norm.coeff_ei if cfg.collisions_ei else 0.0
    coeff_ee = norm.coeff_ee if cfg.collisions_ee else 0.0
    if not (coeff_ei or coeff_ee):
        return
    flat = f.values.reshape((-1,) + (g.n_v,) * 3)
    ncells = flat.shape[0]
    if pool is None or cfg.threads <= 1:
        f.values[...] = _collision_cells(
            flat, dt, g.dv, coeff_ei, coeff_ee).reshape(f.values.shape)
        return
    nsl = min(cfg.threads, ncells)
    bounds = np.linspace(0, ncells, nsl + 1, dtype=int)
    futures = [
        pool.submit(_collision_cells, flat[a:b], dt, g.dv, coeff_ei, coeff_ee)
        for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    parts = [fut.result() for fut in futures]
    f.values[...] = np.concatenate(parts, axis=0).reshape(f.values.shape)


# ---------------------------------------------------------------------------
# per-step diagnostics
# ---------------------------------------------------------------------------

def _profile_moments(f: DistributionField) -> dict:
    """Vectorized low-order moment profiles over space (3V grids)."""
    g = f.grid
    v = g.v_nodes
    w = g.cell_volume_v
    vals = f.values
    ax = g.velocity_axes
    n = vals.sum(axis=ax) * w
    m1 = [np.tensordot(vals, v, axes=(ax[i], 0)).sum(
        axis=tuple(range(g.dim_x, g.dim_x + 2))) * w for i in range(3)]
    vsq = (v[:, None, None]**2 + v[None, :, None]**2 + v[None, None, :]**2)
    s2 = np.tensordot(vals, vsq, axes=(list(ax), [0, 1, 2])) * w
    vsqv1 = vsq * v[:, None, None]
    vsqv2 = vsq * v[None, :, None]
    q1 = 0.5 * np.tensordot(vals, vsqv1, axes=(list(ax), [0, 1, 2])) * w
    q2 = 0.5 * np.tensordot(vals, vsqv2, axes=(list(ax), [0, 1, 2])) * w
    u = [m / n for m in m1]
    usq = u[0]**2 + u[1]**2 + u[2]**2
    T = (s2 - n * usq) / (3.0 * n)
    return {"n": n, "u1": u[0], "u2": u[1], "T": T,
            "j1": -n * u[0], "j2": -n * u[1], "q1": q1, "q2": q2}


class _LedgerWriter:
    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def add(self, values: dict):
        self.rows.append([values[c] for c in self.columns])

    def text(self) -> str:
        out = ["# " + " ".join(self.columns)]
        for row in self.rows:
            out.append(" ".join(
                f"{v:d}" if isinstance(v, (int, np.integer)) else f"{v:.17g}"
                for v in row))
        return "\n".join(out) + "\n"

    def column(self, name) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)


@dataclass
class RunResult:
    config: ScenarioConfig
    f: DistributionField
    fields: FieldSet
    ledger: _LedgerWriter
    steps: int

    def ledger_column(self, name) -> np.ndarray:
        return self.ledger.column(name)


def _scenario_columns(cfg: ScenarioConfig) -> list[str]:
    base = ["step", "t", "mass", "kinetic", "em", "total", "entropy",
            "gauss_max"]
    if cfg.scenario in ("twostream", "xmode"):
        base += ["es_energy", "b3_energy"]
    if cfg.scenario == "tempgrad":
        base += ["q1_max", "q1_br", "ratio_q1", "q2_probe", "q2_br",
                 "ratio_q2", "knudsen_max"]
    if cfg.scenario == "hotspot2d":
        base += ["b3_max", "b3_asym", "crossgrad_max"]
    return base


def _ledger_row(step: int, f: DistributionField, fields: FieldSet,
                cfg: ScenarioConfig, norm: Normalization,
                table=None) -> dict:
    g = f.grid
    wx = g.cell_volume_x
    row = {"step": step, "t": f.time}
    row.update(diagnostics.energy_entropy_ledger(f, fields, norm))
    bc = "periodic" if cfg.bc == "periodic" else "wall"
    row["gauss_max"] = float(np.max(np.abs(
        gauss_residual(fields, f, norm, bc))))
    if cfg.scenario in ("twostream", "xmode"):
        row["es_energy"] = 0.5 * float(np.sum(fields.E1**2)) * wx
        row["b3_energy"] = 0.5 * float(np.sum(fields.B3**2)) * wx
    if cfg.scenario == "tempgrad":
        prof = _profile_moments(f)
        dx = g.dx[0]
        q1_br, q2_br, _, _ = diagnostics.braginskii_reference(
            prof["T"], prof["n"], fields.B3, prof["j1"], prof["j2"],
            table, dx, Z=cfg.Z, bc="wall")
        gradT = np.abs(np.gradient(prof["T"], dx))
        interior = slice(2, g.n_x[0] - 2)
        i = int(np.argmax(gradT[interior])) + 2
        row["q1_max"] = float(prof["q1"][i])
        row["q1_br"] = float(q1_br[i])
        row["ratio_q1"] = float(prof["q1"][i] / q1_br[i]) if q1_br[i] else 0.0
        row["q2_probe"] = float(prof["q2"][i])
        row["q2_br"] = float(q2_br[i])
        row["ratio_q2"] = float(prof["q2"][i] / q2_br[i]) if q2_br[i] else 0.0
        row["knudsen_max"] = float(np.max(diagnostics.knudsen(prof["T"], dx)))
    if cfg.scenario == "hotspot2d":
        b3 = fields.B3
        row["b3_max"] = float(np.max(np.abs(b3)))
        row["b3_asym"] = float(np.max(np.abs(b3 + b3.T)))
        row["crossgrad_max"] = float(np.max(np.abs(
            diagnostics.cross_gradient(f))))
    return row


# ---------------------------------------------------------------------------
# time loop
# ---------------------------------------------------------------------------

def run(cfg: ScenarioConfig, output_dir: str | None = None,
        progress: bool = False) -> RunResult:
    """Run a scenario to t_end; returns the ledger and the final state.

    With ``output_dir`` set, writes ``config.cfg`` (round-trippable),
    ``ledger.txt``, and ``snapshot_<step>.txt`` files at the snapshot
    cadence.  Identical configs produce bit-identical ledgers for any
    ``threads`` setting.
    """
    norm = cfg.normalization
    f, fields = build_scenario(cfg)
    g = f.grid
    limiter = cfg.limiter_choice
    if limiter.kind == "extrema":
        limiter = LimiterChoice("extrema", f_inf=float(np.max(f.values)))
    table = diagnostics.default_coefficient_table() \
        if cfg.scenario == "tempgrad" else None
    bc = cfg.bc
    ledger = _LedgerWriter(_scenario_columns(cfg))
    ledger.add(_ledger_row(0, f, fields, cfg, norm, table))

    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        save_config(cfg, os.path.join(output_dir, "config.cfg"))
        if cfg.snapshot_every:
            save_snapshot(f, os.path.join(output_dir, "snapshot_000000.txt"))

    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    step = 0
    try:
        while f.time < cfg.t_end - 1e-12:
            if cfg.dt_policy == "cfl":
                dt = cfl_dt(f, fields, g, cfg.order, cfg.cfl_safety)
            else:
                dt = cfg.dt
            dt = min(dt, cfg.t_end - f.time)
            try:
                J1, J2 = compute_current(f)
                if g.dim_x == 1:
                    new_fields = step_maxwell_1d(
                        fields, J1, J2, dt, g.dx[0], norm,
                        "periodic" if bc == "periodic" else "wall")
                else:
                    new_fields = step_maxwell_2d(fields, J1, J2, dt,
                                                 g.dx[0], g.dx[1], norm)
                half = FieldSet((fields.E1 + new_fields.E1) / 2,
                                (fields.E2 + new_fields.E2) / 2,
                                (fields.B3 + new_fields.B3) / 2, J1, J2)
                f = vlasov_step_transport(f, half, dt, cfg.order, limiter, bc)
                fields = new_fields
                _apply_collisions(f, dt, norm, cfg, pool)
            except (ValueError, RuntimeError) as exc:
                raise RuntimeError(
                    f"numerical abort at step {step + 1}, t = {f.time:.6g}: "
                    f"{exc}") from exc
            step += 1
            done = f.time >= cfg.t_end - 1e-12
            if step % cfg.output_every == 0 or done:
                ledger.add(_ledger_row(step, f, fields, cfg, norm, table))
            if output_dir and cfg.snapshot_every \
                    and step % cfg.snapshot_every == 0:
                save_snapshot(f, os.path.join(output_dir,
                                              f"snapshot_{step:06d}.txt"))
            if progress and step % 200 == 0:
                print(f"  step {step}  t = {f.time:.4g}", flush=True)
    finally:
        if pool is not None:
            pool.shutdown()

    if output_dir:
        with open(os.path.join(output_dir, "ledger.txt"), "w") as fh:
            fh.write(ledger.text())
    return RunResult(cfg, f, fields, ledger, step)
