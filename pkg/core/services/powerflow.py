"""
Branch flow (exact) and linearized DistFlow power flow on radial grids.

Units are per unit everywhere and `v` always denotes SQUARED voltage magnitude.
Injections follow the net-injection sign convention: consumption is negative p.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional

import numpy as np

from core.domain.entities.grid_entity import RadialGrid
from core.domain.entities.powerflow_entity import InjectionProfile, PowerFlowState, VoltageSeries
from core.domain.enums.powerflow_enums import FlowModel
from core.services.exceptions import DimensionMismatch, NoConvergence, NonPositiveVoltage, PowerFlowError
from core.services.grid_model import path_matrix, sensitivity_matrices

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200

# synthetic profile shape
SLOTS_PER_DAY = 24
AR_COEF = 0.9


def _as_vector(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape[0] != n:
        raise DimensionMismatch(name, n, arr.shape[0])
    return arr


def branch_flow_residuals(
    grid: RadialGrid,
    state: PowerFlowState,
    p,
    q,
    v0: float = 1.0,
) -> Dict[str, np.ndarray]:
    """
    Absolute residuals of the three branch flow equations, one entry per line:

    power:   s_n - (sum_{i in C_n} S_i - S_n + ell_n z_n)
    voltage: v_n - (v_pi - 2 Re[z_n^* S_n] + ell_n |z_n|^2)
    current: |S_n|^2 - v_pi ell_n
    """
    n = grid.n_buses
    s = _as_vector(p, n, "p") + 1j * _as_vector(q, n, "q")
    z = grid.z
    S, v, ell = state.S, state.v, state.ell
    v_parent = np.concatenate(([v0], v))[grid.parents]

    child_sum = np.zeros(n + 1, dtype=complex)
    np.add.at(child_sum, grid.parents, S)

    power = np.abs(s - (child_sum[1:] - S + ell * z))
    voltage = np.abs(v - (v_parent - 2.0 * np.real(np.conj(z) * S) + ell * np.abs(z) ** 2))
    current = np.abs(np.abs(S) ** 2 - v_parent * ell)
    return {"power": power, "voltage": voltage, "current": current}


def _max_residual(residuals: Dict[str, np.ndarray]) -> float:
    return float(max(np.max(r) for r in residuals.values()))


def solve_exact(
    grid: RadialGrid,
    p,
    q,
    v0: float = 1.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    path: Optional[np.ndarray] = None,
) -> PowerFlowState:
    """
    Backward/forward sweep for the branch flow model, flat start v = v0.

    Backward: S = P^T (-s + z * ell), ell = |S|^2 / v_pi (subtree aggregation).
    Forward:  v = v0 + P (-2 Re[z^* S] + ell |z|^2) (root path accumulation).
    Stops when both the max change in v and the max residual are <= tol.

    `path` is the root-path matrix; pass it when solving many slots on the same grid.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")

    n = grid.n_buses
    P = path_matrix(grid) if path is None else path
    s = _as_vector(p, n, "p") + 1j * _as_vector(q, n, "q")
    z = grid.z
    z_abs2 = np.abs(z) ** 2
    parents = grid.parents

    v = np.full(n, float(v0))
    ell = np.zeros(n)
    residual = np.inf

    for it in range(1, max_iter + 1):
        S = P.T @ (-s + z * ell)
        v_parent = np.concatenate(([v0], v))[parents]
        ell = np.abs(S) ** 2 / v_parent
        v_new = v0 + P @ (-2.0 * np.real(np.conj(z) * S) + ell * z_abs2)

        if not np.all(np.isfinite(v_new)):
            raise NoConvergence(it, float("inf"))
        low = int(np.argmin(v_new))
        if v_new[low] <= 0:
            raise NonPositiveVoltage(low + 1, float(v_new[low]))

        change = float(np.max(np.abs(v_new - v)))
        v = v_new
        state = PowerFlowState(v=v, S=S, ell=ell, iterations=it)
        residual = _max_residual(branch_flow_residuals(grid, state, s.real, s.imag, v0))
        if change <= tol and residual <= tol:
            return state

    raise NoConvergence(max_iter, residual)


def solve_linear(grid: RadialGrid, p, q, v0: float = 1.0) -> np.ndarray:
    """
    Linearized DistFlow: v = 2 R p + 2 X q + v0 1.
    """
    n = grid.n_buses
    R, X = sensitivity_matrices(grid)
    return 2.0 * R @ _as_vector(p, n, "p") + 2.0 * X @ _as_vector(q, n, "q") + v0


def simulate_series(
    grid: RadialGrid,
    profile: InjectionProfile,
    model: FlowModel = FlowModel.EXACT,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    jobs: int = 1,
) -> VoltageSeries:
    """
    Solve every time slot of an injection profile; row t of the result is slot t.
    Time slots are independent, so `jobs > 1` maps them over a thread pool.
    """
    if profile.n_buses != grid.n_buses:
        raise DimensionMismatch("profile buses", grid.n_buses, profile.n_buses)

    v0 = profile.v0
    if FlowModel(model) == FlowModel.LINEAR:
        R, X = sensitivity_matrices(grid)
        V = 2.0 * profile.p @ R + 2.0 * profile.q @ X + v0
        low = np.unravel_index(int(np.argmin(V)), V.shape)
        if V[low] <= 0:
            raise NonPositiveVoltage(int(low[1]) + 1, float(V[low]), t=int(low[0]))
        return VoltageSeries(V=V, timestamps=np.arange(profile.n_slots))

    P = path_matrix(grid)

    def _slot(t: int) -> np.ndarray:
        try:
            return solve_exact(grid, profile.p[t], profile.q[t], v0, tol, max_iter, path=P).v
        except PowerFlowError as exc:
            raise exc.at_time(t) from None

    slots = range(profile.n_slots)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_slot, slots))
    else:
        rows = [_slot(t) for t in slots]

    V = np.vstack(rows)
    logger.info("Simulated %d slots on N=%d (model=%s)", profile.n_slots, grid.n_buses, model)
    return VoltageSeries(V=V, timestamps=np.arange(profile.n_slots))


def add_measurement_noise(series: VoltageSeries, std: float, seed: int) -> VoltageSeries:
    """
    Additive zero-mean Gaussian noise on v; std = 0 returns the series unchanged.
    """
    if std < 0:
        raise ValueError("noise std must be >= 0")
    if std == 0:
        return series
    rng = np.random.default_rng(seed)
    noisy = series.V + rng.normal(0.0, std, size=series.V.shape)
    return VoltageSeries(V=noisy, timestamps=series.timestamps)


def _ar1(rng: np.random.Generator, n_slots: int, n_cols: int, coef: float = AR_COEF) -> np.ndarray:
    # unit stationary variance
    e = rng.standard_normal((n_slots, n_cols))
    out = np.empty_like(e)
    out[0] = e[0]
    scale = np.sqrt(1.0 - coef**2)
    for t in range(1, n_slots):
        out[t] = coef * out[t - 1] + scale * e[t]
    return out


def synth_profiles(
    grid: RadialGrid,
    T: int,
    seed: int,
    base_load: float = 0.005,
    volatility: float = 0.3,
    solar_fraction: float = 0.3,
    v0: float = 1.0,
) -> InjectionProfile:
    """
    Reproducible load / solar injection profiles.

    load(t) = base * (1 + volatility * (0.5 * diurnal(t) + AR1(t)))
    gen(t)  = 2 * base * (1 + volatility * (irradiance(t) + 0.5 * AR1(t)))  on solar buses
    Both are clipped at 0; q follows the load with a per-bus power factor in [0.9, 0.98].
    volatility = 0 yields constant rows.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if volatility < 0:
        raise ValueError("volatility must be >= 0")
    if not 0.0 <= solar_fraction <= 1.0:
        raise ValueError("solar_fraction must be in [0, 1]")

    n = grid.n_buses
    rng = np.random.default_rng(seed)

    base = base_load * rng.uniform(0.25, 1.75, n)
    power_factor = rng.uniform(0.9, 0.98, n)
    tan_phi = np.sqrt(1.0 / power_factor**2 - 1.0)

    hour = np.arange(T) % SLOTS_PER_DAY
    diurnal = -np.cos(2.0 * np.pi * hour / SLOTS_PER_DAY)
    irradiance = np.sin(2.0 * np.pi * (hour - 6) / SLOTS_PER_DAY)

    load = base * np.clip(1.0 + volatility * (0.5 * diurnal[:, None] + _ar1(rng, T, n)), 0.0, None)

    n_solar = int(round(solar_fraction * n))
    solar_buses = rng.choice(n, size=n_solar, replace=False)
    gen = np.zeros((T, n))
    if n_solar:
        cloud = 0.5 * _ar1(rng, T, n_solar)
        gen[:, solar_buses] = 2.0 * base[solar_buses] * np.clip(
            1.0 + volatility * (irradiance[:, None] + cloud), 0.0, None
        )

    p = gen - load
    q = -load * tan_phi
    logger.info("Synthesized profiles T=%d N=%d seed=%d solar_buses=%d", T, n, seed, n_solar)
    return InjectionProfile(p=p, q=q, v0=v0)
