"""Probing protocols: spectral-density recovery and the fidelity-based
quantum-non-Markovianity witness.

Two independent routes to the spectral density J(omega_S):

* analytic: term-by-term finite-time cosine transform of the damping kernel
  gamma(t) = sum_n (c_n^2 / Omega_n^2) cos(Omega_n t);
* probe: evolve probe + thermally populated environment to t_max, read the
  probe occupancy and invert
  J = (omega_S / t_max) ln[(N - n_0) / (N - n_S)], N = 1/(exp(omega_S/T)-1).

The damping-kernel plateau heuristic picks the interaction horizon t_max
before finite-size revivals set in.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace as dc_replace
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from . import gaussian as g
from .dynamics import QuadraticModel, assemble_model, evolve
from .gaussian import GaussianState, SqueezedSpec
from .netmodel import CouplingGraph

DEFAULT_TEMPERATURE = 1.0
DEFAULT_HORIZON = 600.0
DEFAULT_SMOOTH_WINDOW = 51  # centered window must be odd


class ProbeSaturatedError(ValueError):
    """Probe occupancy reached the bath occupancy; the excitation-gain
    inversion is undefined there."""


class PlateauError(ValueError):
    """No damping-kernel plateau found within the search horizon."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# damping kernel and t_max heuristic


def damping_kernel(model: QuadraticModel, t: float | NDArray) -> float | NDArray:
    """Memory kernel gamma(t) of the probe's reduced dynamics."""
    c = model.bath_couplings()
    om = model.env_freqs
    amp = c**2 / om**2
    tarr = np.atleast_1d(np.asarray(t, dtype=float))
    out = (amp[None, :] * np.cos(np.outer(tarr, om))).sum(axis=1)
    return float(out[0]) if np.isscalar(t) else out


def suggest_tmax(
    model: QuadraticModel,
    horizon: float = DEFAULT_HORIZON,
    theta: float = 0.05,
    window: float | None = None,
    plateau_factor: float = 1.15,
    floor_quantile: float = 0.10,
    dt: float = 0.05,
) -> float:
    """Earliest damping-kernel plateau time.

    The trailing-window running max of |gamma| is compared against a plateau
    level estimated from its own low quantile over the horizon (the
    statistical floor of the dephased kernel); the threshold never drops
    below theta * gamma(0). Default window: two periods of the slowest
    environment normal mode.

    Raises PlateauError when the envelope never flattens (e.g. a single
    environment mode) or never crosses the threshold within the horizon.
    """
    c = model.bath_couplings()
    amp = c**2 / model.env_freqs**2
    gamma0 = amp.sum()
    if gamma0 == 0.0:
        raise PlateauError("probe is uncoupled; damping kernel vanishes")
    if window is None:
        window = 2.0 * 2.0 * np.pi / model.env_freqs.min()
    ts = np.arange(0.0, horizon + dt, dt)
    gam = np.abs(damping_kernel(model, ts))
    w_n = max(int(round(window / dt)), 1)
    step = max(int(round(1.0 / dt)), 1)
    idx = np.arange(w_n, len(ts), step)
    if len(idx) == 0:
        raise PlateauError("search horizon shorter than the envelope window")
    env = np.array([gam[j - w_n : j + 1].max() for j in idx])
    floor = float(np.quantile(env, floor_quantile))
    if floor > 0.5 * gamma0:
        raise PlateauError(
            "damping kernel shows no plateau within the horizon; set t_max manually"
        )
    threshold = max(plateau_factor * floor, theta * gamma0)
    hits = np.flatnonzero(env <= threshold)
    if len(hits) == 0:
        raise PlateauError(
            "damping-kernel envelope never flattens below threshold; set t_max manually"
        )
    return float(ts[idx[hits[0]]])


# ---------------------------------------------------------------------------
# spectral density, analytic path


def spectral_density_analytic(
    model: QuadraticModel, omega_s: float | NDArray, t_max: float
) -> float | NDArray:
    """Finite-time cosine transform of the damping kernel.

    J = omega_S sum_n (c_n^2/Omega_n^2) [sin((W_n-w)T)/(2(W_n-w))
        + sin((W_n+w)T)/(2(W_n+w))], resonant terms -> T/2.
    """
    c = model.bath_couplings()
    om = model.env_freqs
    amp = c**2 / om**2
    w = np.atleast_1d(np.asarray(omega_s, dtype=float))
    dm = om[None, :] - w[:, None]
    dp = om[None, :] + w[:, None]
    small = np.abs(dm) < 1e-12
    dm_safe = np.where(small, 1.0, dm)
    t1 = np.where(small, t_max / 2.0, np.sin(dm_safe * t_max) / (2.0 * dm_safe))
    t2 = np.sin(dp * t_max) / (2.0 * dp)
    out = w * ((t1 + t2) * amp[None, :]).sum(axis=1)
    return float(out[0]) if np.isscalar(omega_s) else out


# ---------------------------------------------------------------------------
# environment preparation


def thermal_occupancy(omega: float | NDArray, temperature: float) -> float | NDArray:
    """Bose-Einstein occupancy N(omega) = 1/(exp(omega/T) - 1)."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    return 1.0 / np.expm1(np.asarray(omega) / temperature)


def thermal_environment(model: QuadraticModel, temperature: float) -> GaussianState:
    """Gibbs state of the environment block, node-renormalized frame.

    Each environment normal mode carries occupancy N(Omega_n); the covariance
    is rotated to node coordinates and rescaled by the bare node frequencies.
    """
    om = model.env_freqs
    occ = np.asarray(thermal_occupancy(om, temperature)) + 0.5
    O = model.env_modes
    w_nodes = model.frequencies[1:]
    mq = np.sqrt(w_nodes)[:, None] * O / np.sqrt(om)[None, :]
    mp = (1.0 / np.sqrt(w_nodes))[:, None] * O * np.sqrt(om)[None, :]
    n = len(om)
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = (mq * occ[None, :]) @ mq.T
    cov[n:, n:] = (mp * occ[None, :]) @ mp.T
    return GaussianState(np.zeros(2 * n), cov)


def squeezed_environment(model: QuadraticModel, temperature: float) -> GaussianState:
    """Squeezed-vacuum emulation of the thermal environment.

    Each environment normal mode is prepared as a pure squeezed vacuum with
    sinh^2 r_n matching the occupancy N(Omega_n) of the Gibbs state, squeezing
    axes alternating across modes (mirroring alternate-quadrature multimode
    squeezing sources). Occupancies match the thermal preparation exactly;
    only the phase-space anisotropy differs.
    """
    om = model.env_freqs
    nbar = np.asarray(thermal_occupancy(om, temperature))
    r = np.arcsinh(np.sqrt(nbar))
    sign = np.where(np.arange(len(om)) % 2 == 0, 1.0, -1.0)
    vq = 0.5 * np.exp(-2.0 * r * sign)
    vp = 0.5 * np.exp(+2.0 * r * sign)
    O = model.env_modes
    w_nodes = model.frequencies[1:]
    mq = np.sqrt(w_nodes)[:, None] * O / np.sqrt(om)[None, :]
    mp = (1.0 / np.sqrt(w_nodes))[:, None] * O * np.sqrt(om)[None, :]
    n = len(om)
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = (mq * vq[None, :]) @ mq.T
    cov[n:, n:] = (mp * vp[None, :]) @ mp.T
    return GaussianState(np.zeros(2 * n), cov)


def _initial_state(
    model: QuadraticModel,
    probe: GaussianState,
    temperature: float,
    env_prep: str,
) -> GaussianState:
    if env_prep == "thermal":
        env = thermal_environment(model, temperature)
    elif env_prep == "squeezed":
        env = squeezed_environment(model, temperature)
    elif env_prep == "vacuum":
        env = g.vacuum_state(model.n_modes - 1)
    else:
        raise ValueError(f"unknown environment preparation {env_prep!r}")
    return g.product_state(probe, env)


# ---------------------------------------------------------------------------
# spectral density, probe path


@dataclass(frozen=True)
class SamplingOptions:
    """Finite-statistics homodyne emulation: n_samples per quadrature,
    n_reps repetitions, deterministic seed."""

    n_samples: int
    n_reps: int = 20
    seed: int | None = 0


def _invert_excitation(
    omega_s: float, t_max: float, n_bath: float, n0: float, n_s: float
) -> float:
    # the log argument must stay positive: the probe occupancy may approach
    # the bath occupancy from the n0 side but not cross it
    if (n_bath - n0) * (n_bath - n_s) <= 0:
        raise ProbeSaturatedError(
            f"probe occupancy {n_s:.4g} reached bath occupancy {n_bath:.4g}; "
            "raise the temperature or shorten t_max"
        )
    return (omega_s / t_max) * np.log((n_bath - n0) / (n_bath - n_s))


def spectral_density_probe(
    model: QuadraticModel,
    t_max: float,
    temperature: float = DEFAULT_TEMPERATURE,
    probe_state: GaussianState | None = None,
    env_prep: str = "thermal",
    sampling: SamplingOptions | None = None,
) -> tuple[float, float | None]:
    """Recover J(omega_S) from the probe's excitation gain.

    The probe (default vacuum) and thermally populated environment evolve to
    t_max; the occupancy n_S is read from exact moments, or from homodyne
    samples of q_S and p_S when ``sampling`` is given. Returns (J, stderr)
    with stderr = standard error over repetitions (None without sampling).
    """
    omega_s = model.omega_s
    probe = probe_state if probe_state is not None else g.vacuum_state(1)
    n0 = g.mean_photon(probe)
    n_bath = float(thermal_occupancy(omega_s, temperature))
    state0 = _initial_state(model, probe, temperature, env_prep)
    final = g.propagate(state0, evolve(model, t_max))
    probe_final = g.reduce_state(final, 0)

    if sampling is None:
        n_s = g.mean_photon(probe_final)
        return _invert_excitation(omega_s, t_max, n_bath, n0, n_s), None

    if sampling.n_reps < 1:
        raise ValueError("need at least one repetition")
    seeds = np.random.SeedSequence(sampling.seed).spawn(2 * sampling.n_reps)
    js = []
    for rep in range(sampling.n_reps):
        q2, _ = g.estimate_second_moment(
            g.homodyne_sample(probe_final, "q", 0, sampling.n_samples, seeds[2 * rep])
        )
        p2, _ = g.estimate_second_moment(
            g.homodyne_sample(probe_final, "p", 0, sampling.n_samples, seeds[2 * rep + 1])
        )
        n_s = 0.5 * (q2 + p2 - 1.0)  # sampled second moments already include the means
        js.append(_invert_excitation(omega_s, t_max, n_bath, n0, n_s))
    js = np.asarray(js)
    if len(js) == 1:
        return float(js[0]), 0.0
    return float(js.mean()), float(js.std(ddof=1) / np.sqrt(len(js)))


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SpectralDensityCurve:
    """J(omega_S) over a frequency grid, by one or both recovery methods."""

    omega: NDArray[np.float64]
    method: str  # analytic | probe | both
    t_max: float
    temperature: float
    j_analytic: NDArray[np.float64] | None = None
    j_probe: NDArray[np.float64] | None = None
    stderr: NDArray[np.float64] | None = None

    def __post_init__(self):
        if np.any(np.diff(self.omega) <= 0):
            raise ValueError("frequency grid must be strictly increasing")

    def to_csv(self) -> str:
        cols = ["omega_s"]
        series = [self.omega]
        if self.j_analytic is not None:
            cols.append("J_analytic")
            series.append(self.j_analytic)
        if self.j_probe is not None:
            cols.append("J_probe")
            series.append(self.j_probe)
        if self.stderr is not None:
            cols.append("stderr")
            series.append(self.stderr)
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for row in zip(*series):
            buf.write(",".join(_fmt(x) for x in row) + "\n")
        return buf.getvalue()


def model_at(
    graph: CouplingGraph, omega_s: float, bilinear_env: bool = False
) -> QuadraticModel:
    """Assemble the model with the probe frequency replaced."""
    if graph.probe is None:
        raise ValueError("graph has no probe attached")
    return assemble_model(
        dc_replace(graph, probe=dc_replace(graph.probe, omega_s=omega_s)),
        bilinear_env=bilinear_env,
    )


def _probe_point(args) -> tuple[float, float | None]:
    graph, w, t_max, temperature, probe_state, env_prep, opt, bilinear = args
    return spectral_density_probe(
        model_at(graph, w, bilinear), t_max, temperature, probe_state, env_prep, opt
    )


def sweep_spectral_density(
    graph: CouplingGraph,
    omega_grid: Sequence[float],
    t_max: float,
    temperature: float = DEFAULT_TEMPERATURE,
    method: str = "analytic",
    probe_state: GaussianState | None = None,
    env_prep: str = "thermal",
    sampling: SamplingOptions | None = None,
    workers: int = 1,
    bilinear_env: bool = False,
) -> SpectralDensityCurve:
    """Evaluate the spectral density over a frequency grid.

    Every grid point is an independent computation; with sampling enabled,
    per-point seeds are derived from the master seed, so results do not
    depend on evaluation order or on ``workers``.
    """
    if method not in ("analytic", "probe", "both"):
        raise ValueError(f"unknown method {method!r}")
    omega_grid = np.asarray(list(omega_grid), dtype=float)
    ja = jp = se = None
    if method in ("analytic", "both"):
        # the kernel only involves the environment block: one model serves the grid
        ja = np.asarray(
            spectral_density_analytic(
                assemble_model(graph, bilinear_env=bilinear_env), omega_grid, t_max
            )
        )
    if method in ("probe", "both"):
        point_sampling: list[SamplingOptions | None]
        if sampling is not None:
            children = np.random.SeedSequence(sampling.seed).spawn(len(omega_grid))
            point_sampling = [
                dc_replace(sampling, seed=int(child.generate_state(1)[0]))
                for child in children
            ]
        else:
            point_sampling = [None] * len(omega_grid)
        tasks = [
            (graph, w, t_max, temperature, probe_state, env_prep, opt, bilinear_env)
            for w, opt in zip(omega_grid, point_sampling)
        ]
        if workers > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=workers) as pool:
                vals = list(pool.map(_probe_point, tasks, chunksize=8))
        else:
            vals = [_probe_point(t) for t in tasks]
        jp = np.array([v[0] for v in vals])
        if sampling is not None:
            se = np.array([v[1] for v in vals])
    return SpectralDensityCurve(
        omega=omega_grid,
        method=method,
        t_max=t_max,
        temperature=temperature,
        j_analytic=ja,
        j_probe=jp,
        stderr=se,
    )


# ---------------------------------------------------------------------------
# quantum non-Markovianity


def moving_average(values: NDArray[np.float64], window: int) -> NDArray[np.float64]:
    """Centered moving average with windows shrinking at the edges."""
    if window < 1 or window % 2 == 0:
        raise ValueError("smoothing window must be odd and positive")
    v = np.asarray(values, dtype=float)
    half = window // 2
    out = np.empty_like(v)
    n = len(v)
    for i in range(n):
        a = min(half, i, n - 1 - i)
        out[i] = v[i - a : i + a + 1].mean()
    return out


@dataclass(frozen=True)
class FidelityTrace:
    """Probe-state fidelity versus interaction time."""

    t: NDArray[np.float64]
    f_raw: NDArray[np.float64]
    f_smooth: NDArray[np.float64]
    window: int
    rho1: SqueezedSpec
    rho2: SqueezedSpec
    omega_s: float

    def __post_init__(self):
        if np.any(self.f_raw <= 0) or np.any(self.f_raw > 1.0 + 1e-9):
            raise ValueError("fidelity values must lie in (0, 1]")
        if self.window % 2 == 0:
            raise ValueError("smoothing window must be odd")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,F_raw,F_smooth\n")
        for row in zip(self.t, self.f_raw, self.f_smooth):
            buf.write(",".join(_fmt(x) for x in row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True)
class WitnessReport:
    """Total fidelity back-flow and its contributing time intervals."""

    value: float
    intervals: tuple[tuple[float, float, float], ...]
    smoothed: bool
    omega_s: float

    def to_text(self) -> str:
        lines = [
            f"omega_s = {_fmt(self.omega_s)}",
            f"N = {_fmt(self.value)}",
            f"smoothed = {str(self.smoothed).lower()}",
            "intervals (t_start, t_end, contribution):",
        ]
        for a, b, dv in self.intervals:
            lines.append(f"  {_fmt(a)}, {_fmt(b)}, {_fmt(dv)}")
        return "\n".join(lines) + "\n"


def qnm_trace(
    model: QuadraticModel,
    rho1: SqueezedSpec,
    rho2: SqueezedSpec,
    t_grid: Sequence[float],
    window: int = DEFAULT_SMOOTH_WINDOW,
) -> FidelityTrace:
    """Fidelity between two probe preparations evolving in a vacuum network.

    For each time, both initial probe states (environment in vacuum) are
    propagated with the same renormalized evolution, reduced to the probe,
    and compared via the Gaussian fidelity.
    """
    t_grid = np.asarray(list(t_grid), dtype=float)
    if len(t_grid) < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing with >= 2 points")
    n_env = model.n_modes - 1
    states0 = [
        g.product_state(g.squeezed_state(spec), g.vacuum_state(n_env))
        for spec in (rho1, rho2)
    ]
    fs = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        S = evolve(model, t)
        pair = [g.reduce_state(g.propagate(s0, S), 0) for s0 in states0]
        fs[i] = g.fidelity(pair[0], pair[1])
    return FidelityTrace(
        t=t_grid,
        f_raw=fs,
        f_smooth=moving_average(fs, window),
        window=window,
        rho1=rho1,
        rho2=rho2,
        omega_s=model.omega_s,
    )


def blp_witness(trace: FidelityTrace, use_smoothed: bool = True) -> WitnessReport:
    """Total fidelity decrease of the trace (discrete BLP back-flow measure).

    N = sum_i max(0, F(t_i) - F(t_i+1)); contributing intervals are maximal
    runs of consecutive decreases. The maximization over state pairs is the
    caller's: fix the pair to orthogonally squeezed states for the standard
    witness.
    """
    series = trace.f_smooth if use_smoothed else trace.f_raw
    if len(series) < 2:
        raise ValueError("trace must have at least two points")
    diffs = np.diff(series)
    total = float(-diffs[diffs < 0].sum())
    intervals = []
    start = None
    acc = 0.0
    for i, d in enumerate(diffs):
        if d < 0:
            if start is None:
                start = trace.t[i]
                acc = 0.0
            acc += -d
        elif start is not None:
            intervals.append((float(start), float(trace.t[i]), float(acc)))
            start = None
    if start is not None:
        intervals.append((float(start), float(trace.t[-1]), float(acc)))
    return WitnessReport(
        value=total, intervals=tuple(intervals), smoothed=use_smoothed, omega_s=trace.omega_s
    )
