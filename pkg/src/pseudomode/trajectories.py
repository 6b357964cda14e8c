"""Monte-Carlo wavefunction unraveling of a Lindblad model.

Pure-state trajectories follow the non-Hermitian drift between jumps; the
squared norm of the unnormalized state is the no-jump probability, so each
trajectory integrates until the norm crosses a uniform random threshold,
bisects the crossing time, collapses through a randomly selected channel and
continues. Every trajectory owns a counter-based random stream keyed by
(seed, trajectory index), which makes ensembles reproducible bit-for-bit no
matter how the work is scheduled.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from .dynamics import LindbladModel, TimeGrid
from .integrators import Dopri5, IntegratorConfig, fixed_step

_BLOCK = 128  # fixed accumulation block; independent of worker count
_JUMP_TIME_REL_TOL = 1e-10


class JumpDegeneracyError(RuntimeError):
    """A jump was triggered but every channel has zero weight."""


@dataclass(frozen=True)
class TrajectoryConfig:
    n_traj: int
    seed: int
    grid: TimeGrid
    dt_max: float = 0.5
    integrator: IntegratorConfig = field(
        default_factory=lambda: IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10)
    )

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError(f"need at least one trajectory, got {self.n_traj}")
        if self.dt_max <= 0.0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    times: np.ndarray
    states: np.ndarray  # (n_instants, dim), normalized
    jump_times: np.ndarray
    jump_channels: np.ndarray


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    times: np.ndarray
    n_traj: int
    mean_states: np.ndarray  # (n_instants, dim, dim)
    means: np.ndarray  # (n_observables, n_instants), complex
    stderrs: np.ndarray  # (n_observables, n_instants); nan when n_traj == 1
    jump_histogram: np.ndarray  # trajectory counts indexed by jump count


def _trajectory_rng(seed: int, traj_index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, traj_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _drift_matrix(model: LindbladModel) -> np.ndarray:
    g = -1j * model.H.mat.astype(complex)
    for rate, L in model.jumps:
        g = g - 0.5 * rate * (L.mat.conj().T @ L.mat)
    return g


def _select_channel(weights: np.ndarray, u: float) -> int:
    total = float(np.sum(weights))
    if not np.isfinite(total) or total <= 0.0:
        raise JumpDegeneracyError(
            f"all jump channels have zero or non-finite weight (total {total})"
        )
    edges = np.cumsum(weights) / total
    return int(np.searchsorted(edges, u, side="right").clip(max=len(weights) - 1))


def _locate_crossing(rhs, t_a: float, y_a: np.ndarray, h: float, threshold: float):
    """Bisect the time within (t_a, t_a + h] where |y|^2 falls to threshold."""
    k1 = rhs(y_a)
    lo, hi = 0.0, h
    tol = _JUMP_TIME_REL_TOL * max(abs(t_a + h), 1.0)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        y_mid = fixed_step(rhs, y_a, mid, k1=k1)
        if float(np.vdot(y_mid, y_mid).real) >= threshold:
            lo = mid
        else:
            hi = mid
    t_star = t_a + 0.5 * (lo + hi)
    y_star = fixed_step(rhs, y_a, 0.5 * (lo + hi), k1=k1)
    return t_star, y_star


def mcwf_run(
    model: LindbladModel,
    psi0: np.ndarray,
    cfg: TrajectoryConfig,
    traj_index: int = 0,
) -> TrajectoryResult:
    """One quantum-jump trajectory, fully determined by (cfg.seed, traj_index)."""
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    if psi0.shape[0] != model.dim:
        raise ValueError(f"state dim {psi0.shape[0]} != model dim {model.dim}")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")
    rng = _trajectory_rng(cfg.seed, traj_index)
    g = _drift_matrix(model)
    rhs = lambda y: g @ y  # noqa: E731
    rates = np.array([rate for rate, _ in model.jumps])
    l_mats = [L.mat for _, L in model.jumps]

    icfg = IntegratorConfig(
        rel_tol=cfg.integrator.rel_tol,
        abs_tol=cfg.integrator.abs_tol,
        max_step=min(cfg.dt_max, cfg.integrator.max_step),
        initial_step=min(cfg.integrator.initial_step, cfg.dt_max),
    )
    times = cfg.grid.times()
    n_times = len(times)
    out = np.empty((n_times, model.dim), dtype=complex)
    out[0] = psi0
    jump_times: list[float] = []
    jump_channels: list[int] = []

    threshold = rng.random()
    stepper = Dopri5(rhs, times[0], psi0, icfg)
    t_end = times[-1]
    i_next = 1
    while i_next < n_times:
        t_a, y_a = stepper.t, stepper.y
        stepper.step(t_end)
        norm_sq = float(np.vdot(stepper.y, stepper.y).real)
        if norm_sq < threshold:
            t_jump, y_jump = _locate_crossing(rhs, t_a, y_a, stepper.t - t_a, threshold)
            while i_next < n_times and times[i_next] <= t_jump:
                psi = stepper.interpolate(times[i_next])
                out[i_next] = psi / np.linalg.norm(psi)
                i_next += 1
            weights = np.array(
                [r * float(np.vdot(L @ y_jump, L @ y_jump).real)
                 for r, L in zip(rates, l_mats)]
            )
            channel = _select_channel(weights, rng.random())
            collapsed = l_mats[channel] @ y_jump
            collapsed = collapsed / np.linalg.norm(collapsed)
            jump_times.append(t_jump)
            jump_channels.append(channel)
            threshold = rng.random()
            h_guess = stepper.h
            stepper = Dopri5(rhs, t_jump, collapsed, icfg)
            stepper.h = min(h_guess, icfg.max_step)
            continue
        while i_next < n_times and times[i_next] <= stepper.t:
            psi = stepper.interpolate(times[i_next])
            out[i_next] = psi / np.linalg.norm(psi)
            i_next += 1
    return TrajectoryResult(
        times=times,
        states=out,
        jump_times=np.array(jump_times),
        jump_channels=np.array(jump_channels, dtype=int),
    )


def _accumulate_block(args):
    model, psi0, cfg, obs_mats, start, stop = args
    n_t = cfg.grid.n_points
    dim = model.dim
    rho_sum = np.zeros((n_t, dim, dim), dtype=complex)
    obs_sum = np.zeros((len(obs_mats), n_t), dtype=complex)
    obs_abs2_sum = np.zeros((len(obs_mats), n_t), dtype=float)
    jump_counts: dict[int, int] = {}
    for idx in range(start, stop):
        traj = mcwf_run(model, psi0, cfg, traj_index=idx)
        states = traj.states
        rho_sum += states[:, :, None] * states[:, None, :].conj()
        for j, a in enumerate(obs_mats):
            vals = np.einsum("ti,ij,tj->t", states.conj(), a, states)
            obs_sum[j] += vals
            obs_abs2_sum[j] += np.abs(vals) ** 2
        n_jumps = len(traj.jump_times)
        jump_counts[n_jumps] = jump_counts.get(n_jumps, 0) + 1
    max_jumps = max(jump_counts) if jump_counts else 0
    hist = np.zeros(max_jumps + 1, dtype=np.int64)
    for k, v in jump_counts.items():
        hist[k] = v
    return rho_sum, obs_sum, obs_abs2_sum, hist


def _worker_count(n_blocks: int) -> int:
    env = os.environ.get("PSEUDOMODE_NUM_THREADS")
    if env is not None:
        workers = int(env)
        if workers < 1:
            raise ValueError(f"PSEUDOMODE_NUM_THREADS must be >= 1, got {env}")
    else:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_blocks))


def ensemble_average(
    model: LindbladModel,
    psi0: np.ndarray,
    cfg: TrajectoryConfig,
    observables=(),
) -> EnsembleStats:
    """Trajectory-ensemble means with per-instant standard errors.

    Trajectories are accumulated in fixed blocks of 128 and the block sums
    are combined in index order, so the result is bit-identical for any
    worker count (set PSEUDOMODE_NUM_THREADS to cap parallelism).
    """
    obs_mats = [a.mat for a in observables]
    blocks = [
        (model, psi0, cfg, obs_mats, start, min(start + _BLOCK, cfg.n_traj))
        for start in range(0, cfg.n_traj, _BLOCK)
    ]
    workers = _worker_count(len(blocks))
    if workers == 1:
        partials = [_accumulate_block(b) for b in blocks]
    else:
        with Pool(processes=workers) as pool:
            partials = pool.map(_accumulate_block, blocks)

    n = cfg.n_traj
    n_t = cfg.grid.n_points
    rho_sum = np.zeros((n_t, model.dim, model.dim), dtype=complex)
    obs_sum = np.zeros((len(obs_mats), n_t), dtype=complex)
    obs_abs2_sum = np.zeros((len(obs_mats), n_t), dtype=float)
    max_hist = max(len(p[3]) for p in partials)
    hist = np.zeros(max_hist, dtype=np.int64)
    for rho_p, obs_p, abs2_p, hist_p in partials:
        rho_sum += rho_p
        obs_sum += obs_p
        obs_abs2_sum += abs2_p
        hist[: len(hist_p)] += hist_p

    means = obs_sum / n
    if n > 1:
        var = (obs_abs2_sum - n * np.abs(means) ** 2) / (n - 1)
        stderrs = np.sqrt(np.maximum(var, 0.0) / n)
    else:
        stderrs = np.full_like(obs_abs2_sum, np.nan)
    return EnsembleStats(
        times=cfg.grid.times(),
        n_traj=n,
        mean_states=rho_sum / n,
        means=means,
        stderrs=stderrs,
        jump_histogram=hist,
    )
