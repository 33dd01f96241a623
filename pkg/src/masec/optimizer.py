"""Joint beamforming and antenna-position optimization.

The solver alternates two projected-gradient-ascent stages for a fixed
worst-user / best-Eve pair: an AdaGrad ascent on the worst user's beam column
projected back onto the total-power ball, and a per-antenna AdaGrad ascent on
each movable position projected onto its box and spacing constraints.  A
simulated-annealing outer loop re-selects the pair each iteration, accepts
improvements always and regressions with probability exp(dR/T), cools the
temperature geometrically, and tracks the best accepted solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelWorkspace
from .geometry import ArrayLayout, project_move
from .gradients import grad_t_batch, grad_w_batch
from .metrics import POWER_TOL, Beamformer, secrecy_report

__all__ = [
    "AdaGradState",
    "SaPgaConfig",
    "Solution",
    "SaState",
    "TraceRecord",
    "PgaWStats",
    "init_beamformer",
    "metropolis_accept",
    "pga_w",
    "pga_t",
    "sa_pga",
]


@dataclass
class AdaGradState:
    """Per-coordinate squared-gradient accumulator with base step delta.

    The effective step delta/sqrt(acc + eps) never increases for any
    coordinate.
    """

    acc: np.ndarray
    delta: float
    eps: float = 1e-8

    def update(self, grad: np.ndarray) -> np.ndarray:
        """Accumulate grad**2 and return the per-coordinate step sizes."""
        self.acc += grad * grad
        return self.delta / np.sqrt(self.acc + self.eps)


@dataclass(frozen=True)
class SaPgaConfig:
    """Tunables shared by the two PGA stages and the annealing loop."""

    delta_w: float = 0.01
    delta_t: float = 0.001
    tau_w: float = 0.005
    tau_t: float = 0.0001
    i_ter: int = 1000
    m_w: int = 10
    m_t: int = 10
    inner_iter_w: int | None = None  # caps for the PGA loops; default i_ter
    inner_iter_t: int | None = None
    t0: float = 1.0
    beta: float = 0.9
    greedy: bool = False  # never accept worse solutions (same as t0 = 0)
    eps: float = 1e-8

    def cap_w(self) -> int:
        return self.inner_iter_w if self.inner_iter_w is not None else self.i_ter

    def cap_t(self) -> int:
        return self.inner_iter_t if self.inner_iter_t is not None else self.i_ter


@dataclass(frozen=True)
class Solution:
    """One feasible (layout, beamformer) pair and its worst-user secrecy rate."""

    layout: ArrayLayout
    W: Beamformer
    secrecy: float
    worst_k: int
    best_m: int


@dataclass
class SaState:
    """Annealing bookkeeping: temperature, cooling factor, and best/previous."""

    temperature: float
    cooling: float
    iteration: int
    best: Solution
    previous: Solution


@dataclass(frozen=True)
class TraceRecord:
    """One outer iteration of the annealed search."""

    iteration: int
    objective: float
    accepted: bool
    temperature: float
    power: float
    proj_fired: bool
    proj_power_err: float
    feasible: bool


@dataclass
class PgaWStats:
    iterations: int = 0
    proj_fired: bool = False
    max_proj_power_err: float = 0.0


def init_beamformer(ch, p_max: float) -> Beamformer:
    """Per-user matched beams with an equal power split.

    Column k points along Bob k's channel with squared norm p_max/K, so the
    total power is exactly p_max.  A zero channel falls back to a uniform
    vector.
    """
    h = ch.h_bob
    num_users, num_antennas = h.shape
    w = np.empty((num_antennas, num_users), dtype=complex)
    col_amp = np.sqrt(p_max / num_users)
    for k in range(num_users):
        norm = np.linalg.norm(h[k])
        if norm > 0.0:
            w[:, k] = col_amp * h[k] / norm
        else:
            w[:, k] = col_amp * np.ones(num_antennas) / np.sqrt(num_antennas)
    return Beamformer(w, p_max)


def metropolis_accept(r_new: float, r_prev: float, temp: float, rng: np.random.Generator) -> bool:
    """Accept improvements always, regressions with probability exp(dR/temp).

    temp <= 0 degenerates to a pure hill-climb (never accept worse).
    """
    if r_new > r_prev:
        return True
    if temp <= 0.0:
        return False
    return bool(rng.random() < np.exp((r_new - r_prev) / temp))


def pga_w(
    ws: ChannelWorkspace,
    W: Beamformer,
    k: int,
    m: int,
    noise: float,
    cfg: SaPgaConfig,
    sampler,
) -> tuple[Beamformer, PgaWStats]:
    """Projected gradient ascent on beam column k with the pair (k, m) fixed.

    Each iteration averages the gradient over cfg.m_w gain draws from
    ``sampler``, takes an AdaGrad step, and rescales the column whenever the
    update would push the total power above the budget, landing exactly on it.
    Stops once the post-projection move is below tau_w, the iteration cap is
    hit, or the gradient turns non-finite (the last feasible iterate is
    returned).  Only column k changes.
    """
    w = W.w.copy()
    num_antennas = w.shape[0]
    p_max = W.p_max
    p_other = float(np.sum(np.abs(w) ** 2) - np.sum(np.abs(w[:, k]) ** 2))
    ada = AdaGradState(np.zeros(2 * num_antennas), cfg.delta_w, cfg.eps)
    stats = PgaWStats()
    for _ in range(cfg.cap_w()):
        bob_sig, eve_sig = sampler.draw_batch(cfg.m_w)
        h_b = ws.h_bob_batch(k, bob_sig[:, k, :])
        h_e = ws.h_eve_batch(m, eve_sig)
        g = grad_w_batch(h_b, h_e, w, k, noise).mean(axis=0)
        if not np.all(np.isfinite(g)):
            break
        stats.iterations += 1
        step = ada.update(np.concatenate([g.real, g.imag]))
        new_col = w[:, k] + step[:num_antennas] * g.real + 1j * step[num_antennas:] * g.imag
        col_power = float(np.sum(np.abs(new_col) ** 2))
        if p_other + col_power > p_max and col_power > 0.0:
            new_col *= np.sqrt(max(p_max - p_other, 0.0) / col_power)
            stats.proj_fired = True
            err = abs(p_other + np.sum(np.abs(new_col) ** 2) - p_max)
            stats.max_proj_power_err = max(stats.max_proj_power_err, float(err))
        move = float(np.linalg.norm(new_col - w[:, k]))
        w[:, k] = new_col
        if move < cfg.tau_w:
            break
    return Beamformer(w, p_max), stats


def pga_t(
    ws: ChannelWorkspace,
    layout: ArrayLayout,
    W: Beamformer,
    k: int,
    m: int,
    noise: float,
    cfg: SaPgaConfig,
    sampler,
) -> ArrayLayout:
    """Per-antenna projected gradient ascent over the movable positions.

    Antennas are visited in index order; each runs its own AdaGrad loop with
    gradients averaged over cfg.m_t gain draws.  Every candidate goes through
    the spacing-then-box projection sequence against the preceding movable
    antenna's current position; a candidate that cannot be made feasible is
    rejected in favor of the current position.  The workspace is left at the
    returned layout.
    """
    if not np.array_equal(ws.positions, layout.positions):
        raise ValueError("workspace and layout positions disagree")
    movable = [int(i) for i in layout.movable_indices()]
    for idx, n in enumerate(movable):
        region = layout.regions[n]
        anchor_idx = movable[idx - 1] if idx > 0 else None
        ada = AdaGradState(np.zeros(3), cfg.delta_t, cfg.eps)
        for _ in range(cfg.cap_t()):
            bob_sig, eve_sig = sampler.draw_batch(cfg.m_t)
            h_b = ws.h_bob_batch(k, bob_sig[:, k, :])
            h_e = ws.h_eve_batch(m, eve_sig)
            jac_b = ws.jac_bob_batch(k, n, bob_sig[:, k, :])
            jac_e = ws.jac_eve_batch(m, n, eve_sig)
            g = grad_t_batch(h_b, h_e, jac_b, jac_e, W.w, n, k, noise).mean(axis=0)
            if not np.all(np.isfinite(g)):
                break
            current = ws.positions[n]
            candidate = current + ada.update(g) * g
            anchor = ws.positions[anchor_idx] if anchor_idx is not None else None
            new_pos = project_move(candidate, current, region, anchor, layout.d_min)
            move = float(np.linalg.norm(new_pos - current))
            ws.move_antenna(n, new_pos)
            if move < cfg.tau_t:
                break
    return ArrayLayout(
        ws.positions.copy(), layout.regions, layout.movable_mask.copy(), layout.d_min, layout.strict_spacing
    )


def _restore_positions(ws: ChannelWorkspace, layout: ArrayLayout):
    for n in layout.movable_indices():
        if not np.array_equal(ws.positions[n], layout.positions[n]):
            ws.move_antenna(int(n), layout.positions[n])


def sa_pga(scenario, rng: np.random.Generator, cfg: SaPgaConfig) -> tuple[Solution, list[TraceRecord], SaState]:
    """Simulated-annealing outer loop over the two PGA stages.

    Runs exactly cfg.i_ter iterations.  Each iteration re-selects the worst
    user and best Eve position on the incumbent, improves the beam column and
    the movable positions, and feeds the resulting worst-user secrecy rate to
    the Metropolis rule; rejected proposals revert both variables.  Returns
    the best accepted solution, the full per-iteration trace, and the final
    annealing state.
    """
    rng_gains, rng_accept = rng.spawn(2)
    sampler = scenario.gain_sampler(rng_gains)
    noise = scenario.noise
    prev = scenario.initial
    ws = scenario.workspace()
    _restore_positions(ws, prev.layout)
    best = prev
    state = SaState(cfg.t0, cfg.beta, 0, best, prev)
    trace: list[TraceRecord] = []
    for it in range(cfg.i_ter):
        rep = secrecy_report(ws, prev.W, noise)
        k, m = rep.worst_k, rep.best_m
        w_op, wstats = pga_w(ws, prev.W, k, m, noise, cfg, sampler)
        layout_op = pga_t(ws, prev.layout, w_op, k, m, noise, cfg, sampler)
        r_op = secrecy_report(ws, w_op, noise).worst_secrecy
        temp = 0.0 if cfg.greedy else state.temperature
        accepted = metropolis_accept(r_op, prev.secrecy, temp, rng_accept)
        if accepted:
            prev = Solution(layout_op, w_op, r_op, k, m)
            if r_op > best.secrecy:
                best = prev
        else:
            _restore_positions(ws, prev.layout)
        trace.append(
            TraceRecord(
                iteration=it,
                objective=r_op,
                accepted=accepted,
                temperature=state.temperature,
                power=w_op.total_power(),
                proj_fired=wstats.proj_fired,
                proj_power_err=wstats.max_proj_power_err,
                feasible=layout_op.feasible() and w_op.total_power() <= w_op.p_max + POWER_TOL,
            )
        )
        state.temperature *= cfg.beta
        state.iteration = it + 1
        state.best, state.previous = best, prev
    return best, trace, state
