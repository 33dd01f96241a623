"""SINRs, achievable rates, and the worst-user secrecy objective.

Rates are log2(1 + SINR) in bits/s/Hz.  A user's secrecy rate is its own rate
minus the best rate any virtual-Eve position achieves against it, floored at
zero.  The optimizer works on the unfloored difference for one fixed
(worst user, best Eve) pair, selected by exhaustive enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Beamformer",
    "SecrecyReport",
    "sinr_bob",
    "sinr_eve",
    "secrecy_report",
    "objective_value",
    "worst_user_secrecy",
]

POWER_TOL = 1e-9


@dataclass(frozen=True)
class Beamformer:
    """N x K beamforming matrix (column k serves user k) with a total power cap."""

    w: np.ndarray  # (N, K) complex
    p_max: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        object.__setattr__(self, "w", w)
        if w.ndim != 2:
            raise ValueError(f"beamformer must be a matrix, got shape {w.shape}")
        if not self.p_max > 0:
            raise ValueError(f"need p_max > 0, got {self.p_max}")
        if self.total_power() > self.p_max + POWER_TOL:
            raise ValueError(
                f"power {self.total_power():.6g} exceeds budget {self.p_max:.6g}"
            )

    def total_power(self) -> float:
        """trace(W W^H) = sum of squared column norms."""
        return float(np.sum(np.abs(self.w) ** 2))

    @property
    def num_users(self) -> int:
        return self.w.shape[1]

    def with_column(self, k: int, w_k: np.ndarray) -> "Beamformer":
        w = self.w.copy()
        w[:, k] = w_k
        return Beamformer(w, self.p_max)


def _received_powers(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    """|h^H w_k|^2 for every column k."""
    return np.abs(np.conj(h) @ w) ** 2


def sinr_bob(ch, W: Beamformer, k: int, noise: float) -> float:
    """Signal-to-interference-plus-noise ratio of user k."""
    if not noise > 0:
        raise ValueError(f"need noise > 0, got {noise}")
    p = _received_powers(ch.h_bob[k], W.w)
    return float(p[k] / (np.sum(p) - p[k] + noise))


def sinr_eve(ch, W: Beamformer, m: int, k: int, noise: float) -> float:
    """SINR of virtual-Eve position m when decoding user k's stream."""
    if not noise > 0:
        raise ValueError(f"need noise > 0, got {noise}")
    p = _received_powers(ch.h_eve[m], W.w)
    return float(p[k] / (np.sum(p) - p[k] + noise))


@dataclass(frozen=True)
class SecrecyReport:
    """Per-user rates, per-(Eve, user) rates, and the worst-case selection."""

    rate_bob: np.ndarray  # (K,)
    rate_eve: np.ndarray  # (M, K)
    secrecy: np.ndarray  # (K,) floored at zero
    worst_k: int
    best_m: int

    @property
    def worst_secrecy(self) -> float:
        return float(self.secrecy[self.worst_k])


def secrecy_report(ch, W: Beamformer, noise: float) -> SecrecyReport:
    """Rates for all (user, Eve) pairs plus the exhaustive worst/best selection.

    worst_k minimizes the floored secrecy rate over users, best_m maximizes
    the Eve rate against that user; ties break to the lowest index.
    """
    k_count = ch.h_bob.shape[0]
    m_count = ch.h_eve.shape[0]
    rate_bob = np.empty(k_count)
    rate_eve = np.empty((m_count, k_count))
    for k in range(k_count):
        rate_bob[k] = np.log2(1.0 + sinr_bob(ch, W, k, noise))
    for m in range(m_count):
        for k in range(k_count):
            rate_eve[m, k] = np.log2(1.0 + sinr_eve(ch, W, m, k, noise))
    secrecy = np.maximum(rate_bob - rate_eve.max(axis=0), 0.0)
    worst_k = int(np.argmin(secrecy))
    best_m = int(np.argmax(rate_eve[:, worst_k]))
    return SecrecyReport(rate_bob, rate_eve, secrecy, worst_k, best_m)


def worst_user_secrecy(ch, W: Beamformer, noise: float) -> float:
    """min_k [R_bob_k - max_m R_eve_{m,k}]^+, the quantity being maximized."""
    return secrecy_report(ch, W, noise).worst_secrecy


def objective_value(ch, W: Beamformer, noise: float, k: int, m: int) -> float:
    """Unfloored rate difference for a fixed (user k, Eve position m) pair.

    May be negative: zeroing user k's beam always restores nonnegativity, so
    dropping the floor does not change the optimum.
    """
    rb = np.log2(1.0 + sinr_bob(ch, W, k, noise))
    re = np.log2(1.0 + sinr_eve(ch, W, m, k, noise))
    return float(rb - re)
