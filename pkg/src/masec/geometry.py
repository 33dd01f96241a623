"""Array and eavesdropper-region geometry.

Coordinates are 3-D Cartesian, in meters.  The transmit array sits near the
origin; each movable antenna is confined to an axis-aligned box and must keep
a minimum spacing from the previously indexed movable antenna (optionally from
every other movable antenna in strict mode).  The eavesdropper's unknown
location is a square patch on the ground, represented either by its bounding
elevation/azimuth angles as seen from the transmitter or by a finite set of
sampled "virtual" positions inside the patch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "InfeasibleRegionError",
    "MoveRegion",
    "EveRegion",
    "ArrayLayout",
    "position3",
    "theta_bounds",
    "phi_bounds",
    "eve_position_from_angles",
    "angles_of_position",
    "sample_virtual_eves",
    "grid_virtual_eves",
    "project_box",
    "project_min_distance",
    "project_move",
]

_EPS = 1e-12


class InfeasibleRegionError(ValueError):
    """Raised when a region or layout cannot satisfy its own constraints."""


def position3(x: float, y: float, z: float) -> np.ndarray:
    """A 3-D point as a float array; rejects non-finite coordinates."""
    p = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"position coordinates must be finite, got {p}")
    return p


@dataclass(frozen=True)
class MoveRegion:
    """Axis-aligned movement box for one antenna (min <= max per axis)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        lo, hi = self.lower(), self.upper()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("region bounds must be finite")
        if np.any(lo > hi):
            raise ValueError(f"region has min > max: {self}")

    @classmethod
    def point(cls, p: np.ndarray) -> "MoveRegion":
        """Degenerate box pinning an antenna at a fixed position."""
        x, y, z = (float(v) for v in p)
        return cls(x, x, y, y, z, z)

    def lower(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min, self.z_min])

    def upper(self) -> np.ndarray:
        return np.array([self.x_max, self.y_max, self.z_max])

    def contains(self, p: np.ndarray, atol: float = 1e-9) -> bool:
        return bool(np.all(p >= self.lower() - atol) and np.all(p <= self.upper() + atol))


@dataclass(frozen=True)
class EveRegion:
    """Square ground patch of side 2r centered at distance d from the
    transmitter, whose array is elevated by h above the patch plane."""

    d: float
    r: float
    h: float

    def __post_init__(self):
        if not (self.d > self.r > 0.0):
            raise InfeasibleRegionError(
                f"need center distance d > half-length r > 0, got d={self.d}, r={self.r}"
            )
        if not self.h > 0.0:
            raise InfeasibleRegionError(f"need array height h > 0, got h={self.h}")


def theta_bounds(region: EveRegion) -> tuple[float, float]:
    """Elevation-angle interval subtended by the patch's near/far edges.

    Returns (arctan(h/(d+r)), arctan(h/(d-r))); both lie in (0, pi/2).
    """
    lo = np.arctan(region.h / (region.d + region.r))
    hi = np.arctan(region.h / (region.d - region.r))
    return float(lo), float(hi)


def phi_bounds(region: EveRegion) -> tuple[float, float]:
    """Symmetric azimuth interval +-arcsin(r / sqrt((d-r)^2 + r^2))."""
    half = np.arcsin(region.r / np.hypot(region.d - region.r, region.r))
    return -float(half), float(half)


def eve_position_from_angles(region: EveRegion, theta: float, phi: float) -> np.ndarray:
    """Ground point seen under elevation theta and azimuth phi.

    The angles must lie inside the region's bounds; the result is
    [h*cos(phi)/tan(theta), h*sin(phi)/tan(theta), 0].
    """
    t_lo, t_hi = theta_bounds(region)
    p_lo, p_hi = phi_bounds(region)
    tol = 1e-9
    if not (t_lo - tol <= theta <= t_hi + tol):
        raise ValueError(f"theta={theta} outside [{t_lo}, {t_hi}]")
    if not (p_lo - tol <= phi <= p_hi + tol):
        raise ValueError(f"phi={phi} outside [{p_lo}, {p_hi}]")
    rho = region.h / np.tan(theta)
    return np.array([rho * np.cos(phi), rho * np.sin(phi), 0.0])


def angles_of_position(region: EveRegion, p: np.ndarray) -> tuple[float, float]:
    """Inverse of :func:`eve_position_from_angles` for ground points."""
    rho = np.hypot(p[0], p[1])
    return float(np.arctan(region.h / rho)), float(np.arctan2(p[1], p[0]))


def sample_virtual_eves(region: EveRegion, m: int, rng: np.random.Generator) -> np.ndarray:
    """m ground points drawn i.i.d. uniform over the square patch, shape (m, 3)."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    x = rng.uniform(region.d - region.r, region.d + region.r, size=m)
    y = rng.uniform(-region.r, region.r, size=m)
    return np.column_stack([x, y, np.zeros(m)])


def grid_virtual_eves(region: EveRegion, m: int) -> np.ndarray:
    """Deterministic sqrt(m) x sqrt(m) lattice of cell centers over the patch."""
    side = int(round(np.sqrt(m)))
    if side * side != m:
        raise ValueError(f"lattice size m={m} must be a perfect square")
    offs = (np.arange(side) + 0.5) / side  # cell centers in (0, 1)
    x = region.d - region.r + 2 * region.r * offs
    y = -region.r + 2 * region.r * offs
    gx, gy = np.meshgrid(x, y, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), np.zeros(m)])


def project_box(p: np.ndarray, region: MoveRegion) -> np.ndarray:
    """Per-axis clamp of p onto the box (the Euclidean box projection)."""
    return np.minimum(np.maximum(p, region.lower()), region.upper())


def project_min_distance(candidate: np.ndarray, anchor: np.ndarray, d_min: float) -> np.ndarray:
    """Push candidate out to distance d_min from anchor along their ray.

    Candidates already at distance >= d_min are returned unchanged.  A
    candidate coinciding with the anchor has no ray; it is displaced along +x.
    """
    delta = candidate - anchor
    dist = float(np.linalg.norm(delta))
    if dist >= d_min:
        return candidate
    if dist == 0.0:
        return anchor + np.array([d_min, 0.0, 0.0])
    return anchor + (d_min / dist) * delta


def project_move(
    candidate: np.ndarray,
    previous: np.ndarray,
    region: MoveRegion,
    anchor: np.ndarray | None,
    d_min: float,
) -> np.ndarray:
    """Full feasibility projection for one position update.

    Order: spacing projection toward the anchor if violated, then box clamp,
    then one spacing re-check; a candidate that still violates spacing after
    the clamp is rejected and ``previous`` (assumed feasible) is returned.
    """
    p = candidate
    if anchor is not None:
        p = project_min_distance(p, anchor, d_min)
    p = project_box(p, region)
    if anchor is not None and np.linalg.norm(p - anchor) < d_min - _EPS:
        return previous
    return p


@dataclass(frozen=True)
class ArrayLayout:
    """Positions, movement boxes, and spacing rule for the transmit array.

    ``movable_mask`` marks which antennas the optimizer may relocate; the
    spacing constraint ties each movable antenna to the movable antenna that
    precedes it in index order (``strict_spacing`` extends it to all movable
    pairs).
    """

    positions: np.ndarray  # (N, 3)
    regions: tuple[MoveRegion, ...]
    movable_mask: np.ndarray  # (N,) bool
    d_min: float
    strict_spacing: bool = False

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        mask = np.asarray(self.movable_mask, dtype=bool)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "movable_mask", mask)
        n = pos.shape[0]
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must be (N, 3), got {pos.shape}")
        if n < 2:
            raise InfeasibleRegionError(f"need at least 2 antennas, got {n}")
        if len(self.regions) != n or mask.shape != (n,):
            raise ValueError("positions, regions, and movable_mask lengths disagree")
        if not self.d_min > 0.0:
            raise InfeasibleRegionError(f"need d_min > 0, got {self.d_min}")
        for i in np.flatnonzero(mask):
            if not self.regions[i].contains(pos[i]):
                raise InfeasibleRegionError(f"antenna {i} at {pos[i]} outside its region")
        ok, bad = self.spacing_ok()
        if not ok:
            raise InfeasibleRegionError(f"antenna pair {bad} closer than d_min={self.d_min}")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def movable_indices(self) -> np.ndarray:
        return np.flatnonzero(self.movable_mask)

    def spacing_anchor(self, n: int) -> int | None:
        """Index of the movable antenna preceding antenna n, if any."""
        before = [int(i) for i in self.movable_indices() if i < n]
        return before[-1] if before else None

    def spacing_ok(self, atol: float = 1e-9) -> tuple[bool, tuple[int, int] | None]:
        """Check the active spacing rule; returns (ok, offending pair)."""
        idx = self.movable_indices()
        if self.strict_spacing:
            pairs = [(int(a), int(b)) for i, a in enumerate(idx) for b in idx[i + 1 :]]
        else:
            pairs = [(int(a), int(b)) for a, b in zip(idx[:-1], idx[1:])]
        for a, b in pairs:
            if np.linalg.norm(self.positions[a] - self.positions[b]) < self.d_min - atol:
                return False, (a, b)
        return True, None

    def feasible(self, atol: float = 1e-9) -> bool:
        inside = all(
            self.regions[i].contains(self.positions[i], atol) for i in self.movable_indices()
        )
        return inside and self.spacing_ok(atol)[0]

    def replace_position(self, n: int, p: np.ndarray) -> "ArrayLayout":
        pos = self.positions.copy()
        pos[n] = p
        return ArrayLayout(pos, self.regions, self.movable_mask.copy(), self.d_min, self.strict_spacing)
