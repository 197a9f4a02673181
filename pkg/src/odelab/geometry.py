"""Tube coverings, grid packings and separated binary codebooks."""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from . import flow as flow_mod
from .flow import Trajectory

__all__ = [
    "EmptyTube",
    "RadiusTooLarge",
    "SearchFailed",
    "TubeSpec",
    "CoverReport",
    "point_tube_distance",
    "tube_distance",
    "tube_cover_check",
    "packing_number",
    "varshamov_gilbert",
]


class EmptyTube(Exception):
    """Trajectory has no usable (moving) nodes to define tube slices."""


class RadiusTooLarge(Exception):
    """Packing radius at least as large as the region's shortest side."""


class SearchFailed(Exception):
    """Codebook search exhausted its budget without reaching the target."""


@dataclass(frozen=True)
class TubeSpec:
    trajectory: Trajectory
    radius: float


@dataclass
class CoverReport:
    passed: bool
    worst_point: np.ndarray
    worst_distance: float
    threshold: float
    n_samples: int


def _as_region(region) -> np.ndarray:
    reg = np.asarray(region, dtype=float)
    if reg.ndim != 2 or reg.shape[1] != 2 or np.any(reg[:, 1] <= reg[:, 0]):
        raise ValueError("region must be [(lo, hi), ...] with hi > lo")
    return reg


def _dense_slices(tube: TubeSpec, dense: int):
    """(states, unit velocities, axial gap) on a refined time grid.

    The axial gap is the largest arc length between adjacent slices --
    the resolution floor for any distance computed from the slices.
    Stalled slices (speed below 1e-10 of the max) are skipped.
    """
    traj = tube.trajectory
    ts = traj.ts
    t_dense = np.union1d(ts, np.linspace(ts[0], ts[-1], dense))
    states = np.array([flow_mod.flow_at(traj, float(t)) for t in t_dense])
    # velocities: linear interpolation of the stored node derivatives
    derivs = np.stack(
        [np.interp(t_dense, ts, traj.derivs[:, j]) for j in range(states.shape[1])],
        axis=1,
    )
    speeds = np.linalg.norm(derivs, axis=1)
    vmax = speeds.max()
    if vmax <= 0.0:
        raise EmptyTube("trajectory is stationary; tube slices undefined")
    gap = float(np.diff(t_dense).max()) * float(vmax) if len(t_dense) > 1 else 0.0
    keep = speeds > 1e-10 * vmax
    return states[keep], derivs[keep] / speeds[keep, None], gap


def _slice_distances(points: np.ndarray, states: np.ndarray, units: np.ndarray,
                     radius: float) -> np.ndarray:
    """min over slices of the per-slice distance, for each point (vectorized)."""
    w = points[:, None, :] - states[None, :, :]  # (P, S, d)
    par = np.einsum("psd,sd->ps", w, units)
    perp_sq = np.maximum((w**2).sum(axis=-1) - par**2, 0.0)
    perp = np.sqrt(perp_sq)
    outside = np.maximum(perp - radius, 0.0)
    d = np.sqrt(par**2 + outside**2)
    return d.min(axis=1)


def point_tube_distance(point, tube: TubeSpec, *, dense: int = 512) -> float:
    """Distance from a point to the radius-r tube around a trajectory.

    Each sampled slice contributes ||w_par|| if the transverse part is
    within the radius, else the Euclidean distance to the slice's rim;
    the minimum over a dense Hermite-refined grid is returned, with one
    extra 10x refinement pass around the argmin.
    """
    p = np.asarray(point, dtype=float)[None, :]
    states, units, _ = _dense_slices(tube, dense)
    d0 = _slice_distances(p, states, units, tube.radius)
    # refinement: re-grid 10x around the winning slice
    w = p[0, None, :] - states
    par = np.einsum("sd,sd->s", w, units)
    perp = np.sqrt(np.maximum((w**2).sum(axis=-1) - par**2, 0.0))
    per_slice = np.sqrt(par**2 + np.maximum(perp - tube.radius, 0.0) ** 2)
    i = int(per_slice.argmin())
    traj = tube.trajectory
    span = traj.ts[-1] - traj.ts[0]
    if span > 0:
        t0 = traj.ts[0] + span * max(i - 1, 0) / max(len(states) - 1, 1)
        t1 = traj.ts[0] + span * min(i + 1, len(states) - 1) / max(len(states) - 1, 1)
        fine = np.linspace(t0, t1, 21)
        fs = np.array([flow_mod.flow_at(traj, float(t)) for t in fine])
        fd = np.stack(
            [np.interp(fine, traj.ts, traj.derivs[:, j]) for j in range(fs.shape[1])],
            axis=1,
        )
        spd = np.linalg.norm(fd, axis=1)
        keep = spd > 0
        if keep.any():
            d1 = _slice_distances(p, fs[keep], fd[keep] / spd[keep, None], tube.radius)
            return float(min(d0[0], d1[0]))
    return float(d0[0])


def tube_distance(points, tubes: Sequence[TubeSpec], *, dense: int = 512) -> np.ndarray:
    """Per-point distance to the union of tubes (min over tubes)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    best = np.full(len(pts), np.inf)
    for tube in tubes:
        states, units, _ = _dense_slices(tube, dense)
        best = np.minimum(best, _slice_distances(pts, states, units, tube.radius))
    return best


def tube_cover_check(tubes: Sequence[TubeSpec], region, *, radius: Optional[float] = None,
                     samples: int = 2048, seed: int = 0, slack: float = 1e-6,
                     dense: int = 512) -> CoverReport:
    """Do the tubes cover the region?  Checked on a deterministic point cloud.

    The cloud mixes a low-discrepancy net with the region's corners (the
    usual worst case for box coverings).  ``radius`` overrides every
    tube's radius for sensitivity sweeps.  The pass threshold absorbs the
    slice-sampling resolution (half the largest axial gap, with a safety
    factor) so a genuinely covered region is not failed for discreteness.
    """
    reg = _as_region(region)
    d = len(reg)
    if radius is not None:
        tubes = [dataclasses.replace(t, radius=radius) for t in tubes]
    n = max(int(samples), 1000)
    net = qmc.Halton(d=d, scramble=False, seed=seed).random(n)
    pts = reg[:, 0] + (reg[:, 1] - reg[:, 0]) * net
    if d <= 12:
        corners = np.array(list(itertools.product(*[(lo, hi) for lo, hi in reg])))
        pts = np.vstack([pts, corners])
    best = np.full(len(pts), np.inf)
    max_gap = 0.0
    for tube in tubes:
        states, units, gap = _dense_slices(tube, dense)
        max_gap = max(max_gap, gap)
        best = np.minimum(best, _slice_distances(pts, states, units, tube.radius))
    dist = best
    worst = int(dist.argmax())
    width = float((reg[:, 1] - reg[:, 0]).max())
    threshold = slack * max(width, 1.0) + 0.75 * max_gap
    return CoverReport(
        passed=bool(dist[worst] <= threshold),
        worst_point=pts[worst],
        worst_distance=float(dist[worst]),
        threshold=threshold,
        n_samples=len(pts),
    )


def packing_number(region, r: float):
    """Greedy axis-aligned 2r-separated packing of a box: (count, centers).

    Along axis i there is room for floor(side_i / 2r) centers at pitch 2r
    starting r inside the boundary.  Radius must be below the shortest
    side; a radius too large for even a single row yields count 0.
    """
    reg = _as_region(region)
    sides = reg[:, 1] - reg[:, 0]
    if r <= 0:
        raise ValueError("packing radius must be positive")
    if r >= sides.min():
        raise RadiusTooLarge(f"r = {r} >= shortest side {sides.min()}")
    counts = np.floor(sides / (2.0 * r)).astype(int)
    if np.any(counts == 0):
        return 0, np.empty((0, len(reg)))
    axes = [reg[i, 0] + r + 2.0 * r * np.arange(counts[i]) for i in range(len(reg))]
    grids = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([g.reshape(-1) for g in grids], axis=-1)
    return int(centers.shape[0]), centers


def varshamov_gilbert(eta: int, *, seed: int = 0, budget: int = 200000) -> np.ndarray:
    """M = 2^ceil(eta/8) binary words of length eta, pairwise Hamming
    distance >= ceil(eta/8), zero word first.

    Randomized greedy (the volume bound leaves exponential room); short
    lengths fall back to a lexicographic scan before giving up.
    """
    if eta < 1:
        raise ValueError("eta must be >= 1")
    dmin = math.ceil(eta / 8)
    M = 2 ** math.ceil(eta / 8)
    rng = np.random.default_rng(seed)
    code = [np.zeros(eta, dtype=np.int8)]
    tries = 0
    while len(code) < M and tries < budget:
        cand = rng.integers(0, 2, size=eta).astype(np.int8)
        arr = np.array(code)
        if (np.abs(arr - cand).sum(axis=1) >= dmin).all():
            code.append(cand)
        tries += 1
    if len(code) < M and eta <= 16:
        for bits in itertools.product((0, 1), repeat=eta):
            cand = np.array(bits, dtype=np.int8)
            arr = np.array(code)
            if (np.abs(arr - cand).sum(axis=1) >= dmin).all():
                code.append(cand)
                if len(code) == M:
                    break
    if len(code) < M:
        raise SearchFailed(f"found {len(code)} of {M} words at distance {dmin}")
    return np.array(code, dtype=np.int8)
