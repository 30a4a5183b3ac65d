"""Mass-conserving simplified inundation solver on a DEM raster.

Rainfall enters as a uniform initial depth over all in-domain cells. Water
then relaxes toward a hydrostatic equilibrium by repeated sweeps: each cell
pushes a fraction phi of the positive water-surface difference to each of
its four edge neighbors. Sweeps are Jacobi-style (all transfers computed
from the previous state, then applied at once), a cell's total outflow in a
sweep is capped at its available depth with proportional scaling, and the
domain boundary is closed: no water leaves the grid, and nodata cells act
as impermeable walls. Total volume is therefore conserved to rounding dust,
which the solver verifies against rainfall input every sweep.

Convergence requires both the max per-cell depth change and the max
water-surface drop from a wet cell (depth > tol_level) to any neighbor to
fall below tol_level; the second condition makes the reported state an
equilibrium at the tolerance, not merely a slowly-moving one.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import DemGrid, FloodMap


@dataclass(frozen=True)
class SpmConfig:
    """Solver parameters.

    phi is the per-neighbor transfer fraction; values above 0.25 let a cell
    schedule more than its own depth toward four lower neighbors and are
    rejected. compare_ground switches the transfer rule to compare a cell's
    water surface against the neighbor's bare ground instead of the
    neighbor's water surface; that variant overshoots and oscillates, and is
    kept only for study.
    """

    phi: float = 0.25
    tol_level: float = 1e-6
    tol_mass: float = 1e-9
    max_iters: int = 100_000
    compare_ground: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.phi <= 0.25:
            raise ValueError(f"phi must be in (0, 0.25], got {self.phi}")
        if self.tol_level <= 0:
            raise ValueError(f"tol_level must be positive, got {self.tol_level}")
        if self.tol_mass <= 0:
            raise ValueError(f"tol_mass must be positive, got {self.tol_mass}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")


@dataclass(frozen=True)
class SpmResult:
    """Final state of a solver run.

    mass_error is the worst relative volume discrepancy seen at any sweep;
    residual is the max per-cell depth change in the final sweep. When
    converged is True, mass_error <= tol_mass holds.
    """

    flood: FloodMap
    iterations: int
    mass_error: float
    converged: bool
    residual: float


def _sweep_band(surface: np.ndarray, ref: np.ndarray, h: np.ndarray, phi: float,
                lo: int, hi: int, out_rows: np.ndarray) -> None:
    """Compute post-sweep depths for rows [lo, hi) into out_rows.

    surface/ref/h are full-grid front buffers; the band reads two halo rows
    on each side (a neighbor's outflow scale depends on that neighbor's own
    neighbors). Per-cell arithmetic is position-independent, so any band
    partition produces bit-identical results.
    """
    rows = surface.shape[0]
    slo, shi = max(lo - 2, 0), min(hi + 2, rows)
    S = surface[slo:shi]
    R = ref[slo:shi]
    hh = h[slo:shi]

    # Scheduled transfers, one array per direction, sized like the slab.
    q_s = np.zeros_like(S)   # sent to the southern neighbor (row below)
    q_n = np.zeros_like(S)   # sent to the northern neighbor
    q_e = np.zeros_like(S)
    q_w = np.zeros_like(S)
    q_s[:-1, :] = np.maximum(S[:-1, :] - R[1:, :], 0.0)
    q_n[1:, :] = np.maximum(S[1:, :] - R[:-1, :], 0.0)
    q_e[:, :-1] = np.maximum(S[:, :-1] - R[:, 1:], 0.0)
    q_w[:, 1:] = np.maximum(S[:, 1:] - R[:, :-1], 0.0)
    q_s *= phi
    q_n *= phi
    q_e *= phi
    q_w *= phi

    # Cap each cell's outflow at its depth, scaling the four flows together.
    out = q_s + q_n + q_e + q_w
    scale = np.ones_like(out)
    np.divide(hh, out, out=scale, where=out > hh)
    q_s *= scale
    q_n *= scale
    q_e *= scale
    q_w *= scale

    inflow = np.zeros_like(S)
    inflow[1:, :] += q_s[:-1, :]
    inflow[:-1, :] += q_n[1:, :]
    inflow[:, 1:] += q_e[:, :-1]
    inflow[:, :-1] += q_w[:, 1:]

    # min(out, h) instead of out*scale keeps depths exactly non-negative.
    h_new = (hh - np.minimum(out, hh)) + inflow
    out_rows[...] = h_new[lo - slo:lo - slo + (hi - lo)]


def _max_wet_drop(surface: np.ndarray, h: np.ndarray, tol_level: float) -> float:
    """Largest surface drop from a wet cell (depth > tol_level) to a neighbor."""
    wet = h > tol_level
    worst = 0.0
    for a, b in (
        ((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
        ((slice(None), slice(None, -1)), (slice(None), slice(1, None))),
    ):
        diff = surface[a] - surface[b]
        if diff.size == 0:
            continue
        worst = max(worst, float(np.where(wet[a], diff, 0.0).max()))
        worst = max(worst, float(np.where(wet[b], -diff, 0.0).max()))
    return worst


def spm_simulate(dem: DemGrid, rain_depth: float, cfg: SpmConfig = SpmConfig(),
                 workers: int = 1,
                 on_sweep: Callable[[int, np.ndarray], None] | None = None) -> SpmResult:
    """Relax a uniform rainfall depth (meters) over the DEM to equilibrium.

    workers > 1 splits each sweep into row bands computed on a thread pool;
    results are bit-identical for any worker count. on_sweep, if given, is
    called with (iteration, depths) after every sweep; the depth array is a
    read-only view into a buffer reused two sweeps later, so copy it to
    keep history.
    """
    if rain_depth < 0 or not np.isfinite(rain_depth):
        raise ValueError(f"rain depth must be non-negative and finite, got {rain_depth}")
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")

    active = dem.active_mask
    n_active = int(active.sum())
    if n_active == 0:
        raise ValueError("DEM has no in-domain cells")

    # Nodata walls: a huge but finite surface never receives (always higher)
    # and never sends (zero depth caps its outflow at zero).
    elev = dem.elevations
    wall = float(elev[active].max()) + rain_depth + 1e6
    zeff = np.where(active, elev, wall)

    h = np.where(active, rain_depth, 0.0)
    h_new = np.empty_like(h)
    expected = rain_depth * n_active

    rows = h.shape[0]
    nb = min(workers, rows)
    bounds = [(rows * i // nb, rows * (i + 1) // nb) for i in range(nb)]
    pool = ThreadPoolExecutor(max_workers=nb) if nb > 1 else None

    mass_error = 0.0
    residual = float("inf")
    converged = False
    iterations = 0
    try:
        for iteration in range(1, cfg.max_iters + 1):
            iterations = iteration
            surface = zeff + h
            ref = zeff if cfg.compare_ground else surface
            if pool is None:
                _sweep_band(surface, ref, h, cfg.phi, 0, rows, h_new)
            else:
                jobs = [
                    pool.submit(_sweep_band, surface, ref, h, cfg.phi, lo, hi, h_new[lo:hi])
                    for lo, hi in bounds
                ]
                for job in jobs:
                    job.result()

            residual = float(np.abs(h_new - h).max())
            volume = float(h_new.sum())
            if expected > 0:
                mass_error = max(mass_error, abs(volume - expected) / expected)
            else:
                mass_error = max(mass_error, abs(volume))
            h, h_new = h_new, h

            if on_sweep is not None:
                view = h[...]
                view.flags.writeable = False
                on_sweep(iteration, view)

            if residual < cfg.tol_level and mass_error <= cfg.tol_mass:
                if _max_wet_drop(zeff + h, h, cfg.tol_level) <= cfg.tol_level:
                    converged = True
                    break
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    return SpmResult(
        flood=FloodMap(depths=h, cell_size=dem.cell_size),
        iterations=iterations,
        mass_error=mass_error,
        converged=converged,
        residual=residual,
    )


def spm_prior_sequence(dem: DemGrid, series, cfg: SpmConfig = SpmConfig(),
                       workers: int = 1) -> list[FloodMap]:
    """Equilibrium flood map for each hour's cumulative rainfall, hours 1..24.

    Each map is an independent solve of the rainfall total accumulated
    through that hour (mm converted to meters of depth).
    """
    from .rainfall import HOURS, cumulative

    maps = []
    for hour in range(1, HOURS + 1):
        depth_m = cumulative(series, hour) / 1000.0
        maps.append(spm_simulate(dem, depth_m, cfg, workers=workers).flood)
    return maps


def hydrostatic_fill(dem: DemGrid, rain_depth: float) -> FloodMap:
    """Pour the rainfall volume to a single flat water level over the DEM.

    Closed-form equilibrium used as an oracle: sort in-domain elevations and
    find the level L with sum(max(L - z, 0)) equal to the rainfall volume.
    This matches the relaxation solver only when the filled region is one
    connected pool; terrain that traps water in separate basins equilibrates
    to different levels per basin.
    """
    if rain_depth < 0 or not np.isfinite(rain_depth):
        raise ValueError(f"rain depth must be non-negative and finite, got {rain_depth}")
    active = dem.active_mask
    z = np.sort(dem.elevations[active])
    n = z.size
    if n == 0:
        raise ValueError("DEM has no in-domain cells")
    volume = rain_depth * n

    # capacity[k] = volume needed to raise the k lowest cells to z[k]
    prefix = np.concatenate(([0.0], np.cumsum(z)))
    capacity = np.arange(n) * z - prefix[:-1]
    k = int(np.searchsorted(capacity, volume, side="right"))
    k = max(k, 1)
    level = (volume + prefix[k]) / k

    depths = np.where(active, np.maximum(level - dem.elevations, 0.0), 0.0)
    return FloodMap(depths=depths, cell_size=dem.cell_size)
