"""Procedural tile-grid height fields and height queries.

The arena is a finite grid of square tiles, each with a constant surface
height. Rows run along world X, columns along world Z. Outside the extent the
terrain is absent (bodies fall through); removed tiles are encoded in the grid
as a large negative depth.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geom import maybe_njit

REMOVED_DEPTH = -1.0e6
ABSENT = -1.0e30  # kernel-level sentinel for "no surface here"

VARIANTS = ("flat", "bumpy", "bimodal_bumps", "hurdles", "gaps", "stairs", "valley")


@dataclass
class TerrainParams:
    """Generation knobs; only the fields relevant to a variant are used."""

    tile_size: float = 0.5
    rows: int = 48
    cols: int = 24
    origin_x: float = 0.0
    origin_z: float = -6.0
    h_max: float = 0.15            # bumpy
    bimodal_low: tuple = (0.0, 0.08)     # bimodal_bumps: low mode range
    bimodal_high: tuple = (0.18, 0.30)   # bimodal_bumps: high mode range
    hurdle_height: float = 0.4     # hurdles
    hurdle_every: int = 8
    step_height: float = 0.15      # stairs
    gap_every: int = 6             # gaps: one removed row every k rows
    gap_width: int = 1
    wall_height: float = 3.0       # valley
    wall_tiles: int = 2


@dataclass
class TerrainSpec:
    variant: str
    params: TerrainParams
    seed: int
    grid: np.ndarray  # (rows, cols) float64 surface heights; REMOVED_DEPTH if removed

    @property
    def extent(self):
        return self.grid.shape

    @property
    def tile_size(self):
        return self.params.tile_size

    @property
    def origin(self):
        return (self.params.origin_x, self.params.origin_z)


def generate(variant: str, params: TerrainParams, seed: int) -> TerrainSpec:
    """Build the height grid for a variant, deterministically in (variant, params, seed)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown terrain variant {variant!r}")
    if params.tile_size <= 0:
        raise ValueError("tile_size must be positive")
    if params.rows < 1 or params.cols < 1:
        raise ValueError("terrain extent must be at least 1x1 tiles")
    for name in ("h_max", "hurdle_height", "step_height", "wall_height"):
        if getattr(params, name) < 0:
            raise ValueError(f"{name} must be nonnegative")

    rng = np.random.Generator(np.random.PCG64(seed))
    r, c = params.rows, params.cols
    grid = np.zeros((r, c))

    if variant == "flat":
        pass
    elif variant == "bumpy":
        grid = rng.uniform(0.0, params.h_max, size=(r, c))
    elif variant == "bimodal_bumps":
        lo = rng.uniform(params.bimodal_low[0], params.bimodal_low[1], size=(r, c))
        hi = rng.uniform(params.bimodal_high[0], params.bimodal_high[1], size=(r, c))
        pick_hi = rng.random(size=(r, c)) < 0.5
        grid = np.where(pick_hi, hi, lo)
    elif variant == "hurdles":
        for i in range(params.hurdle_every, r, params.hurdle_every):
            grid[i, :] = params.hurdle_height
    elif variant == "gaps":
        for i in range(params.gap_every, r, params.gap_every):
            grid[i : i + params.gap_width, :] = REMOVED_DEPTH
    elif variant == "stairs":
        grid = np.repeat(
            (np.arange(r) * params.step_height)[:, None], c, axis=1
        ).astype(float)
    elif variant == "valley":
        w = params.wall_tiles
        grid[:, :w] = params.wall_height
        grid[:, c - w :] = params.wall_height

    return TerrainSpec(variant=variant, params=params, seed=seed, grid=grid)


@maybe_njit
def tile_index(coord, origin, tile):
    """Index of the tile containing coord; exact boundaries belong to the lower index."""
    u = (coord - origin) / tile
    i = int(np.floor(u))
    if u == i and u > 0.0:
        i -= 1
    return i


@maybe_njit
def height_at(grid, origin_x, origin_z, tile, x, z):
    """Surface height at (x, z) or ABSENT outside the extent / on removed tiles."""
    r = tile_index(x, origin_x, tile)
    c = tile_index(z, origin_z, tile)
    if r < 0 or r >= grid.shape[0] or c < 0 or c >= grid.shape[1]:
        return ABSENT
    h = grid[r, c]
    if h <= REMOVED_DEPTH * 0.5:
        return ABSENT
    return h


def height_query(terrain: TerrainSpec, x: float, z: float):
    """Python-facing query: height in meters, or None where the terrain is absent."""
    h = height_at(
        terrain.grid,
        terrain.params.origin_x,
        terrain.params.origin_z,
        terrain.params.tile_size,
        float(x),
        float(z),
    )
    if h <= ABSENT * 0.5:
        return None
    return float(h)


def height_query_batch(terrain: TerrainSpec, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Vectorized heights; ABSENT sentinel where there is no surface."""
    p = terrain.params
    ur = (xs - p.origin_x) / p.tile_size
    uc = (zs - p.origin_z) / p.tile_size
    r = np.floor(ur).astype(np.int64)
    c = np.floor(uc).astype(np.int64)
    r -= (ur == r) & (r > 0)
    c -= (uc == c) & (c > 0)
    rows, cols = terrain.grid.shape
    inside = (r >= 0) & (r < rows) & (c >= 0) & (c < cols)
    out = np.full(np.shape(xs), ABSENT)
    h = terrain.grid[r[inside], c[inside]]
    valid = h > REMOVED_DEPTH * 0.5
    vals = np.where(valid, h, ABSENT)
    out[inside] = vals
    return out


def with_params(terrain: TerrainSpec, **kwargs) -> TerrainSpec:
    """Regenerate the terrain with updated params (same variant and seed)."""
    return generate(terrain.variant, replace(terrain.params, **kwargs), terrain.seed)
