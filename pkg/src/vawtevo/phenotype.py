"""Decode genomes into voxel workspaces.

The workspace is a 100x100x100 boolean grid of 0.3 mm cells (30 mm cube).
Every design shares a fixed support: a square platform ring, one voxel wide,
spanning cells 42..57 in x and y with a hollow 14x14 core, present in all
100 layers. Four blades hang off the ring's outer edge, one per quadrant,
identical up to successive 90 degree rotations about the grid center.

Within a layer, the north-east blade spans the 42 columns from the ring to
the workspace edge, split into one column band per profile gene. Band
heights follow the gene sequence with a 2-voxel overlap rule so adjacent
bands always stay connected. Vertically the grid is 6 constant sections;
each section's profile is the previous one plus its z-shift gene, clamped.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import ndimage

from .genome import Genome, PROFILE_MAX, PROFILE_MIN

GRID = 100
CELL_MM = 0.3

RING_LO, RING_HI = 42, 57        # platform ring cells, inclusive
CORE = 14                        # hollow interior is CORE x CORE cells
BLADE_SPAN = RING_HI + 1, GRID   # blade columns 58..99 (42 cells)
HEIGHT_RANGE = PROFILE_MAX       # band boundaries live in [0, 42]

# Layers per z-section: first four get 17, last two get 16 (sums to 100).
SECTION_LAYERS = (17, 17, 17, 17, 16, 16)
SECTION_STARTS = tuple(int(v) for v in np.cumsum((0,) + SECTION_LAYERS[:-1]))


def band_bounds(profile: Sequence[int]) -> list[tuple[int, int]]:
    """Boundary pairs (lo, hi] per band, measured in cells from the baseline.

    First band runs from the baseline to its gene. After that, a gene at or
    above the previous band's top extends down to 2 below that top; a gene at
    or below the previous band's bottom (a gap) extends up to 2 above that
    bottom; anything in between is drawn 2 thick below the gene. Boundaries
    clamp to [0, 42], so bands at the range edges may be thinner than 2.
    """
    bounds: list[tuple[int, int]] = []
    for i, v in enumerate(profile):
        v = int(v)
        if not (PROFILE_MIN <= v <= PROFILE_MAX):
            raise ValueError(f"profile gene {v} outside [{PROFILE_MIN}, {PROFILE_MAX}]")
        if i == 0:
            lo, hi = 0, v
        else:
            prev_lo, prev_hi = bounds[-1]
            if v >= prev_hi:
                lo, hi = prev_hi - 2, v
            elif v <= prev_lo:
                lo, hi = v, prev_lo + 2
            else:
                lo, hi = v - 2, v
        bounds.append((max(0, lo), min(HEIGHT_RANGE, hi)))
    return bounds


def blade_mask(profile: Sequence[int]) -> np.ndarray:
    """North-east blade occupancy for one layer, indexed mask[x, y]."""
    mask = np.zeros((GRID, GRID), dtype=bool)
    col0, col_end = BLADE_SPAN
    span = col_end - col0
    n = len(profile)
    for i, (lo, hi) in enumerate(band_bounds(profile)):
        c0 = col0 + span * i // n
        c1 = col0 + span * (i + 1) // n
        # height h in (lo, hi] sits at row 49 + h; baseline cells stay empty
        mask[c0:c1, 50 + lo:50 + hi] = True
    return mask


def platform_mask() -> np.ndarray:
    mask = np.zeros((GRID, GRID), dtype=bool)
    mask[RING_LO:RING_HI + 1, RING_LO:RING_HI + 1] = True
    mask[RING_LO + 1:RING_HI, RING_LO + 1:RING_HI] = False
    return mask


def rasterize_layer(profile: Sequence[int]) -> np.ndarray:
    """One layer: the platform ring plus four rotated copies of the blade."""
    blade = blade_mask(profile)
    mask = platform_mask()
    for _ in range(4):
        mask |= blade
        blade = np.rot90(blade)
    return mask


def section_profiles(genome: Genome) -> list[tuple[int, ...]]:
    """Six per-section profiles: cumulative z-shifts, clamped each step."""
    profiles = [genome.profile]
    current = np.array(genome.profile, dtype=np.int64)
    for shift in genome.zshift:
        current = np.clip(current + shift, PROFILE_MIN, PROFILE_MAX)
        profiles.append(tuple(int(v) for v in current))
    return profiles


def rasterize(genome: Genome) -> np.ndarray:
    """Full voxel phenotype, indexed grid[x, y, z]."""
    grid = np.zeros((GRID, GRID, GRID), dtype=bool)
    for profile, z0, nlayers in zip(section_profiles(genome), SECTION_STARTS, SECTION_LAYERS):
        grid[:, :, z0:z0 + nlayers] = rasterize_layer(profile)[:, :, None]
    return grid


_SIX_CONN = ndimage.generate_binary_structure(3, 1)


def connected_components(grid: np.ndarray) -> int:
    """Number of 6-connected solid components."""
    _, count = ndimage.label(grid, structure=_SIX_CONN)
    return int(count)


def shell_labels(grid: np.ndarray) -> tuple[np.ndarray, int]:
    """6-connected component labels (0 = empty), used for shell-wise meshing."""
    labels, count = ndimage.label(grid, structure=_SIX_CONN)
    return labels, int(count)
