"""How gathers are tiled into square patches and reassembled.

The patch lattice anchors an N x N window at every stride step that still
fits inside the gather; overlapping patches are averaged on reassembly.
With a stride that divides the gather evenly, extract followed by assemble
is the identity.
"""

import numpy as np

from seisrestore import AcquisitionMeta, Gather, assemble, extract, plan_patches

# Lattice sizes for a few shapes. Patch counts grow with overlap.
for shape, n, st, sx in [
    ((1920, 1152), 128, 128, 128),
    ((512, 256), 128, 24, 16),
    ((1408, 128), 128, 10, 128),
]:
    grid = plan_patches(shape, n, st, sx)
    print(f"shape {shape}, N={n}, strides ({st},{sx}): K = {grid.k} patches")

# A tiny grid shows the anchor positions directly. Note stride 3 on an 8-wide
# gather leaves the last row and column uncovered; fully_covered() flags it.
grid = plan_patches((8, 8), 4, 3, 3)
print(f"\n(8,8) with N=4 stride 3: origins {list(grid.origins)}")
print(f"fully covered: {grid.fully_covered()}")
print("coverage counts (overlap depth per sample):")
print(grid.coverage())

# Round trip: with stride 2 every sample is covered and overlaps average
# identical values, so assembly reproduces the gather exactly.
grid = plan_patches((8, 8), 4, 2, 2)
rng = np.random.default_rng(0)
g = Gather(rng.normal(size=(8, 8)).astype(np.float32), AcquisitionMeta(dt=0.004))
back = assemble(extract(g, grid), grid)
print(f"\nstride-2 grid: K = {grid.k}, fully covered: {grid.fully_covered()}")
print(f"round-trip max abs error: {np.max(np.abs(back - g.samples)):.2e}")
