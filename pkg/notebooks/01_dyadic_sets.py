"""Dyadic sets: building, inspecting and saving sparse cube trees.

Run with ``python notebooks/01_dyadic_sets.py``.
"""

# %%
# A dyadic set stores its occupied finest-level cubes as sorted Morton codes.
# Every coarser level is derived from those codes, so parents, children and
# per-level counts come for free.
import numpy as np

from thetadim import DyadicSet, build_from_points, dyadic_dimension
from thetadim.dyadic_core import min_branching, normalize_points
from thetadim.generators import gen_pattern_fractal

diag = gen_pattern_fractal([0, 3], depth=8, d=2)
print("leaves:", diag.n_leaves, "depth:", diag.depth)
print("cubes per level:", diag.counts().tolist())

# %%
# Children of level-n cubes occupy contiguous ranges of the next level.
start, stop = diag.child_ranges(3)
print("children per level-3 cube:", np.unique(stop - start))
print("minimal branching below level 2:", min_branching(diag, 2))

# %%
# The dyadic dimension reads off the smallest branching number per level.
print("dyadic dimension of the diagonal set:", dyadic_dimension(diag))

# %%
# Point clouds are rescaled into the unit cube and rasterized.
rng = np.random.default_rng(0)
cloud = rng.normal(size=(2000, 2))
scaled, info = normalize_points(cloud)
raster = build_from_points(scaled, depth=6)
print("cloud occupies", raster.n_leaves, "of", 4**6, "level-6 cells; scale", round(info["scale"], 3))

# %%
# A set can be truncated to a coarser depth or rebuilt from integer indices.
coarse = raster.truncate(3)
same = DyadicSet.from_leaf_indices(coarse.indices(3), 2, 3)
print("truncated leaves:", coarse.n_leaves, "rebuilt equal:", same == coarse)
