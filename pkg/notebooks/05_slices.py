"""Slicing sets by lines and restricting measures to tubes.

Run with ``python notebooks/05_slices.py``.
"""

# %%
# A line meets a closed cube exactly when its offset falls in the interval
# spanned by the cube's projection on the normal.
import numpy as np

from thetadim import dim_estimate
from thetadim.generators import gen_cube, gen_product, gen_rotated_sequence, gen_sequence_set
from thetadim.measures import uniform_measure
from thetadim.slicing import axis_plane, generic_offsets, sample_plane, slice_scan, slice_set, tube_measure

strip = gen_product(gen_sequence_set(1, 12), gen_cube(1, 12))
row = slice_set(strip, axis_plane(2, 1, 0.37))
print("horizontal slice of the strip:", row.n_leaves, "cells, theta=1 estimate",
      round(dim_estimate(row, 1.0).value, 3))

# %%
# Random directions are drawn rotation-invariantly from a seed.
line = sample_plane(2, 1, seed=4)
print("random direction:", line.describe())

# %%
# A scan compares every slice with the ambient estimate minus one.
pl = axis_plane(2, 1)
rep = slice_scan(strip, 1.0, pl, generic_offsets(pl, 8))
print("bound", round(rep.bound, 3), "slice estimates", np.round(rep.slice_dims, 3))

# %%
# For the rotated sequence the lines cross many small circles; at finite
# depth those crossings still look like a thin positive-dimensional set.
cp = gen_rotated_sequence(0.5, 12)
rep = slice_scan(cp, 0.5, pl, generic_offsets(pl, 8))
print("C_P bound", round(rep.bound, 3), "slice estimates", np.round(rep.slice_dims, 3))

# %%
# Tube restrictions keep the mass within a distance of the line and
# rescale by the tube width.
nu, empty = tube_measure(uniform_measure(gen_cube(2, 8)), axis_plane(2, 1, 0.5), 0.1)
print("tube mass", round(nu.total_mass, 4), "empty:", empty)
