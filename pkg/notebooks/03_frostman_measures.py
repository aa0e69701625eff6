"""Two-regime Frostman measures and their ball profiles.

Run with ``python notebooks/03_frostman_measures.py``.
"""

# %%
# The construction starts from uniform mass at the fine level
# delta**(1/theta), caps every coarser cube at 2**(-j t), then spreads mass
# uniformly below.  The trace records every factor it applied.
from thetadim.generators import gen_cube, gen_pattern_fractal
from thetadim.measures import ball_mass, build_joint_frostman, verify_frostman_profile

diag = gen_pattern_fractal([0, 3], depth=14, d=2)
mu, trace = build_joint_frostman(diag, t=1.0, alpha=0.9, theta=0.5, delta=2.0**-6)
print("levels", trace.coarse_level, "to", trace.fine_level, "total mass", mu.total_mass)
print("caps hold:", trace.check_caps(), "monotone chain:", trace.check_monotone_chain())

# %%
# Ball masses are computed by descending the tree; cubes entirely inside a
# ball contribute their whole mass at once.
print("mass of B((0.5, 0.5), 0.1):", ball_mass(mu, [0.5, 0.5], 0.1))

# %%
# The profile compares ball masses with r**alpha below the split radius and
# r**t above it.  Bounded constants across delta are the finite-scale check.
interval = gen_cube(1, 16)
for k in (5, 6, 7):
    m, _ = build_joint_frostman(interval, 1.0, 0.9, 0.5, 2.0**-k)
    prof = verify_frostman_profile(m, 2.0 ** (-2 * k), 2.0**-k, (1.0, 0.9))
    print(f"delta=2^-{k}: fine c={prof['fine']['c']:.3f} coarse c={prof['coarse']['c']:.3f}")
