"""Optimal restricted covers and intermediate dimension estimates.

Run with ``python notebooks/02_covering_and_estimates.py``.
"""

# %%
# A covering query fixes an exponent s, the interpolation parameter theta
# and a scale delta.  Admissible cubes have diameters between delta**(1/theta)
# and delta, and the dynamic program finds the cheapest cover.
from thetadim import CoveringQuery, brute_force_cover_cost, dim_estimate, optimal_cover_cost, theta_sweep
from thetadim.generators import gen_cube, gen_pattern_fractal, gen_rotated_sequence, rotated_sequence_dimension

carpet = gen_pattern_fractal([0, 1, 2], depth=4, d=2)
q = CoveringQuery(s=1.2, theta=0.2, delta=0.8)
res = optimal_cover_cost(carpet, q, clamp=True, with_cover=True)
print("cost", res.cost, "levels", res.level_range, "cover size", res.cover_size)
print("first cubes (level, index):", res.chosen_cover[:3])
print("brute force agrees:", brute_force_cover_cost(carpet, q, levels=res.level_range))

# %%
# The estimate finds, scale by scale, the exponent where the cover cost
# crosses one and regresses over the default schedule.
cube = gen_cube(2, 9)
est = dim_estimate(cube, 0.5)
print("square, theta=0.5:", round(est.value, 4))
for row in est.per_scale:
    print("  delta=%.4f  s_cross=%.4f  cover=%d" % (row["delta"], row["s_cross"], row["cover_size"]))

# %%
# The rotated sequence set has a closed-form answer that depends on theta.
cp = gen_rotated_sequence(0.5, depth=12)
for theta, e in theta_sweep(cp, [0.5, 1.0]):
    print(f"C_P theta={theta}: estimate {e.value:.3f}, closed form {rotated_sequence_dimension(0.5, theta):.3f}")
