"""Truncated kernel energies and the capacity lower bound.

Run with ``python notebooks/04_energies.py``.
"""

# %%
# The kernel is 1 below r, (r/|x|)**s up to r**theta and zero beyond, so
# only nearby pairs are summed.
from thetadim import CoveringQuery, optimal_cover_cost
from thetadim.generators import gen_cube, gen_product, gen_sequence_set
from thetadim.kernels import KernelSpec, capacity_lower_bound, energy, energy_naive, kernel_eval
from thetadim.measures import build_joint_frostman, uniform_measure

spec = KernelSpec(r=2.0**-6, theta=0.5, s=0.5)
print("kernel at 0.01, 0.05, 0.2:", kernel_eval([0.01, 0.05, 0.2], spec))

# %%
# The bucketed energy matches the quadratic reference on small measures.
mu = uniform_measure(gen_cube(2, 5))
print("bucketed", energy(mu, spec), "naive", energy_naive(mu, spec))

# %%
# r**s / energy never exceeds the restricted cover cost (up to a fixed factor).
interval = uniform_measure(gen_cube(1, 12))
bound = capacity_lower_bound(interval, spec)
cost = optimal_cover_cost(interval.base, CoveringQuery(spec.s, spec.theta, spec.r**spec.theta)).cost
print(f"capacity bound {bound:.4g} <= cover cost {cost:.4g} x 3**s")

# %%
# Weighted energies of Frostman measures on the strip stay comparable to
# delta**(t - 1) across scales.
strip = gen_product(gen_sequence_set(1, 12), gen_cube(1, 12))
for k in (6, 7):
    delta = 2.0**-k
    m, _ = build_joint_frostman(strip, 1.2, 0.9, 0.6, delta)
    e = energy(m.coarsen(9), KernelSpec(delta, 0.6, 0.2, weight_m=1))
    print(f"delta=2^-{k}: energy / delta**0.2 = {e / delta**0.2:.3f}")
