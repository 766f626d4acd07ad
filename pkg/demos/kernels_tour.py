#!/usr/bin/env python3
"""A short tour of the numerical kernels.

Shows the three facts everything else is built on:

1. sphere-uniform actions are isotropic, so d * r * a is an unbiased
   coefficient estimate,
2. the top-k left singular vectors of a noisy stack of coefficient
   estimates recover the shared subspace,
3. the sin-theta distance measures that recovery and shrinks as 1/sqrt(n).
"""

import numpy as np

from lowrank_bandits import (
    InstanceSpec,
    generate_instance,
    moment_estimate_theta,
)
from lowrank_bandits.linalg import (
    sample_unit_sphere_many,
    subspace_distance,
    top_k_left_singular_vectors,
)

rng = np.random.default_rng(0)

# 1. isotropy: E[d * a a^T] = I
draws = sample_unit_sphere_many(10, 50_000, rng)
second_moment = 10 * draws.T @ draws / len(draws)
print("isotropy: max |E[d a a^T] - I| =", f"{np.max(np.abs(second_moment - np.eye(10))):.4f}")

# 2. the moment estimate is unbiased for a fixed coefficient
theta = rng.standard_normal(10)
theta /= np.linalg.norm(theta)
actions = sample_unit_sphere_many(10, 50_000, rng)
rewards = actions @ theta + rng.standard_normal(len(actions))
estimate = moment_estimate_theta(actions, rewards, 10)
print("moment estimate: ||theta_hat - theta|| =", f"{np.linalg.norm(estimate - theta):.4f}")

# 3. stacking noisy per-task estimates and taking top-k singular vectors
#    recovers the shared subspace, better with more samples per task
instance = generate_instance(InstanceSpec(dim=10, rep_dim=2, num_tasks=25, seed=1))
for samples in (200, 800, 3200):
    theta_hats = np.empty((10, 25))
    for task in range(25):
        acts = sample_unit_sphere_many(10, samples, rng)
        rews = acts @ instance.thetas[:, task] + rng.standard_normal(samples)
        theta_hats[:, task] = moment_estimate_theta(acts, rews, 10)
    basis_hat = top_k_left_singular_vectors(theta_hats, 2)
    err = subspace_distance(basis_hat, instance.basis)
    print(f"subspace recovery with {samples:5d} samples/task: sin-theta = {err:.4f}")
