"""Chinese restaurant process behavior and precision estimation.

Draws partitions from the CRP at a few precision values, compares the
empirical cluster counts with the exact moment sums, then recovers the
precision from observed (n items, k clusters) pairs with the beta/gamma
auxiliary-variable sampler.

Run:  python3 demos/02_crp_and_precision.py
"""

import numpy as np

from dpsc import (
    GammaPrior,
    ObservationPair,
    crp_sample,
    estimate_precision,
    expected_clusters,
)

rng = np.random.default_rng(0)

print("CRP cluster counts, n = 200 (exact mean/std vs 2000 draws)")
for alpha in (0.5, 1.0, 2.0, 5.0):
    mean, std = expected_clusters(alpha, 200)
    draws = [crp_sample(alpha, 200, rng).n_clusters for _ in range(2000)]
    print(
        f"  alpha={alpha:<4} exact {mean:6.2f} +- {std:4.2f}   "
        f"empirical {np.mean(draws):6.2f} +- {np.std(draws):4.2f}"
    )

print()
print("Recovering alpha = 2 from four CRP pools of 500 items:")
pools = [crp_sample(2.0, 500, rng) for _ in range(4)]
pairs = [ObservationPair(p.n_items, p.n_clusters) for p in pools]
print(f"  observed cluster counts: {[p.n_clusters for p in pools]}")
estimate = estimate_precision(pairs, GammaPrior(shape=2.0, scale=1.0), rng)
print(f"  posterior-mean estimate: {estimate:.2f}")
