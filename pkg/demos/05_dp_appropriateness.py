"""Is a Dirichlet process a sensible prior for your labeled data?

Estimates the DP precision from a labeled pool, then compares the DP's
expected cluster count at each sample size against the empirical count
from uniform subsamples of the pool.  When the empirical track stays
inside the DP's two-sigma band, the prior fits; a pool with, say, equal
class sizes drifts toward the band's edge because real balanced classes
saturate while the DP keeps logarithmically discovering new ones.

Run:  python3 demos/05_dp_appropriateness.py
"""

import numpy as np

from dpsc import GammaPrior, Partition, appropriateness_curve, crp_sample

rng = np.random.default_rng(3)


def show(title, pool, prior=GammaPrior()):
    ns = [1, 5, 10, 25, 50, 100, 175, 250, 350]
    curve = appropriateness_curve([pool], ns, resamples=300, prior=prior, rng=rng)
    print(title)
    print(f"  {pool.n_clusters} classes over {pool.n_items} items; "
          f"estimated precision {curve.alpha:.2f}")
    print(f"  {'N':>5} {'dp mean':>8} {'2-sigma band':>16} {'empirical':>10} {'inside?':>8}")
    hits = 0
    for j, n in enumerate(curve.ns):
        lo = curve.dp_mean[j] - 2 * curve.dp_std[j]
        hi = curve.dp_mean[j] + 2 * curve.dp_std[j]
        emp = curve.empirical_mean[j]
        inside = lo - 1e-9 <= emp <= hi + 1e-9
        hits += inside
        print(f"  {n:>5} {curve.dp_mean[j]:8.2f} [{lo:6.2f}, {hi:6.2f}] {emp:10.2f} "
              f"{'yes' if inside else 'NO':>8}")
    print(f"  band coverage: {hits}/{len(curve.ns)}")
    print()


# A pool actually drawn from a CRP: the fit should be excellent.
show("CRP-distributed pool (alpha = 2):", crp_sample(2.0, 350, rng))

# Ten equally sized classes: much less DP-like in the mid range.
balanced = Partition({f"i{j}": j % 10 for j in range(350)})
show("Balanced pool (10 classes of 35):", balanced, prior=GammaPrior(shape=2.0))
