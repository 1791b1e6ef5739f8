"""Large-tree behavior: event cascades and averaging.

Two experiments on regular trees:

1. A cascade model on an infinite regular tree where every event descends
   from a root occurrence.  The closed-form total-count pmf is compared
   against a branching-process simulation, and against its
   generalized-Poisson limit as the degree grows.

2. The law of large numbers for the per-vertex average loss: the variance
   of S/d shrinks quickly on binary trees and much more slowly on stars,
   where every vertex stays correlated with the hub.

Run:  python3 demos/branching_asymptotics.py
"""

import numpy as np

from mpmrf import (
    SplashParams,
    binary_tree,
    gp_limit_check,
    homogeneous_params,
    negbinom_pmf,
    splash_simulate,
    splash_total_pmf,
    star_tree,
    variance_of_average,
)


def main():
    sp = SplashParams(lambda_r=1.0, alpha=0.5, chi=3)
    pmf = splash_total_pmf(sp, 30)
    sim = splash_simulate(sp, 100_000, seed=1)
    emp = np.bincount(sim.counts, minlength=11)[:11] / sim.counts.size
    print("total cascade count (lambda_r=1, alpha=0.5, degree 3)")
    print("x    closed form    simulated")
    for x in range(8):
        print(f"{x}    {pmf[x]:.6f}       {emp[x]:.6f}")

    for chi in (20, 50, 200):
        res = gp_limit_check(1.0, 0.5, chi, n=100_000, seed=chi)
        print(
            f"degree {chi:4d}: TV distance to generalized-Poisson limit "
            f"{res['tv_distance']:.4f}"
        )

    print("\nvariance of the average loss S/d (NBinom(2,1/3) severities)")
    sev = negbinom_pmf(2, 1 / 3, 200)
    print("depth    d     binary Var(S/d)   star Var(S/d)   ratio")
    for depth in range(2, 9):
        bt = binary_tree(depth)
        d = bt.num_vertices
        vb = variance_of_average(homogeneous_params(bt, 1.0, 0.5), bt, [sev] * d)
        st = star_tree(d)
        vs = variance_of_average(homogeneous_params(st, 1.0, 0.5), st, [sev] * d)
        print(f"{depth:5d}  {d:4d}   {vb:14.6f}   {vs:13.6f}   {vs / vb:5.2f}")


if __name__ == "__main__":
    main()
