#!/usr/bin/env python3
"""The three benchmark studies at demo scale.

Same code paths as `condrand tables --which 1|2|3`, with the Monte Carlo
sizes turned down so everything finishes in about a minute.
"""

from condrand.experiments import (
    monitored_trial_type_i_error,
    sample_size_grid,
    tail_estimate_repeatability,
)

print("1. rejection-sampling cost grid (95th percentile of draws for 2500 keepers)")
rows = sample_size_grid()
print(f"   {'design':<12}{'n':>5}{'n1':>6}{'k95':>28}")
for r in rows:
    print(f"   {r['design']:<12}{r['n']:>5}{r['n1']:>6}{r['k']:>28,}")

print("\n2. repeatability of direct tail estimates (true tail ~ 0.1, N_c = 2500)")
out = tail_estimate_repeatability(rows=((30, 15), (40, 16)), runs=100, seed=5)
for r in out:
    exact = "n/a" if r["exact"] is None else f"{r['exact']:.4f}"
    print(
        f"   n={r['n']:>3} n1={r['n1']:>3}: exact {exact}, "
        f"mean {r['mean']:.4f}, sd {r['sd']:.4f} over {r['runs']} runs"
    )

print("\n3. attained level of the monitored test (null data, alpha = 0.05)")
res = monitored_trial_type_i_error(
    n=100, look_positions=(71, 86, 100), replications=100, n_c=2500, seed=17
)
print(f"   schedule: {res['schedule']['looks']}")
print(f"   info fractions: {[round(t, 4) for t in res['boundaries']['info_fractions']]}")
print(f"   boundaries: {[round(d, 1) for d in res['boundaries']['d']]}")
print(f"   alpha_hat = {res['alpha_hat']:.4f} (sd {res['alpha_hat_sd']:.4f})")
