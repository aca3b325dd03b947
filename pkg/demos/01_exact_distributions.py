#!/usr/bin/env python3
"""Exact laws of the treatment-1 count under a biased coin design.

The biased coin assigns the lagging arm with probability p, so group
sizes concentrate near balance much more tightly than a fair coin.
"""

from condrand import DesignSpec, conditional_pmf, pmf_table, unconditional_pmf

design = DesignSpec.bcd(2 / 3)
fair = DesignSpec.complete()

n = 30
table_bcd = pmf_table(design, n)
table_fair = pmf_table(fair, n)

print(f"P(N1({n}) = n1), biased coin p=2/3 vs complete randomization")
print("n1    bcd(2/3)   complete")
for n1 in range(10, 21):
    print(f"{n1:>2}   {table_bcd[n1]:.5f}    {table_fair[n1]:.5f}")

print("\nbalance probability by horizon:")
for m in (10, 50, 100, 500):
    print(f"  P(N1({m}) = {m//2}) = {unconditional_pmf(design, m, m//2):.6f}")

# conditioning on an interim count reshapes the final law
print("\nP(N1(30) = n1 | N1(10) = 3):")
for n1 in range(12, 19):
    pr = conditional_pmf(design, 30, n1, 10, 3)
    print(f"  n1={n1}: {pr:.5f}")

# the exact rational backend agrees with the float one
exact = unconditional_pmf(design, 12, 6, backend="exact")
approx = unconditional_pmf(design, 12, 6)
print(f"\nexact backend: P(N1(12)=6) = {exact} = {float(exact):.12f}")
print(f"float backend:               {approx:.12f}")

# probabilities sum to one even at trial-sized horizons
print(f"\nsum of pmf at n=500: {pmf_table(design, 500).sum():.12f}")
