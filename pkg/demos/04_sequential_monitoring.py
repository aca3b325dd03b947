#!/usr/bin/env python3
"""A sequentially monitored conditional randomization test, end to end.

Interim looks spend the type I error budget according to an
O'Brien-Fleming-like spending function of the randomization-based
information fraction; the boundary at each look is a quantile of the
look statistic over sequences drawn from the fully constrained reference
set that survived the earlier boundaries.
"""

from condrand import (
    DesignSpec,
    LookSchedule,
    SpendingFunction,
    estimate_boundaries,
    interim_statistic,
    sequential_decision,
    simulate_unconditional,
    spend,
)
from condrand.streams import substream

seed = 42
design = DesignSpec.bcd(0.75)
n = 120
look_positions = (60, 90, 120)

# a null trial: responses carry no treatment effect
responses = 1.0 + substream(seed, 0).standard_normal(n)
assignments = simulate_unconditional(design, n, substream(seed, 1))
counts = assignments.running_counts()
schedule = LookSchedule.from_pairs((r, int(counts[r - 1])) for r in look_positions)
print("look schedule:", schedule.to_json()["looks"])

sf = SpendingFunction("obf", alpha=0.05)
print("\ncumulative spend at t = 0.25, 0.5, 0.75, 1:",
      [round(spend(sf, t), 5) for t in (0.25, 0.5, 0.75, 1.0)])

result = estimate_boundaries(
    design, schedule, responses, sf, n_c=2500, rng=substream(seed, 2)
)
print("\ninformation fractions:", [round(t, 4) for t in result.info_fractions])
print("incremental levels:   ", [round(a, 5) for a in result.incremental_alpha])
print("boundaries:           ", [round(d, 2) for d in result.d])
print("sequences used:       ", result.n_used)

observed = [
    interim_statistic(responses, assignments, r) for r in look_positions
]
print("\nobserved look statistics:", [round(v, 2) for v in observed])
decision = sequential_decision(observed, result)
if decision.rejected:
    print(f"decision: reject at look {decision.look}")
else:
    print("decision: no boundary crossed (as expected under the null)")
