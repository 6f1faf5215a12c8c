"""
Walking through the swap loop
=============================

Four items on a line at 0, 1, 1.1 and 7 with predicted ratings 5, 4.9, 4.8
and 4.0.  The top-2 list {0, 1} is nearly a duplicate pair; ask for a
normalized diversity of at least 0.5.
"""

import numpy as np

from latentdiv import DiversifyConfig, FactorModel, diversify_user, max_illd_exact
from latentdiv.ranking import top_k_from_scores

P = np.array([[0.0, 1.0, 1.1, 7.0]])
scores = np.array([5.0, 4.9, 4.8, 4.0])
model = FactorModel(np.ones((1, 1)), P)

rec = top_k_from_scores(scores, 0, 2, exclude_observed=False)
best = max_illd_exact(P, 2, "euclidean")
print("start", rec.items, "best pair", best.subset, "value", best.value)

# %%
# Each round drops the member closest to the rest and adds the farthest
# item whose rating clears the current floor.  When nothing new qualifies
# the floor is lowered by the discount factor.
out = diversify_user(model, None, rec, DiversifyConfig(alpha=0.5, k=2, discount=0.9), best, scores=scores)
for step, (div, floor) in enumerate(zip(out.nilld_trace, out.floor_trace)):
    print(f"round {step}: diversity {div:.3f}  floor {floor:.3f}")
print(out.status.value, "final", out.final_list.items, f"after {out.iterations} rounds, {out.swaps} swap")

# %%
# A stricter threshold keeps going until the far pair {0, 3} is reached.
out = diversify_user(model, None, rec, DiversifyConfig(alpha=0.9, k=2, discount=0.9), best, scores=scores)
print("alpha 0.9:", out.status.value, out.final_list.items, f"diversity {out.final_nilld:.3f}")
