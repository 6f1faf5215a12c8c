"""
How spread out is a list?
=========================

Diversity of a list is the summed pairwise distance of its item vectors,
divided by the largest such sum any list of the same length could reach.
"""

import itertools

import numpy as np

from latentdiv import illd_sum, max_illd_exact, max_illd_greedy

rng = np.random.default_rng(4)
P = rng.normal(size=(2, 12))  # 12 items in a 2-d latent space

# %%
# The best possible 4-item list, found by trying all C(12, 4) = 495 subsets,
# and the greedy farthest-point search with swaps that replaces it on large
# catalogues.
exact = max_illd_exact(P, 4, "euclidean")
greedy = max_illd_greedy(P, 4, "euclidean")
print(f"exact  {exact.value:.4f} {exact.subset}")
print(f"greedy {greedy.value:.4f} {greedy.subset}")

# %%
# Normalized scores of a few lists.  A list of near neighbours scores low.
near = sorted(range(12), key=lambda j: np.linalg.norm(P[:, j] - P[:, 0]))[:4]
for name, items in [("neighbours of 0", near), ("first four", range(4)), ("best", exact.subset)]:
    print(f"{name:16s} {illd_sum(items, P, 'euclidean') / exact.value:.3f}")

# %%
# Across every subset the normalized value stays in [0, 1].
values = [illd_sum(s, P, "euclidean") / exact.value for s in itertools.combinations(range(12), 4)]
print(f"all 495 lists: min {min(values):.3f}, median {np.median(values):.3f}, max {max(values):.3f}")
