"""
Training a factor model and ranking items
=========================================

Fit user and item vectors by alternating least squares, check the held-out
error against the simplest possible predictor, and read off one user's list.
"""

import numpy as np

from _data import ratings
from latentdiv import TrainConfig, rmse, split_holdout, top_k, train

ds = ratings()
split = split_holdout(ds, test_fraction=0.2, seed=0)
print(f"{ds.n_users} users, {ds.n_items} items, {split.test.n_ratings} held out")

# %%
# A heavier ridge weight keeps the 16-dimensional model from memorizing the
# sparse training rows.
model = train(split.train, TrainConfig(d=16, lambda_q=10.0, lambda_p=10.0, max_iters=30, seed=1))
print("loss per iteration:", np.round(model.meta.loss_history[:5], 1), "...")

# %%
# The reference point is predicting the training mean for everyone.
mean = split.train.ratings.mean()
flat = np.sqrt(np.mean((split.test.ratings - mean) ** 2))
print(f"held-out rmse {rmse(model, split.test):.4f}  (global mean: {flat:.4f})")

# %%
# Recommendations skip what the user already rated.
rec = top_k(model, split.train, 0, 10)
print("user", ds.user_ids[0], "->", [ds.item_ids[j] for j in rec.items])
print("predicted", np.round(rec.scores, 2))
