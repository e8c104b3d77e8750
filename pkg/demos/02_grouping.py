# %% [markdown]
# # Grouping rows: K-means against score quantiles
#
# The model never sees individual rows. It sees a handful of group
# summaries: a mean, a covariance and the average baseline score. Here the
# two grouping routes are compared on a synthetic set.

# %%
import numpy as np

from stochastic_lr import MinGroupSizeError, fit_logistic, group_summaries, kmeans, \
    quantile_bins, score

np.set_printoptions(precision=3, suppress=True)
rng = np.random.default_rng(1)
X = rng.normal(size=(200, 3))
y = (rng.random(200) < 1 / (1 + np.exp(-(X @ [1.2, -0.8, 0.3])))).astype(float)
scores = score(fit_logistic(X, y).weights, X)

# %% [markdown]
# ## K-means on the features

# %%
km = kmeans(X, 4, seed=0)
print("sizes:", km.sizes(), " inertia per Lloyd pass:", np.round(km.inertia_history, 2))
for g, s in enumerate(group_summaries(X, scores, km)):
    print(g, "mean", s.mean, "score", round(s.mean_score, 3), "cov diag", np.diag(s.covariance))

# %% [markdown]
# ## Quantile bins on the scores
# Equal-count bins, so the group scores are spread evenly from low to high.

# %%
qb = quantile_bins(scores, 4)
print("sizes:", qb.sizes())
print("mean scores:", [round(s.mean_score, 3) for s in group_summaries(X, scores, qb)])

# %% [markdown]
# ## The two-member rule
# A group needs at least two rows for a covariance. Push k high enough and
# K-means leaves a singleton, which the sweep records as skipped.

# %%
for k in (20, 60, 100):
    try:
        kmeans(X, k, seed=0)
        print(k, "ok")
    except MinGroupSizeError as err:
        print(k, "skipped:", err)
