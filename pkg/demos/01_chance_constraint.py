# %% [markdown]
# # From a probability bound to an ellipsoid
#
# Each group of rows gets the requirement that its linear predictor stays
# within ``alpha`` of its expectation with probability at least ``beta``.
# With Gaussian rows this turns into ``w' V w <= r**2`` where
# ``r = alpha / probit((1 + beta) / 2)``. This script walks through that
# radius, then watches the weights shrink as the radius closes.

# %%
import numpy as np

from stochastic_lr import ChanceConfig, GroupSummary, assemble_p4, assemble_reduced, \
    constraint_radius, fit_logistic, probit, solve_slr

np.set_printoptions(precision=4, suppress=True)

# %% [markdown]
# ## The radius as a function of (alpha, beta)
# Wider tolerance means a bigger radius; demanding more probability shrinks it.

# %%
for beta in (0.05, 0.5, 0.855, 0.99):
    row = [constraint_radius(ChanceConfig(a, beta)) for a in (0.3, 1.0, 4.5)]
    print(f"beta={beta:<6} probit level={probit((1 + beta) / 2):.4f}  r =", np.round(row, 4))

# %% [markdown]
# ## A small problem: five groups in two features

# %%
rng = np.random.default_rng(0)
groups = []
for g in range(5):
    A = rng.normal(size=(2, 2))
    mean = rng.normal(size=2)
    ybar = 1 / (1 + np.exp(-(mean @ [2.0, -1.0])))
    groups.append(GroupSummary(mean, A @ A.T + 0.1 * np.eye(2), float(ybar), 10))

free = fit_logistic(np.array([g.mean for g in groups]), np.array([g.mean_score for g in groups]))
print("unconstrained weights:", free.weights.to_array())

# %% [markdown]
# Closing the radius pulls the coefficient block towards zero. The
# intercept is never constrained and ends at the logit of the average target.

# %%
for alpha in (10.0, 2.0, 0.5, 0.1, 0.0):
    rep = solve_slr(assemble_reduced(groups, ChanceConfig(alpha, 0.6)))
    print(f"alpha={alpha:<5} status={rep.status.value:<8} w={rep.weights.to_array()} "
          f"J={rep.objective:.5f} newton steps={rep.newton_total_iters}")

ybar = np.mean([g.mean_score for g in groups])
print("logit of mean target:", np.log(ybar / (1 - ybar)))

# %% [markdown]
# ## Lifted encoding check
# The lifted vector keeps one auxiliary per group, tied to the weights by a
# pair of linear inequalities. At the reduced optimum those ties hold
# exactly and the objective values agree.

# %%
config = ChanceConfig(0.5, 0.6)
rep = solve_slr(assemble_reduced(groups, config))
p4 = assemble_p4(groups, config)
Z = np.concatenate([rep.weights.to_array(), rep.epsilons])
print("lifted objective:", p4.objective(Z), " reduced objective:", rep.objective)
for name, values in p4.constraints(Z).items():
    print(f"{name:<11} max = {values.max(): .3e}")
