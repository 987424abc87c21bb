# %% [markdown]
# # Laplace-GGN posterior of a small classifier
#
# Train a MAP network, build the Gauss-Newton precision, and look at how the
# predictive spread grows away from the data. The last cell checks the
# function-space (GP) view against the weight-space one.

# %%
import numpy as np

from boggn.dataset import labeled_from_arrays
from boggn.glm_gp import fit_linearized_gp, gp_predictive
from boggn.laplace import (TrainConfig, ggn_posterior, linearized_predictive,
                           log_marginal_likelihood, mc_predictive_batch, train_map)
from boggn.mlp import MlpSpec

rng = np.random.default_rng(0)
X = rng.uniform(-1, 1, size=(40, 1))
z = (X[:, 0] < -0.2).astype(int)
data = labeled_from_arrays(X, z)

spec = MlpSpec(1, (16, 16), "tanh")
params = train_map(spec, data, 0.1, TrainConfig(max_epochs=300, seed=0))
post = ggn_posterior(params, data, 0.1)
print("parameters:", spec.n_params, " log evidence:", log_marginal_likelihood(post, data))

# %%
grid = np.linspace(-3, 3, 7)[:, None]
mean, var = linearized_predictive(post, grid)
prob = mc_predictive_batch(post, grid, 2000, np.random.default_rng(1))
for g, m, v, p in zip(grid[:, 0], mean, var, prob):
    print(f"x={g:+.1f}  logit={m:+7.2f}  sd={np.sqrt(v):6.2f}  E[pi]={p:.3f}")

# %% [markdown]
# Same variances from the kernel `J J^T / delta` conditioned on the data.

# %%
gp = fit_linearized_gp(params, X, 0.1)
_, var_gp = gp_predictive(gp, grid)
print(np.max(np.abs(var - var_gp) / var_gp))
