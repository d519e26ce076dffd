# # Equalizing quadratics is averaging
#
# When every node holds f_i(x) = (x - y_i)^2 / 2, keeping the pair's
# derivative sum fixed while making the two estimates equal has only one
# answer: the midpoint. So the equalizing engine on quadratics is plain
# randomized pairwise averaging, and the network settles on the mean of the y_i.

# %%
import numpy as np

from gossipopt import ExperimentConfig, SchedulerSpec, Simulation, TopologySpec, quadratic

ys = [-3.0, -1.0, 0.5, 2.0, 4.0]
specs = tuple(quadratic(y) for y in ys)
cfg = ExperimentConfig(
    specs=specs,
    topology=TopologySpec.ring(len(ys)),
    scheduler=SchedulerSpec("uniform-random-edge"),
    seed=1,
    stop_v_ratio=1e-20,
)
sim = Simulation(cfg)
print("start:", sim.state.estimates, " mean of y:", np.mean(ys))

# %% [markdown]
# Watch the first few gossips. Each one replaces a pair by its average.

# %%
for _ in range(6):
    rec = sim.step()
    i, j = rec.pair
    old = rec.before.estimates[i - 1], rec.before.estimates[j - 1]
    print(f"k={rec.row.k:2d} pair={rec.pair} ({old[0]:+.4f}, {old[1]:+.4f}) -> {rec.after.estimates[i - 1]:+.4f}"
          f"   V={rec.row.V:.4f}")

# %% [markdown]
# Run to the stopping threshold and compare with the mean.

# %%
while not sim.converged():
    sim.step()
summary = sim.summary(0.0)
print(f"{summary.iters_run} iterations, final V {summary.final_V:.2e}")
print("estimates:", np.round(sim.state.estimates, 12))
print("max |x - mean|:", max(abs(x - np.mean(ys)) for x in sim.state.estimates))
