# # A gossip pattern that never finishes
#
# Convergence needs the pairs that keep gossiping to connect the whole
# network. Split ten nodes into two groups that only talk internally and
# each group agrees on its own optimum, not the global one. The
# derivative sum within each group is still conserved, so V stops
# falling at a strictly positive value.

# %%
from gossipopt import (
    ExperimentConfig,
    SchedulerSpec,
    Simulation,
    TopologySpec,
    exp_linear,
    quadratic,
    quartic,
    solve_global_optimum,
    weighted_quadratic,
    window_connected,
)

specs = (
    quadratic(-2.0), weighted_quadratic(2.0, -1.0), quartic(0.5, 1.0, -1.5), exp_linear(1.0, 0.5), quadratic(-3.0),
    quadratic(2.5), weighted_quadratic(0.5, 3.0), quartic(0.1, 0.5, 2.0), exp_linear(0.5, 6.0), quadratic(1.5),
)
groups = ((1, 2, 3, 4, 5), (6, 7, 8, 9, 10))
cfg = ExperimentConfig(
    specs=specs,
    topology=TopologySpec.complete(10),
    scheduler=SchedulerSpec("clique-partition", groups=groups),
    seed=8,
    max_iters=4000,
    window=4000,
)
sim = Simulation(cfg)
history = [sim.V0]
while sim.k < cfg.max_iters and not sim.converged():
    history.append(sim.step().row.V)

for g in groups:
    opt = solve_global_optimum([specs[v - 1] for v in g])
    est = [sim.state.estimates[v - 1] for v in g]
    print(f"group {g}: local optimum {opt:+.6f}, estimates within {max(abs(x - opt) for x in est):.1e}")
print(f"global optimum {sim.x_star:+.6f}")
print(f"V: {sim.V0:.4f} -> {history[-1]:.4f} ({history[-1] / sim.V0:.1%} of V0)")
print("change over the last 100 steps:", max(history[-101:]) - min(history[-101:]))
print("pattern window-connected:", window_connected(sim.scheduler.history, cfg.effective_window, 10))

# %% [markdown]
# Add one bridging link to the eligible set and the stall disappears.

# %%
bridged = ExperimentConfig(specs=specs, topology=TopologySpec.complete(10),
                           scheduler=SchedulerSpec("clique-partition", groups=((1, 2, 3, 4, 5, 6, 7, 8, 9, 10),)),
                           seed=8, max_iters=4000)
sim2 = Simulation(bridged)
while sim2.k < bridged.max_iters and not sim2.converged():
    sim2.step()
print(f"one group: converged={sim2.converged()} after {sim2.k} steps")
