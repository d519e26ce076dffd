# # What each engine puts on the wire
#
# The equalizing engine needs one node to know both objectives, so a pair
# that gossips for the first time ships an objective descriptor. After
# that every iteration costs two real numbers.
#
# The bisectioning engine never sends an objective. It pays with real
# numbers (3 + R or 4 + R per iteration) and R one-bit LEFT/RIGHT tokens,
# and it only gets the pair within 2^-R of each other per iteration.

# %%
from pathlib import Path

from gossipopt import compare_algorithms, init_state, load_config, pb_step

cfg = load_config(Path(__file__).resolve().parents[1] / "suites" / "default" / "pe-ring-mixed.toml")
rows = compare_algorithms(cfg, [1, 2, 4, 8])
print(f"{'algo':<5}{'R':>3}{'iters':>7}{'reals':>8}{'funcs':>7}{'tokens':>8}{'reals/it':>10}")
for r in rows:
    print(f"{r['algorithm']:<5}{r['rounds'] or '-':>3}{r['iterations']:>7}{r['tx_reals']:>8}"
          f"{r['tx_functions']:>7}{r['tx_tokens']:>8}{r['reals_per_iteration']:>10.2f}")

# %% [markdown]
# More rounds per iteration means fewer iterations, but not for free. Look
# at one bisectioning transcript to see where the numbers go.

# %%
state = init_state(cfg.specs)
_, transcript = pb_step(state, (5, 6), rounds=3)
for m in transcript.messages:
    print(f"  {m.sender:>2} -> {m.receiver:<2} {m.kind:<17} {m.value}")
print("branch:", transcript.branch, " reals:", transcript.real_message_count, " tokens:", transcript.token_count)
print(f"gap {transcript.gap_before:.4f} -> {transcript.gap_after:.6f} (bound {transcript.gap_before / 8:.6f})")
