# %% [markdown]
# # From link statistics to a trust value
#
# A node judges each neighbour it forwards to from three ratios over a window:
# acknowledgements per packet sent, the neighbour's ack latency against the
# other neighbours, and the neighbour's remaining battery.  Each ratio is
# fuzzified on a four-label partition, the 64-rule table combines them, and the
# centroid of the result is the crisp trust.

# %%
import numpy as np

from tfcc import tables
from tfcc.fuzzy import fuzzify
from tfcc.trust import LinkStatsWindow, TrustMetrics, compute_trust_metrics, evaluate_trust

# %% [markdown]
# The partitions are built from overlapping crisp ranges.  Inside an overlap
# the two labels cross linearly, so degrees always sum to one.

# %%
for x in (0.0, 0.425, 0.5, 0.72, 1.0):
    print(f"alpha_T={x:<6} {fuzzify(tables.TRANSMISSION, x).as_dict()}")
print("latency labels:", tables.LATENCY.breakpoints)

# %% [markdown]
# Four neighbours seen from one evaluator over a five second window.

# %%
cases = {
    "well behaved": LinkStatsWindow(1, 2, sent=100, acked=100, subject_latency=0.02, peer_latency=0.02,
                                    window_start=0, window_end=5),
    "drops everything": LinkStatsWindow(1, 3, 100, 0, None, 0.02, 0, 5),
    "drops 40%": LinkStatsWindow(1, 4, 100, 60, 0.02, 0.02, 0, 5),
    "floods (3 acks per packet)": LinkStatsWindow(1, 5, 100, 300, 0.02, 0.02, 0, 5),
}
for name, window in cases.items():
    metrics = compute_trust_metrics(window, battery_now=9e4, battery_full=1e5)
    value = evaluate_trust(metrics)
    print(f"{name:<28} {metrics}  ->  trust {value:.3f} ({'trusted' if value >= 0.5 else 'untrusted'})")

# %% [markdown]
# The partial dropper stays trusted: its delivery ratio lands in the M label
# and its latency looks normal, which the rule table rates medium to high.
# Only a neighbour that goes silent (no acks, so the latency ratio hits its
# cap) or answers with surplus acks falls below the 0.5 threshold.

# %% [markdown]
# Battery dominates: a node running low is never trusted, whatever it does.

# %%
for energy in (0.2, 0.4, 0.6, 0.9):
    print(energy, round(evaluate_trust(TrustMetrics(1.0, 0.9, energy)), 3))

# %% [markdown]
# Trust rises with the delivery ratio at fixed latency and energy.

# %%
sweep = [evaluate_trust(TrustMetrics(a, 0.8, 0.9)) for a in np.linspace(0, 1, 11)]
print(np.round(sweep, 3))
