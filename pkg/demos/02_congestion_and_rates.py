# %% [markdown]
# # Congestion index, congestion/trust metric and rate grants
#
# A forwarding node keeps one queue per child plus one for its own traffic.
# Each queue yields a congestion level; the geometric mean of their complements
# is the node's complementary index.  Combined with the node's trust it gives
# sigma, which shrinks the capacity the node hands out to its queues.

# %%
from tfcc import tables
from tfcc.congestion import LOCAL, QueueState, compute_sigma_ct, node_cci, queue_congestion
from tfcc.fuzzy import fuzzify
from tfcc.rate import adjust_on_queue, allocate_rates, assign_priorities

CAP, CMIN, CMAX = 40, 10, 34

# %%
for occupancy in (0, 10, 22, 34, 35):
    q = QueueState(7, LOCAL, occupancy, CAP, CMIN, CMAX)
    print(f"occupancy {occupancy:>2} -> I_k = {queue_congestion(q):.3f}")

# %% [markdown]
# A node with a quiet local queue and two children, one of them backing up.

# %%
queues = [QueueState(7, LOCAL, 3, CAP, CMIN, CMAX), QueueState(7, 12, 18, CAP, CMIN, CMAX),
          QueueState(7, 15, 30, CAP, CMIN, CMAX)]
per_queue = [queue_congestion(q) for q in queues]
cci, index = node_cci(per_queue)
print("per queue", [round(x, 3) for x in per_queue], "CCI", round(cci, 3), "index", round(index, 3))
for trust in (0.6, 0.9):
    print(f"trust {trust}: sigma = {compute_sigma_ct(index, fuzzify(tables.TRUST, trust)):.3f}")

# %% [markdown]
# Priorities: local traffic first, then children by the trust the parent has
# in them.  The sigma-scaled capacity is split in proportion to those weights.

# %%
assignment = assign_priorities(7, [(12, 0.8), (15, 0.6), (18, 0.55)])
print(assignment.entries)
for sigma in (0.0, 0.5, 1.0):
    alloc = allocate_rates(assignment, capacity=24, sigma_ct=sigma)
    print(f"sigma {sigma}: {{" + ", ".join(f"{k}: {v:.2f}" for k, v in alloc.rates.items()) + "}")

# %% [markdown]
# Between ticks each child's sending rate follows its queue at the parent:
# halve above C_max, add one packet/s at or below C_min, hold in between.

# %%
rate = 8.0
for occupancy in (36, 36, 20, 5, 5, 5):
    rate = adjust_on_queue(rate, QueueState(7, 12, occupancy, CAP, CMIN, CMAX), grant=9.0)
    print(f"queue {occupancy:>2} -> rate {rate}")
