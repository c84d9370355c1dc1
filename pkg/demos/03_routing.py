# %% [markdown]
# # Routing over trusted links
#
# Links are directed: a node may forward to a neighbour only while it trusts
# that neighbour.  Routes are shortest in hops; among equal-length routes the
# one whose weakest link is most trusted wins.

# %%
import numpy as np

from tfcc.routing import build_trusted_graph, compute_routes

rng = np.random.default_rng(1)
positions = {0: (10.0, 10.0)}
positions.update({i: tuple(rng.uniform(0, 20, 2)) for i in range(1, 16)})
trust = {(u, v): float(rng.uniform(0.3, 1.0)) for u in positions for v in positions if u != v}
bad = {4, 9}  # blocked as malicious

graph = build_trusted_graph(positions, lambda u, v: trust[(u, v)], radio_range=7.0, blocked=bad)
table = compute_routes(graph, sink=0)
print(f"{len(graph.edges)} trusted directed links")
for node in sorted(positions):
    r = table[node]
    path = table.path(node) if r.reachable else "unreachable"
    print(f"node {node:>2}: hops {r.hop_count:>2}  bottleneck {r.path_min_trust:.2f}  {path}")
