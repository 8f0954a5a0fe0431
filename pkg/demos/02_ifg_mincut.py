"""
Flow graphs of repair histories
===============================

Every repair history defines a capacitated graph; its min-cut bounds what a
data collector can read.  The worst history meets the functional bound.
"""
from mrgrc import (ResourceProfile, SystemParams, adversarial_trace, build_ifg,
                   construct_cut, converse_search, functional_bound, max_flow)

params = SystemParams(n=3, k=2, d=2, m=3, ell=0, t=2)
profile = ResourceProfile(2, 2)

# no repairs: the collector sees k*m*alpha symbols
print("fresh system:", max_flow(build_ifg(params, profile, [], (1, 2))))

trace = adversarial_trace(params)
for ev in trace:
    print(f"  cluster {ev.cluster} loses {ev.failed}, helped by {ev.helpers}")

graph = build_ifg(params, profile, trace, (1, 2))
print(f"{len(graph.vertices)} vertices, {len(graph.edges)} edges")
print("max-flow:", max_flow(graph), " bound:", functional_bound(params, profile))

# an explicit cut with the same value
cut = construct_cut(params, profile, graph)
for u, v, c in cut.edges:
    print(f"  {u} -> {v}  [{c}]")
print("cut value:", cut.value, "valid:", cut.valid)

# no short history does worse
report = converse_search(params, profile, max_batches=4)
print(f"searched {report.graphs_evaluated} graphs, minimum {report.minimum}")

# graphviz source for the graph with the cut in red
with open("ifg.dot", "w") as fh:
    fh.write(graph.to_dot(cut.edges))
