"""Information flow graphs for batch repair and their min-cuts.

Each physical cluster ``i`` appears once per incarnation ``tau``; a batch
repair deactivates the current incarnation and creates the next one.  Node
``j`` of an incarnation is split into ``in``/``out`` vertices joined by an
``alpha`` edge, every ``out`` feeds the incarnation's ``ext`` vertex, and a
repaired incarnation has a ``rep`` vertex that collects ``beta`` from each
helper cluster's active ``ext`` and ``alpha`` from each local helper.
Surviving nodes are carried into the new incarnation by an infinite edge
``out(tau-1) -> in(tau)`` so their ``alpha`` bottleneck is counted once.

Cluster and node indices are 1-based throughout.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .bounds import functional_bound
from .params import ResourceProfile, SystemParams, decompose

INT32_MAX = 2**31 - 1


class InvalidTrace(ValueError):
    pass


class FlowOverflow(OverflowError):
    """Scaled capacities do not fit the max-flow solver's integer range."""


class CutInvalid(RuntimeError):
    pass


class BudgetExceeded(RuntimeError):
    def __init__(self, report):
        super().__init__(
            f"budget of {report.budget} graphs exhausted; partial minimum {report.minimum}"
        )
        self.report = report


# -- traces ------------------------------------------------------------------

@dataclass(frozen=True)
class RepairEvent:
    cluster: int
    failed: tuple
    helpers: tuple
    locals: tuple = ()

    def __post_init__(self):
        for name in ("failed", "helpers", "locals"):
            value = tuple(int(v) for v in getattr(self, name))
            if len(set(value)) != len(value):
                raise InvalidTrace(f"duplicate entries in {name}: {value}")
            object.__setattr__(self, name, tuple(sorted(value)))
        object.__setattr__(self, "cluster", int(self.cluster))

    def check(self, params: SystemParams):
        i = self.cluster
        if not 1 <= i <= params.n:
            raise InvalidTrace(f"cluster {i} outside [1, {params.n}]")
        if len(self.failed) != params.t:
            raise InvalidTrace(f"|failed| = {len(self.failed)} != t = {params.t}")
        if not all(1 <= j <= params.m for j in self.failed + self.locals):
            raise InvalidTrace(f"node index outside [1, {params.m}] in {self}")
        if len(self.helpers) != params.d:
            raise InvalidTrace(f"|helpers| = {len(self.helpers)} != d = {params.d}")
        if i in self.helpers:
            raise InvalidTrace(f"cluster {i} cannot help its own repair")
        if not all(1 <= h <= params.n for h in self.helpers):
            raise InvalidTrace(f"helper cluster outside [1, {params.n}] in {self}")
        if len(self.locals) != params.ell:
            raise InvalidTrace(f"|locals| = {len(self.locals)} != ell = {params.ell}")
        if set(self.locals) & set(self.failed):
            raise InvalidTrace(f"locals {self.locals} overlap failed {self.failed}")

    def key(self):
        return (self.cluster, self.failed, self.helpers, self.locals)

    def to_dict(self):
        return {
            "cluster": self.cluster,
            "failed": list(self.failed),
            "helpers": list(self.helpers),
            "locals": list(self.locals),
        }

    @classmethod
    def from_dict(cls, raw):
        return cls(raw["cluster"], raw["failed"], raw["helpers"], raw.get("locals", ()))


@dataclass(frozen=True)
class FailureTrace:
    events: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def counters(self, n):
        """Number of batch repairs ``f_i`` per cluster, as a dict keyed 1..n."""
        f = {i: 0 for i in range(1, n + 1)}
        for ev in self.events:
            f[ev.cluster] += 1
        return f

    def check(self, params):
        for ev in self.events:
            ev.check(params)

    def to_list(self):
        return [ev.to_dict() for ev in self.events]

    @classmethod
    def from_list(cls, raw):
        return cls(tuple(RepairEvent.from_dict(r) for r in raw))


def load_trace(path):
    """Read a trace file: either a list of events or ``{"trace": [...], "collectors": [...]}``.

    Returns ``(trace, collectors or None)``.
    """
    with open(path) as fh:
        raw = json.load(fh)
    if isinstance(raw, list):
        return FailureTrace.from_list(raw), None
    collectors = raw.get("collectors")
    return FailureTrace.from_list(raw.get("trace", [])), (
        tuple(collectors) if collectors is not None else None
    )


# -- graphs ------------------------------------------------------------------

SOURCE = ("S",)
SINK = ("T",)


def _fmt_vertex(v):
    if v in (SOURCE, SINK):
        return v[0]
    kind, i, tau = v[0], v[1], v[2]
    if kind in ("in", "out"):
        return f"{kind}_{i}_{v[3]}({tau})"
    return f"{kind}_{i}({tau})"


def _fmt_cap(cap):
    return "inf" if cap is None else str(cap)


@dataclass
class FlowGraph:
    vertices: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (u_label, v_label, Fraction | None)
    _index: dict = field(default_factory=dict, repr=False)
    _edge_index: dict = field(default_factory=dict, repr=False)

    def add_vertex(self, label):
        if label in self._index:
            raise ValueError(f"duplicate vertex {label}")
        self._index[label] = len(self.vertices)
        self.vertices.append(label)
        return label

    def add_edge(self, u, v, cap):
        if u not in self._index or v not in self._index:
            raise ValueError(f"edge {u} -> {v} references unknown vertex")
        if (u, v) in self._edge_index:
            raise ValueError(f"parallel edge {u} -> {v}")
        self._edge_index[(u, v)] = len(self.edges)
        self.edges.append((u, v, None if cap is None else Fraction(cap)))

    def capacity(self, u, v):
        return self.edges[self._edge_index[(u, v)]][2]

    def has_edge(self, u, v):
        return (u, v) in self._edge_index

    def index(self, label):
        return self._index[label]

    def edge_lines(self):
        return [f"{_fmt_vertex(u)} -> {_fmt_vertex(v)} [{_fmt_cap(c)}]" for u, v, c in self.edges]

    def to_dot(self, highlight=()):
        cut = {(u, v) for u, v, *_ in highlight}
        lines = ["digraph ifg {", "  rankdir=LR;"]
        for v in self.vertices:
            lines.append(f'  "{_fmt_vertex(v)}";')
        for u, v, c in self.edges:
            style = ', color=red, penwidth=2' if (u, v) in cut else ""
            lines.append(f'  "{_fmt_vertex(u)}" -> "{_fmt_vertex(v)}" [label="{_fmt_cap(c)}"{style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _check_collectors(params, collectors):
    collectors = tuple(sorted(int(c) for c in collectors))
    if len(collectors) != params.k or len(set(collectors)) != params.k:
        raise InvalidTrace(f"need {params.k} distinct collector clusters, got {collectors}")
    if not all(1 <= c <= params.n for c in collectors):
        raise InvalidTrace(f"collector outside [1, {params.n}]: {collectors}")
    return collectors


def _add_incarnation(g, params, i, tau):
    if tau > 0:
        g.add_vertex(("rep", i, tau))
    for j in range(1, params.m + 1):
        g.add_vertex(("in", i, tau, j))
    for j in range(1, params.m + 1):
        g.add_vertex(("out", i, tau, j))
    g.add_vertex(("ext", i, tau))


def build_ifg(params: SystemParams, profile: ResourceProfile, trace, collectors) -> FlowGraph:
    alpha, beta = profile.integral()
    trace = trace if isinstance(trace, FailureTrace) else FailureTrace(tuple(trace))
    trace.check(params)
    collectors = _check_collectors(params, collectors)
    n, m = params.n, params.m

    g = FlowGraph()
    g.add_vertex(SOURCE)
    active = {}
    for i in range(1, n + 1):
        _add_incarnation(g, params, i, 0)
        for j in range(1, m + 1):
            g.add_edge(SOURCE, ("in", i, 0, j), None)
            g.add_edge(("in", i, 0, j), ("out", i, 0, j), alpha)
            g.add_edge(("out", i, 0, j), ("ext", i, 0), alpha)
        active[i] = 0

    for ev in trace:
        i = ev.cluster
        prev, tau = active[i], active[i] + 1
        _add_incarnation(g, params, i, tau)
        rep = ("rep", i, tau)
        for h in ev.helpers:
            g.add_edge(("ext", h, active[h]), rep, beta)
        for j in ev.locals:
            g.add_edge(("out", i, prev, j), rep, alpha)
        failed = set(ev.failed)
        for j in range(1, m + 1):
            if j in failed:
                g.add_edge(rep, ("in", i, tau, j), alpha)
            else:
                g.add_edge(("out", i, prev, j), ("in", i, tau, j), None)
            g.add_edge(("in", i, tau, j), ("out", i, tau, j), alpha)
            g.add_edge(("out", i, tau, j), ("ext", i, tau), alpha)
        active[i] = tau

    g.add_vertex(SINK)
    for c in collectors:
        g.add_edge(("ext", c, active[c]), SINK, None)
    return g


def _scaled(graph):
    finite = [c for _, _, c in graph.edges if c is not None]
    scale = math.lcm(*(c.denominator for c in finite)) if finite else 1
    ints = [None if c is None else int(c * scale) for _, _, c in graph.edges]
    inf = sum(c for c in ints if c is not None) + 1
    if inf > INT32_MAX:
        raise FlowOverflow(f"scaled capacity total {inf} exceeds {INT32_MAX}")
    return [inf if c is None else c for c in ints], scale


def max_flow(graph: FlowGraph) -> Fraction:
    """Exact S-T max-flow (= min-cut) value in the graph's own units."""
    caps, scale = _scaled(graph)
    nv = len(graph.vertices)
    rows = [graph.index(u) for u, _, _ in graph.edges]
    cols = [graph.index(v) for _, v, _ in graph.edges]
    mat = csr_matrix(
        (np.asarray(caps, dtype=np.int32), (rows, cols)), shape=(nv, nv), dtype=np.int32
    )
    res = maximum_flow(mat, graph.index(SOURCE), graph.index(SINK), method="dinic")
    return Fraction(int(res.flow_value), scale)


def is_cut(graph: FlowGraph, removed) -> bool:
    """True iff deleting the ``removed`` edges leaves no S-T path."""
    removed = {(e[0], e[1]) for e in removed}
    adj = {}
    for u, v, c in graph.edges:
        if (u, v) not in removed and (c is None or c > 0):
            adj.setdefault(u, []).append(v)
    seen = {SOURCE}
    queue = deque([SOURCE])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return SINK not in seen


# -- adversarial sequence and explicit cut -----------------------------------

def adversarial_trace(params: SystemParams) -> FailureTrace:
    """Repair sequence whose IFG has a cut of value ``B_F``.

    Clusters ``1..k`` each see ``a + 1`` batches: first the last ``t`` of the
    non-local nodes, then consecutive groups of ``t`` from node 1.  The last
    ``ell`` nodes are the local helpers; cluster ``i`` is helped by clusters
    ``1..i-1`` and ``n-(d-i)..n``.
    """
    n, k, d, m, ell, t = params.astuple()
    a = decompose(params).a
    locals_ = tuple(range(m - ell + 1, m + 1))
    events = []
    for i in range(1, k + 1):
        helpers = tuple(range(1, i)) + tuple(range(n - (d - i), n + 1))
        batches = [tuple(range(m - ell - t + 1, m - ell + 1))]
        batches += [tuple(range((u - 1) * t + 1, u * t + 1)) for u in range(1, a + 1)]
        events.extend(RepairEvent(i, r, helpers, locals_) for r in batches)
    return FailureTrace(tuple(events))


@dataclass(frozen=True)
class CutCertificate:
    edges: tuple  # ((u, v, capacity), ...)
    value: Fraction
    valid: bool


def construct_cut(params: SystemParams, profile: ResourceProfile, graph=None) -> CutCertificate:
    """The explicit cut on the adversarial IFG (collectors ``1..k``).

    Local nodes are cut at incarnation 0; with infinite survivor edges this is
    the only placement of their ``alpha`` edges that also separates the
    repair vertices fed by them.  Each batch contributes the cheaper of its
    ``rep -> in`` edges or its non-collector helper edges.
    """
    n, k, d, m, ell, t = params.astuple()
    a, b = decompose(params).a, decompose(params).b
    alpha, beta = profile.integral()
    if graph is None:
        graph = build_ifg(params, profile, adversarial_trace(params), range(1, k + 1))
    chosen = []

    def take(u, v):
        chosen.append((u, v, graph.capacity(u, v)))

    for i in range(1, k + 1):
        outside = range(n - (d - i), n + 1)
        for j in range(m - ell + 1, m + 1):
            take(("in", i, 0, j), ("out", i, 0, j))
        groups = [(u + 1, range((u - 1) * t + 1, u * t + 1)) for u in range(1, a + 1)]
        if b:
            groups.append((1, range(a * t + 1, m - ell + 1)))
        for tau, nodes in groups:
            if len(nodes) * alpha <= (d - i + 1) * beta:
                for j in nodes:
                    take(("rep", i, tau), ("in", i, tau, j))
            else:
                for h in outside:
                    take(("ext", h, 0), ("rep", i, tau))
    value = sum((c for _, _, c in chosen), Fraction(0))
    valid = is_cut(graph, chosen)
    if not valid:
        raise CutInvalid("constructed edge set does not separate S from T")
    return CutCertificate(tuple(chosen), value, valid)


# -- converse search ---------------------------------------------------------

SYMMETRIC = "symmetric"
EXHAUSTIVE = "exhaustive"


@dataclass
class SearchReport:
    minimum: Fraction | None
    argmin_trace: FailureTrace | None
    argmin_collectors: tuple | None
    bound: Fraction
    graphs_evaluated: int
    traces_evaluated: int
    below_bound: int
    policy: str
    max_batches: int
    budget: int
    complete: bool

    @property
    def attains_bound(self):
        return self.minimum == self.bound and self.below_bound == 0

    def to_dict(self):
        return {
            "minimum": str(self.minimum),
            "bound": str(self.bound),
            "attains_bound": self.attains_bound,
            "below_bound": self.below_bound,
            "graphs_evaluated": self.graphs_evaluated,
            "traces_evaluated": self.traces_evaluated,
            "policy": self.policy,
            "max_batches": self.max_batches,
            "complete": self.complete,
            "argmin_trace": self.argmin_trace.to_list() if self.argmin_trace else None,
            "argmin_collectors": list(self.argmin_collectors) if self.argmin_collectors else None,
        }


def _candidate_events(params):
    n, k, d, m, ell, t = params.astuple()
    out = []
    for i in range(1, n + 1):
        others = [c for c in range(1, n + 1) if c != i]
        for failed in itertools.combinations(range(1, m + 1), t):
            rest = [j for j in range(1, m + 1) if j not in failed]
            for helpers in itertools.combinations(others, d):
                for locals_ in itertools.combinations(rest, ell):
                    out.append(RepairEvent(i, failed, helpers, locals_))
    return out


def _symmetry_group(params):
    """Cluster relabelings fixing the collector set ``{1..k}``, paired with
    the node relabelings available inside each cluster."""
    n, k, m = params.n, params.k, params.m
    cluster_perms = []
    for p1 in itertools.permutations(range(1, k + 1)):
        for p2 in itertools.permutations(range(k + 1, n + 1)):
            cluster_perms.append(dict(zip(range(1, n + 1), p1 + p2)))
    node_perms = [dict(zip(range(1, m + 1), p)) for p in itertools.permutations(range(1, m + 1))]
    return cluster_perms, node_perms


def _image_key(ev, cperm, nperm):
    return (
        cperm[ev.cluster],
        tuple(sorted(nperm[j] for j in ev.failed)),
        tuple(sorted(cperm[h] for h in ev.helpers)),
        tuple(sorted(nperm[j] for j in ev.locals)),
    )


def _is_canonical(events, group):
    """True iff ``events`` is lexicographically minimal in its orbit."""
    cluster_perms, node_perms = group
    keys = [ev.key() for ev in events]
    clusters = sorted({ev.cluster for ev in events})
    for cperm in cluster_perms:
        for choice in itertools.product(node_perms, repeat=len(clusters)):
            nmap = dict(zip(clusters, choice))
            for ev, key in zip(events, keys):
                img = _image_key(ev, cperm, nmap[ev.cluster])
                if img < key:
                    return False
                if img > key:
                    break
    return True


def enumerate_traces(params, max_batches, policy=SYMMETRIC):
    """Yield every trace of at most ``max_batches`` repairs.

    Under ``symmetric`` only lexicographically minimal representatives of
    each relabeling orbit are produced (canonicity is prefix-closed, so
    non-canonical prefixes are pruned).
    """
    if policy not in (SYMMETRIC, EXHAUSTIVE):
        raise ValueError(f"unknown policy {policy!r}")
    candidates = _candidate_events(params)
    group = _symmetry_group(params) if policy == SYMMETRIC else None

    def extend(prefix):
        yield FailureTrace(tuple(prefix))
        if len(prefix) == max_batches:
            return
        for ev in candidates:
            nxt = prefix + [ev]
            if group is not None and not _is_canonical(nxt, group):
                continue
            yield from extend(nxt)

    yield from extend([])


def _evaluate(args):
    params, profile, trace, collector_sets = args
    return [max_flow(build_ifg(params, profile, trace, c)) for c in collector_sets]


def converse_search(
    params: SystemParams,
    profile: ResourceProfile,
    max_batches: int,
    policy=SYMMETRIC,
    budget=10**6,
    workers=1,
) -> SearchReport:
    """Minimum max-flow over all traces up to ``max_batches`` and all collectors.

    Under ``symmetric`` the collector set is fixed to ``{1..k}`` (every
    collector set is a cluster relabeling of it).  Raises
    :class:`BudgetExceeded` carrying the partial report when more than
    ``budget`` graphs would be evaluated.
    """
    bound_value = functional_bound(params, profile)
    if policy == SYMMETRIC:
        collector_sets = [tuple(range(1, params.k + 1))]
    else:
        collector_sets = list(itertools.combinations(range(1, params.n + 1), params.k))
    report = SearchReport(None, None, None, bound_value, 0, 0, 0, policy, max_batches, budget, False)

    def absorb(trace, values):
        for coll, val in zip(collector_sets, values):
            report.graphs_evaluated += 1
            if val < bound_value:
                report.below_bound += 1
            if report.minimum is None or val < report.minimum:
                report.minimum, report.argmin_trace, report.argmin_collectors = val, trace, coll
        report.traces_evaluated += 1

    per = len(collector_sets)
    batch, overflow = [], False
    for trace in enumerate_traces(params, max_batches, policy):
        if (len(batch) + 1) * per > budget:
            overflow = True
            break
        if workers <= 1:
            absorb(trace, _evaluate((params, profile, trace, collector_sets)))
        batch.append(trace)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            jobs = ((params, profile, tr, collector_sets) for tr in batch)
            for trace, values in zip(batch, pool.map(_evaluate, jobs, chunksize=64)):
                absorb(trace, values)
    if overflow:
        raise BudgetExceeded(report)
    report.complete = True
    return report
