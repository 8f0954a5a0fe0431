"""Functional repair with random linear network coding.

Storage is tracked as coefficient matrices: node ``(i, j)`` holds an
``alpha x B`` matrix whose rows are the linear combinations of the ``B``
message symbols it stores.  A file is recoverable from a set of clusters iff
their stacked rows have rank ``B``.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .gf import GF65536, GaloisField, get_field
from .ifg import FailureTrace, InvalidTrace, RepairEvent
from .params import ResourceProfile, SystemParams

MAX_RESAMPLE = 8


class DegenerateInit(RuntimeError):
    pass


class InvalidEvent(InvalidTrace):
    pass


@dataclass(frozen=True)
class SystemState:
    params: SystemParams
    alpha: int
    beta: int
    file_size: int
    field: GaloisField
    nodes: np.ndarray  # (n, m, alpha, B)

    def cluster_rows(self, i):
        """All ``m * alpha`` rows of cluster ``i`` (1-based)."""
        return self.nodes[i - 1].reshape(-1, self.file_size)

    def node_rows(self, i, j):
        return self.nodes[i - 1, j - 1]

    def stack(self, clusters):
        return np.vstack([self.cluster_rows(i) for i in clusters])

    def rank(self, clusters):
        return self.field.rank(self.stack(clusters))


def collect(state: SystemState, clusters) -> bool:
    return state.rank(clusters) == state.file_size


def _all_collect(state):
    k = state.params.k
    return all(collect(state, s) for s in itertools.combinations(range(1, state.params.n + 1), k))


def init_storage(params, profile, file_size, rng, field=GF65536) -> SystemState:
    """Random initial encoding satisfying data collection for every k-set.

    Resamples up to ``MAX_RESAMPLE`` times before raising
    :class:`DegenerateInit`.
    """
    alpha, beta = profile.integral()
    field = get_field(field)
    rng = np.random.default_rng(rng)
    if file_size < 1:
        raise ValueError("file size must be >= 1")
    if file_size > params.k * params.m * alpha:
        raise DegenerateInit(
            f"B={file_size} exceeds k*m*alpha={params.k * params.m * alpha}; "
            "no k clusters can hold the file"
        )
    shape = (params.n, params.m, alpha, file_size)
    for _ in range(1 + MAX_RESAMPLE):
        state = SystemState(params, alpha, beta, file_size, field, field.random(shape, rng))
        if _all_collect(state):
            return state
    raise DegenerateInit(
        f"data collection failed after {MAX_RESAMPLE} resamples (B={file_size}, {field.name})"
    )


def repair_pool(state: SystemState, event: RepairEvent, rng):
    """Rows available to the repair unit: ``beta`` random combinations of
    each helper cluster's ``m * alpha`` rows, plus every local node's rows."""
    f = state.field
    parts = []
    for h in event.helpers:
        rows = state.cluster_rows(h)
        parts.append(f.matmul(f.random((state.beta, rows.shape[0]), rng), rows))
    for j in event.locals:
        parts.append(state.node_rows(event.cluster, j))
    return np.vstack(parts)


def repair_batch(state: SystemState, event: RepairEvent, rng) -> SystemState:
    try:
        event.check(state.params)
    except InvalidTrace as exc:
        raise InvalidEvent(str(exc)) from None
    rng = np.random.default_rng(rng)
    f = state.field
    pool = repair_pool(state, event, rng)
    nodes = state.nodes.copy()
    for j in event.failed:
        nodes[event.cluster - 1, j - 1] = f.matmul(f.random((state.alpha, pool.shape[0]), rng), pool)
    return replace(state, nodes=nodes)


def run_trace(state, trace, rng) -> SystemState:
    for ev in trace:
        state = repair_batch(state, ev, rng)
    return state


@dataclass
class TrialReport:
    file_size: int
    trials: int
    seed: int
    field: str
    collector_sets: tuple
    outcomes: list = field(default_factory=list)  # per trial: tuple of bools per collector set

    @property
    def successes(self):
        return sum(all(o) for o in self.outcomes)

    @property
    def success_rate(self):
        return self.successes / self.trials if self.trials else 0.0

    def collector_rates(self):
        return {
            c: sum(o[idx] for o in self.outcomes) / self.trials
            for idx, c in enumerate(self.collector_sets)
        }


def _trial(args):
    params, profile, file_size, trace, field_name, seed, trial, collector_sets = args
    rng = np.random.default_rng([seed, trial])
    state = init_storage(params, profile, file_size, rng, get_field(field_name))
    state = run_trace(state, trace, rng)
    return tuple(collect(state, c) for c in collector_sets)


def monte_carlo(
    params: SystemParams,
    profile: ResourceProfile,
    file_size,
    trace,
    trials=200,
    field="gf65536",
    seed=0,
    workers=1,
):
    """Success statistics of init -> repairs -> data collection.

    ``file_size`` may be an int or an iterable of ints (a sweep); the return
    value is a :class:`TrialReport` or a list of them respectively.  A trial
    succeeds when every k-set of clusters decodes.  Trial ``r`` draws from
    the stream seeded by ``(seed, r)``, so results do not depend on
    ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    field_name = get_field(field).name
    trace = trace if isinstance(trace, FailureTrace) else FailureTrace(tuple(trace))
    trace.check(params)
    collector_sets = tuple(itertools.combinations(range(1, params.n + 1), params.k))
    sweep = not isinstance(file_size, (int, np.integer))
    sizes = list(file_size) if sweep else [int(file_size)]
    reports = []
    for size in sizes:
        jobs = [
            (params, profile, int(size), trace, field_name, seed, r, collector_sets)
            for r in range(trials)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_trial, jobs, chunksize=8))
        else:
            outcomes = [_trial(job) for job in jobs]
        reports.append(TrialReport(int(size), trials, seed, field_name, collector_sets, outcomes))
    return reports if sweep else reports[0]
