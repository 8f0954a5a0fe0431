"""Linear exact-repair codes: construction, lifting and verification.

A code stores, for every node ``(i, j)``, an ``alpha x B`` coefficient matrix
over the message symbols, so the entropy (in units of ``log q``) of any set of
stored or transmitted symbols is the rank of their stacked rows.  A repair
oracle answers a query ``(cluster, failed, helpers, locals)`` with the rows
``Z`` each helper cluster sends, also in message coordinates.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .bounds import exact_bound
from .gf import GF256, GaloisField, get_field
from .params import EllTooLarge, ResourceProfile, SystemParams, decompose


class EllTooLargeForT(EllTooLarge):
    pass


class LemmaViolated(AssertionError):
    def __init__(self, certificate, message):
        super().__init__(message)
        self.certificate = certificate


class ChainViolated(AssertionError):
    def __init__(self, report, step):
        super().__init__(f"chain inequality failed: {step.label}: {step.lhs} {step.relation} {step.rhs}")
        self.report = report
        self.step = step


# -- codes -------------------------------------------------------------------

@dataclass(frozen=True)
class LinearMrgrc:
    params: SystemParams
    alpha: int
    beta: int
    file_size: int
    field: GaloisField
    nodes: np.ndarray  # (n, m, alpha, B)
    oracle: object = None

    @property
    def profile(self):
        return ResourceProfile(self.alpha, self.beta)

    def node_rows(self, i, j):
        return self.nodes[i - 1, j - 1]

    def cluster_rows(self, i):
        return self.nodes[i - 1].reshape(-1, self.file_size)

    def rows(self, refs):
        """Stack the rows named by ``refs``.

        A ref is ``(i, j)`` for a node, an ``int`` for a whole cluster, or an
        explicit array of rows.
        """
        parts = []
        for ref in refs:
            if isinstance(ref, np.ndarray):
                parts.append(np.atleast_2d(ref))
            elif isinstance(ref, (tuple, list)):
                parts.append(self.node_rows(*ref))
            else:
                parts.append(self.cluster_rows(ref))
        if not parts:
            return np.zeros((0, self.file_size), dtype=np.int64)
        return np.vstack(parts)

    def repair(self, cluster, failed, helpers, locals_=()):
        return self.oracle.repair(self, cluster, tuple(failed), tuple(helpers), tuple(locals_))


def entropy(code: LinearMrgrc, target, given=()) -> int:
    """``H(target | given) = rank(target + given) - rank(given)``."""
    f = code.field
    cond = code.rows(given)
    return f.rank(np.vstack([code.rows(target), cond])) - f.rank(cond)


# -- stacked product-matrix MBR base code -----------------------------------

def _pm_mbr_layout(k, d):
    """Symbol index of each entry of the symmetric ``d x d`` message matrix
    ``[[S, T], [T^T, 0]]``; ``-1`` marks the zero block."""
    idx = -np.ones((d, d), dtype=np.int64)
    s = 0
    for a in range(k):
        for c in range(a, k):
            idx[a, c] = idx[c, a] = s
            s += 1
    for a in range(k):
        for c in range(k, d):
            idx[a, c] = idx[c, a] = s
            s += 1
    return idx, s


def _bilinear(field, layout, width, offset, u, v):
    """Coefficients of ``u^T M v`` over the message symbols."""
    coef = np.zeros(width, dtype=np.int64)
    d = layout.shape[0]
    for a in range(d):
        for c in range(d):
            sym = layout[a, c]
            if sym >= 0:
                coef[offset + sym] ^= int(field.mul(u[a], v[c]))
    return coef


class StackedMbrOracle:
    """Single-node repair for ``m`` independent product-matrix MBR codes.

    Code ``j`` is spread over node ``j`` of every cluster; cluster ``i`` holds
    share ``psi_i^T M_j``.  Repairing node ``j`` of cluster ``i`` takes one
    symbol ``psi_h^T M_j psi_i`` from each of ``d`` helper clusters.
    """

    kind = "stacked-mbr"

    def __init__(self, n, k, d, m, field=GF256, points=None):
        self.n, self.k, self.d, self.m = n, k, d, m
        self.field = field
        self.points = list(points) if points is not None else list(range(1, n + 1))
        if len(set(self.points)) != n or 0 in self.points:
            raise ValueError("evaluation points must be n distinct nonzero field elements")
        x = np.asarray(self.points, dtype=np.int64)
        self.psi = np.stack([field.power(x, c) for c in range(d)], axis=1)
        self.layout, self.code_size = _pm_mbr_layout(k, d)

    @property
    def file_size(self):
        return self.m * self.code_size

    def node_matrix(self, i, j):
        f, d = self.field, self.d
        out = np.zeros((d, self.file_size), dtype=np.int64)
        for c in range(d):
            e = np.zeros(d, dtype=np.int64)
            e[c] = 1
            out[c] = _bilinear(f, self.layout, self.file_size, (j - 1) * self.code_size, self.psi[i - 1], e)
        return out

    def single_repair(self, cluster, node, helpers):
        off = (node - 1) * self.code_size
        return {
            h: _bilinear(self.field, self.layout, self.file_size, off, self.psi[h - 1], self.psi[cluster - 1])[None, :]
            for h in helpers
        }

    def repair(self, code, cluster, failed, helpers, locals_):
        if len(failed) != 1:
            raise ValueError("stacked MBR oracle repairs one node at a time")
        return self.single_repair(cluster, failed[0], helpers)

    def descriptor(self):
        return {"type": self.kind, "points": self.points}


class LiftedOracle:
    """Repair ``t`` nodes by running the single-node oracle once per failed
    node, ascending, with the same helpers and locals each time."""

    def __init__(self, base, t):
        self.base = base
        self.t = t

    def repair(self, code, cluster, failed, helpers, locals_):
        per_helper = {h: [] for h in helpers}
        for j in sorted(failed):
            for h, z in self.base.repair(code, cluster, (j,), helpers, locals_).items():
                per_helper[h].append(z)
        return {h: np.vstack(zs) for h, zs in per_helper.items()}

    def descriptor(self):
        inner = self.base.descriptor()
        if inner["type"] == StackedMbrOracle.kind:
            return {"type": "lifted-stacked-mbr", "t": self.t, "points": inner["points"]}
        return {"type": "lifted", "t": self.t, "base": inner}


class ExternalOracle:
    """Table of precomputed helper data keyed by the full repair query."""

    def __init__(self, table):
        self.table = {
            (int(i), tuple(sorted(R)), tuple(sorted(H)), tuple(sorted(L))): z
            for (i, R, H, L), z in table.items()
        }

    def repair(self, code, cluster, failed, helpers, locals_):
        key = (cluster, tuple(sorted(failed)), tuple(sorted(helpers)), tuple(sorted(locals_)))
        return self.table.get(key)

    def descriptor(self):
        return {"type": "external"}


def stacked_mbr_code(n, k, d, m, field=GF256, points=None) -> LinearMrgrc:
    """Base ``t = 1``, ``ell = 0`` code at the classical MBR point
    ``alpha = d``, ``beta' = 1``; file size ``m * (k*d - k*(k-1)/2)``."""
    params = SystemParams(n, k, d, m, 0, 1)
    oracle = StackedMbrOracle(n, k, d, m, field, points)
    nodes = np.stack(
        [np.stack([oracle.node_matrix(i, j) for j in range(1, m + 1)]) for i in range(1, n + 1)]
    )
    return LinearMrgrc(params, d, 1, oracle.file_size, field, nodes, oracle)


def lift(base: LinearMrgrc, t_target: int) -> LinearMrgrc:
    """Turn a single-failure code into a ``t_target``-failure code with
    ``beta = t_target * beta'`` and unchanged file size."""
    if base.params.t != 1:
        raise ValueError(f"base code must repair single failures (t=1), got t={base.params.t}")
    if t_target == 1:
        return base
    if t_target > base.params.m - base.params.ell:
        raise EllTooLargeForT(
            f"ell <= m - t violated (ell={base.params.ell}, m={base.params.m}, t={t_target})"
        )
    params = base.params.replace(t=t_target)
    return LinearMrgrc(
        params,
        base.alpha,
        t_target * base.beta,
        base.file_size,
        base.field,
        base.nodes.copy(),
        LiftedOracle(base.oracle, t_target),
    )


# -- verification ------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    kind: str
    detail: dict


@dataclass
class VerificationReport:
    collector_sets_checked: int = 0
    repair_queries_checked: int = 0
    findings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.findings

    def kinds(self):
        return sorted({f.kind for f in self.findings})

    def to_dict(self):
        return {
            "ok": self.ok,
            "collector_sets_checked": self.collector_sets_checked,
            "repair_queries_checked": self.repair_queries_checked,
            "findings": [{"kind": f.kind, **f.detail} for f in self.findings],
        }


def repair_queries(params: SystemParams, policy="canonical"):
    """``(cluster, failed, helpers, locals)`` tuples to check.

    ``canonical`` takes every failed ``t``-set with the lowest-indexed ``d``
    helper clusters and ``ell`` locals; ``exhaustive`` takes all helper and
    local choices.
    """
    n, k, d, m, ell, t = params.astuple()
    for i in range(1, n + 1):
        others = [c for c in range(1, n + 1) if c != i]
        for failed in itertools.combinations(range(1, m + 1), t):
            rest = [j for j in range(1, m + 1) if j not in failed]
            if policy == "canonical":
                yield i, failed, tuple(others[:d]), tuple(rest[:ell])
            elif policy == "exhaustive":
                for helpers in itertools.combinations(others, d):
                    for locals_ in itertools.combinations(rest, ell):
                        yield i, failed, helpers, locals_
            else:
                raise ValueError(f"unknown repair query policy {policy!r}")


def verify_code(code: LinearMrgrc, policy="canonical") -> VerificationReport:
    """Check data collection for every k-set and exact repair per ``policy``.

    Without an oracle only data collection is checked.
    """
    params, f = code.params, code.field
    report = VerificationReport()
    for s in itertools.combinations(range(1, params.n + 1), params.k):
        report.collector_sets_checked += 1
        r = f.rank(code.rows(s))
        if r != code.file_size:
            report.findings.append(Finding("DataCollection", {"clusters": list(s), "rank": r, "B": code.file_size}))
    if code.oracle is None:
        return report
    for i, failed, helpers, locals_ in repair_queries(params, policy):
        report.repair_queries_checked += 1
        query = {"cluster": i, "failed": list(failed), "helpers": list(helpers), "locals": list(locals_)}
        z = code.repair(i, failed, helpers, locals_)
        if z is None:
            report.findings.append(Finding("MissingQuery", query))
            continue
        if set(z) != set(helpers):
            report.findings.append(Finding("WrongHelpers", {**query, "answered": sorted(z)}))
            continue
        for h in helpers:
            zh = np.atleast_2d(z[h])
            if zh.shape[0] > code.beta:
                report.findings.append(Finding("RowBudgetExceeded", {**query, "helper": h, "rows": zh.shape[0], "beta": code.beta}))
            if not f.in_rowspace(zh, code.cluster_rows(h)):
                report.findings.append(Finding("HelperOutsideCluster", {**query, "helper": h}))
        received = np.vstack([np.atleast_2d(z[h]) for h in helpers] + [code.node_rows(i, j) for j in locals_])
        lost = code.rows([(i, j) for j in failed])
        if not f.in_rowspace(lost, received):
            report.findings.append(Finding("RepairFailed", query))
    return report


# -- ordering for the exact-repair bound -------------------------------------

@dataclass(frozen=True)
class PermutationCertificate:
    cluster: int
    conditioning: tuple
    sigma: dict  # position (ell+1..m) -> node index
    selections: tuple  # ((x, j, V, theta), ...)
    inequalities: tuple  # ((position, node, lhs, rhs, holds), ...)

    @property
    def holds(self):
        return all(row[4] for row in self.inequalities)


def lemma1_permutation(code: LinearMrgrc, cluster: int, conditioning) -> PermutationCertificate:
    """Greedy node order for ``cluster`` given the clusters in ``conditioning``.

    For ``x = 0..b-1`` the pair ``(j, V)`` with ``V`` a ``(t-1)``-subset of the
    remaining non-local nodes minimising ``H(Y_j | V, conditioning, locals)``
    is placed at position ``m - x``; ties go to the lexicographically smallest
    ``(j, V)``.  The leftover nodes fill positions ``ell+1..m-b`` ascending.
    Each of the last ``b`` positions must then satisfy
    ``H(Y_sigma(p) | conditioning, locals, earlier positions) <= min(alpha, (d-s) beta / t)``
    with ``s = |conditioning|``.
    """
    params = code.params
    n, k, d, m, ell, t = params.astuple()
    b = decompose(params).b
    conditioning = tuple(sorted(conditioning))
    if b == 0:
        raise ValueError("ordering lemma needs t not dividing m - ell (b >= 1)")
    if cluster in conditioning:
        raise ValueError(f"cluster {cluster} is in the conditioning set")
    if len(conditioning) > k - 1:
        raise ValueError(f"|conditioning| = {len(conditioning)} exceeds k-1 = {k - 1}")
    locals_ = [(cluster, j) for j in range(1, ell + 1)]
    base_refs = list(conditioning) + locals_
    pool = list(range(ell + 1, m + 1))
    sigma, selections = {}, []
    for x in range(b):
        best = None
        for j in pool:
            for v in itertools.combinations([u for u in pool if u != j], t - 1):
                theta = entropy(code, [(cluster, j)], base_refs + [(cluster, u) for u in v])
                cand = (theta, j, v)
                if best is None or cand < best:
                    best = cand
        theta, j, v = best
        sigma[m - x] = j
        selections.append((x, j, v, theta))
        pool.remove(j)
    for pos, j in zip(range(ell + 1, m - b + 1), sorted(pool)):
        sigma[pos] = j
    rhs = min(Fraction(code.alpha), Fraction((d - len(conditioning)) * code.beta, t))
    rows = []
    for pos in range(m - b + 1, m + 1):
        earlier = [(cluster, sigma[p]) for p in range(ell + 1, pos)]
        lhs = entropy(code, [(cluster, sigma[pos])], base_refs + earlier)
        rows.append((pos, sigma[pos], lhs, rhs, lhs <= rhs))
    cert = PermutationCertificate(cluster, conditioning, dict(sorted(sigma.items())), tuple(selections), tuple(rows))
    if not cert.holds:
        bad = next(r for r in rows if not r[4])
        raise LemmaViolated(cert, f"position {bad[0]} (node {bad[1]}): {bad[2]} > {bad[3]}")
    return cert


@dataclass(frozen=True)
class ChainStep:
    label: str
    lhs: Fraction
    relation: str  # "<=" or "=="
    rhs: Fraction

    @property
    def holds(self):
        return self.lhs <= self.rhs if self.relation == "<=" else self.lhs == self.rhs


@dataclass
class ChainReport:
    steps: list = field(default_factory=list)
    file_size: int = 0
    bound: Fraction = Fraction(0)

    @property
    def ok(self):
        return all(s.holds for s in self.steps)

    @property
    def tight(self):
        return self.file_size == self.bound

    def first_violation(self):
        return next((s for s in self.steps if not s.holds), None)

    def to_dict(self):
        return {
            "ok": self.ok,
            "file_size": self.file_size,
            "bound": str(self.bound),
            "steps": [
                {"label": s.label, "lhs": str(s.lhs), "relation": s.relation, "rhs": str(s.rhs), "holds": s.holds}
                for s in self.steps
            ],
        }


def verify_exact_bound(code: LinearMrgrc, clusters=None, raise_on_violation=True) -> ChainReport:
    """Evaluate every inequality of the exact-repair bound argument on ``code``.

    The file entropy is bounded by the joint entropy of ``k`` clusters,
    expanded cluster by cluster; each cluster's non-local part is split along
    the greedy order into ``a`` groups of ``t`` nodes and ``b`` single nodes.
    """
    params = code.params
    n, k, d, m, ell, t = params.astuple()
    dec = decompose(params)
    alpha, beta = Fraction(code.alpha), Fraction(code.beta)
    clusters = tuple(clusters) if clusters is not None else tuple(range(1, k + 1))
    if len(clusters) != k or len(set(clusters)) != k:
        raise ValueError(f"need {k} distinct clusters, got {clusters}")
    rep = ChainReport(file_size=code.file_size)
    steps = rep.steps

    joint = Fraction(entropy(code, list(clusters)))
    steps.append(ChainStep("file <= joint entropy of k clusters", Fraction(code.file_size), "<=", joint))
    terms = [Fraction(entropy(code, [c], list(clusters[:pos]))) for pos, c in enumerate(clusters)]
    steps.append(ChainStep("chain rule over clusters", joint, "==", sum(terms, Fraction(0))))

    total_rhs = Fraction(0)
    for pos, c in enumerate(clusters):
        prev = list(clusters[:pos])
        local_refs = [(c, j) for j in range(1, ell + 1)]
        nonlocal_refs = [(c, j) for j in range(ell + 1, m + 1)]
        h_local = Fraction(entropy(code, local_refs, prev))
        h_rest = Fraction(entropy(code, nonlocal_refs, prev + local_refs))
        steps.append(ChainStep(f"cluster {c}: local/non-local split", terms[pos], "==", h_local + h_rest))
        steps.append(ChainStep(f"cluster {c}: local part <= ell*alpha", h_local, "<=", ell * alpha))

        if dec.b:
            try:
                sigma = lemma1_permutation(code, c, prev).sigma
            except LemmaViolated as exc:
                # keep the greedy order; the failing position shows up below
                sigma = exc.certificate.sigma
        else:
            sigma = {p: p for p in range(ell + 1, m + 1)}
        helpers_outside = d - pos
        group_cap = min(t * alpha, helpers_outside * beta)
        single_cap = min(alpha, helpers_outside * beta / t)
        expansion = Fraction(0)
        for u in range(dec.a):
            group = [(c, sigma[ell + u * t + v]) for v in range(1, t + 1)]
            h_group = Fraction(entropy(code, group, local_refs + prev))
            steps.append(ChainStep(f"cluster {c}: group {u + 1} <= min(t*alpha, (d-{pos})*beta)", h_group, "<=", group_cap))
            expansion += h_group
        for p in range(m - dec.b + 1, m + 1):
            earlier = [(c, sigma[q]) for q in range(ell + 1, p)]
            h_single = Fraction(entropy(code, [(c, sigma[p])], prev + local_refs + earlier))
            steps.append(ChainStep(f"cluster {c}: position {p} <= min(alpha, (d-{pos})*beta/t)", h_single, "<=", single_cap))
            expansion += h_single
        steps.append(ChainStep(f"cluster {c}: ordered expansion", h_rest, "<=", expansion))
        aggregate = dec.a * group_cap + dec.b * single_cap
        steps.append(ChainStep(f"cluster {c}: group caps collapse", aggregate, "==", (m - ell) * single_cap))
        total_rhs += ell * alpha + (m - ell) * single_cap

    rep.bound = total_rhs
    steps.append(ChainStep("aggregate equals closed-form exact bound", total_rhs, "==", exact_bound(params, code.profile)))
    steps.append(ChainStep("file size <= exact bound", Fraction(code.file_size), "<=", total_rhs))
    bad = rep.first_violation()
    if bad is not None and raise_on_violation:
        raise ChainViolated(rep, bad)
    return rep


# -- serialization -----------------------------------------------------------

def _hex_rows(matrix, field):
    width = field.w // 4
    return ["".join(f"{int(x):0{width}x}" for x in row) for row in np.atleast_2d(matrix)]


def _from_hex_rows(rows, field, cols):
    width = field.w // 4
    out = np.zeros((len(rows), cols), dtype=np.int64)
    for r, text in enumerate(rows):
        if len(text) != width * cols:
            raise ValueError(f"row {r} has {len(text)} hex digits, expected {width * cols}")
        out[r] = [int(text[c * width:(c + 1) * width], 16) for c in range(cols)]
    return out


def code_to_dict(code: LinearMrgrc):
    f = code.field
    out = {
        "params": code.params.to_dict(),
        "alpha": code.alpha,
        "beta": code.beta,
        "field": f.name,
        "B": code.file_size,
        "nodes": [[_hex_rows(code.node_rows(i, j), f) for j in range(1, code.params.m + 1)] for i in range(1, code.params.n + 1)],
    }
    if code.oracle is not None:
        desc = code.oracle.descriptor()
        if isinstance(code.oracle, ExternalOracle):
            desc["queries"] = [
                {"cluster": i, "failed": list(R), "helpers": list(H), "locals": list(L),
                 "Z": {str(h): _hex_rows(z, f) for h, z in zs.items()}}
                for (i, R, H, L), zs in sorted(code.oracle.table.items())
            ]
        out["oracle"] = desc
    return out


def _oracle_from_descriptor(desc, params, field, file_size):
    kind = desc.get("type")
    n, k, d, m = params.n, params.k, params.d, params.m
    if kind == "stacked-mbr":
        return StackedMbrOracle(n, k, d, m, field, desc.get("points"))
    if kind == "lifted-stacked-mbr":
        return LiftedOracle(StackedMbrOracle(n, k, d, m, field, desc.get("points")), int(desc["t"]))
    if kind == "lifted":
        return LiftedOracle(_oracle_from_descriptor(desc["base"], params, field, file_size), int(desc["t"]))
    if kind == "external":
        table = {}
        for q in desc.get("queries", []):
            key = (q["cluster"], tuple(q["failed"]), tuple(q["helpers"]), tuple(q.get("locals", ())))
            table[key] = {int(h): _from_hex_rows(rows, field, file_size) for h, rows in q["Z"].items()}
        return ExternalOracle(table)
    raise ValueError(f"unknown oracle type {kind!r}")


def code_from_dict(raw) -> LinearMrgrc:
    params = SystemParams(**raw["params"])
    field = get_field(raw.get("field", "gf256"))
    B = int(raw["B"])
    alpha = int(raw["alpha"])
    nodes = np.zeros((params.n, params.m, alpha, B), dtype=np.int64)
    if len(raw["nodes"]) != params.n:
        raise ValueError(f"expected {params.n} clusters in 'nodes'")
    for i, cluster in enumerate(raw["nodes"]):
        if len(cluster) != params.m:
            raise ValueError(f"cluster {i + 1}: expected {params.m} nodes")
        for j, rows in enumerate(cluster):
            if len(rows) != alpha:
                raise ValueError(f"node ({i + 1},{j + 1}): expected {alpha} rows")
            nodes[i, j] = _from_hex_rows(rows, field, B)
    oracle = None
    if raw.get("oracle"):
        oracle = _oracle_from_descriptor(raw["oracle"], params, field, B)
    return LinearMrgrc(params, alpha, int(raw["beta"]), B, field, nodes, oracle)


def save_code(code, path):
    with open(path, "w") as fh:
        json.dump(code_to_dict(code), fh, indent=1)
        fh.write("\n")


def load_code(path) -> LinearMrgrc:
    with open(path) as fh:
        return code_from_dict(json.load(fh))
