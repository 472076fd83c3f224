"""Scoring junction trees against a joint distribution.

The tree distribution is the product of cluster marginals over the
product of separator marginals (each separator raised to its
multiplicity minus one). Its divergence from the true table can be
written three ways, which must agree: I(X) minus the tree's information
weight, the entropy form over cluster/separator entropies, and the
cell-by-cell sum p·log2(p/q). All quantities are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distribution import JointTable, MarginalCache
from .errors import ConsistencyError, DomainError
from .junction_tree import IndexSet, PuzzleNumbering, TCherryJunctionTree

from itertools import combinations


@dataclass(frozen=True)
class ScoreBreakdown:
    """Weight, total information and divergence of one tree, itemized."""

    weight: float
    total_information: float
    kl: float
    per_cluster: tuple[tuple[IndexSet, float], ...]
    per_separator: tuple[tuple[IndexSet, int, float], ...]


def _cache_for(p: JointTable, cache: MarginalCache | None) -> MarginalCache:
    if cache is None:
        return MarginalCache(p)
    if cache.table is not p:
        raise DomainError("cache was built for a different table")
    return cache


def _check_tree(p: JointTable, t: TCherryJunctionTree):
    if not set(t.vertices) <= set(p.variables):
        raise DomainError(
            f"tree vertices {t.vertices} are not all variables of the table (d={p.d})"
        )


def tree_weight(p: JointTable, t: TCherryJunctionTree,
                cache: MarginalCache | None = None) -> ScoreBreakdown:
    """Information weight Σ_C I(X_C) − Σ_S (ν_S−1)·I(X_S), itemized.

    ``kl`` is I(X) − weight, which is the divergence of the tree
    distribution whenever the tree covers every variable.
    """
    _check_tree(p, t)
    cache = _cache_for(p, cache)
    per_cluster = tuple((c, cache.info(c)) for c in t.clusters)
    per_separator = tuple((s, n, cache.info(s)) for s, n in t.nu.items())
    weight = math.fsum(i for _, i in per_cluster) - math.fsum(
        (n - 1) * i for _, n, i in per_separator
    )
    total = cache.info(p.variables)
    return ScoreBreakdown(weight, total, total - weight, per_cluster, per_separator)


def kl_entropy_form(p: JointTable, t: TCherryJunctionTree,
                    cache: MarginalCache | None = None) -> float:
    """Divergence as −H(X) + Σ_C H(X_C) − Σ_S (ν_S−1)·H(X_S)."""
    _check_tree(p, t)
    cache = _cache_for(p, cache)
    return (
        -cache.h(p.variables)
        + math.fsum(cache.h(c) for c in t.clusters)
        - math.fsum((n - 1) * cache.h(s) for s, n in t.nu.items())
    )


def _expand(marginal_probs: np.ndarray, subset: IndexSet, d: int) -> np.ndarray:
    """Reshape a marginal array so it broadcasts over the full d-dim table."""
    shape = [1] * d
    for axis, var in enumerate(subset):
        shape[var - 1] = marginal_probs.shape[axis]
    return marginal_probs.reshape(shape)


def tree_pd_table(p: JointTable, t: TCherryJunctionTree,
                  cache: MarginalCache | None = None) -> np.ndarray:
    """Dense table of the tree distribution over the full state space.

    Cells where a separator marginal vanishes are 0; a positive cluster
    marginal over a vanished separator is impossible for marginals of
    one table and raises.
    """
    _check_tree(p, t)
    cache = _cache_for(p, cache)
    d = p.d
    num = np.ones(p.probs.shape)
    for c in t.clusters:
        num = num * _expand(cache.marginal(c).probs, c, d)
    den = np.ones(p.probs.shape)
    for s, n in t.nu.items():
        den = den * _expand(cache.marginal(s).probs, s, d) ** (n - 1)
    if np.any((den == 0.0) & (num > 0.0)):
        raise ConsistencyError(
            "a separator marginal is 0 where a containing cluster marginal is positive"
        )
    out = np.zeros(p.probs.shape)
    np.divide(num, den, out=out, where=den > 0.0)
    return out


def evaluate_tree_pd(p: JointTable, t: TCherryJunctionTree, x: Sequence[int],
                     cache: MarginalCache | None = None) -> float:
    """Tree-distribution probability of one full 1-based state vector."""
    _check_tree(p, t)
    cache = _cache_for(p, cache)
    cluster_vals = {c: cache.point(c, x) for c in t.clusters}
    num = 1.0
    for value in cluster_vals.values():
        num *= value
    den = 1.0
    for s, n in t.nu.items():
        value = cache.point(s, x)
        if value == 0.0:
            holders = [c for c in t.clusters if set(s) <= set(c)]
            if any(cluster_vals[c] > 0.0 for c in holders):
                raise ConsistencyError(
                    f"separator {s} has probability 0 at {tuple(x)} while a containing "
                    f"cluster marginal is positive"
                )
            return 0.0
        den *= value ** (n - 1)
    return num / den


def kl_exact(p: JointTable, t: TCherryJunctionTree,
             cache: MarginalCache | None = None) -> float:
    """Σ_x p(x)·log2(p(x)/q(x)) over cells with p(x) > 0."""
    q = tree_pd_table(p, t, cache)
    mask = p.probs > 0.0
    if np.any(q[mask] <= 0.0):
        raise ConsistencyError(
            "tree distribution is 0 on a cell of positive probability; "
            "marginals of the same table cannot do that"
        )
    pm = p.probs[mask]
    return float(np.sum(pm * np.log2(pm / q[mask])))


@dataclass(frozen=True)
class ConditionComparison:
    """One inequality instance from the recovery-condition sweep.

    Vertex ``later`` (numbered at position ``later_pos``) is compared
    across separator ``separator`` against vertex ``earlier`` and its
    own attachment gain: recovery needs ``later_gain < earlier_gain``.
    """

    earlier_pos: int
    earlier: int
    later_pos: int
    later: int
    separator: IndexSet
    later_gain: float
    earlier_gain: float


@dataclass(frozen=True)
class ConditionReport:
    violations: tuple[ConditionComparison, ...]
    ties: tuple[ConditionComparison, ...]
    checked: int

    @property
    def holds(self) -> bool:
        return not self.violations


def check_recovery_conditions(p: JointTable, t: TCherryJunctionTree,
                              numbering: PuzzleNumbering,
                              cache: MarginalCache | None = None,
                              tol: float = 1e-12) -> ConditionReport:
    """Sweep the inequality chain that guarantees greedy recovery.

    For every grown position r and every later position s, each
    separator S already available when vertex i_r was numbered must give
    the later vertex strictly less gain than i_r took from its own
    attachment: H(X_{i_s}) − H(X_{i_s}|X_S) < H(X_{i_r}) − H(X_{i_r}|X_{S_r}).
    Comparisons within ``tol`` are reported as ties, not violations;
    separators containing the later vertex are skipped (no candidate
    attaches a vertex across a set containing it).
    """
    _check_tree(p, t)
    cache = _cache_for(p, cache)
    k = t.k
    order = numbering.order
    if k != numbering.k:
        raise DomainError(f"numbering has k={numbering.k}, tree has k={k}")
    if tuple(sorted(order[:k])) not in t.clusters:
        raise DomainError("numbering does not start at a cluster of the tree")
    if sorted(order) != list(t.vertices):
        raise DomainError("numbering does not cover the tree's vertices exactly")

    def gain(vertex: int, sep: IndexSet) -> float:
        # H(v) − H(v | sep) = H(v) + H(sep) − H(sep ∪ {v})
        return cache.h((vertex,)) + cache.h(sep) - cache.h(tuple(sorted(sep + (vertex,))))

    pool: set[IndexSet] = set(combinations(tuple(sorted(order[:k])), k - 1))
    pools: list[set[IndexSet]] = []
    own: list[float] = []
    for r in range(k, len(order)):
        sep = numbering.attach_separators[r - k]
        if sep not in pool:
            raise DomainError(
                f"numbering separator {sep} for vertex {order[r]} was not available "
                f"at its step"
            )
        pools.append(set(pool))
        own.append(gain(order[r], sep))
        cluster = tuple(sorted(sep + (order[r],)))
        pool.update(combinations(cluster, k - 1))

    violations: list[ConditionComparison] = []
    ties: list[ConditionComparison] = []
    checked = 0
    for r in range(k, len(order)):
        earlier_gain = own[r - k]
        for s in range(r + 1, len(order)):
            later = order[s]
            for sep in sorted(pools[r - k]):
                if later in sep:
                    continue
                checked += 1
                later_gain = gain(later, sep)
                if later_gain > earlier_gain + tol:
                    record = violations
                elif later_gain > earlier_gain - tol:
                    record = ties
                else:
                    continue
                record.append(ConditionComparison(
                    r + 1, order[r], s + 1, later, sep, later_gain, earlier_gain
                ))
    return ConditionReport(tuple(violations), tuple(ties), checked)


def score_to_dict(sb: ScoreBreakdown) -> dict:
    """Plain-dict form matching the on-disk score JSON schema."""
    return {
        "weight": sb.weight,
        "kl": sb.kl,
        "i_total": sb.total_information,
        "clusters": [{"set": list(c), "i": i} for c, i in sb.per_cluster],
        "separators": [
            {"set": list(s), "nu": n, "i": i} for s, n, i in sb.per_separator
        ],
    }
