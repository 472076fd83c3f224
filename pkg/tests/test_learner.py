"""Greedy learners, exhaustive oracle, structure enumeration, generator."""

import math

import numpy as np
import pytest

from conftest import random_table, random_tree
from tcherry import (
    CapacityError,
    DomainError,
    MarginalCache,
    enumerate_candidates,
    find_parent_cluster,
    fit_chow_liu,
    fit_exhaustive,
    fit_malvestuto,
    fit_sk,
    fit_to_dict,
    generate_tcherry_distribution,
    information_content,
    iter_structures,
    kl_exact,
    tree_from_trace,
)

SK4_KL = 0.013091417653743331
M4_KL = 0.022440270192606082
SK3_KL = 0.03554169919866901
M3_KL = 0.03750767394648147
EX3_KL = 0.034355645042951855
SK2_WEIGHT = 0.12767045508000296
BEST_W4 = 0.08368016907134557


# -- candidate enumeration --------------------------------------------------

def test_candidate_count_and_values(lizard, lizard_cache):
    cands = enumerate_candidates(lizard, 2, lizard_cache)
    assert len(cands) == 20  # C(5,2) * 2 orientations
    assert len({round(c.w, 12) for c in cands}) == 10  # w ignores orientation at k=2
    for c in cands:
        assert c.w >= -1e-12
        assert c.omega >= -1e-12
        assert c.cluster == tuple(sorted(c.base + (c.new_vertex,)))


def test_best_candidate_weight(lizard, lizard_cache):
    best = max(enumerate_candidates(lizard, 4, lizard_cache), key=lambda c: c.w)
    assert best.cluster == (1, 3, 4, 5)
    assert best.base == (1, 3, 5)
    assert best.w == pytest.approx(BEST_W4, abs=1e-12)


def test_find_parent_cluster_across_orders(lizard, lizard_cache):
    assert find_parent_cluster(lizard, 2, lizard_cache) == (3, 4)
    assert find_parent_cluster(lizard, 3, lizard_cache) == (3, 4, 5)
    assert find_parent_cluster(lizard, 4, lizard_cache) == (1, 3, 4, 5)
    assert find_parent_cluster(lizard, 5, lizard_cache) == (1, 2, 3, 4, 5)


def test_order_out_of_range_rejected(lizard):
    with pytest.raises(DomainError, match="2\\.\\."):
        fit_sk(lizard, 1)
    with pytest.raises(DomainError):
        fit_sk(lizard, 6)


# -- greedy fits on the lizard table ----------------------------------------

def test_sk_k4_structure_and_divergence(lizard, lizard_cache):
    fr = fit_sk(lizard, 4, lizard_cache)
    assert fr.tree.clusters == ((1, 3, 4, 5), (1, 2, 4, 5))
    assert fr.tree.separators == ((1, 4, 5),)
    assert fr.score.kl == pytest.approx(SK4_KL, abs=1e-12)
    steps = [(s.cluster, s.separator) for s in fr.trace]
    assert steps == [((1, 3, 4, 5), None), ((1, 2, 4, 5), (1, 4, 5))]


def test_malvestuto_k4_structure_and_divergence(lizard, lizard_cache):
    fr = fit_malvestuto(lizard, 4, lizard_cache)
    assert set(fr.tree.clusters) == {(1, 2, 3, 5), (1, 3, 4, 5)}
    assert fr.tree.parent == (1, 2, 3, 5)  # the entropy-minimal 4-set
    assert fr.tree.separators == ((1, 3, 5),)
    assert fr.score.kl == pytest.approx(M4_KL, abs=1e-12)


def test_sk_k3_structure_and_growth_order(lizard, lizard_cache):
    fr = fit_sk(lizard, 3, lizard_cache)
    assert set(fr.tree.clusters) == {(3, 4, 5), (1, 4, 5), (1, 2, 5)}
    assert sorted(fr.tree.separators) == [(1, 5), (4, 5)]
    assert fr.score.kl == pytest.approx(SK3_KL, abs=1e-12)
    steps = [(s.cluster, s.separator) for s in fr.trace]
    assert steps == [((3, 4, 5), None), ((1, 4, 5), (4, 5)), ((1, 2, 5), (1, 5))]


def test_malvestuto_k3_structure_and_growth_order(lizard, lizard_cache):
    fr = fit_malvestuto(lizard, 3, lizard_cache)
    assert fr.tree.parent == (1, 3, 5)
    assert set(fr.tree.clusters) == {(1, 3, 5), (1, 2, 5), (3, 4, 5)}
    assert sorted(fr.tree.separators) == [(1, 5), (3, 5)]
    assert fr.score.kl == pytest.approx(M3_KL, abs=1e-12)
    steps = [(s.cluster, s.separator) for s in fr.trace]
    assert steps == [((1, 3, 5), None), ((1, 2, 5), (1, 5)), ((3, 4, 5), (3, 5))]


def test_sk_never_loses_to_malvestuto_on_lizard(lizard, lizard_cache):
    for k in (2, 3, 4):
        sk = fit_sk(lizard, k, lizard_cache).score.kl
        mv = fit_malvestuto(lizard, k, lizard_cache).score.kl
        assert sk <= mv + 1e-12


def test_trace_replay_rebuilds_the_tree(lizard, lizard_cache):
    for fit in (fit_sk, fit_malvestuto):
        for k in (2, 3, 4):
            fr = fit(lizard, k, lizard_cache)
            assert tree_from_trace(fr.tree.k, fr.trace) == fr.tree


def test_trace_weights_sum_to_score(lizard, lizard_cache):
    for k in (2, 3, 4, 5):
        fr = fit_sk(lizard, k, lizard_cache)
        total = math.fsum(s.w for s in fr.trace)  # head step carries I(parent)
        assert total == pytest.approx(fr.score.weight, abs=1e-9)


def test_candidate_table_is_sorted(lizard, lizard_cache):
    sk = fit_sk(lizard, 3, lizard_cache)
    ws = [c.w for c in sk.candidate_table]
    assert ws == sorted(ws, reverse=True)
    mv = fit_malvestuto(lizard, 3, lizard_cache)
    os_ = [c.omega for c in mv.candidate_table]
    assert os_ == sorted(os_)


# -- spanning-tree equivalence ----------------------------------------------

def test_chow_liu_equals_sk_at_order_two(lizard, lizard_cache):
    cl = fit_chow_liu(lizard, lizard_cache)
    sk = fit_sk(lizard, 2, lizard_cache)
    assert cl.score.weight == pytest.approx(SK2_WEIGHT, abs=1e-12)
    assert abs(cl.score.weight - sk.score.weight) < 1e-10
    assert set(cl.tree.clusters) == set(sk.tree.clusters)


def test_chow_liu_equivalence_on_random_tables():
    rng = np.random.default_rng(73)
    for _ in range(10):
        d = int(rng.integers(3, 7))
        cards = tuple(int(c) for c in rng.integers(2, 4, size=d))
        t = random_table(rng, cards)
        cl = fit_chow_liu(t)
        sk = fit_sk(t, 2)
        assert abs(cl.score.weight - sk.score.weight) < 1e-10


# -- exhaustive oracle ------------------------------------------------------

def test_structure_counts_small_cases():
    assert sum(1 for _ in iter_structures(5, 4)) == 10
    assert sum(1 for _ in iter_structures(5, 3)) == 70
    assert sum(1 for _ in iter_structures(6, 3)) == 1215
    assert sum(1 for _ in iter_structures(3, 2)) == 3
    assert sum(1 for _ in iter_structures(4, 4)) == 1


def test_structures_are_unique_and_valid():
    seen = set()
    for clusters, seps, witness in iter_structures(5, 3):
        key = (clusters, seps)
        assert key not in seen
        seen.add(key)
        assert len(clusters) == 3
        parent, steps = witness
        assert len(steps) == 2


def test_exhaustive_k4_matches_greedy_on_lizard(lizard, lizard_cache):
    ex = fit_exhaustive(lizard, 4, cache=lizard_cache)
    sk = fit_sk(lizard, 4, lizard_cache)
    assert set(ex.tree.clusters) == set(sk.tree.clusters)
    assert ex.score.kl == pytest.approx(SK4_KL, abs=1e-12)


def test_exhaustive_k3_beats_both_greedies_on_lizard(lizard, lizard_cache):
    ex = fit_exhaustive(lizard, 3, cache=lizard_cache)
    assert set(ex.tree.clusters) == {(1, 2, 5), (2, 4, 5), (3, 4, 5)}
    assert ex.score.kl == pytest.approx(EX3_KL, abs=1e-12)
    assert ex.score.kl <= SK3_KL and ex.score.kl <= M3_KL


def test_exhaustive_refuses_large_vertex_counts():
    t = random_table(np.random.default_rng(79), (2,) * 8)
    with pytest.raises(CapacityError, match="d=8"):
        fit_exhaustive(t, 3)
    with pytest.raises(CapacityError):
        fit_exhaustive(t, 3, max_vertices=7)
    fr = fit_exhaustive(t, 7, max_vertices=8)  # single-step case stays cheap
    assert len(fr.tree.clusters) == 2


# -- generator --------------------------------------------------------------

def test_generated_distribution_factorizes_over_its_tree():
    for seed in (0, 1, 2):
        table, tree = generate_tcherry_distribution(seed, 6, 3, 2, 2.0)
        assert kl_exact(table, tree) == pytest.approx(0.0, abs=1e-10)
        assert len(tree.clusters) == 4


def test_generator_is_deterministic_per_seed():
    a1, t1 = generate_tcherry_distribution(11, 5, 3, (2, 3, 2, 2, 3), 1.5)
    a2, t2 = generate_tcherry_distribution(11, 5, 3, (2, 3, 2, 2, 3), 1.5)
    assert t1 == t2
    assert np.array_equal(a1.probs, a2.probs)
    b, tb = generate_tcherry_distribution(12, 5, 3, (2, 3, 2, 2, 3), 1.5)
    assert tb != t1 or not np.array_equal(b.probs, a1.probs)


def test_generator_strength_zero_gives_independence():
    table, tree = generate_tcherry_distribution(5, 5, 3, 2, 0.0)
    assert information_content(table, (1, 2, 3, 4, 5)) == pytest.approx(0.0, abs=1e-12)
    assert fit_sk(table, 3).score.weight == pytest.approx(0.0, abs=1e-12)


def test_generator_validates_schedule_lengths():
    with pytest.raises(DomainError, match="cardinalities"):
        generate_tcherry_distribution(0, 4, 2, (2, 2), 1.0)
    with pytest.raises(DomainError, match="strength"):
        generate_tcherry_distribution(0, 5, 3, 2, (1.0, 2.0))
    with pytest.raises(DomainError, match="2\\.\\."):
        generate_tcherry_distribution(0, 4, 5, 2, 1.0)


def test_generator_strength_schedule_accepted():
    table, tree = generate_tcherry_distribution(3, 5, 3, 2, (3.0, 1.5, 0.75))
    assert kl_exact(table, tree) == pytest.approx(0.0, abs=1e-10)


# -- serialization ----------------------------------------------------------

def test_fit_to_dict_schema(lizard, lizard_cache):
    doc = fit_to_dict(fit_sk(lizard, 4, lizard_cache))
    assert set(doc) == {"algorithm", "k", "tree", "score", "trace", "candidates"}
    assert doc["algorithm"] == "sk"
    assert doc["k"] == 4
    assert doc["tree"]["clusters"][0] == [1, 3, 4, 5]
    assert doc["trace"][0]["separator"] is None
    assert len(doc["candidates"]) == 20  # C(5,4) * 4 orientations
    assert doc["candidates"][0]["w"] == pytest.approx(BEST_W4, abs=1e-12)


# -- greedy beats nothing it should not -------------------------------------

def test_exhaustive_dominates_greedy_on_random_tables():
    rng = np.random.default_rng(83)
    for _ in range(8):
        d = int(rng.integers(4, 7))
        cards = tuple(int(c) for c in rng.integers(2, 4, size=d))
        t = random_table(rng, cards)
        cache = MarginalCache(t)
        ex = fit_exhaustive(t, 3, cache=cache).score.kl
        assert ex <= fit_sk(t, 3, cache).score.kl + 1e-10
        assert ex <= fit_malvestuto(t, 3, cache).score.kl + 1e-10
