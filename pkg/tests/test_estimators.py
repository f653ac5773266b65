import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contentsampling.content import ContentStore, ParetoConfig, generate_cds1
from contentsampling.estimators import (EmptySampleError, EstimatorError, MleConfig,
                                        UnsupportedSamplerError, em_mixture, estimate,
                                        estimate_dce, estimate_mle_copycount, estimate_mle_label,
                                        estimate_sce, estimate_vertex_wce, estimate_wce,
                                        mixture_loglik, mle_pij, observed_multiplicity)
from contentsampling.graph import Graph
from contentsampling.samplers import SampleTrace, SamplerConfig, sample_uni, weight_hat

from oracles import exact_dce_expectation, grid_mixture, grid_mle_size_distribution


def trace_of(vertices, sampler="UNI", g=None):
    w = np.ones(len(vertices)) if g is None else weight_hat(sampler, g)[vertices]
    return SampleTrace(np.array(vertices), w, sampler)


@pytest.fixture
def ab_store():
    # A: f=2 on {0, 1} (special at 0); B: f=1 on {2}
    return ContentStore.from_placements([[0, 1], [2]], 3, labels=[0, 1])


# -- DCE -------------------------------------------------------------------

def test_dce_single_step_bias(ab_store):
    per_vertex = [estimate_dce(trace_of([v]), ab_store).bins[0] for v in range(3)]
    expected_a = np.mean(per_vertex)
    assert expected_a == pytest.approx(2 / 3)
    assert exact_dce_expectation([[0, 1], [2]], [0, 1], 3, 1)[0] == pytest.approx(2 / 3)
    assert expected_a > 0.5


def test_dce_census_single_copy():
    store = ContentStore.from_placements([[0], [1], [2], [2]], 3, labels=[5, 5, 7, 9])
    est = estimate_dce(trace_of([0, 1, 2]), store)
    assert est.bins == store.true_distribution()


def test_dce_empty_sample():
    store = ContentStore.from_placements([[0]], 3)
    with pytest.raises(EmptySampleError):
        estimate_dce(trace_of([1, 2]), store)


# -- SCE / WCE -------------------------------------------------------------

def test_sce_single_step_expectation(ab_store):
    # numerators per single step: A counted only at vertex 0, B only at vertex 2
    num = np.array([[estimate_sce(trace_of([v]), ab_store).numerators.get(k, 0)
                     if v != 1 else 0.0 for k in (0, 1)] for v in range(3)])
    np.testing.assert_allclose(num.mean(axis=0), [1 / 3, 1 / 3])


def test_sce_only_duplicates(ab_store):
    with pytest.raises(EmptySampleError):
        estimate_sce(trace_of([1, 1]), ab_store)


def test_sce_single_content():
    store = ContentStore.from_placements([[1, 0, 2]], 3)
    assert estimate_sce(trace_of([2, 1, 0]), store).bins == {3: 1.0}


def test_wce_single_step_expectation(ab_store):
    num = np.array([[estimate_wce(trace_of([v]), ab_store).numerators[k] for k in (0, 1)]
                    for v in range(3)])
    np.testing.assert_allclose(num.mean(axis=0), [1 / 3, 1 / 3])


def test_wce_equals_vertex_estimator_when_single_copy(path4):
    # one content per vertex labelled by degree: WCE is the plain reweighted vertex estimator
    store = ContentStore.from_placements([[v] for v in range(4)], 4, labels=path4.deg)
    tr = trace_of([0, 1, 1, 2, 3, 2], "RW", path4)
    w = 1 / path4.deg[tr.vertices]
    expected = {k: w[path4.deg[tr.vertices] == k].sum() / w.sum() for k in (1, 2)}
    est = estimate_wce(tr, store)
    assert est.bins == pytest.approx(expected)


def test_wce_rw_step_contribution(path4):
    store = ContentStore.from_placements([[1, 3]], 4, labels=[0])
    est = estimate_wce(trace_of([1], "RW", path4), store)
    assert est.numerators[0] == pytest.approx(1 / (2 * 2))


def test_wce_zero_f_is_integrity_error():
    store = ContentStore(np.array([1]), np.array([0]), np.array([0, 0]), np.zeros(0, int), 2)
    with pytest.raises(EstimatorError):
        estimate_wce(trace_of([0]), store)


def test_empty_bins_reported(ab_store):
    est = estimate_wce(trace_of([2]), ab_store)
    assert est.bins == {0: 0.0, 1: 1.0}


# -- vertex WCE ------------------------------------------------------------

def test_vwce_isolated_vertex():
    g = Graph.from_edges(3, [(0, 1)], directed=True)
    est = estimate_vertex_wce(trace_of([2]), g, vertex_labeler=np.array([0, 0, 1]))
    assert est.numerators == {0: 0.0, 1: 1.0}


def test_vwce_reciprocal_pair_duplicates():
    g = Graph.from_edges(2, [(0, 1), (1, 0)], directed=True)
    est = estimate_vertex_wce(trace_of([0]), g, vertex_labeler=np.array([0, 1]))
    # C'(0) = {1, 1, 0}; f'(1) = f'(0) = 3
    assert est.numerators[1] == pytest.approx(2 / 3)
    assert est.numerators[0] == pytest.approx(1 / 3)


def test_vwce_long_run_outdegree():
    rng = np.random.default_rng(0)
    n = 30
    e = np.argwhere(rng.random((n, n)) < 0.1)
    g = Graph.from_edges(n, e, directed=True)
    tr = sample_uni(g, SamplerConfig(max_steps=200_000), seed=1)
    est = estimate_vertex_wce(tr, g)
    keys, counts = np.unique(g.outdeg, return_counts=True)
    for k, c in zip(keys, counts):
        assert est.bins[int(k)] == pytest.approx(c / n, abs=0.01)


# -- MLE -------------------------------------------------------------------

def test_pij_examples():
    P = mle_pij(MleConfig(0.5, 2))
    assert P[0, 1] == pytest.approx(2 / 3) and P[1, 1] == pytest.approx(1 / 3)
    assert P[0, 0] == pytest.approx(1.0)
    assert P[1, 0] == 0.0


@settings(max_examples=60)
@given(st.floats(0.001, 0.999), st.integers(1, 60))
def test_pij_columns_sum_to_one(p, M):
    assert np.abs(mle_pij(MleConfig(p, M)).sum(axis=0) - 1).max() < 1e-12


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_mle_degenerate_p(p):
    with pytest.raises(EstimatorError):
        MleConfig(p, 3)


def test_em_matches_grid_M2():
    P = mle_pij(MleConfig(0.5, 2))
    omega = np.array([0.7, 0.3])
    counts = 10_000 * (P @ omega)
    theta = em_mixture(counts, P)
    np.testing.assert_allclose(theta, grid_mixture(counts, P), atol=1e-3)
    np.testing.assert_allclose(theta, omega, atol=1e-6)


def test_mle_all_singletons_M1():
    store = ContentStore.from_placements([[0], [1]], 4)
    est = estimate_mle_copycount(trace_of([0, 1]), store, MleConfig(0.5, 1))
    assert est.bins == {1: pytest.approx(1.0)}


def test_mle_near_census():
    g = Graph.from_edges(400, [])
    cfg = ParetoConfig(1.0, 5)
    store = generate_cds1(g, 3000, cfg, seed=0)
    tr = sample_uni(g, SamplerConfig(budget=396), seed=1)
    est = estimate_mle_copycount(tr, store, MleConfig(396 / 400, 5))
    truth = store.true_distribution()
    for k in truth:
        assert est.bins[k] == pytest.approx(truth[k], abs=0.02)


def test_mle_rejects_walk_traces(ab_store, path3):
    with pytest.raises(UnsupportedSamplerError):
        estimate_mle_copycount(trace_of([0], "RW", path3), ab_store, MleConfig(0.5, 2))
    with pytest.raises(UnsupportedSamplerError):
        estimate("MLE", trace_of([0], "RW", path3), ab_store)


def test_mle_M_too_small(ab_store):
    with pytest.raises(EstimatorError):
        estimate_mle_copycount(trace_of([0, 1]), ab_store, MleConfig(0.5, 1))


def test_mle_label_single_copy_equals_alpha():
    store = ContentStore.from_placements([[0], [1], [2], [3]], 8, labels=[0, 0, 1, 2])
    est = estimate_mle_label(trace_of([0, 1, 2, 5]), store, MleConfig(0.5, 3))
    assert est.bins == pytest.approx({0: 2 / 3, 1: 1 / 3, 2: 0.0})


def _hand_mle_label(sample):
    """Hand rule for the A/B/C instance below with M=2, p=1/2.

    A (label 0) has f=2 on {0,1}; B, C (label 1) have f=1 on {2} and {3}.
    An observed multiplicity of 2 pins f=2 (detection 1-q^2 = 3/4); a lone
    multiplicity-1 observation is best explained by f=1 (detection 1/2).
    """
    i_a = len(sample & {0, 1})
    seen = {0: int(i_a > 0), 1: len(sample & {2, 3})}
    total = seen[0] + seen[1]
    det = {0: 0.75 if i_a == 2 else 0.5, 1: 0.5}
    raw = {k: (seen[k] / total) / det[k] for k in (0, 1)}
    s = sum(raw.values())
    return {k: v / s for k, v in raw.items()}


def test_mle_label_enumerated_instance():
    store = ContentStore.from_placements([[0, 1], [2], [3]], 4, labels=[0, 1, 1])
    for subset in itertools.combinations(range(4), 2):
        est = estimate_mle_label(trace_of(list(subset)), store, MleConfig(0.5, 2))
        assert est.bins == pytest.approx(_hand_mle_label(set(subset)), abs=1e-6), subset


def test_mle_label_unseen_label_is_zero(ab_store):
    est = estimate_mle_label(trace_of([2]), ab_store, MleConfig(0.5, 2))
    assert est.bins[0] == 0.0 and est.bins[1] == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.floats(0.2, 0.8), st.integers(0, 10_000))
def test_mle_maximizes_likelihood(M, p, seed):
    rng = np.random.default_rng(seed)
    omega = rng.dirichlet(np.ones(M))
    P = mle_pij(MleConfig(p, M))
    counts = rng.multinomial(500, P @ omega).astype(float)
    theta = em_mixture(counts, P)
    assert mixture_loglik(theta, counts, P) >= mixture_loglik(omega, counts, P) - 1e-9
    np.testing.assert_allclose(theta, grid_mixture(counts, P, step=1e-2), atol=1.5e-2)


def test_mle_copycount_matches_full_likelihood_grid():
    rng = np.random.default_rng(5)
    cfg = MleConfig(0.5, 3)
    counts = rng.multinomial(2000, [0.6, 0.3, 0.1]).astype(float)
    from contentsampling.estimators import size_distribution_from_counts
    np.testing.assert_allclose(size_distribution_from_counts(counts, cfg),
                               grid_mle_size_distribution(counts, 0.5), atol=2e-3)


def test_observed_multiplicity_ignores_revisits():
    store = ContentStore.from_placements([[0, 1, 2]], 3)
    assert observed_multiplicity(trace_of([0, 0, 0, 1]), store).tolist() == [2]


# -- shared invariants -----------------------------------------------------

stores = st.integers(3, 8).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.permutations(list(range(n))), st.integers(1, n), st.integers(0, 3)),
             min_size=1, max_size=12)))


@settings(max_examples=80, deadline=None)
@given(stores, st.lists(st.integers(0, 100), min_size=1, max_size=15))
def test_estimates_are_normalized(spec, steps):
    n, items = spec
    placements = [list(perm[:f]) for perm, f, _ in items]
    labels = [lab for _, _, lab in items]
    store = ContentStore.from_placements(placements, n, labels=labels)
    tr = trace_of([s % n for s in steps])
    for fn in (estimate_dce, estimate_sce, estimate_wce):
        try:
            est = fn(tr, store)
        except EmptySampleError:
            continue
        assert abs(sum(est.bins.values()) - 1) < 1e-9
        assert min(est.bins.values()) >= 0
        assert set(est.bins) == set(labels)


@settings(max_examples=60, deadline=None)
@given(stores)
def test_dce_bias_direction(spec):
    n, items = spec
    placements = [list(perm[:f]) for perm, f, _ in items]
    fs = [len(p) for p in placements]
    if len(set(fs)) < 2:
        return
    # label contents by copy count, cover every vertex with one extra singleton each
    placements += [[v] for v in range(n)]
    labels = [len(p) for p in placements]
    truth = {k: labels.count(k) / len(labels) for k in set(labels)}
    exp = exact_dce_expectation(placements, labels, n, 1)
    top = max(labels)
    assert exp[top] > truth[top]
