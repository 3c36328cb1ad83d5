import logging

import numpy as np
import pytest

from conftest import CHAIN_B, CHAIN_ORDER, chain_data
from dlingam.core import (
    AdjacencyMatrix,
    PriorKnowledge,
    discover_order,
    estimate_b,
    fit,
    load_prior_csv,
    r_squared,
    select_exogenous,
    total_effects,
)
from dlingam.dataset import Dataset, center
from dlingam.errors import DataError, NumericalError
from dlingam.kernel import default_params
from dlingam.simulate import path_indicator, sample_external


def test_select_exogenous_chain():
    hits = 0
    for seed in range(10):
        d = center(chain_data(2000, seed))
        hits += select_exogenous(d, [0, 1, 2], default_params(2000)) == 1
    assert hits >= 9


def test_select_exogenous_pair():
    hits = 0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        xa = sample_external("c", 2000, 1.0, rng)
        xb = 3 * xa + sample_external("c", 2000, 1.0, rng)
        d = center(Dataset(np.vstack([xb, xa])))
        hits += select_exogenous(d, [0, 1], default_params(2000)) == 1
    assert hits >= 9


def test_select_exogenous_tie_takes_smallest():
    x = np.random.default_rng(0).uniform(-1, 1, 300)
    d = center(Dataset(np.vstack([x, x, x])))
    stats = {}
    assert select_exogenous(d, [2, 1, 0], default_params(300), stats=stats) == 0
    assert stats[0] == stats[1] == stats[2]


def test_discover_order_chain():
    hits = sum(discover_order(center(chain_data(2000, s))) == CHAIN_ORDER for s in range(10))
    assert hits >= 9


def test_full_prior_needs_no_kernel_evaluations():
    prior = PriorKnowledge(path_indicator(CHAIN_B))
    res = fit(chain_data(500, 1), prior=prior)
    assert res.ordering == CHAIN_ORDER
    assert res.mi_evaluations == 0


def test_vacuous_prior_is_bit_identical():
    d = chain_data(800, 2)
    plain = fit(d)
    vacuous = fit(d, prior=PriorKnowledge.unknown(3))
    assert plain.ordering == vacuous.ordering
    assert np.array_equal(plain.b, vacuous.b)
    assert [r.statistics for r in plain.rounds] == [r.statistics for r in vacuous.rounds]


def test_partial_prior_excludes_known_endogenous():
    # only "x1 has an ancestor" is known: x1 cannot be picked first
    a = -np.ones((3, 3), dtype=int)
    a[0, 1] = 1
    rounds = []
    discover_order(center(chain_data(500, 3)), prior=PriorKnowledge(a), trace=rounds)
    assert 0 not in rounds[0].candidates


def test_prior_size_mismatch():
    with pytest.raises(DataError):
        discover_order(center(chain_data(100, 0)), prior=PriorKnowledge.unknown(4))


def test_round_failure_is_reported_with_round():
    x = np.random.default_rng(0).normal(size=(3, 50))
    x[1] = 0.0
    with pytest.raises(NumericalError, match="round 1"):
        discover_order(Dataset(x))


def test_estimate_b_chain():
    d = center(chain_data(5000, 4))
    b = estimate_b(d, CHAIN_ORDER).b
    np.testing.assert_allclose(b[[0, 2, 2], [1, 0, 1]], [1.5, 0.8, -1.5], atol=0.1)
    assert np.count_nonzero(b) == 3


def test_estimate_b_independent_near_zero():
    rng = np.random.default_rng(9)
    n = 2000
    d = center(Dataset(rng.uniform(-1, 1, (3, n)) * np.sqrt(3)))
    b = estimate_b(d, (2, 0, 1)).b
    assert np.all(np.abs(b) <= 3 / np.sqrt(n))


def test_estimate_b_prior_drops_regressors():
    a = -np.ones((3, 3), dtype=int)
    a[2, 0] = 0
    b = estimate_b(center(chain_data(1000, 5)), CHAIN_ORDER, PriorKnowledge(a)).b
    assert b[2, 0] == 0.0
    assert b[2, 1] != 0.0


def test_estimate_b_singular_names_variable():
    a, b = np.random.default_rng(0).normal(size=(2, 40))
    d = center(Dataset(np.vstack([a, a, b])))
    with pytest.raises(NumericalError, match="x3"):
        estimate_b(d, (0, 1, 2))


def test_total_effects_empty_graph():
    np.testing.assert_array_equal(total_effects(AdjacencyMatrix(np.zeros((3, 3)), (0, 1, 2))).a, np.eye(3))


def test_total_effects_chain():
    a = total_effects(AdjacencyMatrix(CHAIN_B, CHAIN_ORDER)).a
    assert a[2, 1] == pytest.approx(-0.3)
    assert a[0, 1] == pytest.approx(1.5)
    assert a[1, 0] == 0.0


def test_r_squared_cases():
    d = center(chain_data(5000, 6))
    B = AdjacencyMatrix(CHAIN_B, CHAIN_ORDER)
    assert r_squared(d, B, 1) == 0.0
    assert r_squared(d, B, 2) == pytest.approx(1 - 1 / 1.73, abs=0.05)
    x = np.random.default_rng(0).normal(size=100)
    exact = center(Dataset(np.vstack([x, 2 * x])))
    b = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert r_squared(exact, AdjacencyMatrix(b, (0, 1)), 1) == pytest.approx(1.0)


def test_r_squared_zero_variance():
    x = np.vstack([np.zeros(10), np.arange(10.0)])
    with pytest.raises(NumericalError):
        r_squared(Dataset(x), AdjacencyMatrix(np.zeros((2, 2)), (0, 1)), 0)


def test_adjacency_rejects_cycle_shape():
    with pytest.raises(ValueError):
        AdjacencyMatrix(CHAIN_B, (0, 1, 2))
    with pytest.raises(ValueError):
        AdjacencyMatrix(np.zeros((2, 2)), (0, 1, 2))


def test_prior_validation():
    with pytest.raises(DataError, match="row 2, column 1"):
        PriorKnowledge([[0, 1], [3, 0]])
    with pytest.raises(DataError, match="cycle"):
        PriorKnowledge([[0, 1], [1, 0]])
    assert PriorKnowledge([[1, -1], [0, 1]]).a_knw[0, 0] == 0


def test_load_prior_csv(tmp_path, caplog):
    path = tmp_path / "prior.csv"
    path.write_text("1,-1,0\n-1,0,-1\n1,1,0\n")
    with caplog.at_level(logging.WARNING):
        prior = load_prior_csv(path, 3)
    assert "diagonal" in caplog.text
    assert prior.a_knw[0, 0] == 0
    with pytest.raises(DataError):
        load_prior_csv(path, 4)
    path.write_text("0,x\n0,0\n")
    with pytest.raises(DataError, match="row 1, column 2"):
        load_prior_csv(path)


def test_fit_is_shift_invariant():
    d = chain_data(600, 7)
    shifted = d.with_values(d.values + np.array([[5.0], [-3.0], [100.0]]))
    a, b = fit(d), fit(shifted)
    assert a.ordering == b.ordering
    np.testing.assert_allclose(a.b, b.b, atol=1e-9)


def test_exactly_p_minus_one_rounds():
    for p in (2, 4, 6):
        x = np.random.default_rng(p).uniform(-1, 1, (p, 200))
        rounds = []
        order = discover_order(center(Dataset(x)), trace=rounds)
        assert len(rounds) == p - 1
        assert sorted(order) == list(range(p))


def test_true_prior_never_selects_known_endogenous():
    from dlingam.simulate import DagSpec, generate_instance, mask_prior

    for seed in range(5):
        rng = np.random.default_rng(seed)
        inst = generate_instance(DagSpec(5, "sparse2"), 500, rng)
        prior = mask_prior(inst.true_b, 0.5, rng).permute(inst.permutation)
        rounds = []
        discover_order(center(inst.data), prior=prior, trace=rounds)
        for r in rounds:
            sub = prior.a_knw[np.ix_(r.active, r.active)]
            endogenous = {j for k, j in enumerate(r.active) if np.any(sub[k] == 1)}
            assert r.selected not in endogenous
