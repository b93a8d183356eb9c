import itertools

import numpy as np
import pytest

from edgecache.baselines import (InstanceTooLargeError, chc_policy,
                                 exact_opt_dp, pseudo_opt, rhc_policy,
                                 solve_rhc_window, sopt_policy)
from edgecache.model import (ArrivalTrace, CostModel, indicator_path,
                             total_cost_F)
from edgecache.rosc import RoscConfig, run_rosc
from edgecache.sampler import rng_stream


def _cost(n, beta=10.0, M=1, alpha=0.05):
    return CostModel.uniform(alpha, beta, n, M)


def _window_cost(lam_hat, x_prev, plan, cost):
    prev = np.asarray(x_prev, dtype=float)
    total = 0.0
    for i in range(lam_hat.shape[0]):
        total += (cost.alpha * np.dot(lam_hat[i], 1 - plan[i])
                  + np.dot(cost.beta, np.maximum(plan[i] - prev, 0)))
        prev = plan[i]
    return total


def brute_window(lam_hat, x_prev, cost):
    """Enumerate every capacity-feasible binary window plan."""
    span, n = lam_hat.shape
    best, best_plan = np.inf, None
    for flat in itertools.product([0, 1], repeat=span * n):
        plan = np.asarray(flat).reshape(span, n)
        if np.any(plan.sum(axis=1) > cost.M):
            continue
        total = _window_cost(lam_hat, x_prev, plan, cost)
        if total < best - 1e-12:
            best, best_plan = total, plan
    return best, best_plan


def test_rhc_window_dp_example():
    cost = _cost(1)
    lam_hat = np.array([[300.0], [10.0]])
    plan = solve_rhc_window(lam_hat, np.zeros(1), cost)
    assert plan.tolist() == [[1], [1]]
    assert _window_cost(lam_hat, [0.0], plan, cost) == pytest.approx(10.0)
    # enumeration agrees: 15.5, 10.5, 25 for the other three trajectories
    best, best_plan = brute_window(lam_hat, np.zeros(1), cost)
    assert best == pytest.approx(10.0) and best_plan.tolist() == [[1], [1]]


def test_rhc_threshold_behavior():
    """A cold service whose window demand is below beta/alpha never enters."""
    rng = rng_stream(0, "test:threshold")
    cost = _cost(3, beta=10.0, M=3)
    for _ in range(30):
        W = int(rng.integers(1, 5))
        lam_hat = rng.uniform(0, 0.9 * cost.beta_star / cost.alpha / W, (W, 3))
        plan = solve_rhc_window(lam_hat, np.zeros(3), cost)
        assert not plan.any()


def test_rhc_capacity_repair_noop_when_m_covers_n():
    rng = rng_stream(1, "test:repair")
    lam_hat = rng.poisson(100, (3, 4)).astype(float)
    cost = _cost(4, beta=2.0, M=4)
    plan = solve_rhc_window(lam_hat, np.zeros(4), cost)
    # with M = N each service keeps its unconstrained DP trajectory
    for n in range(4):
        single = solve_rhc_window(lam_hat[:, [n]], np.zeros(1),
                                  _cost(1, beta=2.0, M=1))
        assert plan[:, n].tolist() == single[:, 0].tolist()


def test_rhc_heuristic_matches_enumeration_on_tiny_windows():
    rng = rng_stream(2, "test:gap")
    gaps = []
    for _ in range(40):
        n = int(rng.integers(2, 5))
        span = int(rng.integers(1, 4))
        M = int(rng.integers(1, n + 1))
        cost = _cost(n, beta=float(rng.uniform(1, 8)), M=M)
        lam_hat = rng.poisson(30, (span, n)).astype(float)
        x_prev = np.zeros(n)
        plan = solve_rhc_window(lam_hat, x_prev, cost)
        mine = _window_cost(lam_hat, x_prev, plan, cost)
        best, _ = brute_window(lam_hat, x_prev, cost)
        gaps.append(mine - best)
        assert mine >= best - 1e-9
    # documented heuristic: report the measured gap; it is tiny in practice
    assert np.mean(gaps) <= 0.5


def test_rhc_w1_tiny_beta_tracks_top_m():
    rng = rng_stream(3, "test:ftl")
    lam = rng.poisson(20, (12, 5)).astype(float)
    trace = ArrivalTrace(lam=lam)
    cost = _cost(5, beta=1e-9, M=2)
    rec = rhc_policy(trace, cost, W=1)
    np.testing.assert_array_equal(rec.decisions, indicator_path(trace, 2))


def test_chc_w1_equals_rhc():
    rng = rng_stream(4, "test:chc1")
    trace = ArrivalTrace(lam=rng.poisson(50, (15, 4)).astype(float))
    cost = _cost(4, beta=3.0, M=2)
    a = rhc_policy(trace, cost, W=1)
    b = chc_policy(trace, cost, W=1)
    np.testing.assert_allclose(b.decisions, a.decisions)
    assert b.total_cost == pytest.approx(a.total_cost)


def test_chc_averages_disjoint_plans():
    """Two consecutive solves caching disjoint singletons average to a
    half-and-half decision costed on fractional increments."""
    # slot 1 demands service 0 strongly, slot 2 demands service 1 strongly;
    # with W = 2 the solve at t=1 plans service 0 for slot 2 only if it
    # still pays there; make slot-2 demand for service 0 vanish so the two
    # plans for slot 2 disagree.
    lam = np.array([[400.0, 0.0], [0.0, 400.0]])
    trace = ArrivalTrace(lam=lam)
    cost = _cost(2, beta=10.0, M=1)
    rec = chc_policy(trace, cost, W=2)
    # t=1: only the solve at 1 exists -> binary [1, 0]
    np.testing.assert_allclose(rec.decisions[0], [1, 0])
    # t=2: solve@1 planned [1,0] (keep, eviction free? no: forwarding 400
    # forces switch) actually plans service 1... average of the two plans
    assert rec.decisions[1].sum() <= 1 + 1e-9
    fractional = rec.decisions[1]
    assert set(np.round(fractional, 6)) <= {0.0, 0.5, 1.0}


def test_chc_all_solves_agree_is_binary():
    lam = np.tile([50.0, 1.0, 1.0], (10, 1))
    trace = ArrivalTrace(lam=lam)
    cost = _cost(3, beta=2.0, M=1)
    rec = chc_policy(trace, cost, W=3)
    assert set(np.unique(rec.decisions)) <= {0.0, 1.0}


def test_sopt_examples():
    cost = _cost(3, beta=10.0, M=2)  # threshold beta*/alpha = 200
    # totals (300, 250, 180): third service misses the threshold
    rec1 = sopt_policy(ArrivalTrace(lam=np.tile([100.0, 250 / 3, 60], (3, 1))), cost)
    assert rec1.decisions[0].tolist() == [1, 1, 0]

    tr2 = ArrivalTrace(lam=np.tile([100.0, 250 / 3, 220 / 3], (3, 1)))
    rec2 = sopt_policy(tr2, cost)
    assert rec2.decisions[0].tolist() == [1, 1, 0]  # third passes threshold, loses top-M

    tr3 = ArrivalTrace(lam=np.tile([60.0, 50, 40], (3, 1)))
    rec3 = sopt_policy(tr3, cost)
    assert not rec3.decisions.any()
    assert rec3.total_cost == pytest.approx(0.05 * tr3.lam.sum())


def test_sopt_pays_instantiation_once_at_start():
    trace = ArrivalTrace(lam=np.tile([300.0, 1.0], (4, 1)))
    cost = _cost(2, beta=10.0, M=1)
    rec = sopt_policy(trace, cost)
    assert rec.switch[0] == pytest.approx(10.0)
    assert rec.switch[1:].sum() == 0.0


def test_exact_dp_tiny_example():
    trace = ArrivalTrace(lam=[[100.0, 50.0]])
    cost = _cost(2, beta=10.0, M=1)
    rec = exact_opt_dp(trace, cost)
    assert rec.total_cost == pytest.approx(7.5)
    assert not rec.decisions.any()


def test_exact_dp_tiny_beta_caches_top_m_every_slot():
    rng = rng_stream(5, "test:dp-beta0")
    lam = rng.poisson(40, (8, 5)).astype(float) + \
        np.arange(5)[None, :]  # break ties deterministically
    trace = ArrivalTrace(lam=lam)
    cost = _cost(5, beta=1e-9, M=2)
    rec = exact_opt_dp(trace, cost)
    theta = indicator_path(trace, 2)
    per_slot_topm_forward = 0.05 * (trace.lam * (1 - theta)).sum()
    assert rec.total_cost == pytest.approx(per_slot_topm_forward, abs=1e-5)


def test_exact_dp_static_when_demand_is_static():
    lam = np.tile([90.0, 80.0, 2.0, 1.0], (20, 1))
    trace = ArrivalTrace(lam=lam)
    cost = _cost(4, beta=5.0, M=2)
    rec = exact_opt_dp(trace, cost)
    assert np.array_equal(rec.decisions, np.tile([1, 1, 0, 0], (20, 1)))


def test_exact_dp_budget_refusal():
    trace = ArrivalTrace(lam=np.ones((5, 20)))
    with pytest.raises(InstanceTooLargeError):
        exact_opt_dp(trace, _cost(20, M=2))
    trace2 = ArrivalTrace(lam=np.ones((200, 4)))
    with pytest.raises(InstanceTooLargeError):
        exact_opt_dp(trace2, _cost(4, M=2))


def test_exact_dp_lower_bounds_every_policy():
    rng = rng_stream(6, "test:lb")
    lam = rng.poisson(25, (15, 6)).astype(float)
    trace = ArrivalTrace(lam=lam)
    cost = _cost(6, beta=4.0, M=2)
    opt = exact_opt_dp(trace, cost)
    candidates = [
        sopt_policy(trace, cost),
        rhc_policy(trace, cost, W=3),
        run_rosc(trace, RoscConfig(cost=cost, W=3, K=10, seed=0)),
        run_rosc(trace, RoscConfig(cost=cost, W=0, K=10, seed=1)),
    ]
    for rec in candidates:
        assert rec.total_cost >= opt.total_cost - 1e-9


def test_all_baselines_respect_capacity():
    rng = rng_stream(7, "test:cap")
    lam = rng.poisson(30, (12, 6)).astype(float)
    trace = ArrivalTrace(lam=lam)
    cost = _cost(6, beta=3.0, M=2)
    for rec in (rhc_policy(trace, cost, 3), chc_policy(trace, cost, 3),
                sopt_policy(trace, cost), exact_opt_dp(trace, cost),
                pseudo_opt(trace, cost, 30)):
        assert np.all(rec.decisions.sum(axis=1) <= cost.M + 1e-9)
        assert rec.total_cost == pytest.approx(
            total_cost_F(trace, rec.decisions, cost), rel=1e-12, abs=1e-9)


def test_pseudo_opt_signed_gap_and_zero_iterations():
    rng = rng_stream(8, "test:pseudo")
    lam = rng.poisson(20, (10, 5)).astype(float)
    trace = ArrivalTrace(lam=lam)
    cost = _cost(5, beta=4.0, M=2)
    opt = exact_opt_dp(trace, cost)
    ps = pseudo_opt(trace, cost, 50)
    gap = ps.total_cost - opt.total_cost  # fractional relaxation: either sign
    assert np.isfinite(gap)

    from edgecache.gradient_pgd import offline_pgd
    zero = pseudo_opt(trace, cost, 0)
    assert zero.total_cost == pytest.approx(
        total_cost_F(trace, offline_pgd(trace, cost, 0), cost))


def test_pseudo_opt_forwarding_profile_matches_sopt_on_stationary_trace():
    base = np.array([50.0, 40, 30, 6, 5, 4, 3, 2])
    trace = ArrivalTrace(lam=np.tile(base, (40, 1)))
    cost = _cost(8, beta=10.0, M=2)
    steady = sopt_policy(trace, cost).forward[-1]
    gaps = []
    for w_big in (10, 50, 300):
        rec = pseudo_opt(trace, cost, w_big)
        gaps.append(abs(rec.forward[-10:].mean() - steady))
    assert all(g <= 1e-6 for g in gaps)
    assert gaps == sorted(gaps, reverse=True) or max(gaps) <= 1e-9
