import numpy as np
import pytest

from edgecache.projection import project_bounded_simplex
from edgecache.sampler import (SamplePathEnsemble, decision_at,
                               expected_switching, pack_ensemble,
                               quantize_probs, read_ensemble_frames,
                               rng_stream, update_ensemble)


def test_quantize_examples():
    assert quantize_probs(np.array([0.237]), 100)[0] == pytest.approx(0.23)
    assert quantize_probs(np.array([1.0]), 100)[0] == 1.0
    np.testing.assert_allclose(quantize_probs(np.array([0.55, 0.45]), 10),
                               [0.5, 0.4])


def test_quantize_properties():
    rng = rng_stream(0, "test:quant")
    for _ in range(200):
        n = int(rng.integers(1, 20))
        M = int(rng.integers(1, n + 1))
        K = int(rng.choice([3, 10, 100]))
        p = project_bounded_simplex(rng.uniform(-0.5, 1.5, n), M)
        q = quantize_probs(p, K)
        assert np.all(q <= p + 1e-9)
        assert np.all(p - q < 1.0 / K)
        assert q.sum() <= p.sum() + 1e-9
        counts = q * K
        np.testing.assert_allclose(counts, np.rint(counts), atol=1e-9)


def _counts(ens):
    return ens.column_counts()


def test_update_reaches_exact_marginals_and_capacity():
    rng = rng_stream(1, "test:update")
    ens = SamplePathEnsemble.initial(K=10, N=6, M=2, k_star=3)
    for _ in range(60):
        p = project_bounded_simplex(rng.uniform(-0.4, 1.4, 6), 2)
        pq = quantize_probs(p, 10)
        ens = update_ensemble(ens, pq, rng)
        assert np.array_equal(_counts(ens), np.rint(pq * 10).astype(np.int64))
        assert ens.S.sum(axis=1).max() <= 2


def test_update_unchanged_when_targets_static():
    rng = rng_stream(2, "test:static")
    ens = SamplePathEnsemble.initial(K=4, N=3, M=1, k_star=0)
    ens = update_ensemble(ens, np.array([0.5, 0.25, 0.25]), rng)
    before = ens.S.copy()
    ens2 = update_ensemble(ens, np.array([0.5, 0.25, 0.25]), rng)
    assert np.array_equal(ens2.S, before)


def test_two_path_swap_case_every_resolution():
    """K=2, M=1: both paths hold service 0, targets move to [0.5, 0.5].
    Every random resolution must end with one path on each service, via one
    removal, one addition and at most one rebalance move; the transition
    contributes exactly one insertion, i.e. 0.5 per unit of path mass."""
    for seed in range(60):
        rng = rng_stream(seed, "test:swap")
        ens = SamplePathEnsemble.initial(K=2, N=2, M=1, k_star=0)
        ens = update_ensemble(ens, np.array([1.0, 0.0]), rng)
        assert np.array_equal(ens.S, [[1, 0], [1, 0]])
        nxt = update_ensemble(ens, np.array([0.5, 0.5]), rng)
        assert sorted(map(tuple, nxt.S.tolist())) == [(0, 1), (1, 0)]
        assert nxt.S.sum(axis=1).max() <= 1
        step_insertions = np.maximum(nxt.S - ens.S, 0).sum() / nxt.K
        assert step_insertions == 0.5


def test_three_quarters_on_four_paths():
    rng = rng_stream(3, "test:quarters")
    ens = SamplePathEnsemble.initial(K=4, N=1, M=1, k_star=2)
    ens = update_ensemble(ens, np.array([0.75]), rng)
    assert ens.S.sum() == 3


def test_expected_switching_static_and_fresh():
    ens = SamplePathEnsemble.initial(K=4, N=3, M=2, k_star=0)
    rng = rng_stream(4, "test:es")
    e1 = update_ensemble(ens, np.array([1.0, 0.5, 0.0]), rng)
    assert expected_switching([e1, e1, e1]) == expected_switching([e1])
    assert expected_switching([e1]) == pytest.approx((4 + 2) / 4)


def test_switching_bound_monte_carlo():
    """Seed-averaged insertions stay within the 3x bound on the positive
    quantized motion (small version; the full suite runs in acceptance)."""
    K, n, M, T = 10, 6, 2, 8
    seq_rng = rng_stream(5, "test:bound-seq")
    targets = []
    for _ in range(T):
        p = project_bounded_simplex(seq_rng.uniform(-0.4, 1.4, n), M)
        targets.append(quantize_probs(p, K))
    motion, prev = 0.0, np.zeros(n)
    for pq in targets:
        motion += float(np.maximum(pq - prev, 0).sum())
        prev = pq
    totals = []
    for s in range(120):
        rng = rng_stream(s, "test:bound-run")
        ens = SamplePathEnsemble.initial(K, n, M, k_star=0)
        seq = []
        for pq in targets:
            ens = update_ensemble(ens, pq, rng)
            seq.append(ens)
        totals.append(expected_switching(seq))
    assert np.mean(totals) <= 3.0 * motion * 1.05


def test_decision_at_and_kstar():
    ens = SamplePathEnsemble.initial(K=3, N=2, M=1, k_star=1)
    ens.S[1, 1] = 1
    assert decision_at(ens).tolist() == [0, 1]
    one = SamplePathEnsemble.initial(K=1, N=2, M=1, k_star=0)
    one.S[0, 0] = 1
    assert decision_at(one).tolist() == [1, 0]


def test_update_determinism():
    def run(seed):
        rng = rng_stream(seed, "test:det")
        ens = SamplePathEnsemble.initial(K=8, N=5, M=2, k_star=0)
        frames = []
        gen = rng_stream(99, "test:det-p")
        for _ in range(10):
            p = project_bounded_simplex(gen.uniform(-0.4, 1.4, 5), 2)
            ens = update_ensemble(ens, quantize_probs(p, 8), rng)
            frames.append(ens.S.copy())
        return frames

    a, b = run(7), run(7)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    c = run(8)
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))


def test_marginal_distribution_over_seeds():
    """Following a uniformly chosen path realizes the quantized marginals."""
    pq = np.array([0.6, 0.3, 0.1])
    hits = np.zeros(3)
    runs = 10_000
    for s in range(runs):
        rng = rng_stream(s, "test:marginal")
        k_star = int(rng_stream(s, "test:marginal-k").integers(10))
        ens = SamplePathEnsemble.initial(K=10, N=3, M=1, k_star=k_star)
        ens = update_ensemble(ens, pq, rng)
        hits += decision_at(ens)
    freq = hits / runs
    se = np.sqrt(pq * (1 - pq) / runs)
    assert np.all(np.abs(freq - pq) <= 3 * se)


def test_update_rejects_unquantized_targets():
    ens = SamplePathEnsemble.initial(K=5, N=2, M=1, k_star=0)
    with pytest.raises(ValueError):
        update_ensemble(ens, np.array([0.3, 0.1]), rng_stream(0, "x"))


def test_ensemble_dump_roundtrip(tmp_path):
    rng = rng_stream(6, "test:dump")
    ens = SamplePathEnsemble.initial(K=5, N=13, M=4, k_star=0)
    frames = []
    blob = b""
    for _ in range(4):
        p = project_bounded_simplex(rng.uniform(-0.4, 1.4, 13), 4)
        ens = update_ensemble(ens, quantize_probs(p, 5), rng)
        frames.append(ens.S.copy())
        blob += pack_ensemble(ens.S)
    path = tmp_path / "ens.bits"
    path.write_bytes(blob)
    back = read_ensemble_frames(path, K=5, N=13)
    assert len(back) == 4
    assert all(np.array_equal(x, y) for x, y in zip(frames, back))
