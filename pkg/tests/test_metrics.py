"""realism-metrics vs independent brute-force oracles."""

import math

import numpy as np
import pytest

from loadgan import metrics as M
from loadgan.data import Profile, ProfileDataset
from loadgan.errors import DataError


# --- independent oracles ----------------------------------------------------


def percentile_oracle(values, q):
    """Linear interpolation between order statistics at rank q/100*(n-1)."""
    s = sorted(float(v) for v in values)
    rank = q / 100.0 * (len(s) - 1)
    lo = math.floor(rank)
    hi = math.ceil(rank)
    return s[lo] + (s[hi] - s[lo]) * (rank - lo)


def near_peak_oracle(values):
    vals = list(values)
    vals.remove(max(vals))
    return percentile_oracle(vals, 97.5)


def near_base_oracle(values):
    vals = list(values)
    vals.remove(min(vals))
    return percentile_oracle(vals, 2.5)


def high_load_duration_oracle(values):
    thr = 0.5 * (near_peak_oracle(values) + near_base_oracle(values))
    best = 0
    i = 0
    n = len(values)
    while i < n:
        if values[i] > thr:
            j = i
            while j < n and values[j] > thr:
                j += 1
            best = max(best, j - i)
            i = j
        else:
            i += 1
    return best * 0.25


def rising_events_oracle(values):
    """State-machine scan, written independently of the library version."""
    pk = near_peak_oracle(values)
    bs = near_base_oracle(values)
    if pk == bs:
        return []
    band = bs + 0.05 * (pk - bs)
    thr = 0.5 * (pk + bs)
    events = []
    seen_base_at = None
    for idx in range(len(values)):
        v = values[idx]
        if v <= band:
            seen_base_at = idx
        if v > thr and seen_base_at is not None:
            events.append((seen_base_at, idx))
            seen_base_at = None
    return events


def safod_oracle(values):
    return sum(abs(values[i + 1] - values[i]) for i in range(len(values) - 1))


def random_profiles(n=100, seed=123, length=96):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        kind = rng.integers(0, 3)
        if kind == 0:
            v = rng.uniform(0, 10, length)
        elif kind == 1:
            t = np.linspace(0, 2 * np.pi, length)
            v = 5 + 3 * np.sin(t * rng.integers(1, 4)) + rng.normal(0, 0.5, length)
        else:
            v = np.concatenate([rng.uniform(0, 1, length // 2), rng.uniform(5, 9, length - length // 2)])
        out.append(np.maximum(v, 0.0))
    return out


# --- near-peak / near-base ---------------------------------------------------


def test_near_peak_constant():
    assert M.near_peak(np.full(96, 5.0)) == 5.0


def test_near_peak_excludes_single_spike():
    v = np.ones(96)
    v[40] = 100.0
    assert M.near_peak(v) == 1.0


def test_near_peak_ramp_frozen_oracle_value():
    v = np.arange(1, 97) / 96.0
    # oracle: drop the max, interpolate the 97.5th percentile of the rest
    expected = near_peak_oracle(v)
    assert abs(expected - 0.9651041666666667) < 1e-15
    assert abs(M.near_peak(v) - expected) < 1e-15


def test_near_base_constant():
    assert M.near_base(np.full(96, 3.3)) == 3.3


def test_near_base_unaffected_by_single_zero_dropout():
    rng = np.random.default_rng(5)
    v = rng.uniform(2.0, 3.0, 96)
    v[50] = 0.0
    got = M.near_base(v)
    assert got >= 2.0
    assert abs(got - near_base_oracle(v)) < 1e-12


def test_near_peak_base_match_oracle_on_random_profiles():
    for v in random_profiles(100):
        np.testing.assert_allclose(M.near_peak(v), near_peak_oracle(v), rtol=1e-9)
        np.testing.assert_allclose(M.near_base(v), near_base_oracle(v), rtol=1e-9, atol=1e-12)


def test_short_profile_errors():
    with pytest.raises(DataError):
        M.near_peak([1.0, 2.0])


# --- high-load duration ------------------------------------------------------


def test_high_load_duration_constructed_run():
    v = np.zeros(96)
    v[0] = 10.0  # spike dropped by near_peak; sets scale
    v[10:22] = 8.0  # 12 samples above threshold
    # near_peak = 8 (spike excluded), near_base = 0, threshold = 4
    assert M.high_load_duration(v) == 12 * 0.25


def test_high_load_duration_constant_profile_is_zero():
    # threshold equals the value itself and comparison is strict
    assert M.high_load_duration(np.full(96, 7.0)) == 0.0


def test_high_load_duration_matches_oracle():
    for v in random_profiles(100, seed=9):
        np.testing.assert_allclose(M.high_load_duration(v), high_load_duration_oracle(list(v)), rtol=1e-9)


# --- rising events -----------------------------------------------------------


def test_rising_single_ramp():
    v = np.concatenate([np.zeros(10), np.linspace(0, 8, 17), np.full(69, 8.0)])
    assert len(v) == 96
    events = M.rising_events(v)
    assert len(events) == 1
    start, reach = events[0]
    assert M.rising_duration(v) == (reach - start) * 0.25
    assert M.rising_frequency(v) == 1


def test_rising_square_wave_four_transitions():
    v = np.zeros(96)
    for k in range(4):
        v[10 + 20 * k : 18 + 20 * k] = 6.0
    assert M.rising_frequency(v) == 4


def test_rising_events_match_oracle():
    for v in random_profiles(100, seed=31):
        assert M.rising_events(v) == rising_events_oracle(list(v))


def test_rising_flat_profile_no_events():
    assert M.rising_events(np.full(96, 2.0)) == []


# --- shape report ------------------------------------------------------------


def test_shape_report_identical_profiles_zero_std():
    rng = np.random.default_rng(2)
    v = rng.uniform(1, 5, 96)
    rep = M.shape_report(ProfileDataset(tuple(Profile(v) for _ in range(4))))
    assert rep.near_peak_std == 0.0
    assert rep.near_base_std == 0.0
    assert rep.high_load_std == 0.0


def test_shape_report_two_profiles_hand_aggregated():
    rng = np.random.default_rng(8)
    a = rng.uniform(0, 4, 96)
    b = rng.uniform(2, 9, 96)
    rep = M.shape_report([a, b])
    pa, pb = near_peak_oracle(a), near_peak_oracle(b)
    np.testing.assert_allclose(rep.near_peak_mean, (pa + pb) / 2, rtol=1e-12)
    np.testing.assert_allclose(rep.near_peak_std, abs(pa - pb) / 2, rtol=1e-12)


def test_shape_report_empty_errors():
    with pytest.raises(DataError):
        M.shape_report([])


# --- KL divergence -----------------------------------------------------------


def test_kl_identical_multisets_exactly_zero():
    rng = np.random.default_rng(4)
    s = rng.uniform(0, 5, 300)
    rep = M.kl_divergence(s, s.copy())
    assert rep.d_pq == 0.0
    assert rep.d_qp == 0.0


def test_kl_concentrated_mass_is_positive():
    p = np.full(50, 0.05)
    q = np.linspace(0, 1, 50)
    rep = M.kl_divergence(p, q)
    assert rep.d_pq > 1.0
    assert rep.d_qp > 0.0


def test_kl_four_bin_hand_computation():
    p_samples = [0.5, 1.5, 1.5, 2.5]
    q_samples = [0.5, 2.5, 3.5, 3.5]
    eps = 1e-10
    rep = M.kl_divergence(p_samples, q_samples, n_bins=4, smoothing=eps)
    # shared edges over [0.5, 3.5]; histograms p=[1,2,1,0], q=[1,0,1,2]
    p = [(c + eps) for c in (1, 2, 1, 0)]
    q = [(c + eps) for c in (1, 0, 1, 2)]
    ps, qs = sum(p), sum(q)
    p = [x / ps for x in p]
    q = [x / qs for x in q]
    d_pq = sum(pi * math.log(pi / qi) for pi, qi in zip(p, q))
    d_qp = sum(qi * math.log(qi / pi) for pi, qi in zip(p, q))
    np.testing.assert_allclose(rep.d_pq, d_pq, rtol=1e-12)
    np.testing.assert_allclose(rep.d_qp, d_qp, rtol=1e-12)


def test_kl_degenerate_range_errors():
    with pytest.raises(DataError):
        M.kl_divergence([2.0, 2.0], [2.0, 2.0])


def test_kl_both_directions_nonnegative_random():
    rng = np.random.default_rng(10)
    for _ in range(20):
        p = rng.normal(rng.uniform(-1, 1), 1.0, 200)
        q = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), 200)
        rep = M.kl_divergence(p, q)
        assert rep.d_pq >= 0.0
        assert rep.d_qp >= 0.0


# --- mean / peak -------------------------------------------------------------


def test_mean_peak_constant_profile():
    ds = ProfileDataset((Profile(np.full(96, 2.5)),))
    means, peaks = M.mean_peak_samples(ds)
    assert means[0] == 2.5 and peaks[0] == 2.5


def test_mean_peak_single_spike():
    v = np.zeros(96)
    v[-1] = 1.0
    means, peaks = M.mean_peak_samples(ProfileDataset((Profile(v),)))
    np.testing.assert_allclose(means[0], 1 / 96)
    assert peaks[0] == 1.0


def test_mean_peak_matches_oracle():
    rng = np.random.default_rng(77)
    vals = rng.uniform(0, 7, (30, 96))
    ds = ProfileDataset(tuple(Profile(v) for v in vals))
    means, peaks = M.mean_peak_samples(ds)
    for i in range(30):
        np.testing.assert_allclose(means[i], sum(vals[i]) / 96, rtol=1e-12)
        assert peaks[i] == max(vals[i])


# --- volatility indexes ------------------------------------------------------


def test_safod_cv_constants():
    assert M.safod(np.full(10, 3.0)) == 0.0
    assert M.cv(np.full(10, 3.0)) == 0.0


def test_safod_rsafodm_alternating():
    v = np.array([0.0, 1.0, 0.0, 1.0])
    assert M.safod(v) == 3.0
    assert M.rsafodm(v) == 3.0


def test_cv_hand_value():
    assert M.cv(np.array([1.0, 3.0])) == 0.5


def test_cv_zero_mean_errors():
    with pytest.raises(DataError):
        M.cv(np.array([1.0, -1.0]))


def test_rsafodm_zero_max_errors():
    with pytest.raises(DataError):
        M.rsafodm(np.zeros(5))


def test_volatility_match_oracle_on_random_profiles():
    for v in random_profiles(100, seed=55):
        np.testing.assert_allclose(M.safod(v), safod_oracle(list(v)), rtol=1e-9)
        mu = v.mean()
        if mu != 0:
            sigma = math.sqrt(sum((x - mu) ** 2 for x in v) / len(v))
            np.testing.assert_allclose(M.cv(v), sigma / mu, rtol=1e-9)
        if v.max() > 0:
            np.testing.assert_allclose(M.rsafodm(v), safod_oracle(list(v)) / max(v), rtol=1e-9)


# --- invariants ---------------------------------------------------------------


def test_time_reversal_invariance_of_level_indexes():
    for v in random_profiles(25, seed=91):
        r = v[::-1]
        assert M.near_peak(v) == M.near_peak(r)
        assert M.near_base(v) == M.near_base(r)
        assert M.high_load_duration(v) == M.high_load_duration(r)


def test_near_peak_geq_near_base():
    for v in random_profiles(50, seed=13):
        assert M.near_peak(v) >= M.near_base(v)


def test_safod_translation_invariance():
    rng = np.random.default_rng(20)
    v = rng.uniform(0, 5, 96)
    np.testing.assert_allclose(M.safod(v), M.safod(v + 17.3), rtol=1e-12)


# --- traversal grid / trend ----------------------------------------------------


def test_default_code_grid_matches_published_points():
    grid = np.array(M.DEFAULT_CODE_GRID)
    published = np.array([-2.000, -1.428, -0.857, -0.286, 0.286, 0.857, 1.428, 2.000])
    np.testing.assert_allclose(grid, published, atol=1e-3)
    assert len(grid) == 8


def test_trend_strictly_decreasing_mock():
    rows = tuple(
        M.VolatilityRow(code=c, safod=10 - i, cv=5 - 0.1 * i, rsafodm=8 - 0.5 * i)
        for i, c in enumerate(M.DEFAULT_CODE_GRID)
    )
    trend = M.VolatilityReport(rows).trend()
    assert trend["safod"] == -1.0
    assert trend["cv"] == -1.0
    assert trend["rsafodm"] == -1.0


def test_spearman_null_near_zero():
    rng = np.random.default_rng(42)
    rhos = [abs(M.spearman(np.arange(8), rng.normal(size=8))) for _ in range(200)]
    assert np.mean(rhos) < 0.5
