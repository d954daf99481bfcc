"""profile-data: CSV ingestion, normalization, round trips."""

import numpy as np
import pytest

from loadgan.data import (
    NormStats,
    Profile,
    ProfileDataset,
    apply_normalization,
    denormalize,
    denormalize_dataset,
    load_csv,
    minmax_normalize,
    save_csv,
)
from loadgan.errors import DataError


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def row(values, tag=None):
    cells = [repr(float(v)) for v in values]
    if tag is not None:
        cells.append(str(tag))
    return ",".join(cells)


def test_load_two_rows_of_zeros(tmp_path):
    path = write(tmp_path, "\n".join([row([0.0] * 96)] * 2) + "\n")
    ds = load_csv(path)
    assert len(ds) == 2
    assert not ds.normalized
    assert (ds.values() == 0).all()
    assert ds.tags() is None


def test_load_wrong_column_count_names_row(tmp_path):
    path = write(tmp_path, row([1.0] * 95) + "\n")
    with pytest.raises(DataError) as exc:
        load_csv(path)
    assert "row 1: expected 96 values" in str(exc.value)


def test_load_wrong_column_count_later_row(tmp_path):
    path = write(tmp_path, row([1.0] * 96) + "\n" + row([1.0] * 90) + "\n")
    with pytest.raises(DataError) as exc:
        load_csv(path)
    assert "row 2" in str(exc.value)


def test_load_labels_echoed(tmp_path):
    lines = [row(np.full(96, i), tag) for i, tag in enumerate([0, 1, 0])]
    ds = load_csv(write(tmp_path, "\n".join(lines) + "\n"))
    assert list(ds.tags()) == [0, 1, 0]


def test_load_non_numeric_cell(tmp_path):
    cells = ["1.0"] * 96
    cells[13] = "oops"
    with pytest.raises(DataError) as exc:
        load_csv(write(tmp_path, ",".join(cells) + "\n"))
    assert "non-numeric" in str(exc.value)


def test_load_empty_file(tmp_path):
    with pytest.raises(DataError) as exc:
        load_csv(write(tmp_path, "# just a header\n"))
    assert "empty dataset" in str(exc.value)


def test_load_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv")


def test_load_skips_comment_header(tmp_path):
    ds = load_csv(write(tmp_path, "# c0,c1\n" + row([2.0] * 96) + "\n"))
    assert len(ds) == 1


def test_row_order_preserved(tmp_path):
    lines = [row(np.full(96, float(i))) for i in range(5)]
    ds = load_csv(write(tmp_path, "\n".join(lines) + "\n"))
    np.testing.assert_array_equal(ds.values()[:, 0], [0, 1, 2, 3, 4])


def test_minmax_normalize_simple():
    values = np.zeros((1, 96))
    values[0, :3] = [2.0, 3.0, 4.0]
    values[0, 3:] = 2.0
    ds = ProfileDataset((Profile(values[0]),))
    out, stats = minmax_normalize(ds)
    assert (stats.x_min, stats.x_max) == (2.0, 4.0)
    np.testing.assert_allclose(out.values()[0, :3], [0.0, 0.5, 1.0])
    assert out.normalized


def test_minmax_degenerate_dataset():
    ds = ProfileDataset((Profile(np.full(96, 5.0)),))
    with pytest.raises(DataError) as exc:
        minmax_normalize(ds)
    assert "degenerate" in str(exc.value)


def test_minmax_quarter_point():
    vals = np.linspace(10, 110, 96)
    vals[7] = 35.0
    out, _ = minmax_normalize(ProfileDataset((Profile(vals),)))
    np.testing.assert_allclose(out.values()[0, 7], 0.25)


def test_normalize_maps_global_extremes_exactly():
    rng = np.random.default_rng(0)
    profiles = tuple(Profile(rng.uniform(5, 50, 96)) for _ in range(10))
    out, _ = minmax_normalize(ProfileDataset(profiles))
    vals = out.values()
    assert vals.min() == 0.0
    assert vals.max() == 1.0


def test_normalize_global_not_per_profile():
    p1 = Profile(np.full(96, 1.0))
    p2 = Profile(np.linspace(1.0, 3.0, 96))
    out, _ = minmax_normalize(ProfileDataset((p1, p2)))
    # p1 must not be stretched to [0,1] on its own
    assert out.values()[0].max() == 0.0


def test_denormalize_points():
    s = NormStats(0.0, 10.0)
    assert denormalize(Profile(np.full(96, 0.5)), s).values[0] == 5.0
    s = NormStats(3.0, 7.0)
    assert denormalize(Profile(np.zeros(96)), s).values[0] == 3.0
    assert denormalize(Profile(np.ones(96)), s).values[0] == 7.0


def test_denormalize_roundtrip_within_1e12():
    rng = np.random.default_rng(17)
    for _ in range(20):
        vals = rng.uniform(-50, 150, size=(4, 96))
        ds = ProfileDataset(tuple(Profile(v) for v in vals))
        normed, stats = minmax_normalize(ds)
        back = denormalize_dataset(normed, stats)
        np.testing.assert_allclose(back.values(), vals, rtol=1e-12, atol=1e-12)


def test_apply_normalization_uses_given_stats():
    ds = ProfileDataset((Profile(np.full(96, 5.0)),))
    out = apply_normalization(ds, NormStats(0.0, 10.0))
    assert out.values()[0, 0] == 0.5
    assert out.norm_stats == NormStats(0.0, 10.0)
    with pytest.raises(DataError):
        apply_normalization(out, NormStats(0.0, 10.0))


def test_save_load_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(3)
    ds = ProfileDataset(tuple(Profile(rng.uniform(0, 9, 96), tag) for tag in (0, 1)))
    save_csv(ds, tmp_path / "out.csv", header="profiles")
    back = load_csv(tmp_path / "out.csv")
    np.testing.assert_array_equal(back.values(), ds.values())
    assert list(back.tags()) == [0, 1]


def test_norm_stats_invariant():
    with pytest.raises(DataError):
        NormStats(2.0, 2.0)


def test_profile_rejects_non_finite():
    vals = np.ones(96)
    vals[5] = np.nan
    with pytest.raises(DataError):
        Profile(vals)


def test_dataset_rejects_mixed_lengths():
    with pytest.raises(DataError):
        ProfileDataset((Profile(np.ones(96)), Profile(np.ones(95))))
