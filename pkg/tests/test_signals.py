"""Dataset containers, file round-trips, splits, and the synthetic tasks."""

import numpy as np
import pytest

from stlcp.errors import DataFormatError, SplitError
from stlcp.signals import (
    Dataset,
    LabeledSample,
    Signal,
    SplitSpec,
    generate_reach_task,
    generate_sequence_task,
    load_dataset,
    reach_label,
    save_dataset,
    sequence_label,
    split_dataset,
    REACH_GOAL_BOX,
    SEQ_GOAL_BOX,
)


def small_dataset(n=10, d=2, length=4, seed=0):
    rng = np.random.default_rng(seed)
    samples = [
        LabeledSample(Signal(rng.normal(size=(length, d))), 1 if i % 2 == 0 else -1)
        for i in range(n)
    ]
    return Dataset(samples)


class TestContainers:
    def test_signal_invariants(self):
        sig = Signal(np.zeros((3, 2)))
        assert sig.length == 3 and sig.dim == 2 and sig.end_time == 2
        with pytest.raises(ValueError):
            Signal(np.array([[np.inf, 0.0]]))
        with pytest.raises(ValueError):
            Signal(np.zeros((0, 2)))

    def test_label_domain(self):
        sig = Signal(np.zeros((2, 1)))
        with pytest.raises(ValueError):
            LabeledSample(sig, 0)

    def test_mixed_shapes_rejected(self):
        a = LabeledSample(Signal(np.zeros((3, 2))), 1)
        b = LabeledSample(Signal(np.zeros((3, 3))), -1)
        with pytest.raises(DataFormatError):
            Dataset([a, b])


class TestFileFormats:
    def test_csv_roundtrip(self, tmp_path):
        ds = small_dataset(n=2, d=2, length=4)
        path = tmp_path / "data.csv"
        save_dataset(ds, path)
        back = load_dataset(path)
        assert len(back) == 2 and back.dim == 2 and back.length == 4
        for orig, got in zip(ds, back):
            assert got.label == orig.label
            np.testing.assert_array_equal(got.signal.states, orig.signal.states)

    def test_json_roundtrip(self, tmp_path):
        ds = small_dataset(n=3, d=3, length=2)
        path = tmp_path / "data.json"
        save_dataset(ds, path)
        back = load_dataset(path)
        assert len(back) == 3
        np.testing.assert_array_equal(back[1].signal.states, ds[1].signal.states)

    def test_empty_file_is_parse_error(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataFormatError):
            load_dataset(path)

    def test_bad_label_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("label,t0_x0,t1_x0\n1,0.5,0.25\n0,1.0,2.0\n")
        with pytest.raises(DataFormatError, match="line 3"):
            load_dataset(path)

    def test_ragged_row_is_error(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("label,t0_x0,t1_x0\n1,0.5\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_dataset(path)

    def test_json_label_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('[{"label": 2, "states": [[0.0]]}]')
        with pytest.raises(DataFormatError, match="label"):
            load_dataset(path)


class TestSplits:
    def test_paper_sizes(self):
        ds = small_dataset(n=2000)
        train, cal1, cal2, test = split_dataset(ds, SplitSpec(seed=7))
        assert (len(train), len(cal1), len(cal2), len(test)) == (1200, 200, 200, 400)

    def test_partition_exact(self):
        ds = small_dataset(n=97)
        for seed in (0, 1, 2):
            parts = split_dataset(ds, SplitSpec(seed=seed))
            ids = [id(s) for part in parts for s in part]
            assert len(ids) == len(set(ids)) == 97
            assert set(ids) == {id(s) for s in ds}

    def test_seed_determinism(self):
        ds = small_dataset(n=50)
        a = split_dataset(ds, SplitSpec(seed=3))
        b = split_dataset(ds, SplitSpec(seed=3))
        for pa, pb in zip(a, b):
            assert [s.label for s in pa] == [s.label for s in pb]
            assert [id(s) for s in pa] == [id(s) for s in pb]

    def test_degenerate_split_fails(self):
        ds = small_dataset(n=4)
        with pytest.raises(SplitError):
            split_dataset(ds, SplitSpec(seed=0))

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            SplitSpec(train=0.5, cal=0.2, test=0.2)


class TestReachTask:
    def test_shape_and_size(self):
        ds = generate_reach_task(60, noise=1.0, seed=7)
        assert len(ds) == 60 and ds.dim == 2 and ds.length == 20

    def test_determinism(self):
        a = generate_reach_task(30, noise=1.5, seed=7)
        b = generate_reach_task(30, noise=1.5, seed=7)
        for sa, sb in zip(a, b):
            assert sa.label == sb.label
            np.testing.assert_array_equal(sa.signal.states, sb.signal.states)

    def test_labels_certified_by_checker(self):
        ds = generate_reach_task(80, noise=1.5, seed=11)
        for s in ds:
            assert reach_label(s.signal) == s.label

    def test_noise_zero_positives_strictly_inside(self):
        ds = generate_reach_task(40, noise=0.0, seed=3)
        (x_lo, x_hi), (y_lo, y_hi) = REACH_GOAL_BOX
        for s in ds:
            if s.label == 1:
                for t in (17, 18, 19):
                    x, y = s.signal.states[t]
                    assert x_lo < x < x_hi and y_lo < y < y_hi

    def test_balance(self):
        ds = generate_reach_task(100, noise=1.0, seed=5)
        labels = ds.labels()
        assert abs((labels == 1).mean() - 0.5) <= 0.1

    def test_preconditions(self):
        with pytest.raises(ValueError):
            generate_reach_task(1)
        with pytest.raises(ValueError):
            generate_reach_task(10, noise=-1.0)


class TestSequenceTask:
    def test_shape_and_size(self):
        ds = generate_sequence_task(40, noise=1.0, seed=3)
        assert len(ds) == 40 and ds.dim == 4 and ds.length == 40

    def test_labels_certified_by_checker(self):
        ds = generate_sequence_task(60, noise=1.5, seed=13)
        for s in ds:
            assert sequence_label(s.signal) == s.label

    def test_order_violation_is_negative(self):
        # B parked in the goal from the start, A arrives afterwards and both
        # stay: every reach condition holds but the order is wrong.
        (gx_lo, gx_hi), (gy_lo, gy_hi) = SEQ_GOAL_BOX
        goal = np.array([(gx_lo + gx_hi) / 2, (gy_lo + gy_hi) / 2])
        a = np.tile(goal, (40, 1))
        a[0] = [10.0, 10.0]  # A outside at t=0, inside from t=1
        b = np.tile(goal + 1.0, (40, 1))  # B inside for all t
        sig = Signal(np.hstack([a, b]))
        assert sequence_label(sig) == -1

    def test_determinism(self):
        a = generate_sequence_task(20, noise=1.0, seed=9)
        b = generate_sequence_task(20, noise=1.0, seed=9)
        for sa, sb in zip(a, b):
            np.testing.assert_array_equal(sa.signal.states, sb.signal.states)


class TestByteDeterminism:
    def test_saved_files_identical(self, tmp_path):
        for name in ("a.csv", "b.csv"):
            save_dataset(generate_reach_task(25, noise=1.0, seed=21), tmp_path / name)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
