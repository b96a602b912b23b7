import numpy as np
import pytest

from ilearn.data.datasets import (OCR_PROTOCOL, WINE_PROTOCOL, Dataset,
                                  DatasetError, IncrementSpec, apply_scaler,
                                  fit_scaler, load_csv, load_optdigits,
                                  load_wine, make_increments, part_sizes,
                                  save_csv, split_protocol, tri_split)
from ilearn.util.ilist import IndexPool
from ilearn.util.randit import RandomStream, derive_seed, resolve_seed


def _optdigits_line(label, value=0):
    return ",".join([str(value)] * 64 + [str(label)])


def _wine_line(cultivar, value=1.5):
    return ",".join([str(cultivar)] + [str(value)] * 13)


class TestLoaders:

    def test_optdigits_line(self, tmp_path):
        path = tmp_path / "digits.tra"
        path.write_text(_optdigits_line(0, 3) + "\n" + _optdigits_line(7)
                        + "\n")
        data = load_optdigits(path)
        assert data.dim == 64
        assert len(data) == 2
        assert data.labels.tolist() == [0, 7]
        assert data.features[0].tolist() == [3.0] * 64

    def test_optdigits_files_concatenate(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.write_text(_optdigits_line(1) + "\n")
        b.write_text(_optdigits_line(2) + "\n" + _optdigits_line(3) + "\n")
        data = load_optdigits(a, b)
        assert data.labels.tolist() == [1, 2, 3]

    def test_optdigits_field_count(self, tmp_path):
        path = tmp_path / "bad"
        path.write_text(_optdigits_line(0) + "\n"
                        + ",".join(["0"] * 64) + "\n")
        with pytest.raises(DatasetError, match="expected 65 fields") as err:
            load_optdigits(path)
        assert err.value.line == 2
        assert "line 2" in str(err.value)

    @pytest.mark.parametrize("line", [
        ",".join(["0"] * 63 + ["x", "1"]),
        ",".join(["17"] + ["0"] * 63 + ["1"]),
        ",".join(["0"] * 64 + ["10"]),
    ])
    def test_optdigits_malformed(self, tmp_path, line):
        path = tmp_path / "bad"
        path.write_text(line + "\n")
        with pytest.raises(DatasetError):
            load_optdigits(path)

    def test_wine_remaps_labels(self, tmp_path):
        path = tmp_path / "wine.data"
        path.write_text("\n".join(_wine_line(c) for c in (1, 2, 3, 1)) + "\n")
        data = load_wine(path)
        assert data.dim == 13
        assert data.labels.tolist() == [0, 1, 2, 0]
        assert data.class_counts() == {0: 2, 1: 1, 2: 1}

    def test_wine_unknown_class(self, tmp_path):
        path = tmp_path / "wine.data"
        path.write_text(_wine_line(4) + "\n")
        with pytest.raises(DatasetError, match="unknown class id 4"):
            load_wine(path)

    def test_wine_empty(self, tmp_path):
        path = tmp_path / "wine.data"
        path.write_text("")
        with pytest.raises(DatasetError, match="no samples"):
            load_wine(path)

    def test_csv_round_trip_is_byte_stable(self, tmp_path, blobs):
        first = tmp_path / "first.csv"
        second = tmp_path / "second.csv"
        save_csv(blobs({0: 5, 3: 4}, dim=3), first)
        save_csv(load_csv(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_csv_header(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("label,a,b\n0,1,2\n")
        with pytest.raises(DatasetError, match="header"):
            load_csv(path)


class TestDataset:

    def test_classes_are_present_labels(self):
        data = Dataset(np.zeros((4, 2)), [3, 1, 3, 1])
        assert data.classes == (1, 3)

    def test_arrays_are_read_only(self, three_blobs):
        with pytest.raises(ValueError):
            three_blobs.features[0, 0] = 1.0

    def test_subset_keeps_ids(self, three_blobs):
        part = three_blobs.subset([5, 7])
        assert part.ids.tolist() == [5, 7]

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 3)), [0, 1], dim=2)


class TestProtocols:

    def test_ocr_protocol_counts(self):
        ds1 = OCR_PROTOCOL.increments[0]
        assert ds1 == {0: 250, 1: 250, 2: 250, 5: 250, 6: 250, 7: 250}
        assert sum(OCR_PROTOCOL.test.values()) == 1119
        for c in (4, 9):
            assert all(c not in inc for inc in OCR_PROTOCOL.increments[:2])

    def test_wine_protocol_counts(self):
        assert WINE_PROTOCOL.increments[1] == {0: 13, 1: 16, 2: 32}
        assert WINE_PROTOCOL.test == {0: 13, 1: 16, 2: 11}

    def test_spec_dict_round_trip(self):
        spec = IncrementSpec.from_dict(WINE_PROTOCOL.to_dict())
        assert spec == WINE_PROTOCOL

    def test_counts_match_and_sets_are_disjoint(self, blobs):
        pool = blobs({0: 40, 1: 40, 2: 40})
        spec = IncrementSpec(increments=({0: 10, 1: 10}, {1: 5, 2: 20}),
                             test={0: 5, 1: 5, 2: 5},
                             validation={0: 2, 1: 2, 2: 2})
        split = split_protocol(pool, spec, seed=11)
        sets = split.increments + [split.test, split.validation]
        tables = list(spec.increments) + [spec.test, spec.validation]
        for data, table in zip(sets, tables):
            assert data.class_counts() == table
        ids = np.concatenate([d.ids for d in sets])
        assert len(set(ids.tolist())) == ids.shape[0]

    def test_deterministic_for_fixed_seed(self, blobs):
        pool = blobs({0: 40, 1: 40})
        spec = IncrementSpec(increments=({0: 10, 1: 10},), test={0: 5, 1: 5})
        first, test_a = make_increments(pool, spec, seed=4)
        second, test_b = make_increments(pool, spec, seed=4)
        assert first[0].ids.tolist() == second[0].ids.tolist()
        assert test_a.ids.tolist() == test_b.ids.tolist()

    def test_deficient_class_is_named(self, blobs):
        pool = blobs({0: 40, 4: 3})
        spec = IncrementSpec(increments=({0: 10, 4: 5},), test={0: 5})
        with pytest.raises(DatasetError, match="class 4"):
            make_increments(pool, spec, seed=0)


class TestTriSplit:

    @pytest.mark.parametrize("n, expected", [
        (10, (6, 2, 2)),
        (300, (180, 60, 60)),
        (3, (1, 1, 1)),
        (4, (2, 1, 1)),
        (5, (3, 1, 1)),
    ])
    def test_part_sizes(self, n, expected):
        assert part_sizes(n, (0.6, 0.2, 0.2)) == expected

    def test_single_class_sizes(self, blobs):
        split = tri_split(blobs({2: 300}), seed=1)
        assert (len(split.train), len(split.val1), len(split.val2)) \
            == (180, 60, 60)

    def test_partition_and_stratification(self, blobs):
        increment = blobs({0: 250, 1: 250, 2: 250, 5: 250, 6: 250, 7: 250})
        split = tri_split(increment, seed=8)
        assert (len(split.train), len(split.val1), len(split.val2)) \
            == (900, 300, 300)
        ids = np.concatenate([p.ids for p in split])
        assert sorted(ids.tolist()) == sorted(increment.ids.tolist())
        for part in split:
            assert part.classes == increment.classes

    def test_new_seed_reshuffles(self, three_blobs):
        a = tri_split(three_blobs, seed=1)
        b = tri_split(three_blobs, seed=2)
        assert a.train.ids.tolist() != b.train.ids.tolist()

    def test_small_class(self, blobs):
        with pytest.raises(DatasetError, match="class 1 has 2 samples"):
            tri_split(blobs({0: 10, 1: 2}), seed=0)

    def test_ratios_must_sum_to_one(self, three_blobs):
        with pytest.raises(ValueError):
            tri_split(three_blobs, ratios=(0.5, 0.2, 0.2), seed=0)


class TestScaler:

    def test_optdigits_mode(self):
        data = Dataset(np.full((1, 64), 16.0), [0])
        scaler = fit_scaler(data, "optdigits")
        assert scaler.transform(np.array([16.0] + [8.0] * 63))[:2].tolist() \
            == [1.0, 0.5]

    def test_minmax(self):
        data = Dataset([[10.0, 5.0], [20.0, 5.0]], [0, 1])
        scaler = fit_scaler(data, "minmax")
        assert scaler.transform(np.array([15.0, 5.0])).tolist() == [0.5, 0.0]

    def test_constant_feature_maps_to_zero(self):
        data = Dataset([[1.0, 7.0], [3.0, 7.0], [2.0, 7.0]], [0, 1, 0])
        scaled = apply_scaler(fit_scaler(data), data)
        assert scaled.features[:, 1].tolist() == [0.0, 0.0, 0.0]
        assert scaled.features[:, 0].tolist() == [0.0, 1.0, 0.5]


class TestRandomTools:

    def test_resolve_seed(self):
        assert resolve_seed(12) == 12
        assert 1 <= resolve_seed(-1) <= 99999999

    def test_derive_seed_is_stable(self):
        assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
        assert derive_seed(7, 1, 2) != derive_seed(7, 2, 1)

    def test_stream_reset(self):
        stream = RandomStream(3)
        first = stream.permutation(10).tolist()
        stream.reset()
        assert stream.permutation(10).tolist() == first

    def test_index_pool_draws_without_replacement(self):
        pool = IndexPool(range(10))
        stream = RandomStream(1)
        a = pool.draw(4, stream)
        b = pool.draw(6, stream)
        assert sorted(a + b) == list(range(10))
        assert len(pool) == 0
        with pytest.raises(ValueError):
            pool.draw(1, stream)

    def test_index_pool_rejects_duplicates(self):
        with pytest.raises(ValueError):
            IndexPool([1, 1])
