import inspect

import numpy as np
import pytest

from conftest import make_blobs
from ilearn.data.datasets import Dataset, Scaler, tri_split
from ilearn.learn import iluga
from ilearn.learn.ga import Chromosome, GaConfig
from ilearn.learn.iluga import (IlugaConfig, IlugaLearner, classify,
                                decode_kernel, learn_increment, stage1_genes,
                                train_pair, train_unit_stage1,
                                train_unit_stage2, weight_fitness)
from ilearn.learn.kernels import KernelSpec
from ilearn.learn.multiclass import Ensemble, make_unit, vote_batch
from ilearn.learn.svm import BinarySvmModel


@pytest.fixture
def small_iluga():
    ga = GaConfig(population_size=6, generations=3, elite_count=1,
                  tournament_size=2)
    return IlugaConfig(units_per_increment=1, stage1_ga=ga, stage2_ga=ga,
                       families=("rbf", "quadratic"), seed=12)


def _record_ga(monkeypatch):
    """Makes iluga.run_ga keep every GaResult it returns."""

    results = []
    real = iluga.run_ga

    def recording(*args, **kwargs):
        results.append(real(*args, **kwargs))
        return results[-1]

    monkeypatch.setattr(iluga, "run_ga", recording)
    return results


class TestConfig:

    def test_dict_round_trip(self, fast_iluga):
        assert IlugaConfig.from_dict(fast_iluga.to_dict()) == fast_iluga

    def test_random_seed_is_recorded(self):
        cfg = IlugaConfig(seed=-1)
        assert cfg.seed >= 1
        assert cfg.to_dict()["seed"] == cfg.seed

    @pytest.mark.parametrize("kwargs", [
        {"units_per_increment": 0},
        {"c_range": (10.0, 1.0)},
        {"families": ("sigmoid",)},
        {"degrees": (1, 2)},
        {"scaler_mode": "zscore"},
        {"max_passes": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            IlugaConfig(**kwargs)


class TestStage1:

    def test_genes_follow_config(self, fast_iluga):
        genes = stage1_genes(fast_iluga)
        assert genes[0].values == ("rbf", "quadratic")
        assert (genes[-1].lo, genes[-1].hi, genes[-1].log) \
            == (1e-2, 1e3, True)

    @pytest.mark.parametrize("genes, kernel", [
        (("rbf", 2, 0.5, 1.0, 0.1, -1.0, 10.0), KernelSpec.rbf(0.5)),
        (("quadratic", 2, 0.5, 1.5, 0.1, -1.0, 10.0),
         KernelSpec.quadratic(1.5)),
        (("polynomial", 4, 0.5, 1.0, 0.1, -1.0, 10.0),
         KernelSpec.polynomial(4, 1.0)),
        (("tanh", 2, 0.5, 1.0, 0.1, -1.0, 10.0), KernelSpec.tanh(0.1, -1.0)),
    ])
    def test_decode_kernel(self, genes, kernel):
        assert decode_kernel(genes) == (kernel, 10.0)

    def test_one_model_per_pair(self, three_blobs, fast_iluga):
        split = tri_split(three_blobs, seed=1)
        result = train_unit_stage1(split, fast_iluga)
        assert [m.pair for m in result.models] == [(0, 1), (0, 2), (1, 2)]
        assert all(0.0 <= f <= 1.0 for f in result.fitness)
        assert all(m.kernel.family in ("rbf", "quadratic")
                   for m in result.models)

    def test_pair_needs_both_classes_in_val1(self, three_blobs, fast_iluga):
        split = tri_split(three_blobs, seed=2)
        with pytest.raises(ValueError, match="Val1"):
            train_pair(split.train, split.val1.select_classes((0, 2)),
                       (0, 1), fast_iluga, seed=0)

    def test_single_class_split(self, blobs, fast_iluga):
        split = tri_split(blobs({4: 30}), seed=0)
        with pytest.raises(ValueError, match="two classes"):
            train_unit_stage1(split, fast_iluga)

    def test_separable_pair_is_solved(self, small_iluga):
        data = make_blobs({0: 30, 1: 30}, spread=0.2, seed=13)
        result = train_unit_stage1(tri_split(data, seed=2), small_iluga)
        assert list(result.fitness) == [1.0]

    def test_kept_model_is_the_ga_best(self, monkeypatch, three_blobs,
                                       fast_iluga):
        results = _record_ga(monkeypatch)
        split = tri_split(three_blobs, seed=6)
        model, fitness, _ = train_pair(split.train, split.val1, (0, 2),
                                       fast_iluga, seed=4)
        best = results[0].best
        assert fitness == best.fitness
        assert decode_kernel(best.genes) == (model.kernel, model.c)


class TestStage2:

    def test_dropping_an_always_wrong_decision(self):
        # (0,1) always says 1 and Val2 holds no class 1
        linear = KernelSpec.linear()
        always_pos = BinarySvmModel(sv=[[0.0]], alpha_y=[0.0], b=1.0,
                                    kernel=linear, c=1.0, pair=(0, 1))
        ramp = BinarySvmModel(sv=[[1.0]], alpha_y=[1.0], b=-0.5,
                              kernel=linear, c=1.0, pair=(0, 2))
        always_neg = BinarySvmModel(sv=[[0.0]], alpha_y=[0.0], b=-1.0,
                                    kernel=linear, c=1.0, pair=(1, 2))
        unit = make_unit([always_pos, ramp, always_neg],
                         Scaler("minmax", [0.0], [1.0]))
        val2 = Dataset(np.array([[0.2]] * 4 + [[0.8]] * 4), [0] * 4 + [2] * 4)
        fitness = weight_fitness(Ensemble(), unit, val2)
        ones = fitness(Chromosome((1.0,) * 6))
        dropped = fitness(Chromosome((1.0, 0.0, 1.0, 1.0, 1.0, 1.0)))
        assert dropped >= ones
        assert (ones, dropped) == (0.0, 0.5)

    def test_six_classes_give_thirty_genes(self, monkeypatch, fast_iluga):
        data = make_blobs({c: 15 for c in range(6)}, seed=5)
        split = tri_split(data, seed=0)
        stage1 = train_unit_stage1(split, fast_iluga)
        assert len(stage1.models) == 15
        results = _record_ga(monkeypatch)
        unit, _, _ = train_unit_stage2(Ensemble(), stage1, split, fast_iluga)
        assert len(results[0].best.genes) == 30
        assert unit.weights.shape == (30,)

    def test_never_worse_than_unit_weights(self, three_blobs, fast_iluga):
        split = tri_split(three_blobs, seed=3)
        stage1 = train_unit_stage1(split, fast_iluga)
        unit, fitness, history = train_unit_stage2(Ensemble(), stage1, split,
                                                   fast_iluga)
        plain = make_unit(stage1.models, stage1.scaler)
        ones = weight_fitness(Ensemble(), plain, split.val2)(
            Chromosome((1.0,) * 6))
        assert fitness >= ones
        assert history[0] >= ones
        assert np.all((unit.weights >= 0) & (unit.weights <= 1))

    def test_fitness_counts_prior_units(self, three_blobs, fast_iluga):
        split = tri_split(three_blobs, seed=4)
        stage1 = train_unit_stage1(split, fast_iluga)
        unit = make_unit(stage1.models, stage1.scaler)
        prior = Ensemble((unit.with_weights(np.ones(6)),))
        fitness = weight_fitness(prior, unit, split.val2)
        alone = weight_fitness(Ensemble(), unit, split.val2)
        ones = Chromosome((1.0,) * 6)
        # the same unit twice votes exactly like the unit alone
        assert fitness(ones) == alone(ones)
        zeros = Chromosome((0.0,) * 6)
        assert fitness(zeros) == alone(ones)

    def test_empty_val2(self, three_blobs, fast_iluga):
        split = tri_split(three_blobs, seed=5)
        stage1 = train_unit_stage1(split, fast_iluga)
        empty = split._replace(val2=split.val2.subset([]))
        with pytest.raises(ValueError):
            train_unit_stage2(Ensemble(), stage1, empty, fast_iluga)


class TestLearnIncrement:

    def test_takes_no_prior_data(self):
        params = list(inspect.signature(learn_increment).parameters)
        assert params == ["ensemble", "increment", "cfg"]

    def test_grows_by_units_per_increment(self, three_blobs, fast_iluga):
        ensemble = learn_increment(Ensemble(), three_blobs, fast_iluga)
        assert len(ensemble) == 1
        assert ensemble.units[0].classes == (0, 1, 2)

    def test_prior_units_are_untouched(self, three_blobs, fast_iluga):
        first = learn_increment(Ensemble(), three_blobs, fast_iluga)
        weights = first.units[0].weights.copy()
        increment = make_blobs({1: 30, 2: 30, 3: 30}, seed=9)
        second = learn_increment(first, increment, fast_iluga)
        assert len(second) == 2
        assert second.units[0] is first.units[0]
        assert second.units[0].weights.tolist() == weights.tolist()
        assert second.units[1].classes == (1, 2, 3)

    def test_new_class_is_learned(self, small_iluga):
        first = make_blobs({0: 30, 1: 30, 2: 30}, seed=1)
        second = make_blobs({0: 30, 1: 30, 2: 30, 3: 30}, seed=2)
        test = make_blobs({0: 20, 1: 20, 2: 20, 3: 20}, seed=3)
        learner = IlugaLearner(small_iluga)
        learner.learn(first)
        assert 3 not in learner.predict(test.features).tolist()
        learner.learn(second)
        new = test.labels == 3
        predicted = learner.predict(test.features)
        assert np.mean(predicted[new] == 3) >= 0.8
        assert np.mean(predicted[~new] == test.labels[~new]) >= 0.8

    def test_fixed_seed_is_deterministic(self, three_blobs, fast_iluga):
        a = learn_increment(Ensemble(), three_blobs, fast_iluga)
        b = learn_increment(Ensemble(), three_blobs, fast_iluga)
        probe = np.random.default_rng(0).uniform(-4, 4, (40, 2))
        assert vote_batch(a, probe)[0].tolist() \
            == vote_batch(b, probe)[0].tolist()
        assert a.units[0].weights.tolist() == b.units[0].weights.tolist()

    def test_rejects_single_class_increment(self, blobs, fast_iluga):
        with pytest.raises(ValueError, match="two classes"):
            learn_increment(Ensemble(), blobs({2: 30}), fast_iluga)

    def test_rejects_dimension_change(self, three_blobs, fast_iluga):
        ensemble = learn_increment(Ensemble(), three_blobs, fast_iluga)
        with pytest.raises(ValueError, match="dim"):
            learn_increment(ensemble, make_blobs({0: 30, 1: 30}, dim=3),
                            fast_iluga)

    def test_rejects_other_models(self, three_blobs, fast_iluga):
        with pytest.raises(TypeError):
            learn_increment((), three_blobs, fast_iluga)

    def test_resumes_from_a_saved_ensemble(self, tmp_path, three_blobs,
                                           fast_iluga):
        learner = IlugaLearner(fast_iluga)
        learner.learn(three_blobs)
        path = tmp_path / "model.json"
        learner.save(path)
        grown = learn_increment(str(path), make_blobs({2: 30, 3: 30},
                                                      seed=4), fast_iluga)
        assert len(grown) == 2
        assert grown.known_classes == (0, 1, 2, 3)


class TestLearner:

    def test_save_and_load(self, tmp_path, three_blobs, fast_iluga):
        learner = IlugaLearner(fast_iluga)
        learner.learn(three_blobs)
        path = tmp_path / "iluga.json"
        learner.save(path)
        loaded = IlugaLearner.load(path, fast_iluga)
        probe = np.random.default_rng(1).uniform(-4, 4, (30, 2))
        assert loaded.predict(probe).tolist() \
            == learner.predict(probe).tolist()
        assert loaded.model is loaded.ensemble

    def test_classify_matches_predict(self, three_blobs, fast_iluga):
        learner = IlugaLearner(fast_iluga)
        learner.learn(three_blobs)
        x = three_blobs.features[0]
        assert classify(learner.model, x) == int(learner.predict(x)[0])

    def test_predict_before_learning(self):
        with pytest.raises(ValueError):
            IlugaLearner().predict(np.zeros((1, 2)))


def test_unscaled_inputs_are_scaled_by_the_unit(fast_iluga):
    # Features far from [0, 1]; the unit scaler maps them before voting
    base = make_blobs({0: 30, 1: 30}, seed=6)
    shifted = Dataset(base.features * 100.0 + 500.0, base.labels)
    ensemble = learn_increment(Ensemble(), shifted, fast_iluga)
    predicted, _ = vote_batch(ensemble, shifted.features)
    assert np.mean(predicted == shifted.labels) >= 0.9
