from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ilearn.data.datasets import Scaler, fit_scaler
from ilearn.learn.kernels import KernelSpec
from ilearn.learn.multiclass import (Ensemble, MulticlassUnit,
                                     WeightedBinaryClassifier, add_unit,
                                     argmax_lowest, make_unit, plain_majority,
                                     potential_votes, raw_scores, tally, vote,
                                     vote_batch)
from ilearn.learn.svm import BinarySvmModel, train_smo

IDENTITY = Scaler("minmax", [0.0], [1.0])


def _fixed(pair, winner):
    """A classifier that always decides for `winner`."""

    return BinarySvmModel(sv=[[0.0]], alpha_y=[0.0],
                          b=1.0 if winner == pair[1] else -1.0,
                          kernel=KernelSpec.linear(), c=1.0, pair=pair)


def _ramp(pair, slope, offset):
    """A classifier deciding for pair[1] where slope * x + offset > 0."""

    return BinarySvmModel(sv=[[1.0]], alpha_y=[slope], b=offset,
                          kernel=KernelSpec.linear(), c=1.0, pair=pair)


def _fixed_unit(winners, weights=None):
    """winners -- dict pair -> class that pair's classifier picks"""

    models = [_fixed(pair, w) for pair, w in sorted(winners.items())]
    return make_unit(models, IDENTITY, weights)


def _trained_unit(data, gamma=1.0):
    scaler = fit_scaler(data)
    Z = scaler.transform(data.features)
    models = []
    for neg, pos in combinations(data.classes, 2):
        keep = np.isin(data.labels, (neg, pos))
        y = np.where(data.labels[keep] == pos, 1.0, -1.0)
        models.append(train_smo(Z[keep], y, KernelSpec.rbf(gamma), 1.0,
                                pair=(neg, pos)))
    return make_unit(models, scaler)


class TestUnit:

    def test_make_unit_defaults_to_unit_weights(self):
        unit = _fixed_unit({(0, 1): 0, (0, 2): 2, (1, 2): 1})
        assert unit.classes == (0, 1, 2)
        assert unit.weights.tolist() == [1.0] * 6

    def test_pairs_must_be_complete(self):
        with pytest.raises(ValueError, match="every class pair"):
            make_unit([_fixed((0, 1), 0), _fixed((1, 2), 1)], IDENTITY)

    def test_pairs_must_be_sorted(self):
        with pytest.raises(ValueError):
            make_unit([_fixed((0, 2), 0), _fixed((0, 1), 0),
                       _fixed((1, 2), 1)], IDENTITY)

    def test_needs_two_classes(self):
        with pytest.raises(ValueError):
            MulticlassUnit((), (4,), IDENTITY)

    @pytest.mark.parametrize("weight", [-0.5, float("inf"), float("nan")])
    def test_invalid_weights(self, weight):
        with pytest.raises(ValueError):
            WeightedBinaryClassifier(_fixed((0, 1), 0), weight, 1.0)

    def test_with_weights(self):
        unit = _fixed_unit({(0, 1): 1})
        changed = unit.with_weights([0.25, 4.0])
        assert changed.weights.tolist() == [0.25, 4.0]
        assert unit.weights.tolist() == [1.0, 1.0]
        with pytest.raises(ValueError):
            unit.with_weights([1.0, 2.0, 3.0])


class TestEnsemble:

    def test_add_unit_leaves_prior_units(self):
        first = _fixed_unit({(0, 1): 0})
        ensemble = add_unit(Ensemble(), first)
        bigger = add_unit(ensemble, _fixed_unit({(2, 3): 3}))
        assert len(ensemble) == 1
        assert bigger.units[0] is first
        assert bigger.known_classes == (0, 1, 2, 3)

    def test_add_unit_dimension_mismatch(self):
        ensemble = add_unit(Ensemble(), _fixed_unit({(0, 1): 0}))
        other = make_unit([_fixed((0, 1), 0)],
                          Scaler("minmax", [0.0, 0.0], [1.0, 1.0]))
        with pytest.raises(ValueError):
            add_unit(ensemble, other)

    def test_potential_votes(self):
        ensemble = Ensemble((_fixed_unit({(0, 1): 1, (0, 2): 2, (1, 2): 2}),
                             _fixed_unit({(0, 1): 1})))
        assert potential_votes(ensemble) == {0: 3, 1: 3, 2: 2}


class TestVoting:

    def test_single_unit_vote(self):
        ensemble = Ensemble((_fixed_unit({(0, 1): 0, (0, 2): 0,
                                          (1, 2): 1}),))
        predicted, scores = vote(ensemble, [0.5])
        assert predicted == 0
        assert scores == pytest.approx({0: 1.0, 1: 0.5, 2: 0.0})

    def test_normalization_changes_winner(self):
        # Raw sums tie between classes 1 and 2; class 2 has fewer
        # potential votes
        ensemble = Ensemble((_fixed_unit({(0, 1): 1, (0, 2): 2, (1, 2): 2}),
                             _fixed_unit({(0, 1): 1})))
        assert raw_scores(ensemble, [[0.0]]).tolist() == [[0.0, 2.0, 2.0]]
        predicted, scores = vote(ensemble, [0.0])
        assert predicted == 2
        assert scores == pytest.approx({0: 0.0, 1: 2 / 3, 2: 1.0})

    def test_new_class_is_not_outvoted(self):
        old = _fixed_unit({(0, 1): 1, (0, 2): 2, (1, 2): 2})
        new = _fixed_unit({(1, 2): 1, (1, 3): 3, (2, 3): 3})
        ensemble = Ensemble((old, new))
        assert potential_votes(ensemble) == {0: 2, 1: 4, 2: 4, 3: 2}
        predicted, scores = vote(ensemble, [0.5])
        assert predicted == 3
        assert scores == pytest.approx({0: 0.0, 1: 0.5, 2: 0.5, 3: 1.0})

    def test_tie_goes_to_lowest_class(self):
        ensemble = Ensemble((_fixed_unit({(3, 5): 5}),
                             _fixed_unit({(3, 5): 3})))
        assert vote(ensemble, [1.0])[0] == 3

    def test_decision_weights_are_per_decision(self):
        # the neg decision carries weight 0, so a neg win scores nothing
        unit = _fixed_unit({(0, 1): 0, (0, 2): 2, (1, 2): 1},
                           weights=[0.0, 1.0, 1.0, 1.0, 1.0, 1.0])
        predicted, scores = vote(Ensemble((unit,)), [0.0])
        assert scores[0] == 0.0
        assert predicted == 1

    def test_argmax_relative_tolerance(self):
        assert argmax_lowest([[1.0, 1.0 + 1e-14]]).tolist() == [0]
        assert argmax_lowest([[1.0, 1.0 + 1e-9]]).tolist() == [1]
        assert argmax_lowest([[0.0, 0.0, 0.0]]).tolist() == [0]

    def test_empty_ensemble(self):
        with pytest.raises(ValueError, match="empty ensemble"):
            vote(Ensemble(), [0.0])
        with pytest.raises(ValueError):
            plain_majority(Ensemble(), [0.0])

    def test_dimension_mismatch(self):
        ensemble = Ensemble((_fixed_unit({(0, 1): 0}),))
        with pytest.raises(ValueError, match="expected 1 features"):
            vote_batch(ensemble, np.zeros((2, 3)))

    def test_batch_matches_single(self, three_blobs):
        ensemble = Ensemble((_trained_unit(three_blobs),))
        X = three_blobs.features[::7]
        batch, _ = vote_batch(ensemble, X)
        assert batch.tolist() == [vote(ensemble, x)[0] for x in X]

    def test_unweighted_single_unit_is_plain_majority(self, three_blobs):
        ensemble = Ensemble((_trained_unit(three_blobs),))
        probe = np.random.default_rng(3).uniform(-4, 4, (60, 2))
        for x in probe:
            assert vote(ensemble, x)[0] == plain_majority(ensemble, x)

    def test_separable_blobs_are_recovered(self, three_blobs):
        ensemble = Ensemble((_trained_unit(three_blobs),))
        predicted, _ = vote_batch(ensemble, three_blobs.features)
        assert np.mean(predicted == three_blobs.labels) >= 0.95

    @settings(max_examples=40, deadline=None)
    @given(weights=st.lists(st.floats(0.1, 10), min_size=8, max_size=8),
           scale=st.floats(0.01, 100),
           x=st.floats(-3, 3))
    def test_positive_rescaling_keeps_the_vote(self, weights, scale, x):
        def ensemble(w):
            a = make_unit([_ramp((0, 1), 1.0, -0.5), _ramp((0, 2), -1.0, 0.2),
                           _ramp((1, 2), 2.0, 1.0)], IDENTITY, w[:6])
            b = make_unit([_ramp((1, 3), 1.0, 0.0)], IDENTITY, w[6:])
            return Ensemble((a, b))

        w = np.array(weights)
        assert vote(ensemble(w), [x])[0] == vote(ensemble(scale * w), [x])[0]


def test_tally():
    decisions = np.array([[1, 2], [0, 0]])
    scores = tally(decisions, [(0, 1), (0, 2)], [1.0, 2.0, 3.0, 4.0],
                   (0, 1, 2))
    assert scores.tolist() == [[0.0, 2.0, 4.0], [4.0, 0.0, 0.0]]
