import json

import numpy as np
import pytest

from ilearn.learn.iluga import learn_increment
from ilearn.learn.learnpp import (LearnppState, predict_learnpp_batch,
                                  predict_learnpp_mt_batch,
                                  train_increment_learnpp)
from ilearn.learn.modelio import (FORMAT, ModelFormatError, load_model,
                                  model_from_doc, model_to_doc, save_model)
from ilearn.learn.multiclass import Ensemble, vote


@pytest.fixture
def iluga_model(three_blobs, fast_iluga):
    return learn_increment(Ensemble(), three_blobs, fast_iluga)


@pytest.fixture
def learnpp_model(three_blobs, fast_learnpp):
    return train_increment_learnpp(LearnppState(), three_blobs,
                                   cfg=fast_learnpp)


@pytest.fixture
def probe():
    return np.random.default_rng(11).uniform(-4, 4, (100, 2))


class TestRoundTrip:

    def test_iluga_votes_survive(self, tmp_path, iluga_model, probe):
        path = tmp_path / "iluga.json"
        save_model(iluga_model, path)
        loaded = load_model(path)
        assert isinstance(loaded, Ensemble)
        assert loaded.known_classes == iluga_model.known_classes
        for x in probe:
            assert vote(loaded, x) == vote(iluga_model, x)

    def test_iluga_weights_and_kernels_survive(self, tmp_path, iluga_model):
        path = tmp_path / "iluga.json"
        save_model(iluga_model, path)
        loaded = load_model(path)
        for a, b in zip(loaded.units, iluga_model.units):
            assert a.weights.tolist() == b.weights.tolist()
            assert [wc.model.kernel for wc in a.classifiers] \
                == [wc.model.kernel for wc in b.classifiers]
            assert a.scaler.lower.tolist() == b.scaler.lower.tolist()

    def test_learnpp_predictions_survive(self, tmp_path, learnpp_model,
                                         probe):
        path = tmp_path / "learnpp.json"
        save_model(learnpp_model, path)
        loaded = load_model(path)
        assert isinstance(loaded, LearnppState)
        assert [h.vote_weight for h in loaded.hypotheses] \
            == [h.vote_weight for h in learnpp_model.hypotheses]
        for predict in (predict_learnpp_batch, predict_learnpp_mt_batch):
            assert predict(loaded, probe).tolist() \
                == predict(learnpp_model, probe).tolist()

    def test_document_header(self, iluga_model):
        doc = model_to_doc(iluga_model)
        assert (doc["format"], doc["version"], doc["variant"]) \
            == (FORMAT, 1, "iluga")
        assert doc["dim"] == 2
        assert doc["known_classes"] == [0, 1, 2]
        record = doc["units"][0]["classifiers"][0]
        assert {"pair", "weight_neg", "weight_pos", "kernel", "c", "b", "sv",
                "alpha_y"} <= set(record)

    def test_saving_twice_is_byte_identical(self, tmp_path, learnpp_model):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        save_model(learnpp_model, first)
        save_model(load_model(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_empty_ensemble(self, tmp_path):
        path = tmp_path / "empty.json"
        save_model(Ensemble(), path)
        assert len(load_model(path)) == 0

    def test_unknown_model_type(self):
        with pytest.raises(TypeError):
            model_to_doc({"units": []})


class TestBadDocuments:

    @pytest.mark.parametrize("change, message", [
        ({"format": "pickle"}, "not an ilearn model"),
        ({"version": 2}, "unsupported model version 2"),
        ({"variant": "adaboost"}, "unknown model variant"),
        ({"dim": 5}, "declares dim 5"),
    ])
    def test_header_errors(self, iluga_model, change, message):
        doc = {**model_to_doc(iluga_model), **change}
        with pytest.raises(ModelFormatError, match=message):
            model_from_doc(doc)

    def test_missing_field(self, learnpp_model):
        doc = model_to_doc(learnpp_model)
        del doc["hypotheses"][0]["vote_weight"]
        with pytest.raises(ModelFormatError, match="malformed learnpp"):
            model_from_doc(doc)

    def test_broken_pair_layout(self, iluga_model):
        doc = model_to_doc(iluga_model)
        classifiers = doc["units"][0]["classifiers"]
        classifiers.reverse()
        with pytest.raises(ModelFormatError):
            model_from_doc(doc)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "ilearn-model", ')
        with pytest.raises(ModelFormatError, match="invalid JSON"):
            load_model(path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text(json.dumps([1, 2, 3]))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_format_error_is_a_value_error(self):
        assert issubclass(ModelFormatError, ValueError)
