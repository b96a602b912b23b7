"""Reading and writing trained models.

Models are stored as JSON documents of the form

    {"format": "ilearn-model", "version": 1, "variant": ..., ...}

where the variant is "iluga" (an Ensemble of units) or "learnpp" (a
LearnppState of weighted hypotheses, used by both Learn++ and Learn++.MT).
Every unit is written with its scaler, and every binary SVM with its support
vectors, signed coefficients, bias, kernel record, soft margin and voting
weights, so a loaded model predicts exactly like the one that was saved.
Floats are written with their shortest round-trip representation.
"""

from ilearn.data.datasets import Scaler
from ilearn.learn.kernels import KernelSpec
from ilearn.learn.learnpp import LearnppState, WeakHypothesis
from ilearn.learn.multiclass import (Ensemble, MulticlassUnit,
                                     WeightedBinaryClassifier)
from ilearn.learn.svm import BinarySvmModel

import json
import logging

logger = logging.getLogger(__name__)

FORMAT = "ilearn-model"
VERSION = 1
MODEL_VARIANTS = ("iluga", "learnpp")

#=============================================================================

class ModelFormatError(ValueError):
    """Raised when a model document is malformed or of an unknown version."""

#=============================================================================

def _classifier_doc(wc):
    model = wc.model
    return {"pair": list(model.pair),
            "weight_neg": wc.weight_neg,
            "weight_pos": wc.weight_pos,
            "kernel": model.kernel.to_record(),
            "c": model.c,
            "b": model.b,
            "converged": model.converged,
            "iterations": model.iterations,
            "sv": model.sv.tolist(),
            "alpha_y": model.alpha_y.tolist()}

def _classifier_from_doc(doc):
    model = BinarySvmModel(sv=doc["sv"], alpha_y=doc["alpha_y"], b=doc["b"],
                           kernel=KernelSpec.from_record(doc["kernel"]),
                           c=doc["c"], pair=tuple(doc["pair"]),
                           converged=doc.get("converged", True),
                           iterations=doc.get("iterations", 0))
    return WeightedBinaryClassifier(model, doc["weight_neg"],
                                    doc["weight_pos"])

#-----------------------------------------------------------------------------

def unit_to_doc(unit):
    """Returns the JSON-ready record of a MulticlassUnit."""

    return {"classes": list(unit.classes),
            "scaler": unit.scaler.to_record(),
            "classifiers": [_classifier_doc(wc) for wc in unit.classifiers]}

def unit_from_doc(doc):
    """Rebuilds a MulticlassUnit from its record."""

    return MulticlassUnit(tuple(_classifier_from_doc(c)
                                for c in doc["classifiers"]),
                          tuple(doc["classes"]),
                          Scaler.from_record(doc["scaler"]))

#=============================================================================

def model_to_doc(model):
    """Returns the document of an Ensemble or a LearnppState."""

    if isinstance(model, Ensemble):
        return {"format": FORMAT, "version": VERSION, "variant": "iluga",
                "dim": model.dim,
                "known_classes": list(model.known_classes),
                "units": [unit_to_doc(u) for u in model.units]}
    if isinstance(model, LearnppState):
        return {"format": FORMAT, "version": VERSION, "variant": "learnpp",
                "dim": model.dim,
                "known_classes": list(model.classes),
                "hypotheses": [{"unit": unit_to_doc(h.unit),
                                "vote_weight": h.vote_weight,
                                "error": h.error,
                                "trained_classes": list(h.trained_classes)}
                               for h in model.hypotheses]}
    raise TypeError(f"cannot serialize {type(model).__name__}")

#-----------------------------------------------------------------------------

def model_from_doc(doc):
    """Rebuilds an Ensemble or a LearnppState from a document."""

    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError("not an ilearn model document")
    if doc.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version "
                               f"{doc.get('version')!r}")
    variant = doc.get("variant")
    if variant not in MODEL_VARIANTS:
        raise ModelFormatError(f"unknown model variant {variant!r}")
    try:
        if variant == "iluga":
            model = Ensemble(tuple(unit_from_doc(u) for u in doc["units"]))
        else:
            model = LearnppState(tuple(
                WeakHypothesis(unit_from_doc(h["unit"]), h["vote_weight"],
                               h["error"], tuple(h["trained_classes"]))
                for h in doc["hypotheses"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"malformed {variant} model: {e}") from e
    if doc.get("dim") is not None and model.dim != doc["dim"]:
        raise ModelFormatError(f"model declares dim {doc['dim']} but its "
                               f"units have dim {model.dim}")
    return model

#=============================================================================

def save_model(model, path):
    """Writes an Ensemble or a LearnppState to a JSON file."""

    doc = model_to_doc(model)
    with open(path, "w") as f:
        json.dump(doc, f, allow_nan=False)
        f.write("\n")
    logger.info("saved %s model to %s", doc["variant"], path)

#-----------------------------------------------------------------------------

def load_model(path):
    """Reads a model file written by save_model().

    Raises ModelFormatError for documents that are not valid models.
    """

    with open(path, "r") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"{path}: invalid JSON: {e}") from e
    return model_from_doc(doc)
