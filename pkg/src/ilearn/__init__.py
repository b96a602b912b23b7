"""A Python module for incremental learning with ensembles of SVMs.

Importing the ilearn module grants access to the main public methods:
    learn_increment()
    classify()
for growing an ILUGA ensemble one increment at a time (each increment adds
one-vs-one SVM units whose kernels and decision weights are chosen by genetic
algorithms) and classifying with its weighted majority vote, and to
    train_increment_learnpp()
    predict_learnpp()
    predict_learnpp_mt()
for the Learn++ and Learn++.MT baselines built from the same SVMs. Access
their docstrings via help() for detailed usage instructions.

ilearn can also be accessed via the command line using the ilearn shell
script. Access its documentation via
$ ilearn --help
for detailed usage instructions.
"""

from ._version import __author__, __version__, _author_email, _copyright_year
from ilearn.data.datasets import (OCR_PROTOCOL, WINE_PROTOCOL, Dataset,
                                  DatasetError, IncrementSpec, load_csv,
                                  load_optdigits, load_wine, make_increments,
                                  split_protocol, tri_split)
from ilearn.harness.experiment import (ExperimentConfig, RunReport,
                                       acceptance_checks, compare_methods,
                                       reproduce, run_experiment)
from ilearn.harness.report import parse_report_csv, report_emit
from ilearn.learn.ga import GaConfig, run_ga
from ilearn.learn.iluga import (IlugaConfig, IlugaLearner, classify,
                                learn_increment)
from ilearn.learn.kernels import KernelSpec, gram_matrix, kernel_eval
from ilearn.learn.learnpp import (LearnppConfig, LearnppError,
                                  LearnppLearner, LearnppState,
                                  predict_learnpp, predict_learnpp_mt,
                                  train_increment_learnpp)
from ilearn.learn.modelio import ModelFormatError, load_model, save_model
from ilearn.learn.multiclass import Ensemble, vote
from ilearn.learn.svm import predict, train_smo
from .ilearn import main
