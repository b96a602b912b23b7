import numpy as np
import pytest

from ilearn.data.datasets import Dataset
from ilearn.learn.ga import GaConfig
from ilearn.learn.iluga import IlugaConfig
from ilearn.learn.learnpp import LearnppConfig


def make_blobs(counts, dim=2, spread=0.3, seed=0, distance=3.0):
    """Gaussian blobs, one per class, centred on well separated points.

    counts -- dict class id -> number of samples
    """

    rng = np.random.default_rng(seed)
    features, labels = [], []
    for c, n in sorted(counts.items()):
        angle = 2 * np.pi * c / 10
        centre = np.zeros(dim)
        centre[0] = distance * np.cos(angle)
        centre[1 % dim] += distance * np.sin(angle)
        features.append(centre + spread * rng.standard_normal((n, dim)))
        labels.extend([c] * n)
    return Dataset(np.vstack(features), labels)


@pytest.fixture
def blobs():
    return make_blobs


@pytest.fixture
def three_blobs():
    return make_blobs({0: 30, 1: 30, 2: 30}, seed=1)


@pytest.fixture
def tiny_ga():
    return GaConfig(population_size=4, generations=2, elite_count=1,
                    tournament_size=2)


@pytest.fixture
def fast_iluga(tiny_ga):
    return IlugaConfig(units_per_increment=1, stage1_ga=tiny_ga,
                       stage2_ga=tiny_ga, families=("rbf", "quadratic"),
                       seed=3)


@pytest.fixture
def fast_learnpp():
    return LearnppConfig(hypotheses_per_increment=2, max_hypotheses=3,
                         seed=5)
