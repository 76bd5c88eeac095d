"""Shared fixtures: a seeded synthetic dataset and a trained base model."""
import numpy as np
import pytest

from otfair import load_dataset, train_lr, train_test_split
from otfair import synthetic


@pytest.fixture(scope="session")
def census_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "census.csv"
    synthetic.write_csv(path, 10_000, seed=1)
    return str(path)


@pytest.fixture(scope="session")
def census(census_path):
    return load_dataset(census_path, synthetic.SCHEMA)


@pytest.fixture(scope="session")
def census_split(census):
    return train_test_split(census, test_frac=0.3, seed=0)


@pytest.fixture(scope="session")
def base_model(census_split):
    train, _ = census_split
    return train_lr(train)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
