"""Shared fixtures: desk-scale problems and trained models, built once."""

import numpy as np
import pytest

from rbws.grid import ParametricProblem
from rbws.hf import HighFidelitySolver
from rbws.msrb import msrb_train
from rbws.problems import example1, example2
from rbws.rb import l1roc_offline
from rbws.sampling import lhs_sample


@pytest.fixture(scope="session")
def ex1_spec():
    return example1()


@pytest.fixture(scope="session")
def ex2_spec():
    return example2()


@pytest.fixture(scope="session")
def ex1_desk(ex1_spec):
    """Example 1 on the 17^3 grid (3 levels)."""
    return ParametricProblem(ex1_spec, levels=3, m0=4)


@pytest.fixture(scope="session")
def ex2_desk(ex2_spec):
    """Example 2 on the 17^3 grid (3 levels)."""
    return ParametricProblem(ex2_spec, levels=3, m0=4)


@pytest.fixture(scope="session")
def ex1_train(ex1_spec):
    return lhs_sample(ex1_spec.p, 40, ex1_spec.bounds, seed=11)


@pytest.fixture(scope="session")
def ex1_test(ex1_spec):
    return lhs_sample(ex1_spec.p, 30, ex1_spec.bounds, seed=12)


@pytest.fixture(scope="session")
def ex2_train(ex2_spec):
    return lhs_sample(ex2_spec.p, 60, ex2_spec.bounds, seed=21)


@pytest.fixture(scope="session")
def ex2_test(ex2_spec):
    return lhs_sample(ex2_spec.p, 20, ex2_spec.bounds, seed=22)


@pytest.fixture(scope="session")
def ex1_hf(ex1_desk):
    return HighFidelitySolver(ex1_desk, method="lu")


@pytest.fixture(scope="session")
def ex2_hf(ex2_desk):
    return HighFidelitySolver(ex2_desk, method="lu")


@pytest.fixture(scope="session")
def ex1_l1roc(ex1_desk, ex1_train, ex1_hf):
    """Over-collocation model for Example 1, N = 20."""
    return l1roc_offline(ex1_train, 20, ex1_hf, ex1_desk.operator,
                         ex1_desk.operator_rows, ex1_desk.rhs, seed=0)


@pytest.fixture(scope="session")
def ex2_l1roc(ex2_desk, ex2_train, ex2_hf):
    """Over-collocation model for Example 2, N = 30."""
    return l1roc_offline(ex2_train, 30, ex2_hf, ex2_desk.operator,
                         ex2_desk.operator_rows, ex2_desk.rhs, seed=0)


@pytest.fixture(scope="session")
def ex1_msrb10(ex1_desk, ex1_train, ex1_hf):
    """Multispace hierarchy for Example 1, N = 10, eight iteration spaces."""
    return msrb_train(ex1_train, 10, 8, ex1_hf, ex1_desk.operator,
                      ex1_desk.rhs)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
