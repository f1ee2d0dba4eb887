import numpy as np
import pytest

from cwcu_lmmse.models import JointGaussianModel, LinearModel
from cwcu_lmmse.synthetic import random_linear_model, seeded_rng
from cwcu_lmmse.wlan import ChanestSetup, assemble_model


@pytest.fixture
def scalar_moments():
    return JointGaussianModel(
        mean_x=[0.0],
        mean_y=[0.0],
        C_xx=[[1.0]],
        C_xy=[[0.5]],
        C_yy=[[1.0]],
    )


@pytest.fixture
def identity_model():
    return LinearModel(H=np.eye(3), mean_x=np.zeros(3), C_xx=np.eye(3), C_nn=np.eye(3))


@pytest.fixture
def gaussian_model():
    return random_linear_model(seeded_rng(7), 3, 5)


@pytest.fixture
def diagonal_model():
    return random_linear_model(seeded_rng(11), 3, 5, diagonal_prior=True)


@pytest.fixture
def model_document_data():
    return {
        "version": "cwcu-model-v1",
        "kind": "linear",
        "n": 2,
        "m": 2,
        "H": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
        "mean_x": [[0.0, 0.0], [0.0, 0.0]],
        "C_xx": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
        "C_nn": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
    }


@pytest.fixture
def joint_document_data():
    return {
        "version": "cwcu-model-v1",
        "kind": "joint_gaussian",
        "n": 1,
        "m": 1,
        "mean_x": [[0.0, 0.0]],
        "mean_y": [[0.0, 0.0]],
        "C_xx": [[[1.0, 0.0]]],
        "C_xy": [[[0.5, 0.0]]],
        "C_yy": [[[1.0, 0.0]]],
    }


@pytest.fixture(scope="session")
def chanest_bundle():
    return assemble_model(ChanestSetup())
