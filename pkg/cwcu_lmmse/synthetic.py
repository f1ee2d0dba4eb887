"""Seeded random models for the identity suite, the compare and mc commands, and tests."""

import numpy as np

from .models import JointGaussianModel, LinearModel, SubspaceConstraint


def seeded_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=spawn_key)))


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    """Entries drawn from CN(0, 1)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_covariance(rng: np.random.Generator, n: int, loading: float = 0.5) -> np.ndarray:
    g = random_complex(rng, (n, n))
    c = g @ g.conj().T / n + loading * np.eye(n)
    return 0.5 * (c + c.conj().T)


def random_linear_model(
    rng: np.random.Generator,
    n: int,
    m: int,
    *,
    diagonal_prior: bool = False,
    zero_mean: bool = False,
    noise_level: float = 0.5,
) -> LinearModel:
    if diagonal_prior:
        c_xx = np.diag(rng.uniform(0.5, 2.0, n)).astype(complex)
    else:
        c_xx = random_covariance(rng, n)
    mean_x = np.zeros(n, dtype=complex) if zero_mean else random_complex(rng, n)
    return LinearModel(
        H=random_complex(rng, (m, n)),
        mean_x=mean_x,
        C_xx=c_xx,
        C_nn=noise_level * random_covariance(rng, m),
    )


def random_joint_moments(rng: np.random.Generator, n: int, m: int) -> JointGaussianModel:
    """Moments cut from a random positive-definite (n+m)×(n+m) block covariance."""
    block = random_covariance(rng, n + m, loading=0.2)
    return JointGaussianModel.validated(
        strict=True,
        mean_x=random_complex(rng, n),
        mean_y=random_complex(rng, m),
        C_xx=block[:n, :n],
        C_xy=block[:n, n:],
        C_yy=block[n:, n:],
    )


def random_subspace_model(
    rng: np.random.Generator, n: int, m: int, p: int, noise_level: float = 0.5
) -> tuple[LinearModel, SubspaceConstraint]:
    """Linear model whose zero-mean prior is supported on span(V), V of size n×p."""
    v = random_complex(rng, (n, p))
    c_zz = random_covariance(rng, p)
    model = LinearModel(
        H=random_complex(rng, (m, n)),
        mean_x=np.zeros(n, dtype=complex),
        C_xx=v @ c_zz @ v.conj().T,
        C_nn=noise_level * random_covariance(rng, m),
    )
    return model, SubspaceConstraint(V=v)
