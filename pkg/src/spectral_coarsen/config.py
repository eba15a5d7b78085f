"""Numerical tolerances shared by every check in the package."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace

import numpy as np

SEED_ENV_VAR = "SPECTRAL_COARSEN_SEED"


@dataclass(frozen=True)
class Tolerances:
    symmetric: float = 1e-12
    eig_residual: float = 1e-8
    orthonormal: float = 1e-10
    zero_eigenvalue: float = 1e-9
    degenerate_gap: float = 1e-9
    interlacing: float = 1e-9
    projection: float = 1e-12
    identity: float = 1e-9
    bound: float = 1e-9
    alignment_mass: float = 1e-12
    spectral_gap: float = 1e-12

    def override(self, **kwargs: float) -> "Tolerances":
        return replace(self, **{k: float(v) for k, v in kwargs.items()})

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    """PCG64-backed generator; an existing generator is passed through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        seed = int(env) if env is not None else 0
    return np.random.Generator(np.random.PCG64(int(seed)))


def trial_seed(base_seed: int, trial: int) -> int:
    return int(base_seed) + int(trial)
