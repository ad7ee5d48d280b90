"""Continuous LTI reference and discrete ternary-input plant models."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import numerics

ALPHABET = (-1, 0, 1)
ALPHABET_GUARD = 12  # 3**m enumeration cap


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def discretize(H, h: float) -> np.ndarray:
    """Exact discretization exp(H*h) of the continuous state matrix."""
    H = numerics.as_square(H, "state matrix")
    if h <= 0:
        raise ValueError("sampling interval must be positive")
    return numerics.mat_exp(H * h)


@dataclass(frozen=True, eq=False)
class LtiReference:
    """Continuous target system with state matrix H, sampled every h seconds.

    A_d caches the exact one-step flow exp(H*h).
    """

    H: np.ndarray
    h: float
    A_d: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H = numerics.as_square(self.H, "H")
        object.__setattr__(self, "H", _frozen(H))
        object.__setattr__(self, "A_d", _frozen(discretize(H, self.h)))

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def is_hurwitz(self) -> bool:
        return bool(np.all(numerics.eigenvalues(self.H).real < 0))


@dataclass(frozen=True, eq=False)
class QuantizedPlant:
    """Discrete plant x(k+1) = A_q x(k) + h B_q u(k) with u in {-1,0,1}^m."""

    A_q: np.ndarray
    B_q: np.ndarray
    h: float

    def __post_init__(self):
        A_q = numerics.as_square(self.A_q, "A_q")
        B_q = numerics.as_matrix(self.B_q, "B_q")
        if B_q.shape[0] != A_q.shape[0]:
            raise ValueError(f"B_q rows {B_q.shape[0]} do not match state dimension {A_q.shape[0]}")
        if self.h <= 0:
            raise ValueError("time step must be positive")
        object.__setattr__(self, "A_q", _frozen(A_q))
        object.__setattr__(self, "B_q", _frozen(B_q))

    @property
    def n(self) -> int:
        return self.A_q.shape[0]

    @property
    def m(self) -> int:
        return self.B_q.shape[1]


def validate_ternary(u, m: int | None = None) -> np.ndarray:
    """Coerce u to an int vector and require every entry to be -1, 0 or +1."""
    u = np.asarray(u)
    if u.ndim != 1:
        raise ValueError("input must be a flat vector")
    if m is not None and u.shape[0] != m:
        raise ValueError(f"expected {m} input entries, got {u.shape[0]}")
    iu = np.rint(u).astype(int)
    if np.any(np.abs(np.asarray(u, dtype=float) - iu) > 0) or np.any(np.abs(iu) > 1):
        raise ValueError("input entries must lie in {-1, 0, 1}")
    return iu


def lti_step(ref: LtiReference, x) -> np.ndarray:
    x = numerics.as_vector(x, "state")
    if x.shape[0] != ref.n:
        raise ValueError(f"state dimension {x.shape[0]} does not match {ref.n}")
    return ref.A_d @ x


def plant_step(plant: QuantizedPlant, x_q, u) -> np.ndarray:
    x_q = numerics.as_vector(x_q, "plant state")
    if x_q.shape[0] != plant.n:
        raise ValueError(f"state dimension {x_q.shape[0]} does not match {plant.n}")
    u = validate_ternary(u, plant.m)
    return plant.A_q @ x_q + plant.h * (plant.B_q @ u)


def enumerate_alphabet(m: int) -> np.ndarray:
    """All 3**m ternary input vectors, lexicographic over (-1, 0, 1), as rows."""
    if m < 1:
        raise ValueError("input count must be at least 1")
    if m > ALPHABET_GUARD:
        raise ValueError(f"alphabet enumeration capped at m={ALPHABET_GUARD}, got {m}")
    return np.array(list(itertools.product(ALPHABET, repeat=m)), dtype=int)
