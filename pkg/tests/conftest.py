import numpy as np
import pytest

from qsmpc import LtiReference, MpcProblem, QuantizedPlant

# the bundled demo system: a critically damped two-state node driven through
# four opposing unit actuators
DEMO_H = np.array([[0.0, 1.0], [-1.0, -2.0]])
DEMO_B = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
DEMO_H_STEP = 0.2


def demo_reference() -> LtiReference:
    return LtiReference(H=DEMO_H, h=DEMO_H_STEP)


def demo_problem(N: int = 5, identity_plant: bool = False) -> MpcProblem:
    ref = demo_reference()
    A_q = np.eye(2) if identity_plant else ref.A_d
    plant = QuantizedPlant(A_q=A_q, B_q=DEMO_B, h=DEMO_H_STEP)
    return MpcProblem(plant=plant, ref=ref, P=50 * np.eye(2), Q=0.1 * np.eye(2),
                      R=0.05 * np.eye(4), N=N)


def circle_points(radius: float, count: int, phase: float = 0.0) -> list:
    return [radius * np.array([np.cos(phase + 2 * np.pi * i / count),
                               np.sin(phase + 2 * np.pi * i / count)])
            for i in range(count)]


def random_spd(rng: np.random.Generator, n: int, floor: float = 0.2) -> np.ndarray:
    G = rng.standard_normal((n, n))
    return G @ G.T + floor * np.eye(n)


def random_schur_stable(rng: np.random.Generator, n: int, rho: float = 0.8) -> np.ndarray:
    A = rng.standard_normal((n, n))
    return A * (rho / max(1e-9, np.abs(np.linalg.eigvals(A)).max()))


def random_problem(rng: np.random.Generator, n: int = 2, m: int = 2, N: int = 2,
                   scalar_R: bool = False) -> MpcProblem:
    h = float(rng.uniform(0.2, 0.8))
    ref = LtiReference(H=-np.eye(n) + 0.3 * rng.standard_normal((n, n)), h=h)
    plant = QuantizedPlant(A_q=random_schur_stable(rng, n),
                           B_q=rng.standard_normal((n, m)), h=h)
    R = float(rng.uniform(0.05, 0.6)) * np.eye(m) if scalar_R else random_spd(rng, m, 0.1)
    return MpcProblem(plant=plant, ref=ref, P=random_spd(rng, n), Q=random_spd(rng, n),
                      R=R, N=N)


@pytest.fixture
def rng():
    return np.random.default_rng(424242)
