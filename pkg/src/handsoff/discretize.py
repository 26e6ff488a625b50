"""Zero-order-hold discretization and finite-horizon reachability data.

Converts a continuous-time problem into the data the optimizer consumes:
the one-step pair (Ad, Bd), the reachability matrix Phi whose block j is
Ad^(N-1-j) Bd, and the terminal offset c = Ad^N x0, so that the terminal
state of any stacked control U is c + Phi @ U.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput, NonpositiveHorizon, ProblemTooLarge
from .model import MEMORY_GUARD, ControlProblem, PlantModel, validate_problem

# Degree-13 diagonal Pade coefficients and the matching 1-norm threshold
# (the standard choice for double precision).
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.4


def matrix_exponential(M: np.ndarray) -> np.ndarray:
    """e^M by scaling-and-squaring with the degree-13 Pade approximant.

    The input is scaled by 2^-s until its 1-norm drops below the degree-13
    threshold, the rational approximant is evaluated, and the result is
    squared s times.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"matrix exponential needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteInput("matrix exponential of a non-finite matrix")
    norm = np.linalg.norm(M, 1)
    if norm == 0.0:
        return np.eye(M.shape[0])
    squarings = int(np.ceil(np.log2(norm / _THETA13))) if norm > _THETA13 else 0
    A = M / (2.0 ** squarings) if squarings else M
    b = _PADE13
    ident = np.eye(A.shape[0])
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    E = np.linalg.solve(V - U, V + U)
    for _ in range(squarings):
        E = E @ E
    return E


def zoh_discretize(plant: PlantModel, h: float) -> tuple[np.ndarray, np.ndarray]:
    """One-step transition pair (Ad, Bd) under a piecewise-constant input.

    Both blocks come from a single exponential of the augmented matrix
    [[A, B], [0, 0]] * h, which needs no invertibility assumption on A.
    """
    if not (np.isfinite(h) and h > 0):
        raise NonpositiveHorizon(f"step length must be positive, got {h}")
    A, B = plant.A, plant.B
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got shape {A.shape}")
    if B.ndim != 2 or B.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"B must have {A.shape[0]} rows, got shape {B.shape}")
    n, m = A.shape[0], B.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A
    aug[:n, n:] = B
    E = matrix_exponential(aug * h)
    return E[:n, :n].copy(), E[:n, n:].copy()


@dataclass(frozen=True)
class DiscretizedPlant:
    """Finite-horizon data: terminal state = c + Phi @ U."""

    Ad: np.ndarray
    Bd: np.ndarray
    h: float
    Phi: np.ndarray  # n x (m*N); block j equals Ad^(N-1-j) Bd
    c: np.ndarray    # Ad^N x0

    def __post_init__(self):
        for name in ("Ad", "Bd", "Phi", "c"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.Ad.shape[0]

    @property
    def m(self) -> int:
        return self.Bd.shape[1]

    @property
    def N(self) -> int:
        return self.Phi.shape[1] // self.Bd.shape[1]


def build_reachability(problem: ControlProblem) -> DiscretizedPlant:
    """Assemble the reachability matrix and terminal offset for a problem.

    Phi is filled right to left by repeated multiplication (block j is
    Ad times block j+1, starting from Bd), and c = Ad^N x0 comes from N
    successive matrix-vector products rather than an explicit Ad^N.
    """
    problem = validate_problem(problem)
    n, m, N = problem.plant.n, problem.plant.m, int(problem.N)
    if m * N > MEMORY_GUARD:
        raise ProblemTooLarge(f"m*N = {m * N} exceeds the memory guard of {MEMORY_GUARD}")
    h = problem.T / N
    Ad, Bd = zoh_discretize(problem.plant, h)
    Phi = np.empty((n, m * N))
    block = Bd
    Phi[:, (N - 1) * m:] = block
    for j in range(N - 2, -1, -1):
        block = Ad @ block
        Phi[:, j * m:(j + 1) * m] = block
    c = np.asarray(problem.x0, dtype=float)
    for _ in range(N):
        c = Ad @ c
    return DiscretizedPlant(Ad=Ad, Bd=Bd, h=h, Phi=Phi, c=c)


def feasibility_radius(dp: DiscretizedPlant) -> float:
    """Minimum row slack of the reachability data.

    Returns min_k ( sum_j |Phi[k, j]| - |c_k| ).  A negative value is a
    certificate of infeasibility: no unit-bounded control can produce a
    terminal correction as large as c in that state coordinate.  A
    nonnegative value certifies nothing; full feasibility is decided by
    the optimizer.
    """
    return float(np.min(np.abs(dp.Phi).sum(axis=1) - np.abs(dp.c)))
