"""Pipeline from a control problem to a sparse minimum-fuel control.

The finite-dimensional program
    minimize    h * sum_k sum_i lambda_i |u_i[k]|
    subject to  ||U||_inf <= 1,   c + Phi @ U == 0,
is rewritten with split variables U = P - Q, P, Q in [0, 1]^(mN), solved
by the interior-point engine, and then polished: interior-point methods
land in the analytic center of the optimal face, which is its least
sparse point, so a reweighted-L1 crossover walks the answer to a sparse
vertex of that face without giving up optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretize import DiscretizedPlant, build_reachability, feasibility_radius
from .errors import DimensionMismatch, NonpositiveWeight
from .interior_point import IPResult, LPProblem, SolveStatus, solve_ip
from .model import ControlProblem, ControlSignal, validate_problem

_GOLDEN = 0.6180339887498949
# Relative size of the multiplicative jitter that breaks exact ties
# between reweighted-L1 rounds; see polish_to_vertex.
_JITTER = 1e-4


@dataclass(frozen=True)
class WeightMatrix:
    """Per-channel fuel weights, expanded over the grid on demand."""

    lambda_block: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambda_block, dtype=float))
        if lam.ndim != 1 or lam.size < 1:
            raise DimensionMismatch(f"weights must be a nonempty vector, got {lam.shape}")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise NonpositiveWeight("all weights must be strictly positive")
        lam.flags.writeable = False
        object.__setattr__(self, "lambda_block", lam)

    @property
    def m(self) -> int:
        return self.lambda_block.size

    def expand(self, N: int) -> np.ndarray:
        """Weights stacked to match the mN-long control layout."""
        return np.tile(self.lambda_block, N)


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and switches for the solve pipeline."""

    opt_tol: float = 1e-8
    feas_tol: float = 1e-6
    sparsity_threshold: float = 1e-6
    polish: bool = True
    max_iterations: int = 200
    polish_rounds: int = 10
    polish_epsilon: float = 1e-6
    polish_accept: float = 1e-7


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solve: status, certified objective data, signals.

    ``objective`` is recomputed from the returned signal; ``lp_objective``
    and ``dual_objective`` are the primal/dual values certified by the
    interior-point termination, so the pair brackets the true optimum
    regardless of what the polish did afterwards.
    """

    status: SolveStatus
    objective: float
    lp_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap_residual: float
    iterations: int
    signal: ControlSignal | None
    unpolished_signal: ControlSignal | None
    terminal_error: float
    polish_applied: bool
    feasibility_slack: float
    polish_rounds: int = 0


def build_lp(dp: DiscretizedPlant, weights: WeightMatrix) -> LPProblem:
    """Split-variable LP for the discretized fuel problem.

    Variables are [P; Q] with U = P - Q and P, Q in [0, 1]^(mN); the
    objective h * lambda @ (P + Q) upper-bounds the fuel and matches it
    whenever P and Q do not overlap, which holds at any optimum.  The
    h factor makes the optimal value approximate the continuous-time
    fuel integral.
    """
    if weights.m != dp.m:
        raise DimensionMismatch(
            f"weights have {weights.m} channels, plant has {dp.m}")
    lam = dp.h * weights.expand(dp.N)
    return LPProblem(
        c=np.concatenate([lam, lam]),
        A=np.hstack([dp.Phi, -dp.Phi]),
        b=-dp.c,
        u=np.ones(2 * dp.Phi.shape[1]),
    )


def _tie_break(n_atoms: int) -> np.ndarray:
    # Low-discrepancy multiplicative jitter; deterministic across runs.
    k = np.arange(1, n_atoms + 1, dtype=float)
    return 1.0 + _JITTER * ((k * _GOLDEN) % 1.0)


def _min_fuel_on_support(lp: LPProblem, support: np.ndarray,
                         options: SolverOptions) -> np.ndarray | None:
    """Minimize the original fuel objective with all other atoms at zero."""
    n_atoms = lp.n_vars // 2
    if support.size == 0:
        return np.zeros(n_atoms) if np.allclose(lp.b, 0.0) else None
    cols = lp.A[:, support]
    cost = lp.c[support]
    sub = LPProblem(c=np.concatenate([cost, cost]),
                    A=np.hstack([cols, -cols]),
                    b=lp.b,
                    u=np.ones(2 * support.size))
    result = solve_ip(sub, tol=options.opt_tol, maxiter=options.max_iterations)
    if result.status is not SolveStatus.OPTIMAL:
        return None
    U = np.zeros(n_atoms)
    U[support] = result.x[:support.size] - result.x[support.size:]
    return U


def polish_to_vertex(lp: LPProblem, interior_U: np.ndarray,
                     options: SolverOptions = SolverOptions(),
                     rhs_scale: float | None = None,
                     ) -> tuple[np.ndarray, bool, int]:
    """Drive an optimal-face point to a sparse vertex of that face.

    Runs reweighted-L1 rounds, each a full interior-point solve of the
    original LP with an extra fuel-budget row that pins the objective to
    the incumbent value (within the acceptance slack), and with atom
    weights 1 / (|U| + eps) from the previous round.  A deterministic
    multiplicative jitter on the weights breaks exact ties, which would
    otherwise leave a perfectly symmetric face stuck at its analytic
    center.  The rounds stop once the support pattern repeats, a round
    fails, or ``polish_rounds`` rounds have run; the fuel objective is
    then re-minimized over the final support alone, which removes both
    the budget slack and the sub-threshold debris the loose rounds leave
    behind.

    Returns (control, accepted, rounds).  The polished point is accepted
    only if it kept the terminal equality, did not raise the fuel
    objective beyond the acceptance slack, and did not grow the support;
    otherwise the caller falls back to ``interior_U``.
    """
    n_atoms = lp.n_vars // 2
    cost = lp.c[:n_atoms]
    U0 = np.asarray(interior_U, dtype=float)
    J0 = float(cost @ np.abs(U0))
    budget = 0.5 * options.polish_accept * (1.0 + abs(J0))
    scale = float(np.linalg.norm(lp.b)) if rhs_scale is None else rhs_scale
    thr = options.sparsity_threshold

    face_A = np.zeros((lp.n_rows + 1, lp.n_vars + 1))
    face_A[:-1, :-1] = lp.A
    face_A[-1, :-1] = lp.c
    face_A[-1, -1] = 1.0
    face_b = np.concatenate([lp.b, [J0 + budget]])
    face_u = np.concatenate([lp.u, [max(1.0, J0 + budget)]])
    jitter = _tie_break(n_atoms)

    # The reweighted rounds only need the support pattern; their weight
    # ratios reach 1/eps, whose duality gap cannot be certified past the
    # complementarity roundoff floor, so the gap tolerance is relaxed.
    # Objective and feasibility are restored afterwards on the original
    # data, and checked, before the polish is accepted.
    gap_tol = max(options.opt_tol, 1e-6)
    U = U0
    support: frozenset[int] | None = None
    rounds = 0
    for rounds in range(1, options.polish_rounds + 1):
        w = jitter / (np.abs(U) + options.polish_epsilon)
        face_c = np.concatenate([w, w, [0.0]])
        result = solve_ip(LPProblem(c=face_c, A=face_A, b=face_b, u=face_u),
                          tol=options.opt_tol, maxiter=options.max_iterations,
                          gap_tol=gap_tol)
        if result.status is not SolveStatus.OPTIMAL:
            break
        U = result.x[:n_atoms] - result.x[n_atoms:2 * n_atoms]
        new_support = frozenset(np.flatnonzero(np.abs(U) > thr).tolist())
        if new_support == support:
            break
        support = new_support
    if support is None:
        return U0, False, rounds

    restored = _min_fuel_on_support(lp, np.flatnonzero(np.abs(U) > thr), options)
    if restored is not None:
        U = restored

    overshoot = float(np.max(np.abs(U), initial=0.0)) - 1.0
    if overshoot > 1e-9:
        return U0, False, rounds
    U = np.clip(U, -1.0, 1.0)
    J_pol = float(cost @ np.abs(U))
    eq_err = float(np.linalg.norm(
        lp.A @ np.concatenate([np.maximum(U, 0.0), np.maximum(-U, 0.0)]) - lp.b))
    support0 = int(np.count_nonzero(np.abs(U0) > thr))
    ok = (J_pol <= J0 + options.polish_accept * (1.0 + abs(J0))
          and eq_err <= options.feas_tol * (1.0 + scale)
          and int(np.count_nonzero(np.abs(U) > thr)) <= support0)
    if not ok:
        return U0, False, rounds
    return U, True, rounds


def solve(problem: ControlProblem,
          options: SolverOptions = SolverOptions()) -> SolveReport:
    """Full pipeline: discretize, pre-check, solve, polish, report.

    The reported objective is always recomputed from the returned signal
    as h * sum lambda |u|, and the terminal error is the Euclidean norm
    of c + Phi @ U.
    """
    problem = validate_problem(problem)
    dp = build_reachability(problem)
    slack = feasibility_radius(dp)
    m, N, h = dp.m, dp.N, dp.h

    def failure(status, ip: IPResult | None = None):
        return SolveReport(
            status=status,
            objective=float("nan"),
            lp_objective=ip.objective if ip else float("nan"),
            dual_objective=ip.dual_objective if ip else float("nan"),
            primal_residual=ip.primal_residual if ip else float("nan"),
            dual_residual=ip.dual_residual if ip else float("nan"),
            gap_residual=ip.gap_residual if ip else float("nan"),
            iterations=ip.iterations if ip else 0,
            signal=None,
            unpolished_signal=None,
            terminal_error=float("nan"),
            polish_applied=False,
            feasibility_slack=slack,
        )

    if slack < 0:
        return failure(SolveStatus.INFEASIBLE)

    weights = WeightMatrix(problem.weights)
    lp = build_lp(dp, weights)
    result = solve_ip(lp, tol=options.opt_tol, maxiter=options.max_iterations)
    if result.status is not SolveStatus.OPTIMAL:
        return failure(result.status, result)

    K = m * N
    U_raw = result.x[:K] - result.x[K:]
    overshoot = float(np.max(np.abs(U_raw))) - 1.0
    if overshoot > 1e-9:
        return failure(SolveStatus.NUMERICAL_FAILURE, result)
    U_raw = np.clip(U_raw, -1.0, 1.0)
    x0_norm = float(np.linalg.norm(problem.x0))

    rounds = 0
    applied = False
    U_final = U_raw
    if options.polish:
        U_final, applied, rounds = polish_to_vertex(
            lp, U_raw, options, rhs_scale=x0_norm)

    terminal_error = float(np.linalg.norm(dp.c + dp.Phi @ U_final))
    objective = float(lp.c[:K] @ np.abs(U_final))
    status = SolveStatus.OPTIMAL
    if terminal_error > options.feas_tol * (1.0 + x0_norm):
        status = SolveStatus.NUMERICAL_FAILURE

    return SolveReport(
        status=status,
        objective=objective,
        lp_objective=result.objective,
        dual_objective=result.dual_objective,
        primal_residual=result.primal_residual,
        dual_residual=result.dual_residual,
        gap_residual=result.gap_residual,
        iterations=result.iterations,
        signal=ControlSignal(U=U_final, h=h, m=m, N=N),
        unpolished_signal=ControlSignal(U=U_raw, h=h, m=m, N=N),
        terminal_error=terminal_error,
        polish_applied=applied,
        feasibility_slack=slack,
        polish_rounds=rounds,
    )


def recompute_objective(signal: ControlSignal, weights: np.ndarray) -> float:
    """h * sum_k sum_i lambda_i |u_i[k]| for an arbitrary signal."""
    lam = WeightMatrix(weights).expand(signal.N)
    return float(signal.h * (lam @ np.abs(signal.U)))
