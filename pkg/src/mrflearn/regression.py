"""L1-budgeted least-absolute-deviation regression.

The fitting problem is

    minimize   sum_i | (Phi w)_i - y_i |
    subject to sum_m |w_m| <= W,

solved as a linear program in the standard split form (w = w+ - w- with
residual slacks u) by the HiGHS solver. The constraint matrix is assembled
sparse; at feature-matrix scale here (thousands of rows, up to 20k columns)
this is the whole cost of the fit.

The reported objective is recomputed from the returned weights, not read
off the LP, so it stays meaningful even when the solver terminates at
slightly loose slack values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import NumericalValidationError

BUDGET_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class L1Problem:
    features: np.ndarray  # (N, p)
    labels: np.ndarray  # (N,)
    weight_budget: float

    def __post_init__(self):
        F = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if F.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if y.shape != (F.shape[0],):
            raise ValueError(
                f"labels must have shape ({F.shape[0]},), got {y.shape}"
            )
        if not np.isfinite(F).all() or not np.isfinite(y).all():
            raise ValueError("features and labels must be finite")
        if not (self.weight_budget >= 0 and np.isfinite(self.weight_budget)):
            raise ValueError(f"weight budget must be nonnegative, got {self.weight_budget}")
        object.__setattr__(self, "features", F)
        object.__setattr__(self, "labels", y)


@dataclass(frozen=True, eq=False)
class L1Solution:
    weights: np.ndarray
    objective: float  # sum |Phi w - y|
    mean_abs_residual: float
    l1_norm: float
    budget_active: bool
    solver: str
    iterations: int


def predict_linear(features: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.asarray(features, dtype=np.float64) @ np.asarray(weights, dtype=np.float64)


def solve_l1_regression(problem: L1Problem) -> L1Solution:
    """HiGHS solve of the split LP; raises NumericalValidationError when the
    solver does not report optimality or the budget comes back violated."""
    F = problem.features
    y = problem.labels
    W = problem.weight_budget
    N, p = F.shape
    Fs = sparse.csr_matrix(F)
    eye = sparse.identity(N, format="csr")
    ones = sparse.csr_matrix(np.ones((1, p)))
    zeros_row = sparse.csr_matrix((1, N))
    # rows: Fw - y <= u ; y - Fw <= u ; sum(w+ + w-) <= W
    A_ub = sparse.vstack(
        [
            sparse.hstack([Fs, -Fs, -eye]),
            sparse.hstack([-Fs, Fs, -eye]),
            sparse.hstack([ones, ones, zeros_row]),
        ],
        format="csr",
    )
    b_ub = np.concatenate([y, -y, [W]])
    cost = np.concatenate([np.zeros(2 * p), np.ones(N)])
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    if res.status != 0:
        raise NumericalValidationError(
            f"LP solve failed (status {res.status}): {res.message}"
        )
    w = res.x[:p] - res.x[p : 2 * p]
    l1 = float(np.abs(w).sum())
    if l1 > W + BUDGET_SLACK:
        raise NumericalValidationError(
            f"solver returned weights with l1 norm {l1:.12g} over budget {W:.12g}"
        )
    residuals = np.abs(F @ w - y)
    objective = float(residuals.sum())
    iterations = int(getattr(res, "nit", 0) or 0)
    return L1Solution(
        weights=w,
        objective=objective,
        mean_abs_residual=objective / N if N else 0.0,
        l1_norm=l1,
        budget_active=l1 >= W - 1e-7 * max(1.0, W),
        solver="highs",
        iterations=iterations,
    )


def fit_l1(features: np.ndarray, labels: np.ndarray, weight_budget: float) -> L1Solution:
    return solve_l1_regression(L1Problem(features, labels, weight_budget))


def save_solution_csv(solution: L1Solution, descriptors, path) -> None:
    """feature,weight rows followed by objective and l1_norm footer rows."""
    descriptors = list(descriptors)
    if len(descriptors) != solution.weights.size:
        raise ValueError(
            f"{len(descriptors)} descriptors for {solution.weights.size} weights"
        )
    with open(path, "w", encoding="ascii") as f:
        f.write("feature,weight\n")
        for d, w in zip(descriptors, solution.weights):
            f.write(f"{d},{w:.17g}\n")
        f.write(f"objective,{solution.objective:.17g}\n")
        f.write(f"l1_norm,{solution.l1_norm:.17g}\n")


def load_solution_csv(path) -> tuple:
    """(descriptors, weights, footer dict)."""
    descriptors, weights, footer = [], [], {}
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "feature,weight":
            raise ValueError(f"unexpected solution header {header!r}")
        for line in f:
            key, val = line.strip().split(",")
            if key in ("objective", "l1_norm"):
                footer[key] = float(val)
            else:
                descriptors.append(key)
                weights.append(float(val))
    return tuple(descriptors), np.asarray(weights), footer
