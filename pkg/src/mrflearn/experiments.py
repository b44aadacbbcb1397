"""Experiment drivers: spectra, approximation tables, stability curves,
junta recovery, and the agnostic pipeline end to end.

Each driver is thin orchestration over the library modules and is
bit-reproducible from its arguments plus a master seed. Drivers return row
lists in the documented CSV schemas; `save_rows_csv` renders floats with 17
significant digits so files round-trip exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations
from math import comb

import numpy as np
from scipy.linalg import solve as _dense_solve

from . import _kernels
from .basis import conjunction_family
from .chain import (ChainOracle, LabeledWalk, default_burn_in,
                    greedy_initial_coloring)
from .errors import SizeCapExceeded
from .features import FeatureConfig, build_feature_set, geometric_times, hoeffding_T
from .learners import (JuntaConditionsReport, LearnerConfig, agnostic_learn,
                       junta_learn, majority_function,
                       randomized_threshold_error, sign_pm1, stability_curve,
                       thm4_alpha, thm4_walk_length, verify_junta_conditions)
from .models import (ColoringModel, CubeWalkModel, IsingModel, cycle_graph,
                     erdos_renyi_graph, make_graph)
from .rng import RngStream, derive_seed
from .spectral import (DEFAULT_MATRIX_CAP, Spectrum, enumerate_support,
                       fourier_coefficients, spectrum_of)

FIG_BETAS = (0.0, 0.02, 0.1, 1.0)

# default beta grids for the majority table, zero row prepended so the
# poly == eigen identity is exercised on every graph
TABLE_BETAS = {
    "K11": (0.0, 0.02, 0.05, 0.1, 0.2),
    "C11": (0.0, 0.1, 0.2, 0.5, 1.0),
    "G": (0.0, 0.05, 0.1, 0.2, 0.5),
}

GRAM_DAMPING = 1e-10

CSV_HEADERS = {
    "spectrum": ("rank", "beta", "lambda"),
    "majority": ("graph", "beta", "degree", "poly_err", "eigen_err", "M"),
    "stability": ("t", "ns", "one_minus_2ns"),
    "junta": ("seed", "recovered", "walk_len"),
    "agnostic": ("seed", "err", "opt", "W", "tau_max", "T"),
}


# ---------------------------------------------------------------------------
# experiment specs (CLI-facing)
# ---------------------------------------------------------------------------


TASKS = ("spectrum", "majority_table", "stability", "junta", "agnostic")


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated description of one run; caps are checked before launch."""

    task: str
    graph: str = "cycle"
    n: int = 10
    beta: float = 0.0
    q: int = 0  # 0 means spin models, > 0 selects proper colorings
    rows: int = 0  # grid graphs only
    cols: int = 0
    er_p: float = 0.3
    degrees: tuple = (2, 4)
    policy: str = "dimension"
    junta_k: int = 3
    seeds: int = 100
    samples: int = 3000
    tau_max: int = 30
    master_seed: int = 0
    cap_states: int = DEFAULT_MATRIX_CAP

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.q < 0 or self.q == 1:
            raise ValueError(f"q must be 0 (spins) or >= 2, got {self.q}")
        n = self.rows * self.cols if self.graph == "grid" else self.n
        raw = (self.q if self.q else 2) ** n
        if raw > self.cap_states and self.task != "junta":
            # junta runs only need walks plus the support enumeration cap
            raise SizeCapExceeded(
                f"{raw} raw states exceed the cap {self.cap_states}"
            )

    def build_model(self):
        if self.graph == "cube":
            return CubeWalkModel(n=self.n)
        params = {"n": self.n, "rows": self.rows, "cols": self.cols,
                  "p": self.er_p, "seed": self.master_seed}
        g = make_graph(self.graph, **params)
        if self.q:
            return ColoringModel(graph=g, q=self.q)
        return IsingModel(graph=g, beta=self.beta)


# ---------------------------------------------------------------------------
# spectrum columns (transition-matrix eigenvalues across a beta grid)
# ---------------------------------------------------------------------------


def spectrum_experiment(n: int = 10, betas=FIG_BETAS,
                        cap_states: int = DEFAULT_MATRIX_CAP,
                        cache_dir=None) -> dict:
    """Sorted eigenvalue columns for the Ising cycle, one per beta.

    The beta = 0 column uses the plain cube walk, whose spectrum is the
    closed-form parity ladder {1 - j/n}; positive betas use the lazy
    heat-bath chain.
    """
    columns = {}
    for beta in betas:
        if float(beta) == 0.0:
            model = CubeWalkModel(n=n)
        else:
            model = IsingModel(graph=cycle_graph(n), beta=float(beta))
        spec = spectrum_of(model, cap_states, cache_dir)
        columns[float(beta)] = spec.eigenvalues
    return columns


def spectrum_rows(columns: dict) -> list:
    """(rank, beta, lambda) rows, beta-major, rank 0 = largest eigenvalue."""
    rows = []
    for beta in sorted(columns):
        for rank, lam in enumerate(columns[beta]):
            rows.append((rank, beta, float(lam)))
    return rows


# ---------------------------------------------------------------------------
# majority approximation table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproximationRow:
    graph: str
    beta: float
    degree: int
    poly_err: float  # squared error of the best degree-k polynomial under pi
    eigen_err: float  # Parseval tail beyond the top M eigenvectors
    M: int


def monomial_matrix(X: np.ndarray, k: int) -> np.ndarray:
    """Columns are products of spin coordinates over subsets of size <= k,
    ordered by subset size then lexicographically; the constant comes first."""
    X = np.asarray(X, dtype=np.float64)
    rows, n = X.shape
    cols = [np.ones(rows)]
    for r in range(1, k + 1):
        for S in combinations(range(n), r):
            cols.append(X[:, S].prod(axis=1))
    return np.column_stack(cols)


def polynomial_fit_error(spec: Spectrum, f: np.ndarray, k: int,
                         damping: float = GRAM_DAMPING) -> float:
    """min_p E_pi[(f - p)^2] over polynomials of degree <= k."""
    f = np.asarray(f, dtype=np.float64)
    Phi = monomial_matrix(spec.support.configs, k)
    w = spec.pi
    gram = Phi.T @ (Phi * w[:, None])
    gram[np.diag_indices_from(gram)] += damping
    coef = _dense_solve(gram, Phi.T @ (w * f), assume_a="pos")
    resid = f - Phi @ coef
    return max(float(np.sum(w * resid * resid)), 0.0)


def parseval_tail_error(spec: Spectrum, f: np.ndarray, M: int) -> float:
    """Squared error of the projection onto the top M eigenvectors."""
    f = np.asarray(f, dtype=np.float64)
    fh = fourier_coefficients(f, spec)
    total = float(np.sum(spec.pi * f * f))
    return max(total - float(np.sum(fh[: max(M, 0)] ** 2)), 0.0)


def eigenvector_count(n: int, k: int, policy: str, state_count: int) -> int:
    """Dimension-matched count sums C(n, j) for j <= k; the literal n^k
    variant is capped at the state-space size."""
    if policy == "dimension":
        return sum(comb(n, j) for j in range(k + 1))
    if policy == "literal":
        return min(n**k, state_count)
    raise ValueError(f"unknown eigenvector policy {policy!r}")


def majority_row(model, label: str, k: int, policy: str = "dimension",
                 cap_states: int = DEFAULT_MATRIX_CAP,
                 cache_dir=None, spec: Spectrum | None = None) -> ApproximationRow:
    if spec is None:
        spec = spectrum_of(model, cap_states, cache_dir)
    f = majority_function(model.n)(spec.support.configs)
    M = eigenvector_count(model.n, k, policy, spec.support.size)
    beta = float(model.edge_betas[0]) if model.graph.edges else 0.0
    return ApproximationRow(
        graph=label,
        beta=beta,
        degree=k,
        poly_err=polynomial_fit_error(spec, f, k),
        eigen_err=parseval_tail_error(spec, f, M),
        M=M,
    )


def _table_graph(kind: str, n: int, er_p: float, er_seed: int):
    if kind in ("K11", "complete"):
        return make_graph("complete", n=n), "K11"
    if kind in ("C11", "cycle"):
        return make_graph("cycle", n=n), "C11"
    if kind in ("G", "er", "erdos_renyi"):
        return erdos_renyi_graph(n, er_p, er_seed), f"G({n},{er_p:g})"
    raise ValueError(f"unknown majority-table graph {kind!r}")


def er_majority_rows(n: int, p: float, betas, degrees, seeds: int,
                     master_seed: int, policy: str = "dimension",
                     cap_states: int = DEFAULT_MATRIX_CAP, cache_dir=None,
                     workers: int = 1) -> list:
    """Per-seed rows for random graphs: (seed, ApproximationRow) pairs."""

    def one(i):
        g, label = _table_graph("G", n, p, derive_seed(master_seed, i))
        out = []
        for beta in betas:
            model = IsingModel(graph=g, beta=float(beta))
            spec = spectrum_of(model, cap_states, cache_dir)
            for k in degrees:
                out.append((i, majority_row(model, label, k, policy, spec=spec)))
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one, range(seeds)))
    else:
        chunks = [one(i) for i in range(seeds)]
    return [row for chunk in chunks for row in chunk]


def majority_table(graph_kind: str, betas=None, degrees=(2, 4), n: int = 11,
                   policy: str = "dimension", er_p: float = 0.3,
                   er_seeds: int = 20, master_seed: int = 0,
                   cap_states: int = DEFAULT_MATRIX_CAP, cache_dir=None,
                   workers: int = 1) -> list:
    """ApproximationRow list; random graphs are averaged over er_seeds."""
    if betas is None:
        key = "G" if graph_kind in ("G", "er", "erdos_renyi") else graph_kind
        betas = TABLE_BETAS.get(key, TABLE_BETAS["K11"])
    if graph_kind in ("G", "er", "erdos_renyi"):
        per_seed = er_majority_rows(n, er_p, betas, degrees, er_seeds,
                                    master_seed, policy, cap_states, cache_dir,
                                    workers)
        rows = []
        for beta in betas:
            for k in degrees:
                cell = [r for _, r in per_seed
                        if r.beta == float(beta) and r.degree == k]
                rows.append(ApproximationRow(
                    graph=cell[0].graph, beta=float(beta), degree=k,
                    poly_err=float(np.mean([r.poly_err for r in cell])),
                    eigen_err=float(np.mean([r.eigen_err for r in cell])),
                    M=cell[0].M,
                ))
        return rows
    g, label = _table_graph(graph_kind, n, er_p, master_seed)

    def cell(beta):
        model = IsingModel(graph=g, beta=float(beta))
        spec = spectrum_of(model, cap_states, cache_dir)
        return [majority_row(model, label, k, policy, spec=spec)
                for k in degrees]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(cell, betas))
    else:
        chunks = [cell(b) for b in betas]
    return [row for chunk in chunks for row in chunk]


def majority_rows(rows) -> list:
    return [(r.graph, r.beta, r.degree, r.poly_err, r.eigen_err, r.M)
            for r in rows]


# ---------------------------------------------------------------------------
# stability curves
# ---------------------------------------------------------------------------


def stability_experiment(model, f=None, ts=None, pairs: int = 0,
                         master_seed: int = 0,
                         cap_states: int = DEFAULT_MATRIX_CAP,
                         cache_dir=None):
    """NS_t along a time grid for one function, exact unless pairs > 0."""
    if f is None:
        f = majority_function(model.n)
    if ts is None:
        ts = tuple(range(0, 31))
    if pairs > 0:
        return stability_curve(model, f, ts, pairs=pairs,
                               rng=RngStream(master_seed))
    spec = spectrum_of(model, cap_states, cache_dir)
    return stability_curve(model, f, ts, spec=spec)


def stability_rows(curve) -> list:
    return [(t, ns, s) for t, ns, s in
            zip(curve.ts, curve.ns, curve.stability)]


# ---------------------------------------------------------------------------
# junta recovery trials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JuntaTrial:
    seed: int
    recovered: bool
    walk_len: int
    target_sites: tuple
    learned_sites: tuple


@dataclass(frozen=True)
class JuntaExperimentResult:
    trials: tuple
    success_rate: float
    walk_len: int
    alpha: float
    conditions: JuntaConditionsReport


def _distinct_sites(stream: RngStream, n: int, k: int) -> np.ndarray:
    sites = []
    while len(sites) < k:
        c = stream.randint(n)
        if c not in sites:
            sites.append(c)
    return np.array(sorted(sites), dtype=np.int64)


def _random_table(stream: RngStream, cells: int) -> np.ndarray:
    return np.where(stream.floats(cells) < 0.5, -1, 1).astype(np.int8)


def junta_experiment(model, k: int = 3, seeds: int = 100, master_seed: int = 0,
                     delta: float = 0.05, walk_len: int | None = None,
                     cap_states: int | None = None) -> JuntaExperimentResult:
    """Random k-junta targets learned from labeled stationary walks.

    The walk length instantiates 2 tau ln(1/alpha) ln(k/delta) / alpha with
    tau = ceil(n ln n) and the constants measured by verify_junta_conditions.
    A trial counts as recovered when the hypothesis agrees with the target
    on the entire enumerated support.
    """
    n = model.n
    q = model.alphabet_size
    conditions = verify_junta_conditions(model, k, cap_states)
    alpha = thm4_alpha(conditions, k)
    if walk_len is None:
        tau = math.ceil(n * math.log(n))
        walk_len = thm4_walk_length(tau, alpha, k, delta)
    support = enumerate_support(model) if cap_states is None \
        else enumerate_support(model, cap_states)
    oracle = ChainOracle(model)
    burn = default_burn_in(n)
    coloring = isinstance(model, ColoringModel)
    master = RngStream(master_seed)
    trials = []
    for i in range(seeds):
        s = master.derive(i)
        target_sites = _distinct_sites(s.derive(0), n, k)
        dense = _random_table(s.derive(1), q**k)
        if coloring:
            start = greedy_initial_coloring(model)
        else:
            start_stream = s.derive(2)
            start = np.where(start_stream.floats(n) < 0.5, -1, 1).astype(np.int8)
        walk_stream = s.derive(3)
        full = oracle.walk(start, burn + walk_len, walk_stream)
        states = full[burn:]
        labels = _kernels.junta_eval_rows(states, target_sites, dense, q)
        res = junta_learn(LabeledWalk(states=states, labels=labels,
                                      alphabet_size=q))
        del full, states, labels
        want = _kernels.junta_eval_rows(support.configs, target_sites, dense, q)
        got = res.hypothesis.predict(support.configs)
        trials.append(JuntaTrial(
            seed=i,
            recovered=bool(np.array_equal(want, got)),
            walk_len=walk_len,
            target_sites=tuple(int(v) for v in target_sites),
            learned_sites=res.hypothesis.sites,
        ))
    rate = float(np.mean([t.recovered for t in trials])) if trials else 0.0
    return JuntaExperimentResult(tuple(trials), rate, walk_len, alpha, conditions)


def junta_rows(result: JuntaExperimentResult) -> list:
    return [(t.seed, int(t.recovered), t.walk_len) for t in result.trials]


# ---------------------------------------------------------------------------
# agnostic pipeline end to end
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgnosticTrial:
    seed: int
    err: float  # theta-expected error of the tuned hypothesis, exact under pi
    opt: float  # exact pi-weighted error of the best junta in the class
    W: float
    tau_max: int
    T: int


def _exact_pi_indices(spec: Spectrum, count: int, stream: RngStream) -> np.ndarray:
    cdf = np.cumsum(spec.pi)
    return np.searchsorted(cdf, stream.floats(count))


def _exact_pi_draws(spec: Spectrum, count: int, stream: RngStream) -> np.ndarray:
    return spec.support.configs[_exact_pi_indices(spec, count, stream)]


def exact_opt_juntas(configs: np.ndarray, pi: np.ndarray, labels: np.ndarray,
                     k: int, alphabet=(-1, 1)) -> tuple:
    """pi-weighted error of the best k-junta, minimized over variable sets.

    For a fixed set the optimal table labels each assignment cell with the
    majority of its mass, so the error is the sum of minority masses.
    """
    n = configs.shape[1]
    q = len(alphabet)
    if tuple(alphabet) == (-1, 1):
        digits = (configs.astype(np.int64) + 1) // 2
    else:
        digits = configs.astype(np.int64)
    plus = np.asarray(pi) * (labels == 1)
    minus = np.asarray(pi) * (labels == -1)
    best, best_set = float("inf"), ()
    for S in combinations(range(n), k):
        codes = np.zeros(len(configs), dtype=np.int64)
        for s in S:
            codes = codes * q + digits[:, s]
        err = float(np.minimum(
            np.bincount(codes, weights=plus, minlength=q ** k),
            np.bincount(codes, weights=minus, minlength=q ** k)).sum())
        if err < best:
            best, best_set = err, S
    return best, best_set


def agnostic_experiment(model=None, target=None, seeds=(0, 1, 2),
                        basis_k: int = 2, tau_max: int = 30,
                        eps2: float = 0.05, delta: float = 0.01,
                        train: int = 3000, val: int = 500,
                        budgets=(1.0, 4.0, 16.0), opt_k: int = 3,
                        master_seed: int = 2718,
                        cap_states: int = DEFAULT_MATRIX_CAP,
                        cache_dir=None, workers: int = 1) -> list:
    """Learn a target from exact-pi examples with smoothed conjunction
    features; the weight budget is tuned on a validation split.

    Features are estimated once per support state and shared wherever that
    state appears: training rows, validation rows, and the final error
    integral all index into the same per-state table. That is what the
    Hoeffding surrogate universe tau_max * |support| * |family| counts, and
    it makes the learned hypothesis a fixed function on the support. The
    reported error is then exact: sum of pi(x) |clip(h(x)) - f(x)| / 2, the
    theta-expectation of the randomized threshold. opt is the exact
    pi-weighted error of the best opt_k-junta.
    """
    if model is None:
        model = IsingModel(graph=cycle_graph(10), beta=0.1)
    n = model.n
    if target is None:
        target = majority_function(n)
    spec = spectrum_of(model, cap_states, cache_dir)
    family = conjunction_family(n, basis_k)
    # tau_max = 0 keeps only the exact t = 0 column; T is then never used
    universe = max(tau_max, 1) * spec.support.size * len(family.functions)
    T = hoeffding_T(eps2, delta, universe)
    fconf = FeatureConfig(tau_max=tau_max, T=T, times=geometric_times(tau_max))
    trials = []
    f_sup = sign_pm1(np.asarray(target(spec.support.configs)))
    for j in seeds:
        root = RngStream(master_seed).derive(int(j))
        idx = _exact_pi_indices(spec, train + val, root.derive(0))
        idx_train, idx_val = idx[:train], idx[train:]
        y_train, y_val = f_sup[idx_train], f_sup[idx_val]
        feat_seed = root.derive(1).seed
        fs_sup = build_feature_set(model, family, spec.support.configs, fconf,
                                   feat_seed, workers=workers)
        fs_train = replace(fs_sup, matrix=fs_sup.matrix[idx_train])
        results = {}
        for W in budgets:
            cfg = LearnerConfig(epsilon=eps2, delta=delta, weight_budget=float(W),
                                features=fconf, num_samples=train)
            results[float(W)] = agnostic_learn(model, family,
                                               spec.support.configs[idx_train],
                                               y_train, cfg, feat_seed,
                                               features=fs_train)
        F_val = fs_sup.matrix[idx_val]
        val_errs = {
            W: randomized_threshold_error(
                np.clip(F_val @ res.solution.weights, -1.0, 1.0), y_val)
            for W, res in results.items()
        }
        best_W = min(sorted(val_errs), key=val_errs.get)
        h_sup = np.clip(fs_sup.matrix @ results[best_W].solution.weights,
                        -1.0, 1.0)
        err = float(np.sum(spec.pi * np.abs(h_sup - f_sup)) / 2.0)
        opt, _ = exact_opt_juntas(spec.support.configs, spec.pi, f_sup,
                                  opt_k, (-1, 1))
        trials.append(AgnosticTrial(int(j), err, opt, best_W, tau_max, T))
    return trials


def agnostic_rows(trials) -> list:
    return [(t.seed, t.err, t.opt, t.W, t.tau_max, t.T) for t in trials]


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def format_value(v) -> str:
    """Floats at 17 significant digits; everything else via str."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def save_rows_csv(path, header, rows) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(format_value(v) for v in row) + "\n")


def load_rows_csv(path) -> tuple:
    """(header tuple, list of string-tuples); callers coerce types."""
    with open(path, "r", encoding="ascii") as f:
        header = tuple(f.readline().strip().split(","))
        rows = [tuple(line.strip().split(",")) for line in f if line.strip()]
    return header, rows
