"""Learning pipelines over the chain: agnostic regression on smoothed
features, exact junta recovery from labeled walks, and noise-sensitivity
analysis (exact spectral and sampled).

Conventions shared across the module: boolean functions take values in
{-1, +1}; sign(0) = +1 everywhere a threshold is applied; hypotheses are
clipped to [-1, 1] before randomized thresholding, which makes the
theta-expected error of sign(h - theta) against a +-1 label exactly
|h - y| / 2 for theta uniform on [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .basis import BasisFamily
from . import _kernels
from .chain import LabeledWalk, default_burn_in, one_step_oracle
from .features import FeatureConfig, FeatureSet, build_feature_set
from .models import IsingModel
from .regression import L1Problem, L1Solution, solve_l1_regression
from .rng import RngStream, derive_seed, derive_seeds_array
from .spectral import Spectrum, fourier_coefficients

_PREDICT_TAG = 2**48  # feature-seed namespace for predictions, clear of training example ids


def sign_pm1(values: np.ndarray) -> np.ndarray:
    """Sign with the package-wide tie convention sign(0) = +1."""
    return np.where(np.asarray(values) >= 0, 1, -1).astype(np.int8)


def majority_function(n: int):
    """sign(sum x_i) on spin configurations; ties (even n) go to +1."""

    def f(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X))
        return sign_pm1(X.sum(axis=1))

    return f


def halfspace_function(weights: np.ndarray):
    w = np.asarray(weights, dtype=np.float64)

    def f(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X))
        return sign_pm1(X.astype(np.float64) @ w)

    return f


def random_halfspace(n: int, rng: RngStream):
    """Halfspace with weights uniform on [-1, 1]; ties have measure zero."""
    return halfspace_function(rng.floats(n) * 2.0 - 1.0)


def _require_pm1(y: np.ndarray, what: str) -> np.ndarray:
    y = np.asarray(y)
    if not np.all(np.abs(y) == 1):
        raise ValueError(f"{what} must take values in -1/+1")
    return y.astype(np.int8)


# ---------------------------------------------------------------------------
# agnostic learning: features -> L1 fit -> randomized threshold
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LearnerConfig:
    epsilon: float
    delta: float
    weight_budget: float
    features: FeatureConfig
    num_samples: int
    burn_in: int | None = None

    def __post_init__(self):
        if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
            raise ValueError("epsilon and delta must lie in (0, 1)")
        if self.num_samples < 1:
            raise ValueError("num_samples must be at least 1")
        if self.weight_budget <= 0:
            raise ValueError("weight_budget must be positive")


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """Clipped linear predictor over smoothed features.

    Prediction on new points rebuilds features with the stored seed, so a
    hypothesis is a pure function of (model, family, config, seeds).
    """

    weights: np.ndarray
    descriptors: tuple
    family: BasisFamily
    feature_config: FeatureConfig
    train_seed: int
    predict_seed: int
    model_digest: str

    def feature_values(self, model, X: np.ndarray, seed: int | None = None,
                       workers: int = 1) -> np.ndarray:
        fs = build_feature_set(model, self.family, X, self.feature_config,
                               self.predict_seed if seed is None else seed,
                               workers=workers)
        return fs.matrix

    def predict(self, model, X: np.ndarray, seed: int | None = None,
                workers: int = 1) -> np.ndarray:
        """h(x) clipped to [-1, 1]."""
        h = self.feature_values(model, X, seed, workers) @ self.weights
        return np.clip(h, -1.0, 1.0)

    def predict_labels(self, model, X: np.ndarray, rng: RngStream,
                       seed: int | None = None) -> np.ndarray:
        """sign(h - theta) with a fresh uniform theta per example."""
        h = self.predict(model, X, seed)
        theta = rng.floats(h.size) * 2.0 - 1.0
        return sign_pm1(h - theta)


@dataclass(frozen=True, eq=False)
class AgnosticResult:
    hypothesis: Hypothesis
    solution: L1Solution
    features: FeatureSet
    training_error: float  # theta-expected error on the training sample


def agnostic_learn(model, family: BasisFamily, examples: np.ndarray,
                   labels: np.ndarray, config: LearnerConfig, master_seed: int,
                   workers: int = 1,
                   features: FeatureSet | None = None) -> AgnosticResult:
    y = _require_pm1(labels, "labels")
    if features is None:
        fs = build_feature_set(model, family, examples, config.features,
                               master_seed, workers=workers)
    else:
        # reuse a prebuilt matrix (e.g. when sweeping the weight budget)
        fs = features
        if fs.master_seed != master_seed:
            raise ValueError("prebuilt features use a different master seed")
        if fs.config != config.features:
            raise ValueError("prebuilt features use a different feature config")
    if y.shape != (fs.num_examples,):
        raise ValueError(f"need one label per example, got {y.shape}")
    sol = solve_l1_regression(L1Problem(fs.matrix, y.astype(np.float64),
                                        config.weight_budget))
    hyp = Hypothesis(
        weights=sol.weights,
        descriptors=fs.descriptors,
        family=family,
        feature_config=config.features,
        train_seed=master_seed,
        predict_seed=derive_seed(master_seed, _PREDICT_TAG),
        model_digest=fs.model_digest,
    )
    h_train = np.clip(fs.matrix @ sol.weights, -1.0, 1.0)
    return AgnosticResult(hyp, sol, fs, randomized_threshold_error(h_train, y))


def randomized_threshold_error(h_values: np.ndarray, labels: np.ndarray) -> float:
    """Exact theta-expectation of Pr[sign(h - theta) != y], theta ~ U[-1, 1]."""
    y = _require_pm1(labels, "labels")
    h = np.clip(np.asarray(h_values, dtype=np.float64), -1.0, 1.0)
    if h.shape != y.shape:
        raise ValueError("h and labels must align")
    return float(np.mean(np.abs(h - y)) / 2.0)


def empirical_error(h_values: np.ndarray, labels: np.ndarray,
                    rng: RngStream | None = None) -> float:
    """Disagreement of the thresholded predictor.

    With an rng, one theta is drawn per example; without, the exact
    theta-expectation is returned.
    """
    if rng is None:
        return randomized_threshold_error(h_values, labels)
    y = _require_pm1(labels, "labels")
    h = np.clip(np.asarray(h_values, dtype=np.float64), -1.0, 1.0)
    theta = rng.floats(h.size) * 2.0 - 1.0
    return float(np.mean(sign_pm1(h - theta) != y))


def brute_force_opt(predictions: np.ndarray, labels: np.ndarray) -> tuple:
    """(min error, argmin row) over an explicit matrix of +-1 predictions."""
    P = np.atleast_2d(_require_pm1(predictions, "predictions"))
    y = _require_pm1(labels, "labels")
    errs = np.mean(P != y[None, :], axis=1)
    best = int(np.argmin(errs))
    return float(errs[best]), best


def brute_force_opt_juntas(X: np.ndarray, labels: np.ndarray, k: int,
                           alphabet) -> tuple:
    """Exact minimum disagreement over all juntas on <= k coordinates.

    For a fixed coordinate set the optimal table labels each pattern by its
    majority, so the error is a bincount; the outer loop enumerates sets.
    Returns (opt, best coordinate set).
    """
    X = np.atleast_2d(np.asarray(X))
    y = _require_pm1(labels, "labels")
    n = X.shape[1]
    values = list(alphabet)
    digit = {v: d for d, v in enumerate(values)}
    D = np.empty_like(X, dtype=np.int64)
    for v, d in digit.items():
        D[X == v] = d
    q = len(values)
    N = X.shape[0]
    pos = (y > 0).astype(np.float64)
    best_err = float(min(np.mean(y > 0), np.mean(y < 0)))  # empty junta: constant
    best_set = ()
    for r in range(1, k + 1):
        for S in combinations(range(n), r):
            codes = np.zeros(N, dtype=np.int64)
            for i in S:
                codes = codes * q + D[:, i]
            cells = q**r
            pos_counts = np.bincount(codes, weights=pos, minlength=cells)
            tot_counts = np.bincount(codes, minlength=cells).astype(np.float64)
            wrong = np.minimum(pos_counts, tot_counts - pos_counts).sum()
            err = float(wrong / N)
            if err < best_err - 1e-15:
                best_err, best_set = err, S
    return best_err, best_set


# ---------------------------------------------------------------------------
# junta learning from labeled walks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JuntaHypothesis:
    sites: tuple  # sorted coordinate ids
    table: dict  # assignment tuple -> +-1 label
    alphabet_size: int
    default_label: int = 1
    complete: bool = True  # every |A|^|J| assignment observed

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X))
        if not self.sites:
            only = next(iter(self.table.values())) if self.table else self.default_label
            return np.full(X.shape[0], only, dtype=np.int8)
        q = self.alphabet_size
        dense = np.full(q ** len(self.sites), self.default_label, dtype=np.int8)
        for key, label in self.table.items():
            code = 0
            for v in key:
                code = code * q + ((v + 1) // 2 if q == 2 else v)
            dense[code] = label
        cols = X[:, list(self.sites)].astype(np.int64)
        digits = (cols + 1) // 2 if q == 2 else cols
        codes = np.zeros(X.shape[0], dtype=np.int64)
        for j in range(len(self.sites)):
            codes = codes * q + digits[:, j]
        return dense[codes]

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.predict(X)


@dataclass(frozen=True, eq=False)
class JuntaResult:
    hypothesis: JuntaHypothesis
    sites: tuple
    label_changes: int  # single-site transitions that flipped the label
    assignments_seen: int


def junta_learn(walk: LabeledWalk) -> JuntaResult:
    """Recover the relevant variables and truth table from a labeled walk.

    A variable joins J when a single-site transition changes the label; the
    table is the plurality label over all walk states restricted to J, ties
    and unseen assignments defaulting to +1 (unseen ones also clear the
    completeness flag).
    """
    states = np.ascontiguousarray(walk.states, dtype=np.int8)
    labels = np.ascontiguousarray(walk.labels, dtype=np.int8)
    status, where, info, site_hits, witnesses = _kernels.walk_transition_audit(
        states, labels)
    if status == 1:
        raise ValueError(
            f"walk step {int(where)} changes {int(info)} coordinates; "
            "single-site dynamics required"
        )
    if status == 2:
        raise ValueError(
            f"walk step {int(where)} changes the label without changing "
            "any coordinate"
        )
    sites = tuple(int(i) for i in np.nonzero(site_hits)[0])
    q = walk.alphabet_size
    if not sites:
        # constant-label hypothesis; plurality over the whole walk
        ups = int(np.sum(labels == 1))
        label = 1 if ups >= labels.size - ups else -1
        hyp = JuntaHypothesis((), {(): label}, q, complete=True)
        return JuntaResult(hyp, (), int(witnesses), 1)
    values = (np.array([-1, 1], dtype=np.int8) if q == 2
              else np.arange(q, dtype=np.int8))
    cells = q ** len(sites)
    ups, totals = _kernels.junta_code_counts(
        states, labels, np.array(sites, dtype=np.int64), q)
    table = {}
    for code in np.nonzero(totals)[0]:
        rem, pattern = int(code), []
        for _ in sites:
            pattern.append(values[rem % q])
            rem //= q
        pattern.reverse()
        # plurality; exact ties break to +1
        table[tuple(int(v) for v in pattern)] = 1 if 2 * ups[code] >= totals[code] else -1
    complete = len(table) == cells
    hyp = JuntaHypothesis(sites, table, q, complete=complete)
    return JuntaResult(hyp, sites, int(witnesses), len(table))


def save_junta(hyp: JuntaHypothesis, path) -> None:
    """Plain-text dump: header line with sites, then assignment,label rows."""
    with open(path, "w", encoding="ascii") as f:
        f.write("sites," + " ".join(str(i) for i in hyp.sites) + "\n")
        f.write(f"alphabet,{hyp.alphabet_size}\n")
        f.write(f"default,{hyp.default_label}\n")
        f.write(f"complete,{int(hyp.complete)}\n")
        f.write("assignment,label\n")
        for key in sorted(hyp.table):
            f.write(" ".join(str(v) for v in key) + f",{hyp.table[key]}\n")


def load_junta(path) -> JuntaHypothesis:
    with open(path, "r", encoding="ascii") as f:
        sites_line = f.readline().strip().split(",", 1)
        sites = tuple(int(v) for v in sites_line[1].split()) if sites_line[1] else ()
        q = int(f.readline().strip().split(",")[1])
        default = int(f.readline().strip().split(",")[1])
        complete = bool(int(f.readline().strip().split(",")[1]))
        header = f.readline().strip()
        if header != "assignment,label":
            raise ValueError(f"unexpected junta table header {header!r}")
        table = {}
        for line in f:
            key, label = line.strip().split(",")
            pattern = tuple(int(v) for v in key.split()) if key else ()
            table[pattern] = int(label)
    return JuntaHypothesis(sites, table, q, default, complete)


@dataclass(frozen=True)
class JuntaConditionsReport:
    max_subset: int
    min_positive_mass: float
    implied_c: float
    min_transition: float  # smallest positive single-site move probability
    zero_mass_assignments: int
    alphabet_size: int


def verify_junta_conditions(model, max_subset: int,
                            cap_states: int | None = None) -> JuntaConditionsReport:
    """Measure the marginal-mass and transition-probability constants exactly.

    Over every coordinate set with |S| <= max_subset, the smallest positive
    marginal mass pi(x_S = b_S) yields the implied constant c through
    mass >= 1/(c|A|)^{|S|}; the transition constant is the minimum positive
    single-site move probability, computed from closed forms rather than the
    dense matrix.
    """
    from .spectral import DEFAULT_STATE_CAP, enumerate_support, stationary_exact

    support = enumerate_support(model, cap_states or DEFAULT_STATE_CAP)
    pi = stationary_exact(model, support)
    n = model.n
    q = model.alphabet_size
    X = support.configs
    digits = (X.astype(np.int64) + 1) // 2 if q == 2 else X.astype(np.int64)
    if not (1 <= max_subset <= n):
        raise ValueError(f"max_subset must lie in [1, {n}]")
    min_mass = 1.0
    implied_c = 0.0
    zero_count = 0
    for r in range(1, max_subset + 1):
        for S in combinations(range(n), r):
            codes = np.zeros(support.size, dtype=np.int64)
            for i in S:
                codes = codes * q + digits[:, i]
            mass = np.bincount(codes, weights=pi, minlength=q**r)
            positive = mass[mass > 0]
            zero_count += int(np.sum(mass == 0))
            worst = float(positive.min())
            min_mass = min(min_mass, worst)
            implied_c = max(implied_c, (1.0 / worst) ** (1.0 / r) / q)
    if isinstance(model, IsingModel):
        W = np.zeros((n, n))
        for (i, j), b in zip(model.graph.edges, model.edge_betas):
            W[i, j] = b
            W[j, i] = b
        fields = X.astype(np.float64) @ W + model.external_field
        p_flip = 1.0 / (1.0 + np.exp(2.0 * X * fields))
        min_transition = float(p_flip.min()) / (2.0 * n)
    elif model.kind == "coloring":
        from .spectral import _coloring_allowed_counts

        allowed = _coloring_allowed_counts(model, support)
        movable = allowed[allowed >= 2]
        min_transition = (
            1.0 / (2.0 * n * float(movable.max())) if movable.size else math.inf
        )
    else:
        min_transition = 1.0 / (2.0 * n)
    return JuntaConditionsReport(max_subset, min_mass, implied_c, min_transition,
                                 zero_count, q)


def thm4_alpha(report: JuntaConditionsReport, k: int) -> float:
    """Per-transition witness probability beta / (c|A|)^k."""
    return report.min_transition / (report.implied_c * report.alphabet_size) ** k


def thm4_walk_length(tau: float, alpha: float, k: int, delta: float) -> int:
    """ceil(2 tau ln(1/alpha) ln(k/delta) / alpha), natural logs."""
    if not (0 < alpha < 1):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not (0 < delta < 1) or k < 1 or tau <= 0:
        raise ValueError("need tau > 0, k >= 1, delta in (0, 1)")
    return math.ceil(2.0 * tau * math.log(1.0 / alpha) * math.log(k / delta) / alpha)


# ---------------------------------------------------------------------------
# noise sensitivity, stability, tail mass, correlation decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseReport:
    t: float
    value: float
    method: str  # "exact" | "sampled"
    pairs: int | None = None
    stderr: float | None = None


def noise_sensitivity_exact(spec: Spectrum, f_values: np.ndarray, t: float) -> NoiseReport:
    """NS_t(f) = 1/2 - 1/2 sum_l lambda_l^t fhat_l^2, real t allowed.

    t = 0 returns exactly 0 (Parseval); lambda = 0 contributes nothing for
    t > 0.
    """
    f = _require_pm1(f_values, "f").astype(np.float64)
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return NoiseReport(0.0, 0.0, "exact")
    fh2 = fourier_coefficients(f, spec) ** 2
    stab = float(np.power(spec.eigenvalues, t) @ fh2)
    ns = min(1.0, max(0.0, 0.5 - 0.5 * stab))
    return NoiseReport(float(t), ns, "exact")


def noise_sensitivity_sampled(model, f, t: int, pairs: int, rng: RngStream,
                              spec: Spectrum | None = None,
                              burn_in: int | None = None) -> NoiseReport:
    """Disagreement frequency over `pairs` draws of (x, t-step successor).

    x is drawn from exact pi by inverse CDF when a spectrum (enumerated
    support) is supplied, otherwise from a burned-in chain.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    oracle = one_step_oracle(model)
    if t == 0:
        return NoiseReport(0.0, 0.0, "sampled", pairs, 0.0)
    x_stream, walk_stream = rng.derive(0), rng.derive(1)
    if spec is not None:
        cdf = np.cumsum(spec.pi)
        u = x_stream.floats(pairs)
        starts = spec.support.configs[np.searchsorted(cdf, u)]
    else:
        from .chain import sample_stationary_iid

        starts = sample_stationary_iid(oracle, pairs, x_stream, burn_in)
    seeds = derive_seeds_array(walk_stream.seed, np.arange(pairs))
    ends = oracle.endpoints(starts, t, seeds)
    fx = _require_pm1(np.asarray(f(starts)), "f(x)")
    fy = _require_pm1(np.asarray(f(ends)), "f(y)")
    p_hat = float(np.mean(fx != fy))
    se = math.sqrt(p_hat * (1.0 - p_hat) / pairs)
    return NoiseReport(float(t), p_hat, "sampled", pairs, se)


@dataclass(frozen=True)
class TailReport:
    rho: float
    t: float
    ell_star: int  # count of eigenvalues above rho
    tail: float  # spectral mass of f beyond ell_star
    bound: float
    holds: bool


def tail_mass_check(spec: Spectrum, f_values: np.ndarray, rho: float,
                    slack: float = 1e-12) -> TailReport:
    """Tail mass of a boolean function against its smoothing bound.

    With t = -1/ln(rho) (used as a real exponent) every eigenvalue at or
    below rho satisfies lambda^t <= 1/e, so

        sum_{lambda_l <= rho} fhat_l^2  <=  e/(e-1) * (1 - <f, P^t f>_pi),

    and the right side is the returned bound. The inequality is exact up to
    rounding; `holds` applies the given slack.
    """
    if not (0.0 < rho < 1.0):
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    f = _require_pm1(f_values, "f").astype(np.float64)
    fh2 = fourier_coefficients(f, spec) ** 2
    ell_star = int(np.sum(spec.eigenvalues > rho))
    tail = float(fh2[ell_star:].sum())
    t = -1.0 / math.log(rho)
    stab = float(np.power(spec.eigenvalues, t) @ fh2)
    bound = math.e / (math.e - 1.0) * (1.0 - stab)
    return TailReport(rho, t, ell_star, tail, bound, tail <= bound + slack)


def jensen_slack(spec: Spectrum, f_values: np.ndarray, t: float, a: int) -> float:
    """(1 - 2 NS_{a t}) - (1 - 2 NS_t)^a; nonnegative for integer a >= 1."""
    if a < 1:
        raise ValueError(f"a must be a positive integer, got {a}")
    ns_t = noise_sensitivity_exact(spec, f_values, t).value
    ns_at = noise_sensitivity_exact(spec, f_values, a * t).value
    return (1.0 - 2.0 * ns_at) - (1.0 - 2.0 * ns_t) ** a


@dataclass(frozen=True, eq=False)
class StabilityCurve:
    ts: tuple
    ns: tuple
    stability: tuple  # 1 - 2 NS_t per t
    fitted_exponent: float  # least-squares slope of ln(1 - 2 NS_t) on t/n
    n: int
    method: str


def stability_curve(model, f, ts, spec: Spectrum | None = None,
                    pairs: int = 0, rng: RngStream | None = None) -> StabilityCurve:
    """NS along a time grid, exact when a spectrum is given, else sampled.

    The fitted exponent is the least-squares slope of ln(1 - 2 NS_t)
    against t/n over the grid points with positive stability.
    """
    ts = tuple(sorted(set(float(t) for t in ts)))
    if spec is not None:
        fv = np.asarray(f(spec.support.configs))
        ns = [noise_sensitivity_exact(spec, fv, t).value for t in ts]
        method = "exact"
    else:
        if rng is None or pairs < 1:
            raise ValueError("sampled curve needs an rng and a positive pair count")
        ns = [
            noise_sensitivity_sampled(model, f, int(t), pairs, rng.derive(i)).value
            for i, t in enumerate(ts)
        ]
        method = "sampled"
    stab = [1.0 - 2.0 * v for v in ns]
    xs = [t / model.n for t, s in zip(ts, stab) if s > 0]
    ys = [math.log(s) for s in stab if s > 0]
    if len(xs) >= 2:
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = math.nan
    return StabilityCurve(ts, tuple(ns), tuple(stab), slope, model.n, method)


@dataclass(frozen=True)
class CorrelationDecay:
    distances: tuple  # d = 1, 2, ... present in the graph
    max_abs_correlation: tuple
    strictly_decreasing: bool


def correlation_decay_check(model: IsingModel, spec: Spectrum | None = None) -> CorrelationDecay:
    """Exact centered pair correlations grouped by graph distance.

    max_d |E[x_i x_j] - E[x_i] E[x_j]| for each distance d >= 1, with a flag
    for strict decrease along consecutive distances.
    """
    from collections import deque

    from .spectral import enumerate_support, stationary_exact

    if spec is None:
        support = enumerate_support(model)
        pi = stationary_exact(model, support)
    else:
        support, pi = spec.support, spec.pi
    X = support.configs.astype(np.float64)
    means = pi @ X
    second = X.T @ (pi[:, None] * X)
    cov = second - np.outer(means, means)
    n = model.n
    dist = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in model.graph.neighbors(u):
                if dist[src, v] < 0:
                    dist[src, v] = dist[src, u] + 1
                    queue.append(v)
    buckets = {}
    for i in range(n):
        for j in range(i + 1, n):
            d = int(dist[i, j])
            if d >= 1:
                buckets.setdefault(d, 0.0)
                buckets[d] = max(buckets[d], abs(float(cov[i, j])))
    ds = tuple(sorted(buckets))
    vals = tuple(buckets[d] for d in ds)
    strict = all(vals[i + 1] < vals[i] for i in range(len(vals) - 1))
    return CorrelationDecay(ds, vals, strict)
