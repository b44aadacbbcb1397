"""Exact desk-scale spectral analysis of the lazy single-site chains.

The transition matrices built here are entry-exact images of the dynamics
the samplers implement (same flip probabilities, same laziness), so sampler
fidelity can be checked against matrix rows and powers. Eigendecomposition
goes through the similarity transform S = D^{1/2} P D^{-1/2} with
D = diag(pi): S is symmetric exactly when the chain is reversible, and the
right eigenvectors returned are orthonormal in the pi-weighted inner
product. Laziness makes the spectrum nonnegative.

Conventions fixed here and relied on everywhere else:

* eigenvalues sorted descending, ties broken by ascending pre-sort index;
* each eigenvector's largest-magnitude coordinate is made positive;
* eigenvalues in (-1e-10, 0) are clamped to zero, anything more negative or
  a detailed-balance violation beyond 1e-8 raises NumericalValidationError;
* support enumeration is lexicographic over value sequences (spins with
  -1 < +1, colors ascending), capped at 2^21 raw states by default.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NumericalValidationError, SizeCapExceeded
from .models import (
    ColoringModel,
    CubeWalkModel,
    IsingModel,
    check_configuration,
    model_hash,
)

DEFAULT_STATE_CAP = 2**21
DEFAULT_MATRIX_CAP = 4096
EIGENVALUE_CLAMP = 1e-10
DB_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class SupportIndex:
    """Enumerated support with O(log S) configuration lookup."""

    configs: np.ndarray  # (S, n) int8, lexicographic
    alphabet_size: int
    codes: np.ndarray  # (S,) int64, ascending

    @property
    def size(self) -> int:
        return self.configs.shape[0]

    @property
    def n(self) -> int:
        return self.configs.shape[1]

    def encode(self, X: np.ndarray) -> np.ndarray:
        # spins arrive as +-1 (digit (s+1)/2), colors as 0..q-1
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        digits = (X + 1) // 2 if self.alphabet_size == 2 else X
        n = self.n
        weights = self.alphabet_size ** np.arange(n - 1, -1, -1, dtype=np.int64)
        return digits @ weights

    def index_of_many(self, X: np.ndarray) -> np.ndarray:
        codes = self.encode(X)
        pos = np.searchsorted(self.codes, codes)
        if np.any(pos >= self.codes.size) or np.any(self.codes[np.minimum(pos, self.codes.size - 1)] != codes):
            raise ValueError("configuration outside the enumerated support")
        return pos

    def index_of(self, x) -> int:
        return int(self.index_of_many(np.asarray(x)[None, :])[0])


def enumerate_support(model, cap_states: int = DEFAULT_STATE_CAP) -> SupportIndex:
    """All support configurations in lexicographic order.

    Raises SizeCapExceeded when the raw alphabet^n product is above the cap
    (the cap guards the enumeration itself, so it applies before any
    coloring-validity filtering).
    """
    n = model.n
    base = model.alphabet_size
    raw = base**n
    if raw > cap_states:
        raise SizeCapExceeded(
            f"support enumeration needs {raw} raw states, cap is {cap_states}"
        )
    codes = np.arange(raw, dtype=np.int64)
    digits = np.empty((raw, n), dtype=np.int8)
    rem = codes.copy()
    for pos in range(n - 1, -1, -1):
        digits[:, pos] = rem % base
        rem //= base
    if isinstance(model, (IsingModel, CubeWalkModel)):
        configs = (2 * digits - 1).astype(np.int8)
        return SupportIndex(configs, 2, codes)
    keep = np.ones(raw, dtype=bool)
    for i, j in model.graph.edges:
        keep &= digits[:, i] != digits[:, j]
    if not np.any(keep):
        raise ValueError(f"no proper {model.q}-coloring exists for this graph")
    return SupportIndex(digits[keep].astype(np.int8), base, codes[keep])


def stationary_exact(model, support: SupportIndex) -> np.ndarray:
    """Exact stationary law over the enumerated support."""
    if isinstance(model, IsingModel):
        s = support.configs.astype(np.float64)
        logw = model.external_field * s.sum(axis=1)
        for (i, j), b in zip(model.graph.edges, model.edge_betas):
            logw += b * s[:, i] * s[:, j]
        logw -= logw.max()
        w = np.exp(logw)
        return w / w.sum()
    pi = np.full(support.size, 1.0 / support.size)
    return pi


def _coloring_allowed_counts(model: ColoringModel, support: SupportIndex) -> np.ndarray:
    """(S, n) count of colors absent from each site's neighborhood."""
    X = support.configs
    S = support.size
    counts = np.empty((S, model.n), dtype=np.int64)
    for i in range(model.n):
        nbrs = model.graph.neighbors(i)
        used = np.zeros((S, model.q), dtype=bool)
        rows = np.arange(S)
        for j in nbrs:
            used[rows, X[:, j]] = True
        counts[:, i] = model.q - used.sum(axis=1)
    return counts


def exact_transition_matrix(model, support: SupportIndex,
                            cap_states: int = DEFAULT_MATRIX_CAP) -> np.ndarray:
    """Dense one-step matrix of the lazy dynamics, entry-exact.

    Row x holds the exact probabilities the samplers realize: single-site
    moves at 1/(2n) * (move probability), everything else on the diagonal.
    """
    S = support.size
    if S > cap_states:
        raise SizeCapExceeded(f"dense transition matrix needs {S} states, cap is {cap_states}")
    n = model.n
    X = support.configs
    P = np.zeros((S, S))
    rows = np.arange(S)
    if isinstance(model, (IsingModel, CubeWalkModel)):
        if isinstance(model, IsingModel):
            W = np.zeros((n, n))
            for (i, j), b in zip(model.graph.edges, model.edge_betas):
                W[i, j] = b
                W[j, i] = b
            fields = X.astype(np.float64) @ W + model.external_field
        for i in range(n):
            Xf = X.copy()
            Xf[:, i] = -Xf[:, i]
            target = support.index_of_many(Xf)
            if isinstance(model, IsingModel):
                p_flip = 1.0 / (1.0 + np.exp(2.0 * X[:, i] * fields[:, i]))
            else:
                p_flip = np.ones(S)
            P[rows, target] += p_flip / (2.0 * n)
    else:
        allowed = _coloring_allowed_counts(model, support)
        for i in range(n):
            nbrs = model.graph.neighbors(i)
            for c in range(model.q):
                ok = X[:, i] != c
                for j in nbrs:
                    ok &= X[:, j] != c
                if not np.any(ok):
                    continue
                Xc = X[ok].copy()
                Xc[:, i] = c
                target = support.index_of_many(Xc)
                P[rows[ok], target] += 1.0 / (2.0 * n * allowed[ok, i])
    P[rows, rows] += 1.0 - P.sum(axis=1)
    sums = P.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > 1e-12:
        raise NumericalValidationError("transition rows failed to normalize")
    return P


def detailed_balance_violation(P: np.ndarray, pi: np.ndarray) -> float:
    """Max relative asymmetry of the flux matrix diag(pi) P."""
    F = pi[:, None] * P
    scale = F + F.T
    diff = np.abs(F - F.T)
    mask = scale > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(diff[mask] / scale[mask]))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigendecomposition of a reversible lazy chain over its support."""

    support: SupportIndex
    pi: np.ndarray
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # (S, S), pi-orthonormal right eigenvectors as columns

    @property
    def size(self) -> int:
        return self.pi.size


def eigendecompose(P: np.ndarray, pi: np.ndarray, support: SupportIndex) -> Spectrum:
    """Full symmetric eigendecomposition with the package's conventions."""
    P = np.asarray(P, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    S = pi.size
    if P.shape != (S, S):
        raise ValueError(f"P must be ({S},{S}), got {P.shape}")
    if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-9:
        raise ValueError("pi must be strictly positive and sum to 1")
    viol = detailed_balance_violation(P, pi)
    if viol > DB_TOLERANCE:
        raise NumericalValidationError(
            f"detailed balance violated: relative asymmetry {viol:.3e} > {DB_TOLERANCE:.0e}"
        )
    if np.min(np.diag(P)) < 0.5 - 1e-12:
        raise NumericalValidationError("chain is not lazy: a diagonal entry is below 1/2")
    root = np.sqrt(pi)
    sym = (root[:, None] / root[None, :]) * P
    sym = 0.5 * (sym + sym.T)
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(-vals, kind="stable")  # ties keep ascending input index
    vals = vals[order]
    vecs = vecs[:, order]
    tiny = (vals > -EIGENVALUE_CLAMP) & (vals < 0)
    vals[tiny] = 0.0
    if np.any(vals < 0):
        raise NumericalValidationError(
            f"negative eigenvalue {vals.min():.3e} from a lazy chain"
        )
    nu = vecs / root[:, None]
    # sign fix: largest-magnitude coordinate positive, first index on ties
    lead = np.argmax(np.abs(nu), axis=0)
    signs = np.sign(nu[lead, np.arange(S)])
    signs[signs == 0] = 1.0
    nu = nu * signs[None, :]
    return Spectrum(support, pi, vals, nu)


def spectrum_of(model, cap_states: int = DEFAULT_MATRIX_CAP,
                cache_dir=None) -> Spectrum:
    """Enumerate, build the exact matrix, and decompose (optionally cached)."""
    if cache_dir is not None:
        cached = cache_lookup(model, cache_dir)
        if cached is not None:
            return cached
    support = enumerate_support(model, max(cap_states, DEFAULT_STATE_CAP))
    pi = stationary_exact(model, support)
    P = exact_transition_matrix(model, support, cap_states)
    spec = eigendecompose(P, pi, support)
    if cache_dir is not None:
        cache_store(model, spec, cache_dir)
    return spec


def transition_from_spectrum(spec: Spectrum) -> np.ndarray:
    """P = sum_l lambda_l nu_l (nu_l . pi)^T; the round-trip identity."""
    V = spec.eigenvectors
    return (V * spec.eigenvalues[None, :]) @ (V.T * spec.pi[None, :])


def inner_product_pi(f: np.ndarray, g: np.ndarray, pi: np.ndarray) -> float:
    return float(np.sum(pi * np.asarray(f, dtype=np.float64) * np.asarray(g, dtype=np.float64)))


def fourier_coefficients(f: np.ndarray, spec: Spectrum) -> np.ndarray:
    """f_hat[l] = <f, nu_l>_pi. Parseval: sum of squares = <f, f>_pi."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (spec.size,):
        raise ValueError(f"f must be a vector over the {spec.size}-state support")
    return spec.eigenvectors.T @ (spec.pi * f)


def exact_Pt_g(P: np.ndarray, g: np.ndarray, t: int) -> np.ndarray:
    """t-fold application of P to g (exact smoothing oracle)."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    v = np.asarray(g, dtype=np.float64).copy()
    for _ in range(t):
        v = P @ v
    return v


# ---------------------------------------------------------------------------
# discrete-spectrum detection and basis quality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockStructure:
    """Greedy cut decomposition of a descending spectrum.

    Cuts sit after 1-based index i whenever lambda_{i+1}/lambda_i <= gamma;
    cuts whose eigenvalue falls below gamma^c are dropped, and the blocks are
    the runs between the surviving cuts. `discrete` is False (with a reason)
    rather than an exception when the structure fails the (N, k, gamma, c)
    definition, so callers can report what was achieved.
    """

    cuts: tuple
    blocks: tuple  # ((start, end), ...) 1-based inclusive
    discrete: bool
    reason: str
    n_max: int
    k: int
    gamma_achieved: float
    c_achieved: float
    requested: tuple

    def block_slices(self):
        """Python slices into the 0-based eigenvalue arrays."""
        return [slice(a - 1, b) for a, b in self.blocks]


def detect_blocks(eigenvalues, gamma: float, N: int, c: float) -> BlockStructure:
    lam = np.asarray(getattr(eigenvalues, "eigenvalues", eigenvalues), dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("eigenvalues must be a nonempty vector")
    if np.any(np.diff(lam) > 1e-12):
        raise ValueError("eigenvalues must be sorted descending")
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must lie in (0,1), got {gamma}")
    if N < 1 or c <= 0:
        raise ValueError("need N >= 1 and c > 0")
    floor = gamma**c
    cuts = []
    ratios = []
    for j in range(lam.size - 1):
        ratio = 0.0 if lam[j + 1] <= 0 or lam[j] <= 0 else lam[j + 1] / lam[j]
        if ratio <= gamma:
            if lam[j] < floor:
                break  # every later cut eigenvalue is smaller still
            cuts.append(j + 1)  # 1-based index of the last element before the gap
            ratios.append(ratio)
    if not cuts:
        blocks = ((1, lam.size),)
        n_max = lam.size
        return BlockStructure(
            cuts=(), blocks=blocks, discrete=False,
            reason="no qualifying cut", n_max=n_max, k=0,
            gamma_achieved=0.0, c_achieved=math.nan, requested=(gamma, N, c),
        )
    blocks = []
    prev = 0
    for cut in cuts:
        blocks.append((prev + 1, cut))
        prev = cut
    sizes = [b - a + 1 for a, b in blocks]
    n_max = max(sizes)
    discrete = n_max <= N
    reason = "" if discrete else (
        f"block {int(np.argmax(sizes)) + 1} has {n_max} eigenvalues, limit is {N}"
    )
    c_achieved = math.log(lam[cuts[-1] - 1]) / math.log(gamma) if lam[cuts[-1] - 1] > 0 else math.inf
    return BlockStructure(
        cuts=tuple(cuts), blocks=tuple(blocks), discrete=discrete, reason=reason,
        n_max=n_max, k=len(cuts), gamma_achieved=max(ratios),
        c_achieved=c_achieved, requested=(gamma, N, c),
    )


def _smallest_singular_value(A: np.ndarray) -> float:
    """Via eigenvalues of the smaller Gram matrix of A."""
    if A.ndim == 1:
        A = A[None, :]
    gram = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    vals = np.linalg.eigvalsh(gram)
    return math.sqrt(max(0.0, float(vals[0])))


@dataclass(frozen=True, eq=False)
class BlockSelection:
    block: tuple  # (start, end) 1-based
    indices: tuple  # chosen basis-function indices
    smin: float
    alpha: float
    coefficient_matrix: np.ndarray  # (N_j, N_j) rows = chosen g, cols = block nu


@dataclass(frozen=True, eq=False)
class UsefulBasisReport:
    alpha: float
    per_block: tuple


def useful_basis_alpha(gvals: np.ndarray, spec: Spectrum, blocks: BlockStructure,
                       exhaustive_limit: int = 100_000) -> UsefulBasisReport:
    """Best achievable usefulness constant for a candidate family.

    gvals is the (S, M) matrix of family values over the support; every
    function must satisfy ||g||_inf <= 1. Per block of size N_j the selection
    picks N_j functions maximizing the smallest singular value of
    A[m, l] = <g_m, nu_l>_pi: exhaustively when C(M, N_j) is small, by greedy
    forward selection otherwise. alpha is the worst block's 1/sigma_min.
    """
    gvals = np.asarray(gvals, dtype=np.float64)
    if gvals.ndim != 2 or gvals.shape[0] != spec.size:
        raise ValueError(f"gvals must be ({spec.size}, M)")
    if np.max(np.abs(gvals)) > 1.0 + 1e-12:
        raise ValueError("family functions must be bounded by 1 in sup norm")
    M = gvals.shape[1]
    A_full = gvals.T @ (spec.pi[:, None] * spec.eigenvectors)  # (M, S)
    selections = []
    alpha = 0.0
    for (a, b) in blocks.blocks:
        cols = A_full[:, a - 1 : b]  # (M, N_j)
        nj = b - a + 1
        if nj > M:
            raise ValueError(f"block ({a},{b}) needs {nj} functions, family has {M}")
        if math.comb(M, nj) <= exhaustive_limit:
            best, best_s = None, -1.0
            for combo in combinations(range(M), nj):
                s = _smallest_singular_value(cols[list(combo), :])
                if s > best_s:
                    best, best_s = combo, s
            chosen = list(best)
            smin = best_s
        else:
            chosen = []
            remaining = list(range(M))
            smin = 0.0
            for _ in range(nj):
                best, best_s = None, -1.0
                for m in remaining:
                    s = _smallest_singular_value(cols[chosen + [m], :])
                    if s > best_s:
                        best, best_s = m, s
                chosen.append(best)
                remaining.remove(best)
                smin = best_s
        a_j = math.inf if smin == 0.0 else 1.0 / smin
        alpha = max(alpha, a_j)
        selections.append(BlockSelection((a, b), tuple(chosen), smin, a_j,
                                         cols[chosen, :].copy()))
    return UsefulBasisReport(alpha, tuple(selections))


# ---------------------------------------------------------------------------
# eigenvector reconstruction from smoothed dictionary functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenReconstruction:
    ell: int  # 1-based eigenvalue rank
    eigenvalue: float
    beta: np.ndarray  # (tau_max + 1, M) coefficients on P^t g_m
    residual: float  # pi-norm of nu - dictionary fit
    l1: float  # sum |beta|


def reconstruct_eigenvectors(spec: Spectrum, P: np.ndarray, gvals: np.ndarray,
                             ells, tau_max: int, damping: float = 1e-10,
                             dict_cap: int = 6000) -> list:
    """pi-weighted least squares of each nu_ell on the {P^t g_m} dictionary.

    Solved through the damped normal equations (Gram + damping * I); the
    Gram factorization is shared across the requested eigenvectors.
    """
    gvals = np.asarray(gvals, dtype=np.float64)
    if gvals.ndim != 2 or gvals.shape[0] != spec.size:
        raise ValueError(f"gvals must be ({spec.size}, M)")
    if tau_max < 0:
        raise ValueError("tau_max must be nonnegative")
    M = gvals.shape[1]
    ncols = (tau_max + 1) * M
    if ncols > dict_cap:
        raise SizeCapExceeded(f"dictionary needs {ncols} columns, cap is {dict_cap}")
    from scipy.linalg import cho_factor, cho_solve

    root = np.sqrt(spec.pi)
    cols = np.empty((spec.size, ncols))
    cur = gvals.copy()
    for t in range(tau_max + 1):
        if t > 0:
            cur = P @ cur
        cols[:, t * M : (t + 1) * M] = cur
    B = root[:, None] * cols
    gram = B.T @ B
    gram[np.diag_indices_from(gram)] += damping
    factor = cho_factor(gram, lower=True)
    out = []
    for ell in np.atleast_1d(ells):
        ell = int(ell)
        if not (1 <= ell <= spec.size):
            raise ValueError(f"eigenvector rank must lie in [1, {spec.size}], got {ell}")
        nu = spec.eigenvectors[:, ell - 1]
        target = root * nu
        beta = cho_solve(factor, B.T @ target)
        residual = float(np.linalg.norm(B @ beta - target))
        out.append(EigenReconstruction(
            ell, float(spec.eigenvalues[ell - 1]),
            beta.reshape(tau_max + 1, M).copy(), residual, float(np.abs(beta).sum()),
        ))
    return out


def reconstruct_eigenvector(spec: Spectrum, P: np.ndarray, gvals: np.ndarray,
                            ell: int, tau_max: int, damping: float = 1e-10,
                            dict_cap: int = 6000) -> EigenReconstruction:
    return reconstruct_eigenvectors(spec, P, gvals, [ell], tau_max, damping, dict_cap)[0]


# ---------------------------------------------------------------------------
# reconstruction-theorem budgets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReconstructionBudget:
    weight_budget: float  # bound on sum |beta|
    tau_max: int  # largest smoothing power needed


def theorem1_bounds(N: int, k: int, gamma: float, c: float, alpha: float,
                    epsilon: float) -> ReconstructionBudget:
    """Coefficient and smoothing budgets for eigenvector reconstruction over
    an (N, k, gamma, c)-discrete spectrum with an alpha-useful family.

    All absolute constants are set to 1:
      weight budget = (2 alpha N k)^((1+c)^(k+1)) * epsilon^(-(1+c)^k),
      tau_max = ceil(k (1+c)^(k-1) (ln N + ln k + ln alpha + ln 1/eps) / ln 1/gamma).
    Natural logarithms throughout.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must lie in (0,1), got {gamma}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if N < 1 or k < 1 or alpha <= 0 or c <= 0:
        raise ValueError("need N >= 1, k >= 1, alpha > 0, c > 0")
    try:
        budget = (2.0 * alpha * N * k) ** ((1.0 + c) ** (k + 1)) * epsilon ** (
            -((1.0 + c) ** k)
        )
    except OverflowError:
        budget = math.inf
    log_sum = math.log(N) + math.log(k) + math.log(alpha) + math.log(1.0 / epsilon)
    tau = k * (1.0 + c) ** (k - 1) * log_sum / math.log(1.0 / gamma)
    return ReconstructionBudget(budget, max(0, math.ceil(tau)))


# ---------------------------------------------------------------------------
# spectrum cache: content-addressed binary file per model
# ---------------------------------------------------------------------------

_MAGIC = b"MRFSPEC1"


def save_spectrum(spec: Spectrum, model, path) -> None:
    h = model_hash(model).encode("ascii")
    S = spec.size
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IIQI", 1, spec.support.n, S, spec.support.alphabet_size))
        f.write(struct.pack("<I", len(h)))
        f.write(h)
        f.write(spec.pi.astype("<f8").tobytes())
        f.write(spec.eigenvalues.astype("<f8").tobytes())
        f.write(np.asfortranarray(spec.eigenvectors.astype("<f8")).tobytes(order="F"))


def load_spectrum(path, model):
    """None on any mismatch or corruption (the caller recomputes)."""
    try:
        with open(path, "rb") as f:
            if f.read(8) != _MAGIC:
                raise ValueError("bad magic")
            version, n, S, alphabet = struct.unpack("<IIQI", f.read(20))
            if version != 1:
                raise ValueError(f"unsupported cache version {version}")
            (hlen,) = struct.unpack("<I", f.read(4))
            stored = f.read(hlen).decode("ascii")
            if stored != model_hash(model):
                return None
            pi = np.frombuffer(f.read(8 * S), dtype="<f8").copy()
            lam = np.frombuffer(f.read(8 * S), dtype="<f8").copy()
            raw = f.read(8 * S * S)
            if len(raw) != 8 * S * S:
                raise ValueError("truncated eigenvector block")
            vecs = np.frombuffer(raw, dtype="<f8").reshape((S, S), order="F").copy()
    except (OSError, ValueError, struct.error) as exc:
        warnings.warn(f"ignoring unreadable spectrum cache {path}: {exc}")
        return None
    support = enumerate_support(model)
    if support.size != S or support.n != n or support.alphabet_size != alphabet:
        warnings.warn(f"spectrum cache {path} disagrees with the model; recomputing")
        return None
    return Spectrum(support, pi, lam, vecs)


def cache_path(model, cache_dir):
    import pathlib

    return pathlib.Path(cache_dir) / f"{model_hash(model)}.spec"


def cache_lookup(model, cache_dir):
    p = cache_path(model, cache_dir)
    return load_spectrum(p, model) if p.exists() else None


def cache_store(model, spec: Spectrum, cache_dir) -> None:
    import pathlib

    pathlib.Path(cache_dir).mkdir(parents=True, exist_ok=True)
    save_spectrum(spec, model, cache_path(model, cache_dir))


def eigenvalues_csv(spec: Spectrum, path) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write("rank,lambda\n")
        for r, lam in enumerate(spec.eigenvalues, start=1):
            f.write(f"{r},{lam:.17g}\n")
