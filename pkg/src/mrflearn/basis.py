"""Candidate function families used as regression dictionaries.

Three kinds, all bounded by 1 in sup norm:

* parities chi_S(x) = prod_{i in S} x_i on spin configurations;
* signed conjunctions 2 * 1{x_S = b} - 1 on spin configurations;
* centered local indicators prod_{i in S} (1{x_i = b_i} - freq_i(b_i)),
  rescaled to unit sup norm, for general finite alphabets.

Orderings are deterministic: parities by (|S|, S); conjunctions by
(|S|, S, pattern) with -1 before +1; indicators by (|S|, S, pattern) with
colors ascending. Indices into a family are stable identifiers and appear
in feature descriptors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

PARITY = "parity"
CONJUNCTION = "conjunction"
INDICATOR = "indicator"


@dataclass(frozen=True, eq=False)
class BasisFunction:
    name: str
    kind: str
    support_set: tuple
    pattern: tuple | None = None
    centers: tuple | None = None  # indicator only: freq_i(b_i) per factor
    scale: float = 1.0  # indicator only: sup-norm normalizer
    clip: bool = False  # indicator with probed scale: clamp to [-1, 1]

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Values over a batch of configurations, shape (len(X),)."""
        X = np.atleast_2d(np.asarray(X))
        m = X.shape[0]
        if self.kind == PARITY:
            if not self.support_set:
                return np.ones(m)
            return np.prod(X[:, list(self.support_set)].astype(np.float64), axis=1)
        if self.kind == CONJUNCTION:
            hit = np.ones(m, dtype=bool)
            for i, b in zip(self.support_set, self.pattern):
                hit &= X[:, i] == b
            return 2.0 * hit - 1.0
        out = np.ones(m)
        for (i, b), freq in zip(zip(self.support_set, self.pattern), self.centers):
            out *= (X[:, i] == b) - freq
        out /= self.scale
        if self.clip:
            np.clip(out, -1.0, 1.0, out=out)
        return out

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.evaluate(X)


@dataclass(frozen=True, eq=False)
class BasisFamily:
    functions: tuple
    kind: str
    n: int

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, m) -> BasisFunction:
        return self.functions[m]

    def evaluate_matrix(self, X: np.ndarray) -> np.ndarray:
        """(len(X), M) matrix of all family values."""
        X = np.atleast_2d(np.asarray(X))
        return np.column_stack([g.evaluate(X) for g in self.functions])

    def names(self) -> list:
        return [g.name for g in self.functions]


def _set_label(S) -> str:
    return ",".join(str(i) for i in S)


def parity_family(n: int, k: int) -> BasisFamily:
    """All chi_S with |S| <= k, the empty (constant one) parity first."""
    if not (0 <= k <= n):
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    fns = []
    for r in range(k + 1):
        for S in combinations(range(n), r):
            fns.append(BasisFunction(f"chi[{_set_label(S)}]", PARITY, S))
    return BasisFamily(tuple(fns), PARITY, n)


def conjunction_family(n: int, k: int) -> BasisFamily:
    """Signed conjunctions 2*1{x_S = b} - 1 over all 1 <= |S| <= k."""
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    fns = []
    for r in range(1, k + 1):
        for S in combinations(range(n), r):
            for b in product((-1, 1), repeat=r):
                label = ",".join(f"{i}={'+' if v > 0 else '-'}" for i, v in zip(S, b))
                fns.append(BasisFunction(f"conj[{label}]", CONJUNCTION, S, b))
    return BasisFamily(tuple(fns), CONJUNCTION, n)


def _marginals_from_weights(configs: np.ndarray, weights: np.ndarray,
                            alphabet_size: int) -> np.ndarray:
    """(n, alphabet) stationary marginal table from weighted configurations."""
    n = configs.shape[1]
    digits = (configs + 1) // 2 if np.any(configs < 0) else configs
    freq = np.zeros((n, alphabet_size))
    for i in range(n):
        freq[i] = np.bincount(digits[:, i], weights=weights, minlength=alphabet_size)
    return freq / weights.sum()


def local_indicator_family(model, k: int, support=None, pi=None,
                           samples: np.ndarray | None = None,
                           headroom: float = 1.1) -> BasisFamily:
    """Centered indicator products for a model over any finite alphabet.

    Marginals and the sup-norm normalizer come from the exact stationary law
    when (support, pi) are given, otherwise empirically from `samples` drawn
    from the chain; the probed scale gets a headroom factor and evaluation
    clamps to [-1, 1] since unseen configurations can exceed the probed max.
    Functions that vanish identically on the reference set are dropped.
    """
    n = model.n
    q = model.alphabet_size
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if support is not None and pi is not None:
        ref = support.configs
        weights = np.asarray(pi, dtype=np.float64)
        probed = False
    elif samples is not None:
        ref = np.atleast_2d(np.asarray(samples))
        if ref.shape[1] != n:
            raise ValueError(f"samples must have {n} columns")
        weights = np.ones(ref.shape[0])
        probed = True
    else:
        raise ValueError("give either (support, pi) or samples")
    freq = _marginals_from_weights(ref, weights, q)
    values = (-1, 1) if q == 2 else tuple(range(q))
    digit = {v: d for d, v in enumerate(values)}
    fns = []
    for r in range(1, k + 1):
        for S in combinations(range(n), r):
            for b in product(values, repeat=r):
                centers = tuple(freq[i, digit[v]] for i, v in zip(S, b))
                raw = np.ones(ref.shape[0])
                for i, v, fcenter in zip(S, b, centers):
                    raw *= (ref[:, i] == v) - fcenter
                top = float(np.max(np.abs(raw)))
                if top < 1e-12:
                    continue  # degenerate marginal freezes this factor
                scale = headroom * top if probed else top
                label = ",".join(f"{i}={v}" for i, v in zip(S, b))
                fns.append(BasisFunction(f"ind[{label}]", INDICATOR, S, b,
                                         centers=centers, scale=scale, clip=probed))
    return BasisFamily(tuple(fns), INDICATOR, n)


def family_for_model(model, k: int, **kwargs) -> BasisFamily:
    """Default dictionary: parities for spin models, indicators otherwise."""
    if model.alphabet_size == 2:
        return parity_family(model.n, k)
    return local_indicator_family(model, k, **kwargs)


def save_family_manifest(family: BasisFamily, path) -> None:
    """CSV manifest: index,name,kind,support_set,pattern."""
    with open(path, "w", encoding="ascii") as f:
        f.write("index,name,kind,support_set,pattern\n")
        for m, g in enumerate(family):
            sset = " ".join(str(i) for i in g.support_set)
            pat = "" if g.pattern is None else " ".join(str(v) for v in g.pattern)
            f.write(f"{m},{g.name},{g.kind},{sset},{pat}\n")
