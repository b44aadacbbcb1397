"""MCMC-estimated smoothed features.

The feature for basis function g at horizon t and example x is the
Monte Carlo average of g over T independent t-step walks started at x:

    phi_{t,m}(x) = (1/T) sum_j g_m(X_t^{(j)}),   X_0^{(j)} = x.

Simulated endpoints are shared across the whole family: one batch of T
walks per (example, t) cell feeds every g_m, with walk j seeded by the
derivation chain master -> example index -> t -> j. Cells are therefore
reproducible in isolation and independent across (example, t, j).
t = 0 columns are exact evaluations, no sampling.

Column order is t ascending then family index ascending; descriptors are
"t:m" strings and column count is capped (default 20000).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisFamily
from .chain import ChainOracle, one_step_oracle
from .errors import SizeCapExceeded
from .models import check_configuration, is_valid_coloring, model_hash
from .rng import RngStream, derive_seeds_array

DEFAULT_COLUMN_CAP = 20_000


def hoeffding_T(eps2: float, delta: float, universe: int) -> int:
    """Walks per cell so each estimate is within eps2 of its mean with
    probability 1 - delta simultaneously over `universe` cells.

    ceil(ln(universe / delta) / eps2^2) for [-1, 1]-bounded functions.
    """
    if not (0 < eps2 <= 2):
        raise ValueError(f"eps2 must lie in (0, 2], got {eps2}")
    if not (0 < delta < 1):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if universe < 1:
        raise ValueError(f"universe must be positive, got {universe}")
    return math.ceil(math.log(universe / delta) / (eps2 * eps2))


def default_times(tau_max: int) -> tuple:
    return tuple(range(tau_max + 1))


def geometric_times(tau_max: int) -> tuple:
    """0, 1, 2, 4, 8, ... capped and closed with tau_max itself."""
    if tau_max < 0:
        raise ValueError("tau_max must be nonnegative")
    ts = {0, tau_max}
    t = 1
    while t < tau_max:
        ts.add(t)
        t *= 2
    return tuple(sorted(ts))


@dataclass(frozen=True)
class FeatureConfig:
    tau_max: int
    T: int
    times: tuple = ()
    column_cap: int = DEFAULT_COLUMN_CAP

    def __post_init__(self):
        if self.tau_max < 0:
            raise ValueError("tau_max must be nonnegative")
        if self.T < 1:
            raise ValueError("T must be positive")
        times = self.times or default_times(self.tau_max)
        times = tuple(sorted(set(int(t) for t in times)))
        if times[0] < 0 or times[-1] > self.tau_max:
            raise ValueError(f"times must lie in [0, {self.tau_max}]")
        object.__setattr__(self, "times", times)


def feature_descriptors(times, M: int) -> tuple:
    return tuple(f"{t}:{m}" for t in times for m in range(M))


def _cell_endpoints(oracle: ChainOracle, x: np.ndarray, t: int, T: int,
                    example_stream: RngStream) -> np.ndarray:
    seeds = derive_seeds_array(example_stream.derive(t).seed, np.arange(T))
    starts = np.tile(x, (T, 1))
    return oracle.endpoints(starts, t, seeds)


def estimate_phi(oracle: ChainOracle, g, x: np.ndarray, t: int, T: int,
                 example_stream: RngStream) -> float:
    """One feature cell; exact at t = 0, otherwise the T-walk average."""
    x = np.asarray(x, dtype=np.int8)
    if t == 0:
        return float(np.asarray(g(x[None, :]))[0])
    ends = _cell_endpoints(oracle, x, t, T, example_stream)
    return float(np.mean(np.asarray(g(ends), dtype=np.float64)))


@dataclass(frozen=True, eq=False)
class FeatureSet:
    matrix: np.ndarray  # (num_examples, len(times) * M)
    descriptors: tuple  # "t:m" per column
    times: tuple
    family_size: int
    config: FeatureConfig
    master_seed: int
    model_digest: str

    @property
    def num_examples(self) -> int:
        return self.matrix.shape[0]

    def column(self, t: int, m: int) -> np.ndarray:
        ti = self.times.index(t)
        return self.matrix[:, ti * self.family_size + m]


def _example_row(oracle, family, x, config, stream) -> np.ndarray:
    M = len(family)
    row = np.empty(len(config.times) * M)
    for ti, t in enumerate(config.times):
        if t == 0:
            vals = family.evaluate_matrix(x[None, :])[0]
        else:
            ends = _cell_endpoints(oracle, x, t, config.T, stream)
            vals = family.evaluate_matrix(ends).mean(axis=0)
        row[ti * M : (ti + 1) * M] = vals
    return row


def build_feature_set(model, family: BasisFamily, examples: np.ndarray,
                      config: FeatureConfig, master_seed: int,
                      workers: int = 1) -> FeatureSet:
    """Feature matrix over a batch of example configurations.

    Deterministic in (model, family, examples, config, master_seed); the
    worker count only changes scheduling, never values.
    """
    oracle = one_step_oracle(model)
    X = np.atleast_2d(np.asarray(examples, dtype=np.int8))
    if X.shape[1] != model.n:
        raise ValueError(f"examples must have {model.n} columns, got {X.shape[1]}")
    for r, row in enumerate(X):
        check_configuration(model, row)
        if model.kind == "coloring" and not is_valid_coloring(model, row):
            raise ValueError(f"example {r} is not a proper coloring")
    M = len(family)
    ncols = len(config.times) * M
    if ncols > config.column_cap:
        raise SizeCapExceeded(
            f"feature matrix needs {ncols} columns, cap is {config.column_cap}"
        )
    master = RngStream(master_seed)
    streams = [master.derive(i) for i in range(X.shape[0])]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda args: _example_row(oracle, family, *args),
                [(X[i], config, streams[i]) for i in range(X.shape[0])],
            ))
    else:
        rows = [_example_row(oracle, family, X[i], config, streams[i])
                for i in range(X.shape[0])]
    matrix = np.vstack(rows) if rows else np.empty((0, ncols))
    return FeatureSet(matrix, feature_descriptors(config.times, M),
                      config.times, M, config, master_seed, model_hash(model))


def save_feature_set(fs: FeatureSet, path) -> None:
    """CSV of the matrix plus a .manifest.json sidecar with the recipe."""
    with open(path, "w", encoding="ascii") as f:
        f.write("example," + ",".join(fs.descriptors) + "\n")
        for i, row in enumerate(fs.matrix):
            f.write(str(i) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")
    manifest = {
        "master_seed": fs.master_seed,
        "model_digest": fs.model_digest,
        "tau_max": fs.config.tau_max,
        "T": fs.config.T,
        "times": list(fs.times),
        "family_size": fs.family_size,
        "columns": len(fs.descriptors),
        "examples": fs.num_examples,
    }
    with open(f"{path}.manifest.json", "w", encoding="ascii") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_feature_set(path) -> tuple:
    """(matrix, descriptors, manifest dict or None)."""
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip().split(",")
        if header[0] != "example":
            raise ValueError("feature CSV must start with an 'example' column")
        descriptors = tuple(header[1:])
        rows = []
        for line in f:
            parts = line.strip().split(",")
            if len(parts) != len(descriptors) + 1:
                raise ValueError("feature CSV row width mismatch")
            rows.append([float(v) for v in parts[1:]])
    matrix = np.asarray(rows) if rows else np.empty((0, len(descriptors)))
    manifest = None
    try:
        with open(f"{path}.manifest.json", "r", encoding="ascii") as f:
            manifest = json.load(f)
    except OSError:
        pass
    return matrix, descriptors, manifest
