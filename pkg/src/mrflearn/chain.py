"""Lazy single-site dynamics for the three model kinds.

One step of any chain: pick a site uniformly; with probability 1/2 do
nothing; otherwise move the site. Ising moves flip the spin with the
heat-bath probability exp(-H')/(exp(-H) + exp(-H')), computed from the local
field only (never a full energy evaluation). Coloring moves recolor the site
uniformly among the colors absent from its neighborhood (the current color
is always among the candidates, so validity is preserved). Cube-walk moves
flip the spin deterministically.

Draw protocol: every step consumes exactly three stream draws (site,
laziness, move), even when laziness short-circuits, so that jitted batch
kernels and the python reference stay counter-aligned. Uniform spin
initialization consumes n draws. The jitted kernels in `_kernels` replay
this protocol bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .models import (
    ColoringModel,
    CubeWalkModel,
    IsingModel,
    check_configuration,
    is_valid_coloring,
)
from .rng import RngStream, derive_seeds_array

U64 = np.uint64


def default_burn_in(n: int) -> int:
    """ceil(10 n ln(max(n, 2))): a documented heuristic, not a mixing bound.

    The constant is deliberately generous for the desk-scale chains this
    package targets; callers with slowly mixing models should pass their own
    burn-in.
    """
    return math.ceil(10.0 * n * math.log(max(n, 2)))


def random_spins(n: int, rng: RngStream) -> np.ndarray:
    """Uniform spin vector; consumes n draws (-1 below 1/2)."""
    return np.array([-1 if rng.float01() < 0.5 else 1 for _ in range(n)], dtype=np.int8)


def glauber_step(model: IsingModel, x, rng: RngStream) -> np.ndarray:
    """One lazy heat-bath step. Returns a new array; flips at most one spin."""
    x = check_configuration(model, x)
    n = model.n
    i = rng.randint(n)
    lazy = rng.float01()
    u = rng.float01()
    out = x.copy()
    if lazy < 0.5:
        return out
    g = model.graph
    lo, hi = g.nbr_offsets[i], g.nbr_offsets[i + 1]
    field = model.external_field
    for k in range(lo, hi):
        field += model.nbr_beta[k] * x[g.nbr_idx[k]]
    p_flip = 1.0 / (1.0 + math.exp(2.0 * x[i] * field))
    if u < p_flip:
        out[i] = -out[i]
    return out


def coloring_step(model: ColoringModel, x, rng: RngStream) -> np.ndarray:
    """One lazy recoloring step; the input must be a proper coloring."""
    x = check_configuration(model, x)
    if not is_valid_coloring(model, x):
        raise ValueError("coloring_step requires a proper coloring")
    n = model.n
    i = rng.randint(n)
    lazy = rng.float01()
    u = rng.float01()
    out = x.copy()
    if lazy < 0.5:
        return out
    used = {int(x[j]) for j in model.graph.neighbors(i)}
    allowed = [c for c in range(model.q) if c not in used]
    out[i] = allowed[int(u * len(allowed))]
    return out


def cube_step(model: CubeWalkModel, x, rng: RngStream) -> np.ndarray:
    """One lazy always-flip step of the uniform cube walk."""
    x = check_configuration(model, x)
    i = rng.randint(model.n)
    lazy = rng.float01()
    rng.float01()  # move draw consumed for counter alignment
    out = x.copy()
    if lazy < 0.5:
        return out
    out[i] = -out[i]
    return out


def greedy_initial_coloring(model: ColoringModel) -> np.ndarray:
    """Smallest free color in node-index order; succeeds whenever
    q >= max degree + 1 (and possibly for smaller q on easy graphs)."""
    g = model.graph
    colors = np.full(g.n, -1, dtype=np.int8)
    for v in range(g.n):
        used = {int(colors[w]) for w in g.neighbors(v) if colors[w] >= 0}
        c = next((c for c in range(model.q) if c not in used), None)
        if c is None:
            raise ValueError(
                f"greedy coloring failed at node {v}: all {model.q} colors used by neighbors"
            )
        colors[v] = c
    return colors


@dataclass(frozen=True, eq=False)
class ChainOracle:
    """One-step simulation oracle for a model; all heavy paths are jitted.

    The jitted paths consume the same counters as the python step functions,
    so `run`/`walk` advance the passed stream exactly as a python loop would.
    """

    model: object

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def alphabet_size(self) -> int:
        return self.model.alphabet_size

    def step(self, x, rng: RngStream) -> np.ndarray:
        m = self.model
        if isinstance(m, IsingModel):
            return glauber_step(m, x, rng)
        if isinstance(m, ColoringModel):
            return coloring_step(m, x, rng)
        return cube_step(m, x, rng)

    def _check_start(self, x) -> np.ndarray:
        m = self.model
        x = check_configuration(m, x)
        if isinstance(m, ColoringModel) and not is_valid_coloring(m, x):
            raise ValueError("start state must be a proper coloring")
        return x

    def run(self, x, t: int, rng: RngStream) -> np.ndarray:
        """Simulate t steps; returns the endpoint and consumes 3t draws."""
        if t < 0:
            raise ValueError(f"step count must be nonnegative, got {t}")
        x = self._check_start(x)
        if t == 0:
            return x.copy()
        out = self.endpoints(x[None, :], t, np.array([rng.seed], dtype=np.uint64),
                             counter0=rng.counter)[0]
        rng.advance(3 * t)
        return out

    def walk(self, start, length: int, rng: RngStream) -> np.ndarray:
        """(length, n) array of states including the start; 3(length-1) draws."""
        if length < 1:
            raise ValueError(f"walk length must be >= 1, got {length}")
        start = self._check_start(start)
        m = self.model
        seed, c0 = U64(rng.seed), U64(rng.counter)
        if isinstance(m, IsingModel):
            g = m.graph
            out = _kernels.ising_walk(g.nbr_offsets, g.nbr_idx, m.nbr_beta,
                                      m.external_field, start, length, seed, c0)
        elif isinstance(m, ColoringModel):
            g = m.graph
            out = _kernels.coloring_walk(g.nbr_offsets, g.nbr_idx, m.q,
                                         start, length, seed, c0)
        else:
            out = _kernels.cube_walk(start, length, seed, c0)
        rng.advance(3 * (length - 1))
        return out

    def endpoints(self, starts, t: int, seeds: np.ndarray, counter0: int = 0) -> np.ndarray:
        """Evolve each row of `starts` t steps with its own stream seed."""
        starts = np.ascontiguousarray(np.asarray(starts, dtype=np.int8))
        seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
        if starts.ndim != 2 or starts.shape[0] != seeds.shape[0]:
            raise ValueError("starts must be (rows, n) with one seed per row")
        m = self.model
        c0 = U64(counter0)
        if isinstance(m, IsingModel):
            g = m.graph
            return _kernels.ising_endpoints(g.nbr_offsets, g.nbr_idx, m.nbr_beta,
                                            m.external_field, starts, t, seeds, c0)
        if isinstance(m, ColoringModel):
            g = m.graph
            return _kernels.coloring_endpoints(g.nbr_offsets, g.nbr_idx, m.q,
                                               starts, t, seeds, c0)
        return _kernels.cube_endpoints(starts, t, seeds, c0)


def one_step_oracle(model) -> ChainOracle:
    if not isinstance(model, (IsingModel, ColoringModel, CubeWalkModel)):
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return ChainOracle(model)


def simulate_t_steps(oracle: ChainOracle, x, t: int, rng: RngStream) -> np.ndarray:
    return oracle.run(x, t, rng)


def sample_stationary_iid(oracle: ChainOracle, count: int, rng: RngStream,
                          burn_in: int | None = None) -> np.ndarray:
    """count approximate stationary samples, one independent walk each.

    Sample k runs on the child stream rng.derive(k). Ising and cube walks
    start from uniform random spins (draws 0..n-1 of the child stream, steps
    from counter n); coloring walks start from the greedy coloring and rely
    on the burn-in walk for randomization.
    """
    if count < 0:
        raise ValueError(f"sample count must be nonnegative, got {count}")
    m = oracle.model
    n = oracle.n
    if burn_in is None:
        burn_in = default_burn_in(n)
    if burn_in < 0:
        raise ValueError(f"burn-in must be nonnegative, got {burn_in}")
    seeds = derive_seeds_array(rng.seed, np.arange(count, dtype=np.uint64))
    if isinstance(m, ColoringModel):
        start = greedy_initial_coloring(m)
        starts = np.tile(start, (count, 1))
        return oracle.endpoints(starts, burn_in, seeds, counter0=0)
    starts = _kernels.random_spin_rows(n, seeds)
    return oracle.endpoints(starts, burn_in, seeds, counter0=n)


@dataclass(frozen=True, eq=False)
class LabeledWalk:
    """A recorded trajectory with one label per state."""

    states: np.ndarray  # (L, n) int8
    labels: np.ndarray  # (L,) int8 in {-1, +1}
    alphabet_size: int

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int8)
        labels = np.asarray(self.labels, dtype=np.int8)
        if states.ndim != 2 or labels.shape != (states.shape[0],):
            raise ValueError("states must be (L, n) with one label per state")
        if not np.all(np.abs(labels) == 1):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def validate_single_site(self) -> None:
        """Input error if any consecutive pair differs in more than one site."""
        diff_counts = np.count_nonzero(self.states[1:] != self.states[:-1], axis=1)
        bad = np.nonzero(diff_counts > 1)[0]
        if bad.size:
            raise ValueError(
                f"walk is not single-site: step {int(bad[0]) + 1} changes "
                f"{int(diff_counts[bad[0]])} coordinates"
            )


def _label_states(label_fn, states: np.ndarray) -> np.ndarray:
    """Apply a label function, vectorized when it supports matrix input."""
    try:
        vals = np.asarray(label_fn(states))
        if vals.shape != (states.shape[0],):
            raise TypeError
    except (TypeError, ValueError, IndexError):
        vals = np.array([label_fn(states[i]) for i in range(states.shape[0])])
    out = np.asarray(vals)
    if not np.all(np.abs(out.astype(np.float64)) == 1.0):
        raise ValueError("label function must return -1 or +1")
    return out.astype(np.int8)


def labeled_walk(oracle: ChainOracle, label_fn, start, length: int,
                 rng: RngStream) -> LabeledWalk:
    """Run a walk of `length` states from `start` and label every state."""
    states = oracle.walk(start, length, rng)
    labels = _label_states(label_fn, states)
    return LabeledWalk(states, labels, oracle.alphabet_size)


# ---------------------------------------------------------------------------
# walk dump: CSV with columns step, state, label. Spins render as '+'/'-',
# colors as base-36 digits (q <= 36).
# ---------------------------------------------------------------------------

_B36 = "0123456789abcdefghijklmnopqrstuvwxyz"


def state_string(x: np.ndarray, alphabet_size: int) -> str:
    """Render one configuration: spins as +/-, colors as base-36 digits."""
    if alphabet_size == 2 and np.any(x < 0):
        return "".join("+" if v > 0 else "-" for v in x)
    return "".join(_B36[int(v)] for v in x)


def save_walk(walk: LabeledWalk, path) -> None:
    if walk.alphabet_size > 36:
        raise ValueError("walk dump supports alphabets up to 36 symbols")
    spin = bool(np.any(walk.states < 0)) or walk.alphabet_size == 2
    with open(path, "w", encoding="ascii") as f:
        f.write("step,state,label\n")
        for s in range(len(walk)):
            x = walk.states[s]
            text = ("".join("+" if v > 0 else "-" for v in x) if spin
                    else "".join(_B36[int(v)] for v in x))
            f.write(f"{s},{text},{int(walk.labels[s])}\n")


def load_walk(path) -> LabeledWalk:
    states = []
    labels = []
    alphabet = 2
    with open(path, encoding="ascii") as f:
        header = f.readline().strip()
        if header != "step,state,label":
            raise ValueError(f"unexpected walk header {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            step_s, text, label_s = line.split(",")
            if int(step_s) != len(states):
                raise ValueError(f"line {lineno}: steps must be consecutive from 0")
            if set(text) <= {"+", "-"}:
                row = [1 if ch == "+" else -1 for ch in text]
            else:
                row = [_B36.index(ch) for ch in text]
                alphabet = max(alphabet, max(row) + 1)
            states.append(row)
            labels.append(int(label_s))
    if not states:
        raise ValueError("walk file has no states")
    return LabeledWalk(np.array(states, dtype=np.int8),
                       np.array(labels, dtype=np.int8), alphabet)
