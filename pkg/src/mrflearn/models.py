"""Markov-random-field models on finite graphs.

Three model kinds share one configuration convention (numpy int8 vectors):

* `IsingModel`: spins in {-1, +1}, energy
  H(s) = - sum_{(i,j) in E} beta_ij s_i s_j - B sum_i s_i,
  stationary weight proportional to exp(-H).
* `ColoringModel`: colors in {0, ..., q-1} (0-based internally; any 1-based
  source material maps by subtracting 1), uniform over proper colorings.
* `CubeWalkModel`: spins in {-1, +1}, uniform stationary law. This is the
  lazy walk that flips the chosen site deterministically; it exists as the
  analytic spectral reference (parity eigenvectors, eigenvalue 1 - |S|/n)
  and is *not* the same chain as Ising at beta=0, whose heat-bath flips
  yield 1 - |S|/(2n) instead.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes 0..n-1.

    Edges are canonicalized to (i, j) with i < j, sorted. Self loops and
    duplicates are rejected. Adjacency is precomputed in CSR form for the
    samplers.
    """

    n: int
    edges: tuple
    nbr_offsets: np.ndarray = field(repr=False, default=None)
    nbr_idx: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"graph needs at least one node, got n={self.n}")
        seen = set()
        canon = []
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise ValueError(f"self loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i},{j}) out of range for n={self.n}")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add((i, j))
            canon.append((i, j))
        canon.sort()
        object.__setattr__(self, "edges", tuple(canon))
        adj = [[] for _ in range(self.n)]
        for i, j in canon:
            adj[i].append(j)
            adj[j].append(i)
        offsets = np.zeros(self.n + 1, dtype=np.int64)
        for v in range(self.n):
            adj[v].sort()
            offsets[v + 1] = offsets[v] + len(adj[v])
        flat = np.fromiter(
            (w for v in range(self.n) for w in adj[v]), dtype=np.int64, count=int(offsets[-1])
        )
        object.__setattr__(self, "nbr_offsets", offsets)
        object.__setattr__(self, "nbr_idx", flat)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return int(self.nbr_offsets[v + 1] - self.nbr_offsets[v])

    @property
    def max_degree(self) -> int:
        if self.n == 0:
            return 0
        return int(np.max(np.diff(self.nbr_offsets)))

    def neighbors(self, v: int) -> np.ndarray:
        return self.nbr_idx[self.nbr_offsets[v] : self.nbr_offsets[v + 1]]


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    if n < 2:
        raise ValueError(f"path needs n >= 2, got {n}")
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int) -> Graph:
    if n < 2:
        raise ValueError(f"complete graph needs n >= 2, got {n}")
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def grid_graph(rows: int, cols: int) -> Graph:
    """rows x cols grid with 4-neighbor adjacency, node id = r*cols + c."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValueError(f"grid needs at least two nodes, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph(rows * cols, tuple(edges))


def erdos_renyi_graph(n: int, p: float, seed: int) -> Graph:
    """G(n, p): each pair (i, j), i < j in lexicographic order, is an edge
    independently with probability p. Deterministic given the seed."""
    from .rng import RngStream

    if n < 1:
        raise ValueError(f"erdos_renyi needs n >= 1, got {n}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"edge probability must be in [0,1], got {p}")
    rng = RngStream(seed)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.float01() < p:
                edges.append((i, j))
    return Graph(n, tuple(edges))


def make_graph(kind: str, **params) -> Graph:
    """Dispatcher used by the CLI and experiment configs."""
    builders = {
        "cycle": lambda: cycle_graph(int(params["n"])),
        "path": lambda: path_graph(int(params["n"])),
        "complete": lambda: complete_graph(int(params["n"])),
        "grid": lambda: grid_graph(int(params["rows"]), int(params["cols"])),
        "erdos_renyi": lambda: erdos_renyi_graph(
            int(params["n"]), float(params["p"]), int(params["seed"])
        ),
    }
    if kind not in builders:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {sorted(builders)}")
    try:
        return builders[kind]()
    except KeyError as exc:
        raise ValueError(f"graph kind {kind!r} is missing parameter {exc}") from None


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Ising model with per-edge couplings and a uniform external field.

    `beta` may be a scalar (broadcast to every edge) or a mapping from edge
    (i, j) to a coupling; the mapping must cover the edge set exactly.
    """

    graph: Graph
    beta: object = 0.0
    external_field: float = 0.0
    edge_betas: tuple = field(init=False, repr=False, default=None)
    nbr_beta: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        g = self.graph
        if isinstance(self.beta, (int, float)):
            b = float(self.beta)
            if not math.isfinite(b):
                raise ValueError(f"beta must be finite, got {b}")
            betas = {e: b for e in g.edges}
        else:
            betas = {}
            for key, val in dict(self.beta).items():
                i, j = int(key[0]), int(key[1])
                if i > j:
                    i, j = j, i
                if not math.isfinite(float(val)):
                    raise ValueError(f"beta for edge ({i},{j}) must be finite")
                betas[(i, j)] = float(val)
            if set(betas) != set(g.edges):
                missing = set(g.edges) - set(betas)
                extra = set(betas) - set(g.edges)
                raise ValueError(
                    f"per-edge beta must cover the edge set exactly; "
                    f"missing={sorted(missing)} extra={sorted(extra)}"
                )
        if not math.isfinite(float(self.external_field)):
            raise ValueError("external field must be finite")
        object.__setattr__(self, "external_field", float(self.external_field))
        object.__setattr__(self, "edge_betas", tuple(betas[e] for e in g.edges))
        # CSR-aligned couplings for the samplers
        bmap = {}
        for (i, j), b in betas.items():
            bmap[(i, j)] = b
            bmap[(j, i)] = b
        flat = np.empty(len(g.nbr_idx), dtype=np.float64)
        for v in range(g.n):
            lo, hi = g.nbr_offsets[v], g.nbr_offsets[v + 1]
            for k in range(lo, hi):
                flat[k] = bmap[(v, int(g.nbr_idx[k]))]
        object.__setattr__(self, "nbr_beta", flat)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def alphabet_size(self) -> int:
        return 2

    @property
    def kind(self) -> str:
        return "ising"


@dataclass(frozen=True, eq=False)
class ColoringModel:
    """Uniform distribution over proper q-colorings of the graph."""

    graph: Graph
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"need at least one color, got q={self.q}")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def alphabet_size(self) -> int:
        return self.q

    @property
    def kind(self) -> str:
        return "coloring"

    @property
    def rapidly_mixing(self) -> bool:
        """q >= 3 * max degree, the guidance bound. Advisory only; the
        samplers run (and are exact) for any q that admits a coloring."""
        return self.q >= 3 * self.graph.max_degree


@dataclass(frozen=True, eq=False)
class CubeWalkModel:
    """Uniform spins; lazy walk that always flips the chosen site."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"cube walk needs n >= 1, got {self.n}")

    @property
    def alphabet_size(self) -> int:
        return 2

    @property
    def kind(self) -> str:
        return "cube"


def check_configuration(model, x) -> np.ndarray:
    """Validate shape and alphabet; returns x as an int8 array."""
    x = np.asarray(x)
    n = model.n
    if x.shape != (n,):
        raise ValueError(f"configuration must have shape ({n},), got {x.shape}")
    x = x.astype(np.int8, copy=False)
    if model.kind in ("ising", "cube"):
        if not np.all(np.abs(x) == 1):
            raise ValueError("spins must be -1 or +1")
    else:
        if np.any(x < 0) or np.any(x >= model.q):
            raise ValueError(f"colors must lie in [0, {model.q})")
    return x


def hamiltonian(model: IsingModel, x) -> float:
    """H(s) = -sum beta_ij s_i s_j - B sum s_i."""
    x = check_configuration(model, x)
    s = x.astype(np.float64)
    acc = 0.0
    for (i, j), b in zip(model.graph.edges, model.edge_betas):
        acc += b * s[i] * s[j]
    return -acc - model.external_field * float(s.sum())


def is_valid_coloring(model: ColoringModel, x) -> bool:
    x = check_configuration(model, x)
    for i, j in model.graph.edges:
        if x[i] == x[j]:
            return False
    return True


def log_stationary_weight(model, x) -> float:
    """Log of the unnormalized stationary weight; -inf off support."""
    if isinstance(model, IsingModel):
        return -hamiltonian(model, x)
    if isinstance(model, ColoringModel):
        return 0.0 if is_valid_coloring(model, x) else -math.inf
    if isinstance(model, CubeWalkModel):
        check_configuration(model, x)
        return 0.0
    raise TypeError(f"unsupported model type {type(model).__name__}")


def hamming_distance(x, y) -> int:
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    return int(np.count_nonzero(x != y))


# ---------------------------------------------------------------------------
# plain-text serialization
#
# header:   n m ising      |  n m q      |  n 0 cube
# edges:    i j beta       |  i j        |  (none)
# field:    B value        (ising only; always written, optional on load)
# ---------------------------------------------------------------------------


def dumps_model(model) -> str:
    out = io.StringIO()
    if isinstance(model, IsingModel):
        g = model.graph
        out.write(f"{g.n} {g.m} ising\n")
        for (i, j), b in zip(g.edges, model.edge_betas):
            out.write(f"{i} {j} {b!r}\n")
        out.write(f"B {model.external_field!r}\n")
    elif isinstance(model, ColoringModel):
        g = model.graph
        out.write(f"{g.n} {g.m} {model.q}\n")
        for i, j in g.edges:
            out.write(f"{i} {j}\n")
    elif isinstance(model, CubeWalkModel):
        out.write(f"{model.n} 0 cube\n")
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return out.getvalue()


def loads_model(text: str):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty model file")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"header must be 'n m q|ising|cube', got {lines[0]!r}")
    n, m = int(head[0]), int(head[1])
    tag = head[2]
    body = lines[1:]
    if tag == "cube":
        if m != 0 or body:
            raise ValueError("cube model takes no edges")
        return CubeWalkModel(n)
    edges = []
    betas = {}
    ext = 0.0
    for ln in body:
        parts = ln.split()
        if parts[0] == "B":
            if tag != "ising":
                raise ValueError("field line B is only valid for ising models")
            ext = float(parts[1])
            continue
        i, j = int(parts[0]), int(parts[1])
        edges.append((i, j))
        if tag == "ising":
            # beta defaults to 1.0 when the column is omitted
            betas[(min(i, j), max(i, j))] = float(parts[2]) if len(parts) > 2 else 1.0
    if len(edges) != m:
        raise ValueError(f"header promises {m} edges, file has {len(edges)}")
    graph = Graph(n, tuple(edges))
    if tag == "ising":
        return IsingModel(graph, betas if betas else 0.0, ext)
    return ColoringModel(graph, int(tag))


def save_model(model, path) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(dumps_model(model))


def load_model(path):
    with open(path, encoding="ascii") as f:
        return loads_model(f.read())


_DYNAMICS_TAG = {
    "ising": "glauber-heatbath-lazy-v1",
    "coloring": "recolor-uniform-lazy-v1",
    "cube": "cube-flip-lazy-v1",
}


def model_hash(model) -> str:
    """Content hash of the model plus its dynamics version, for caching."""
    h = hashlib.sha256()
    h.update(_DYNAMICS_TAG[model.kind].encode())
    h.update(b"\n")
    h.update(dumps_model(model).encode())
    return h.hexdigest()
