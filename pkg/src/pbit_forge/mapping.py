"""MAX-CUT and graph-coloring encodings, crossbar lowering and decoders."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import ContractError, MappingError
from .ising import IsingModel, SpinDomain, SpinState


@dataclass(frozen=True)
class WeightedGraph:
    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        edges = tuple((int(u), int(v), float(w)) for u, v, w in self.edges)
        seen = set()
        for u, v, w in edges:
            if u == v:
                raise ContractError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ContractError(f"edge ({u}, {v}) out of range")
            if w <= 0:
                raise ContractError(f"edge ({u}, {v}) has nonpositive weight {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ContractError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "edges", edges)

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)

    def degree(self, v: int) -> int:
        return sum(1 for a, b, _ in self.edges if v in (a, b))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_vertices))
        g.add_weighted_edges_from(self.edges)
        return g


def read_graph(path) -> WeightedGraph:
    """Parse ``n m`` followed by m lines ``u v w`` (0-based vertices)."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ContractError(f"{path}: empty graph file")
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise ContractError(f"{path}: header says {m} edges, found {len(body)}")
    edges = []
    for toks in body:
        w = float(toks[2]) if len(toks) > 2 else 1.0
        edges.append((int(toks[0]), int(toks[1]), w))
    return WeightedGraph(n, tuple(edges))


def write_graph(path, graph: WeightedGraph) -> None:
    out = [f"{graph.n_vertices} {len(graph.edges)}"]
    out += [f"{u} {v} {w:g}" for u, v, w in graph.edges]
    Path(path).write_text("\n".join(out) + "\n")


def map_maxcut(graph: WeightedGraph, A: float = 1.0) -> IsingModel:
    """+-1 model with J_uv = -A W_uv and no bias."""
    if A <= 0:
        raise ContractError("A must be positive")
    if not graph.edges:
        raise ContractError("MAX-CUT needs at least one edge")
    return IsingModel.from_couplings(
        graph.n_vertices, {(u, v): -A * w for u, v, w in graph.edges}, np.zeros(graph.n_vertices)
    )


def color_spin(v: int, k: int, C: int) -> int:
    """0-based spin index of vertex v painted with color k."""
    return C * v + k


def map_coloring(graph: WeightedGraph, C: int, A: float = 1.0) -> IsingModel:
    """0/1 one-hot QUBO: J = -2A on intra-vertex and same-color adjacent pairs, h = A."""
    if C < 2:
        raise ContractError("need at least two colors")
    if A <= 0:
        raise ContractError("A must be positive")
    n = graph.n_vertices * C
    couplings: dict[tuple[int, int], float] = {}
    for v in range(graph.n_vertices):
        for k in range(C):
            for c in range(k + 1, C):
                couplings[(color_spin(v, k, C), color_spin(v, c, C))] = -2.0 * A
    for u, v, _ in graph.edges:
        for k in range(C):
            couplings[(color_spin(u, k, C), color_spin(v, k, C))] = -2.0 * A
    return IsingModel.from_couplings(n, couplings, np.full(n, A), SpinDomain.ZERO_ONE)


@dataclass(frozen=True, eq=False)
class CrossbarLowering:
    conductance_targets: np.ndarray
    column_polarity: np.ndarray
    g_scale: float
    bias_column_index: int | None
    levels: tuple[float, ...] = field(default=())
    zero_fraction: float = 0.0

    @property
    def bias_polarity(self) -> int | None:
        if self.bias_column_index is None:
            return None
        return int(self.column_polarity[self.bias_column_index])


def _column_sign(col: np.ndarray) -> int:
    nz = col[col != 0]
    if nz.size == 0:
        return 1
    if np.all(nz > 0):
        return 1
    if np.all(nz < 0):
        return -1
    return 0


def to_crossbar(
    model: IsingModel,
    levels,
    g_scale: float,
    snap: bool = False,
    rel_tol: float = 1e-9,
) -> CrossbarLowering:
    """Lower (J | h) onto conductance targets with one drive polarity per column.

    Column j of the array holds |J_ij| * g_scale for every row i and is
    driven at sign(column) * s_j * V_read; h goes to an extra bias column.
    Magnitudes must land exactly on an allowed level unless ``snap`` is set.
    """
    if g_scale <= 0:
        raise ContractError("g_scale must be positive")
    levels = tuple(sorted(float(x) for x in levels))
    J = model.J
    has_bias = bool(np.any(model.h != 0))
    coeffs = np.column_stack([J, model.h]) if has_bias else J

    polarity = np.empty(coeffs.shape[1], dtype=np.int8)
    mixed = []
    for j in range(coeffs.shape[1]):
        sgn = _column_sign(coeffs[:, j])
        if sgn == 0:
            mixed.append(j)
        polarity[j] = sgn
    if mixed:
        raise MappingError(
            "columns with mixed-sign coefficients cannot share one read polarity "
            f"(differential encoding unsupported): {mixed}",
            mixed,
        )

    mag = np.abs(coeffs) * g_scale
    targets = np.zeros_like(mag)
    lv = np.array(levels)
    offenders = []
    for i, j in zip(*np.nonzero(mag)):
        if lv.size == 0:
            offenders.append((int(i), int(j), float(mag[i, j])))
            continue
        k = int(np.argmin(np.abs(lv - mag[i, j])))
        if snap or abs(lv[k] - mag[i, j]) <= rel_tol * max(lv[k], 1.0):
            targets[i, j] = lv[k]
        else:
            offenders.append((int(i), int(j), float(mag[i, j])))
    if offenders:
        raise MappingError(f"{len(offenders)} coefficients do not land on levels {levels}", offenders)

    return CrossbarLowering(
        conductance_targets=targets,
        column_polarity=polarity,
        g_scale=g_scale,
        bias_column_index=model.n if has_bias else None,
        levels=levels,
        zero_fraction=model.sparsity,
    )


def decode_cut(graph: WeightedGraph, state: SpinState) -> tuple[np.ndarray, float]:
    """Partition labels (the spins) and the weight of edges crossing the cut."""
    s = state.values
    if s.size != graph.n_vertices:
        raise ContractError("state length does not match the graph")
    cut = sum(w for u, v, w in graph.edges if s[u] != s[v])
    return s.copy(), float(cut)


def cut_from_energy(graph: WeightedGraph, energy_value: float, A: float = 1.0) -> float:
    """Cut weight implied by a MAX-CUT Ising energy: (sum W - H/A) / 2."""
    return 0.5 * (graph.total_weight - energy_value / A)


@dataclass(frozen=True)
class ColoringResult:
    colors: tuple[int, ...]  # -1 where the vertex is not one-hot
    one_hot_violations: tuple[int, ...]
    adjacency_violations: tuple[tuple[int, int], ...]

    @property
    def valid(self) -> bool:
        return not self.one_hot_violations and not self.adjacency_violations


def decode_coloring(graph: WeightedGraph, C: int, state: SpinState) -> ColoringResult:
    s = state.values
    if s.size != graph.n_vertices * C:
        raise ContractError(f"expected {graph.n_vertices * C} spins, got {s.size}")
    grid = s.reshape(graph.n_vertices, C)
    colors = []
    bad_hot = []
    for v in range(graph.n_vertices):
        on = np.flatnonzero(grid[v])
        if on.size == 1:
            colors.append(int(on[0]))
        else:
            colors.append(-1)
            bad_hot.append(v)
    bad_adj = []
    for u, v, _ in graph.edges:
        if np.any(grid[u] & grid[v]):
            bad_adj.append((u, v))
    return ColoringResult(tuple(colors), tuple(bad_hot), tuple(bad_adj))


def conflict_coloring(model: IsingModel) -> list[list[int]]:
    """Greedy partition of spins into classes with no coupling inside a class."""
    g = nx.Graph()
    g.add_nodes_from(range(model.n))
    g.add_edges_from(zip(model.rows[model.weights != 0].tolist(), model.cols[model.weights != 0].tolist()))
    coloring = nx.greedy_color(g, strategy="largest_first")
    n_classes = max(coloring.values()) + 1
    classes: list[list[int]] = [[] for _ in range(n_classes)]
    for node in range(model.n):
        classes[coloring[node]].append(node)
    return classes


def check_color_classes(model: IsingModel, classes) -> None:
    """Raise unless ``classes`` partition the spins with no coupled pair in a class."""
    flat = sorted(i for cls in classes for i in cls)
    if flat != list(range(model.n)):
        raise ContractError("color classes must partition the spin indices exactly once")
    label = np.empty(model.n, dtype=np.int64)
    for k, cls in enumerate(classes):
        label[list(cls)] = k
    live = model.weights != 0
    clash = label[model.rows[live]] == label[model.cols[live]]
    if np.any(clash):
        pairs = list(zip(model.rows[live][clash].tolist(), model.cols[live][clash].tolist()))
        raise ContractError(f"coupled spins share a color class: {pairs[:5]}")


def random_maxcut_graph(n: int, m: int, weights, rng: np.random.Generator) -> WeightedGraph:
    """Connected random graph with m edges and weights drawn from ``weights``."""
    while True:
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        pick = rng.choice(len(pairs), size=m, replace=False)
        edges = tuple(sorted((pairs[k][0], pairs[k][1], float(rng.choice(weights))) for k in pick))
        g = WeightedGraph(n, edges)
        if nx.is_connected(g.to_networkx()):
            return g


def planted_coloring_graph(n: int, m: int, C: int, rng: np.random.Generator) -> WeightedGraph:
    """Connected graph with m edges that admits the planted C-coloring."""
    while True:
        planted = rng.integers(0, C, size=n)
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if planted[u] != planted[v]]
        if len(pairs) < m:
            continue
        pick = rng.choice(len(pairs), size=m, replace=False)
        edges = tuple(sorted((pairs[k][0], pairs[k][1], 1.0) for k in pick))
        g = WeightedGraph(n, edges)
        if nx.is_connected(g.to_networkx()):
            return g
