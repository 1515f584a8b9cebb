"""Brute-force ground truth: exhaustive ground states, max-cut and colorability."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ContractError
from .ising import IsingModel, SpinState, all_states, bits_to_spins, energies
from .mapping import WeightedGraph

MAX_ORACLE_SPINS = 28
ENERGY_TOL = 1e-9
_LOW_BLOCK = 12


@dataclass(frozen=True, eq=False)
class OracleResult:
    min_energy: float
    ground_states: np.ndarray  # (k, n) spin rows, sorted by state code
    states_scanned: int
    ground_state_count: int

    @property
    def truncated(self) -> bool:
        return self.ground_state_count > len(self.ground_states)

    def states(self, domain) -> list[SpinState]:
        return [SpinState(row, domain) for row in self.ground_states]


def _codes_to_states(codes: np.ndarray, n: int, domain) -> np.ndarray:
    bits = ((codes[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.int8)
    return bits_to_spins(bits, domain)


def exhaustive_ground_state(
    model: IsingModel,
    max_spins: int = MAX_ORACLE_SPINS,
    keep: int = 100_000,
) -> OracleResult:
    """Scan all 2^n states and return the minimum energy with its minimizers.

    The lowest ``min(n, 12)`` spins are enumerated as one dense block; the
    remaining high spins are walked in Gray-code order so each step flips one
    spin and updates the block's cross fields and the high-spin energy
    incrementally. At most ``keep`` minimizers are returned;
    ``ground_state_count`` is always exact.
    """
    n = model.n
    if n > max_spins:
        raise CapacityError(f"exhaustive search capped at n={max_spins}, got n={n}")
    dom = model.domain
    lo_val, hi_val = float(dom.low), float(dom.high)
    b = min(n, max(_LOW_BLOCK, n - 16))
    m = n - b
    J = model.J

    s_lo = all_states(b, dom).astype(np.float64)
    sub = IsingModel.from_dense(J[:b, :b], model.h[:b], dom)
    e_lo = energies(sub, s_lo)
    J_lh = J[:b, b:]
    J_hh = J[b:, b:]
    h_hi = model.h[b:]

    x = np.full(m, lo_val)
    cross = J_lh @ x  # field on low spins from the high block
    f_hh = J_hh @ x + h_hi
    e_hh = -0.5 * x @ (J_hh @ x) - h_hi @ x

    best = np.inf
    best_codes: list[np.ndarray] = []
    count = 0
    gray = 0
    for t in range(1 << m):
        if t:
            k = (t & -t).bit_length() - 1
            gray ^= 1 << k
            delta = (hi_val - lo_val) if (gray >> k) & 1 else (lo_val - hi_val)
            e_hh -= delta * f_hh[k]
            f_hh += delta * J_hh[:, k]
            cross += delta * J_lh[:, k]
            x[k] += delta
        e = e_lo - s_lo @ cross + e_hh
        emin = e.min()
        if emin < best - ENERGY_TOL:
            best_codes = []
            count = 0
        best = min(best, emin)
        if emin <= best + ENERGY_TOL:
            hit = np.flatnonzero(e <= best + ENERGY_TOL)
            count += hit.size
            if sum(c.size for c in best_codes) < keep:
                best_codes.append(hit.astype(np.int64) + (gray << b))

    codes = np.sort(np.concatenate(best_codes))[:keep] if best_codes else np.zeros(0, np.int64)
    states = _codes_to_states(codes, n, dom)
    exact = energies(model, states)
    emin = float(exact.min())
    keep_mask = exact <= emin + ENERGY_TOL
    return OracleResult(emin, states[keep_mask], 1 << n, count - int((~keep_mask).sum()))


def naive_ground_state(model: IsingModel, max_spins: int = 20, chunk: int = 1 << 16) -> OracleResult:
    """Full recomputation of every state's energy; the cross-check for the Gray-code path."""
    n = model.n
    if n > max_spins:
        raise CapacityError(f"naive enumeration capped at n={max_spins}")
    total = 1 << n
    all_e = np.empty(total)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        all_e[start:start + codes.size] = energies(model, _codes_to_states(codes, n, model.domain))
    emin = float(all_e.min())
    codes = np.flatnonzero(all_e <= emin + ENERGY_TOL).astype(np.int64)
    return OracleResult(emin, _codes_to_states(codes, n, model.domain), total, codes.size)


def maxcut_brute(graph: WeightedGraph, max_vertices: int = MAX_ORACLE_SPINS, chunk: int = 1 << 18):
    """Maximum cut by direct enumeration of vertex bipartitions.

    Vertex n-1 is pinned to side 0, which loses nothing since complementary
    partitions cut the same edges. Returns (max cut weight, side labels 0/1).
    """
    n = graph.n_vertices
    if n > max_vertices:
        raise CapacityError(f"max-cut enumeration capped at {max_vertices} vertices")
    if not graph.edges:
        return 0.0, np.zeros(n, dtype=np.int8)
    u = np.array([e[0] for e in graph.edges])
    v = np.array([e[1] for e in graph.edges])
    w = np.array([e[2] for e in graph.edges])
    total = 1 << (n - 1) if n > 1 else 1
    best, best_code = -1.0, 0
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(np.int8)
        cut = (bits[:, u] ^ bits[:, v]) @ w
        k = int(np.argmax(cut))
        if cut[k] > best + ENERGY_TOL:
            best, best_code = float(cut[k]), int(codes[k])
    labels = ((best_code >> shifts) & 1).astype(np.int8)
    return best, labels


def coloring_exists(graph: WeightedGraph, C: int, max_vertices: int = MAX_ORACLE_SPINS, max_colors: int = 4):
    """Backtracking search for a proper C-coloring. Returns (found, colors or None)."""
    n = graph.n_vertices
    if n > max_vertices or C > max_colors:
        raise CapacityError(f"coloring search capped at {max_vertices} vertices and {max_colors} colors")
    if C < 1:
        raise ContractError("need at least one color")
    adj: list[set[int]] = [set() for _ in range(n)]
    for a, b, _ in graph.edges:
        adj[a].add(b)
        adj[b].add(a)
    order = sorted(range(n), key=lambda x: -len(adj[x]))
    colors = [-1] * n

    def place(pos: int) -> bool:
        if pos == n:
            return True
        v = order[pos]
        used = {colors[u] for u in adj[v]}
        # Symmetry breaking: never open more than one new color at a time.
        ceiling = min(C, max(colors) + 2)
        for c in range(ceiling):
            if c not in used:
                colors[v] = c
                if place(pos + 1):
                    return True
        colors[v] = -1
        return False

    if place(0):
        return True, tuple(colors)
    return False, None


def count_colorings(graph: WeightedGraph, C: int, max_vertices: int = MAX_ORACLE_SPINS) -> int:
    """Number of proper C-colorings, labelled colors (no symmetry reduction)."""
    n = graph.n_vertices
    if n > max_vertices:
        raise CapacityError(f"coloring count capped at {max_vertices} vertices")
    adj: list[set[int]] = [set() for _ in range(n)]
    for a, b, _ in graph.edges:
        adj[a].add(b)
        adj[b].add(a)
    order = sorted(range(n), key=lambda x: -len(adj[x]))
    colors = [-1] * n

    def walk(pos: int) -> int:
        if pos == n:
            return 1
        v = order[pos]
        used = {colors[u] for u in adj[v]}
        total = 0
        for c in range(C):
            if c not in used:
                colors[v] = c
                total += walk(pos + 1)
        colors[v] = -1
        return total

    return walk(0)


def coloring_ground_state(graph: WeightedGraph, C: int, A: float = 1.0):
    """Ground energy of the one-hot coloring QUBO without scanning 2^(nC) states.

    The QUBO is A * sum_v (1 - sum_k x_vk)^2 + A * sum_edges sum_k x_uk x_vk
    minus the constant A * n, so it is bounded below by -A * n with equality
    exactly on proper colorings. Returns (min_energy, ground_state_count) when
    the graph is C-colorable and None otherwise (the bound is then not tight).
    """
    found, _ = coloring_exists(graph, C)
    if not found:
        return None
    return -A * graph.n_vertices, count_colorings(graph, C)
