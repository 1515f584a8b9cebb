"""Ising/QUBO models, energies, local fields and exact Boltzmann statistics.

Couplings are stored as an upper-triangle coordinate list; the dense matrix
is built lazily for the small systems the samplers work on.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy.special import expit

from .errors import CapacityError, ContractError

MAX_BOLTZMANN_SPINS = 20


class SpinDomain(enum.Enum):
    PLUS_MINUS_ONE = "pm1"
    ZERO_ONE = "01"

    @property
    def low(self) -> int:
        return -1 if self is SpinDomain.PLUS_MINUS_ONE else 0

    @property
    def high(self) -> int:
        return 1

    def check(self, values: np.ndarray) -> None:
        legal = (-1, 1) if self is SpinDomain.PLUS_MINUS_ONE else (0, 1)
        if not np.isin(values, legal).all():
            raise ContractError(f"spin values outside {legal} for domain {self.value}")


@dataclass(frozen=True, eq=False)
class IsingModel:
    """H(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    h: np.ndarray
    domain: SpinDomain = SpinDomain.PLUS_MINUS_ONE

    def __post_init__(self):
        if self.n < 1:
            raise ContractError("model needs at least one spin")
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        h = np.asarray(self.h, dtype=np.float64).reshape(-1)
        if h.shape != (self.n,):
            raise ContractError(f"h has {h.size} entries, expected {self.n}")
        if not (rows.shape == cols.shape == weights.shape):
            raise ContractError("coupling coordinate arrays differ in length")
        if rows.size and (np.any(rows >= cols) or rows.min() < 0 or cols.max() >= self.n):
            raise ContractError("couplings must be upper-triangle (i < j) and in range")
        if np.unique(rows * self.n + cols).size != rows.size:
            raise ContractError("duplicate coupling entries")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "h", h)

    @classmethod
    def from_dense(cls, J, h=None, domain: SpinDomain = SpinDomain.PLUS_MINUS_ONE) -> "IsingModel":
        J = np.asarray(J, dtype=np.float64)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ContractError("J must be square")
        if not np.array_equal(J, J.T):
            raise ContractError("J must be symmetric")
        if np.any(np.diag(J) != 0):
            raise ContractError("J must have a zero diagonal")
        n = J.shape[0]
        r, c = np.nonzero(np.triu(J, 1))
        h = np.zeros(n) if h is None else h
        return cls(n, r, c, J[r, c], h, domain)

    @classmethod
    def from_couplings(
        cls,
        n: int,
        couplings: Mapping[tuple[int, int], float],
        h=None,
        domain: SpinDomain = SpinDomain.PLUS_MINUS_ONE,
    ) -> "IsingModel":
        acc: dict[tuple[int, int], float] = {}
        for (i, j), w in couplings.items():
            if i == j:
                raise ContractError(f"self-coupling at {i}")
            key = (min(i, j), max(i, j))
            acc[key] = acc.get(key, 0.0) + float(w)
        keys = sorted(k for k, w in acc.items() if w != 0.0)
        r = [k[0] for k in keys]
        c = [k[1] for k in keys]
        w = [acc[k] for k in keys]
        h = np.zeros(n) if h is None else h
        return cls(n, np.array(r, dtype=np.int64), np.array(c, dtype=np.int64), np.array(w), h, domain)

    @cached_property
    def J(self) -> np.ndarray:
        J = np.zeros((self.n, self.n))
        J[self.rows, self.cols] = self.weights
        J[self.cols, self.rows] = self.weights
        return J

    @property
    def nnz(self) -> int:
        """Nonzero entries of the full symmetric J (each edge counted twice)."""
        return 2 * int(np.count_nonzero(self.weights))

    @property
    def sparsity(self) -> float:
        """Fraction of zero entries in the n x n coupling matrix."""
        return 1.0 - self.nnz / (self.n * self.n)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.J[i])

    def permuted(self, perm) -> "IsingModel":
        """Relabel spins so that new spin k is old spin perm[k]."""
        perm = np.asarray(perm)
        J = self.J[np.ix_(perm, perm)]
        return IsingModel.from_dense(J, self.h[perm], self.domain)


@dataclass(frozen=True, eq=False)
class SpinState:
    values: np.ndarray
    domain: SpinDomain = SpinDomain.PLUS_MINUS_ONE

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int8).reshape(-1)
        self.domain.check(v)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return (
            isinstance(other, SpinState)
            and self.domain is other.domain
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.domain, self.values.tobytes()))

    def flipped(self, i: int) -> "SpinState":
        v = self.values.copy()
        v[i] = self.domain.high + self.domain.low - v[i]
        return SpinState(v, self.domain)

    @classmethod
    def random(cls, n: int, domain: SpinDomain, rng: np.random.Generator) -> "SpinState":
        bits = rng.integers(0, 2, size=n)
        return cls(bits_to_spins(bits, domain), domain)

    def index(self) -> int:
        """Integer code with bit i set when spin i is high."""
        return int(np.dot(self.values == 1, 1 << np.arange(len(self), dtype=np.int64)))


def bits_to_spins(bits, domain: SpinDomain) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int8)
    return 2 * bits - 1 if domain is SpinDomain.PLUS_MINUS_ONE else bits


def all_states(n: int, domain: SpinDomain) -> np.ndarray:
    """All 2^n states as rows; row k has spin i high iff bit i of k is set."""
    codes = np.arange(1 << n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(np.int8)
    return bits_to_spins(bits, domain)


def _check_pair(model: IsingModel, state: SpinState) -> None:
    if state.domain is not model.domain:
        raise ContractError(f"state domain {state.domain.value} != model domain {model.domain.value}")
    if len(state) != model.n:
        raise ContractError(f"state has {len(state)} spins, model has {model.n}")


def energy(model: IsingModel, state: SpinState) -> float:
    _check_pair(model, state)
    s = state.values.astype(np.float64)
    pair = np.dot(model.weights, s[model.rows] * s[model.cols])
    return float(-pair - np.dot(model.h, s))


def energies(model: IsingModel, states: np.ndarray) -> np.ndarray:
    """Vectorized energy over a (k, n) array of spin rows."""
    s = np.asarray(states, dtype=np.float64)
    pair = (s[:, model.rows] * s[:, model.cols]) @ model.weights
    return -pair - s @ model.h


def local_field(model: IsingModel, state: SpinState, i: int) -> float:
    _check_pair(model, state)
    if not 0 <= i < model.n:
        raise IndexError(f"spin index {i} out of range for n={model.n}")
    return float(model.J[i] @ state.values + model.h[i])


def sigmoid(x):
    """Logistic function, overflow-safe for scalars and arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        z = math.exp(x)
        return z / (1.0 + z)
    return expit(np.asarray(x, dtype=np.float64))


def flip_gain(domain: SpinDomain) -> float:
    """Factor multiplying beta*f in the Gibbs conditional: 2 for +-1 spins, 1 for 0/1."""
    return 2.0 if domain is SpinDomain.PLUS_MINUS_ONE else 1.0


def conditional_flip_probability(model: IsingModel, state: SpinState, i: int, beta: float) -> float:
    """Probability that spin i is high given all other spins, at inverse temperature beta."""
    if beta < 0:
        raise ContractError("beta must be nonnegative")
    f = local_field(model, state, i)
    return sigmoid(flip_gain(model.domain) * beta * f)


@dataclass(frozen=True, eq=False)
class BoltzmannTable:
    states: np.ndarray
    probs: np.ndarray
    energies: np.ndarray = field(repr=False)

    def marginal_high(self) -> np.ndarray:
        """P(s_i high) for every spin."""
        return self.probs @ (self.states == 1)


def exact_boltzmann(model: IsingModel, beta: float, max_spins: int = MAX_BOLTZMANN_SPINS) -> BoltzmannTable:
    """Normalized P(s) proportional to exp(-beta H(s)) over all 2^n states."""
    if beta < 0:
        raise ContractError("beta must be nonnegative")
    if model.n > max_spins:
        raise CapacityError(f"exact_boltzmann capped at n={max_spins}, got n={model.n}")
    states = all_states(model.n, model.domain)
    e = energies(model, states)
    logw = -beta * e
    logw -= logw.max()
    w = np.exp(logw)
    return BoltzmannTable(states, w / w.sum(), e)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
