"""Tournament graphs with ties: adjacency and dyad-state forms.

A dyad is an unordered pair ``{i, j}`` with ``i < j``. Its state is ``+1`` when
the lower-ordinal vertex ``i`` dominates ``j``, ``-1`` when ``j`` dominates
``i``, and ``0`` when neither does (a tie).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterator

import numpy as np

#: Ordering used for every per-dyad probability triple in the package.
STATE_ORDER = (1, -1, 0)


@dataclass(frozen=True)
class Roster:
    """Ordered vertex set. Position in ``labels`` is the vertex ordinal."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) < 2:
            raise ValueError(f"a roster needs at least 2 vertices, got {len(labels)}")
        if len(set(labels)) != len(labels):
            seen = set()
            dupes = [lab for lab in labels if lab in seen or seen.add(lab)]
            raise ValueError(f"duplicate roster labels: {dupes}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of_size(cls, n: int) -> "Roster":
        width = len(str(n - 1))
        return cls([f"v{i:0{width}d}" for i in range(n)])

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_dyads(self) -> int:
        return n_dyads(self.n_vertices)

    def ordinal(self, label: Hashable) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown vertex label {label!r}") from None

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class DyadIndex:
    i: int
    j: int
    flat: int


def n_dyads(n: int) -> int:
    return n * (n - 1) // 2


def dyad_flat(i: int, j: int, n: int) -> int:
    """Flat index of the unordered pair ``{i, j}`` in lexicographic order."""
    if i == j:
        raise ValueError(f"no dyad for a loop ({i}, {j})")
    if i > j:
        i, j = j, i
    if i < 0 or j >= n:
        raise IndexError(f"pair ({i}, {j}) out of range for {n} vertices")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def iter_dyads(n: int) -> Iterator[DyadIndex]:
    flat = 0
    for i in range(n):
        for j in range(i + 1, n):
            yield DyadIndex(i, j, flat)
            flat += 1


def dyad_endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(i, j)`` of length D, aligned with flat dyad indices."""
    i, j = np.triu_indices(n, k=1)
    return i, j


def _check_adjacency(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError(f"adjacency matrix must be square, got shape {theta.shape}")
    if not np.isin(theta, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    theta = theta.astype(np.int8)
    if theta.shape[0] < 2:
        raise ValueError("adjacency matrix needs at least 2 vertices")
    if np.any(np.diagonal(theta)):
        raise ValueError("adjacency matrix has a nonzero diagonal (loops are not allowed)")
    both = np.argwhere(np.triu(theta & theta.T, k=1))
    if len(both):
        i, j = both[0]
        raise ValueError(f"mutual domination between vertices {i} and {j}")
    return theta


def adjacency_to_dyads(theta) -> np.ndarray:
    """Convert an N x N tournament adjacency matrix to the length-D state vector."""
    theta = _check_adjacency(theta)
    i, j = dyad_endpoints(theta.shape[0])
    return (theta[i, j] - theta[j, i]).astype(np.int8)


def dyads_to_adjacency(xi, roster: Roster | int) -> np.ndarray:
    n = roster if isinstance(roster, int) else roster.n_vertices
    xi = check_states(xi, n_dyads(n))
    theta = np.zeros((n, n), dtype=np.int8)
    i, j = dyad_endpoints(n)
    theta[i, j] = xi == 1
    theta[j, i] = xi == -1
    return theta


def check_states(values, length: int | None = None, name: str = "dyad states") -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.isin(arr, STATE_ORDER).all():
        raise ValueError(f"{name} must take values in {{-1, 0, +1}}")
    return arr.astype(np.int8)


def state_index(states) -> np.ndarray:
    """Position of each state in ``STATE_ORDER`` (+1 -> 0, -1 -> 1, 0 -> 2)."""
    states = np.asarray(states)
    return np.select([states == 1, states == -1], [0, 1], 2).astype(np.intp)


def report_array_to_matrix(y) -> np.ndarray:
    """Convert an N x N x M report array into the M x D report matrix."""
    y = np.asarray(y)
    if y.ndim != 3 or y.shape[0] != y.shape[1]:
        raise ValueError(f"report array must have shape (N, N, M), got {y.shape}")
    rows = []
    for k in range(y.shape[2]):
        try:
            rows.append(adjacency_to_dyads(y[:, :, k]))
        except ValueError as exc:
            raise ValueError(f"informant slice {k}: {exc}") from None
    return np.stack(rows).astype(np.int8)


def copeland_score(xi, roster: Roster | int) -> np.ndarray:
    """Wins minus losses per vertex; ties score nothing."""
    n = roster if isinstance(roster, int) else roster.n_vertices
    xi = check_states(xi, n_dyads(n)).astype(np.int64)
    i, j = dyad_endpoints(n)
    score = np.zeros(n, dtype=np.int64)
    np.add.at(score, i, xi)
    np.add.at(score, j, -xi)
    return score
