"""Network graphs, gossip mixing matrices, and their spectra.

Graphs are undirected and connected; mixing weights follow the lazy
Metropolis-Hastings rule, which yields a symmetric, doubly stochastic,
primitive matrix on any connected graph.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "MixingMatrix",
    "AugmentedMixing",
    "OptimalP",
    "ring",
    "random_connected",
    "metropolis",
    "augment",
    "gamma_bound",
    "block_spectral_radii",
    "theory_optimal_p",
]


def _normalize_edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph on nodes 0..n-1.

    Edges are stored as a frozenset of (i, j) pairs with i < j. Construction
    rejects self-loops, out-of-range endpoints, and disconnected graphs.
    """

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 nodes, got n={self.n}")
        for (i, j) in self.edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i},{j}) out of range for n={self.n}")
        if not self._connected():
            raise ValueError("graph is not connected")

    def _connected(self) -> bool:
        adj = self.adjacency()
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for v in np.nonzero(adj[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        return bool(seen.all())

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for (i, j) in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1).astype(np.int64)

    def to_edgelist(self) -> str:
        """One '<i> <j>' line per edge, 0-based, sorted."""
        lines = [f"{i} {j}" for (i, j) in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str, n: int | None = None) -> "Graph":
        edges = set()
        maxnode = -1
        for lineno, raw in enumerate(io.StringIO(text), start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'i j', got {line!r}")
            i, j = int(parts[0]), int(parts[1])
            edges.add(_normalize_edge(i, j))
            maxnode = max(maxnode, i, j)
        if n is None:
            n = maxnode + 1
        return cls(n=n, edges=frozenset(edges))


@dataclass(frozen=True)
class MixingMatrix:
    """Dense gossip matrix with its cached (descending) spectrum."""

    n: int
    W: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    graph: Graph | None = field(default=None, repr=False)

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def lambdaN(self) -> float:
        return float(self.eigenvalues[-1])

    def spectral_gap(self) -> float:
        return 1.0 - self.lambda2

    def validate(self, *, atol: float = 1e-12) -> None:
        """Raise AssertionError unless W is symmetric, doubly stochastic,
        primitive, and supported on the graph's edges."""
        W = self.W
        assert np.max(np.abs(W - W.T)) == 0.0, "W not symmetric"
        assert np.all(W >= -atol) and np.all(W <= 1 + atol), "entries outside [0,1]"
        assert np.max(np.abs(W.sum(axis=1) - 1.0)) <= atol, "rows do not sum to 1"
        ev = self.eigenvalues
        assert abs(ev[0] - 1.0) <= 1e-10, "largest eigenvalue != 1"
        assert ev[1] < 1.0 - 1e-12, "lambda2 not separated from 1"
        assert ev[-1] > -1.0 + 1e-12, "lambdaN not separated from -1"
        if self.graph is not None:
            off = ~self.graph.adjacency()
            np.fill_diagonal(off, False)
            assert np.all(W[off] == 0.0), "weight on a non-edge"

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self.W:
            buf.write(",".join(repr(float(v)) for v in row))
            buf.write("\n")
        return buf.getvalue()


@dataclass(frozen=True)
class AugmentedMixing:
    """Gossip matrix pair used by skipping methods.

    Wa = I - (I - W)/(2*chi) is the averaging weight applied on
    communication rounds; Wb = (I - W)^(1/2) is its square-root companion,
    satisfying I - Wa = Wb^2 / (2*chi).
    """

    chi: float
    Wa: np.ndarray
    Wb: np.ndarray
    mixing: MixingMatrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.mixing.n


def ring(n: int) -> Graph:
    """Cycle graph on n >= 3 nodes; every node has degree 2."""
    if n < 3:
        raise ValueError(f"ring needs n >= 3 (n=2 would duplicate the edge), got {n}")
    edges = frozenset(_normalize_edge(i, (i + 1) % n) for i in range(n))
    return Graph(n=n, edges=edges)


def _edge_budget(n: int, iota: float) -> int:
    # half-up rounding of iota * n(n-1)/2
    return int(iota * n * (n - 1) / 2.0 + 0.5)


def random_connected(n: int, iota: float, seed: int) -> Graph:
    """Random connected graph with round(iota * n(n-1)/2) edges.

    A uniform random spanning tree (random-walk construction) guarantees
    connectivity; the remaining edge budget is filled by sampling non-edges
    uniformly. Deterministic for a fixed seed.

    Parameters
    ----------
    n : int
        Node count, >= 2.
    iota : float
        Connectivity ratio in (0, 1]; iota=1 gives the complete graph.
    seed : int
        Seed for the generator.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not (0 < iota <= 1):
        raise ValueError(f"iota must lie in (0,1], got {iota}")
    m = _edge_budget(n, iota)
    if m < n - 1:
        raise ValueError(
            f"edge budget {m} below n-1={n - 1}: connectivity impossible at iota={iota}"
        )
    rng = np.random.default_rng(seed)

    # Random-walk spanning tree (Broder/Aldous): first-entry edges of a
    # simple random walk on the complete graph form a uniform spanning tree.
    edges = set()
    visited = np.zeros(n, dtype=bool)
    current = int(rng.integers(n))
    visited[current] = True
    n_visited = 1
    while n_visited < n:
        nxt = int(rng.integers(n - 1))
        if nxt >= current:
            nxt += 1
        if not visited[nxt]:
            visited[nxt] = True
            n_visited += 1
            edges.add(_normalize_edge(current, nxt))
        current = nxt

    if m > len(edges):
        pool = [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if (i, j) not in edges
        ]
        take = rng.choice(len(pool), size=m - len(edges), replace=False)
        for k in sorted(take):
            edges.add(pool[k])
    return Graph(n=n, edges=frozenset(edges))


def metropolis(g: Graph) -> MixingMatrix:
    """Lazy Metropolis-Hastings weights W_ij = 1/(1 + max(deg_i, deg_j)).

    The leftover mass goes on the diagonal, so W is symmetric, doubly
    stochastic, and primitive on any connected graph. The spectrum is
    computed with a symmetric eigensolver and cached, sorted descending.
    """
    n = g.n
    deg = g.degrees()
    W = np.zeros((n, n))
    for (i, j) in g.edges:
        w = 1.0 / (1.0 + max(deg[i], deg[j]))
        W[i, j] = w
        W[j, i] = w
    # exact (order-independent) row sums keep the diagonal permutation-
    # equivariant to the last ulp
    for i in range(n):
        W[i, i] = 1.0 - math.fsum(W[i])
    ev = np.linalg.eigvalsh(W)[::-1].copy()
    return MixingMatrix(n=n, W=W, eigenvalues=ev, graph=g)


def augment(w: MixingMatrix, chi: float) -> AugmentedMixing:
    """Build Wa = I - (I-W)/(2*chi) and Wb = (I-W)^(1/2) for chi >= 1.

    Wb comes from the full symmetric eigendecomposition of W; node counts
    are desk-scale so the O(n^3) solve is exact and cheap.
    """
    if chi < 1:
        raise ValueError(f"chi must be >= 1, got {chi}")
    n = w.n
    eye = np.eye(n)
    Wa = eye - (eye - w.W) / (2.0 * chi)
    vals, vecs = np.linalg.eigh(w.W)
    sq = np.sqrt(np.clip(1.0 - vals, 0.0, None))
    Wb = (vecs * sq) @ vecs.T
    Wb = 0.5 * (Wb + Wb.T)
    return AugmentedMixing(chi=float(chi), Wa=Wa, Wb=Wb, mixing=w)


def gamma_bound(w: MixingMatrix, chi: float) -> float:
    """Contraction factor sqrt(1 - (1 - lambda2)/(2*chi)) of the consensus
    error dynamics under averaging with Wa."""
    if chi < 1:
        raise ValueError(f"chi must be >= 1, got {chi}")
    return float(np.sqrt(1.0 - (1.0 - w.lambda2) / (2.0 * chi)))


def block_spectral_radii(w: MixingMatrix, chi: float) -> tuple[np.ndarray, np.ndarray]:
    """Numeric check behind :func:`gamma_bound`.

    For every eigenvalue lambda_i of W below 1, the coupled (iterate,
    correction) error evolves through the 2x2 block
    ``[[nu, -nu], [1-nu, nu]]`` with nu = 1 - (1-lambda_i)/(2*chi). Its two
    eigenvalues are the complex pair nu +- j*sqrt(nu - nu^2), so the spectral
    radius is exactly sqrt(nu). Returns (numeric radii, sqrt(nu)) for all
    such blocks, computed with a dense eigensolver.
    """
    if chi < 1:
        raise ValueError(f"chi must be >= 1, got {chi}")
    lams = w.eigenvalues[1:]
    nus = 1.0 - (1.0 - lams) / (2.0 * chi)
    radii = np.empty(lams.shape[0])
    for k, nu in enumerate(nus):
        block = np.array([[nu, -nu], [1.0 - nu, nu]])
        radii[k] = np.max(np.abs(np.linalg.eigvals(block)))
    return radii, np.sqrt(np.clip(nus, 0.0, None))


@dataclass(frozen=True)
class OptimalP:
    """Communication probability suggestion with a regime flag."""

    p: float
    regime_ok: bool


def theory_optimal_p(w: MixingMatrix, kappa: float) -> OptimalP:
    """p = 1/sqrt((1 - lambda2) * kappa), valid when (1-lambda2)*kappa > 1.

    Outside the well-connected regime the suggestion is p=1 (communicate
    every round) with regime_ok=False.
    """
    gap_kappa = (1.0 - w.lambda2) * kappa
    if gap_kappa <= 1.0:
        return OptimalP(p=1.0, regime_ok=False)
    return OptimalP(p=min(1.0, 1.0 / np.sqrt(gap_kappa)), regime_ok=True)
