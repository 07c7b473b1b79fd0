"""Undirected graphs, Laplacian spectra and the named families used in the analysis.

Graphs are stored as a sorted edge list on nodes ``0..n-1``.  Dense matrices
(adjacency, Laplacian) are only materialised on request; everything here is
desk-scale (a few hundred nodes at most).
"""

from __future__ import annotations

import io
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from .exceptions import GraphGenerationError, NumericError, ParameterError

__all__ = [
    "Graph",
    "Spectrum",
    "FAMILIES",
    "build_named",
    "build_random",
    "spectrum",
    "laplacian_eigenvalues",
    "is_connected",
    "component_count",
    "lambda2_closed_form",
    "read_edge_list",
    "write_edge_list",
    "parse_edge_list",
    "format_edge_list",
]

# eigenvalues below this are treated as zero
ZERO_TOL = 1e-9
MAX_RANDOM_TRIES = 1000


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on ``n`` nodes.

    ``edges`` is normalised to a sorted tuple of pairs ``(i, j)`` with ``i < j``.
    Construction does not require connectivity (so that disconnected inputs can
    be inspected); the builders in this module only ever return connected graphs.
    """

    n: int
    edges: tuple = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ParameterError(f"node count must be positive, got {self.n}")
        norm = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ParameterError(f"self loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ParameterError(f"edge ({i}, {j}) out of range for n={n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        deg.setflags(write=False)
        return deg

    @property
    def d_max(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @cached_property
    def neighbors(self) -> tuple:
        nbrs = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(v)) for v in nbrs)

    @cached_property
    def arcs(self) -> tuple:
        """Directed receptions as ``(receivers, senders)`` index arrays.

        Undirected edge ``e = (i, j)`` contributes arc ``2e`` (node ``i`` hears ``j``)
        and arc ``2e + 1`` (node ``j`` hears ``i``).  Channel noise draws are laid
        out in this order.
        """
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        recv = np.empty(2 * len(e), dtype=np.int64)
        send = np.empty(2 * len(e), dtype=np.int64)
        recv[0::2], send[0::2] = e[:, 0], e[:, 1]
        recv[1::2], send[1::2] = e[:, 1], e[:, 0]
        recv.setflags(write=False)
        send.setflags(write=False)
        return recv, send

    @cached_property
    def arc_incidence(self) -> sparse.csr_matrix:
        """Sparse ``(n, 2|E|)`` matrix summing arc terms into their receiving node."""
        recv, _ = self.arcs
        m = len(recv)
        return sparse.csr_matrix(
            (np.ones(m), (recv, np.arange(m))), shape=(self.n, m)
        )

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        if self.edges:
            e = np.asarray(self.edges)
            a[e[:, 0], e[:, 1]] = 1.0
            a[e[:, 1], e[:, 0]] = 1.0
        return a

    def laplacian(self) -> np.ndarray:
        a = self.adjacency()
        return np.diag(self.degrees.astype(float)) - a

    def relabel(self, perm) -> "Graph":
        """Graph with node ``i`` renamed to ``perm[i]``."""
        perm = np.asarray(perm)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise ParameterError("perm must be a permutation of range(n)")
        edges = [(int(perm[i]), int(perm[j])) for i, j in self.edges]
        return Graph(self.n, edges, name=self.name)

    def __repr__(self):
        label = self.name or "Graph"
        return f"<{label}: n={self.n}, edges={self.edge_count}>"


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition ``L = U diag(eigenvalues) U^T`` of a connected graph."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def phi(self) -> np.ndarray:
        """Orthonormal basis of the disagreement subspace (columns 2..N of ``U``)."""
        return self.eigenvectors[:, 1:]

    @property
    def b_diag(self) -> np.ndarray:
        return -self.eigenvalues[1:]


# --------------------------------------------------------------------------
# connectivity


def _components(g: Graph) -> list:
    seen = np.zeros(g.n, dtype=bool)
    comps = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comps.append(comp)
    return comps


def is_connected(g: Graph) -> bool:
    """Breadth-first reachability check; independent of any spectral computation."""
    return len(_components(g)) == 1


def component_count(g: Graph) -> int:
    return len(_components(g))


# --------------------------------------------------------------------------
# spectra


def laplacian_eigenvalues(g: Graph) -> np.ndarray:
    """Ascending Laplacian eigenvalues; works for disconnected graphs too."""
    return np.linalg.eigvalsh(g.laplacian())


def spectrum(g: Graph) -> Spectrum:
    """Symmetric eigendecomposition of the Laplacian of a connected graph.

    The first eigenvector is set to exactly ``1/sqrt(N)`` (all positive).
    """
    if g.n < 2:
        raise ParameterError("spectrum needs at least two nodes")
    try:
        w, u = np.linalg.eigh(g.laplacian())
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    if w[1] <= ZERO_TOL:
        raise ParameterError(f"graph is not connected (lambda_2 = {w[1]:.3g})")
    w = w.copy()
    w[0] = 0.0
    u = u.copy()
    u[:, 0] = 1.0 / math.sqrt(g.n)
    w.setflags(write=False)
    u.setflags(write=False)
    return Spectrum(w, u)


# --------------------------------------------------------------------------
# named families


def _complete(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _star(n):
    return [(0, j) for j in range(1, n)]


def _ring(n):
    if n < 3:
        raise ParameterError("ring needs n >= 3")
    return [(i, (i + 1) % n) for i in range(n)]


def _line(n):
    return [(i, i + 1) for i in range(n - 1)]


def _tree(n):
    # hub 0 with legs of length two; a leftover node hangs off the hub
    edges, node = [], 1
    while node + 1 < n:
        edges += [(0, node), (node, node + 1)]
        node += 2
    if node < n:
        edges.append((0, node))
    return edges


def _lattice(n, k):
    if k < 2 or k % 2:
        raise ParameterError(f"k-regular lattice needs an even k >= 2, got k={k}")
    if k >= n:
        raise ParameterError(f"k-regular lattice needs k < n (k={k}, n={n})")
    return [(i, (i + j) % n) for i in range(n) for j in range(1, k // 2 + 1)]


def _cubic(n):
    # Moebius ladder: ring plus antipodal chords
    if n < 4 or (3 * n) % 2:
        raise ParameterError(f"a cubic graph needs an even n >= 4 (n*3 must be even), got n={n}")
    return _ring(n) + [(i, i + n // 2) for i in range(n // 2)]


def _bipartite(p, q):
    if p < 1 or q < 1:
        raise ParameterError("bipartite_complete needs p, q >= 1")
    return [(i, p + j) for i in range(p) for j in range(q)]


FAMILIES = (
    "complete",
    "star",
    "ring",
    "line",
    "tree",
    "cubic",
    "k_regular_lattice",
    "bipartite_complete",
)


def build_named(family: str, n: int | None = None, *, k: int | None = None,
                p: int | None = None, q: int | None = None) -> Graph:
    """Deterministic member of a named family.

    ``k_regular_lattice`` takes ``k`` (even; each node joins its ``k/2`` nearest
    neighbours on either side).  ``bipartite_complete`` takes ``p`` and ``q``;
    ``n`` may be omitted or must equal ``p + q``.
    """
    if family == "bipartite_complete":
        if p is None or q is None:
            raise ParameterError("bipartite_complete needs p and q")
        p, q = int(p), int(q)
        if n is not None and int(n) != p + q:
            raise ParameterError(f"bipartite_complete: p + q = {p + q} != n = {n}")
        if p + q < 2:
            raise ParameterError("need at least two nodes")
        return Graph(p + q, _bipartite(p, q), name=f"bipartite_complete({p},{q})")

    if n is None:
        raise ParameterError(f"{family} needs n")
    n = int(n)
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    if family == "complete":
        edges, label = _complete(n), f"complete({n})"
    elif family == "star":
        edges, label = _star(n), f"star({n})"
    elif family == "ring":
        edges, label = _ring(n), f"ring({n})"
    elif family == "line":
        edges, label = _line(n), f"line({n})"
    elif family == "tree":
        edges, label = _tree(n), f"tree({n})"
    elif family == "cubic":
        edges, label = _cubic(n), f"cubic({n})"
    elif family == "k_regular_lattice":
        if k is None:
            raise ParameterError("k_regular_lattice needs k")
        edges, label = _lattice(n, int(k)), f"k_regular_lattice({n},k={k})"
    else:
        raise ParameterError(f"unknown graph family {family!r}; choose from {FAMILIES}")
    return Graph(n, edges, name=label)


def lambda2_closed_form(family: str, n: int | None = None, *, k=None, p=None, q=None) -> float:
    """Algebraic connectivity of a named family from its closed form.

    Defined for complete, star, ring, line, bipartite_complete, k_regular_lattice
    and tree (the two-level spider used here).
    """
    if family == "complete":
        return float(n)
    if family == "star":
        return 1.0
    if family == "ring":
        return 4.0 * math.sin(math.pi / n) ** 2
    if family == "line":
        return 4.0 * math.sin(math.pi / (2 * n)) ** 2
    if family == "bipartite_complete":
        return float(min(p, q))
    if family == "k_regular_lattice":
        return (k + 1) - math.sin((k + 1) * math.pi / n) / math.sin(math.pi / n)
    if family == "tree":
        if n < 5:
            raise ParameterError("closed form holds for the spider with n >= 5")
        return (3.0 - math.sqrt(5.0)) / 2.0
    raise ParameterError(f"no closed form for family {family!r}")


# --------------------------------------------------------------------------
# random graphs


def build_random(model: str, n: int, seed: int, *, p: float | None = None,
                 radius: float | None = None, max_tries: int = MAX_RANDOM_TRIES) -> Graph:
    """Connected random graph, resampled until connected.

    ``model`` is ``"erdos_renyi"`` (edge probability ``p``) or ``"geometric"``
    (uniform points on the unit square joined when within ``radius``).
    """
    n = int(n)
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    if model == "erdos_renyi":
        if p is None or not (0.0 < p <= 1.0):
            raise ParameterError(f"erdos_renyi needs 0 < p <= 1, got {p}")
    elif model == "geometric":
        if radius is None or radius <= 0:
            raise ParameterError(f"geometric needs radius > 0, got {radius}")
    else:
        raise ParameterError(f"unknown random model {model!r}")

    for attempt in range(max_tries):
        if model == "erdos_renyi":
            keep = rng.random(len(iu[0])) < p
        else:
            pts = rng.random((n, 2))
            d = np.linalg.norm(pts[iu[0]] - pts[iu[1]], axis=1)
            keep = d <= radius
        edges = list(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
        param = f"p={p}" if model == "erdos_renyi" else f"r={radius}"
        g = Graph(n, edges, name=f"{model}({n},{param},seed={seed})")
        if is_connected(g):
            return g
    raise GraphGenerationError(
        f"{model}(n={n}) not connected after {max_tries} attempts (seed={seed})"
    )


# --------------------------------------------------------------------------
# edge-list text format: first line N, then one "i j" per line (0-based)


def format_edge_list(g: Graph) -> str:
    lines = [str(g.n)] + [f"{i} {j}" for i, j in g.edges]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str, *, require_connected: bool = True, name: str = "") -> Graph:
    rows = [ln.split("#", 1)[0].strip() for ln in io.StringIO(text)]
    rows = [r for r in rows if r]
    if not rows:
        raise ParameterError("empty edge list")
    try:
        n = int(rows[0])
        edges = []
        for r in rows[1:]:
            a, b = r.split()
            edges.append((int(a), int(b)))
    except ValueError as exc:
        raise ParameterError(f"malformed edge list: {exc}") from exc
    g = Graph(n, edges, name=name or f"edge_list({n})")
    if require_connected and not is_connected(g):
        raise ParameterError("edge list describes a disconnected graph")
    return g


def read_edge_list(path, *, require_connected: bool = True) -> Graph:
    path = Path(path)
    return parse_edge_list(path.read_text(), require_connected=require_connected,
                           name=path.stem)


def write_edge_list(g: Graph, path) -> None:
    Path(path).write_text(format_edge_list(g))
