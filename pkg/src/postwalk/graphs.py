"""Network families for walk experiments and their Laplacian Hamiltonians.

Grid-based families (cylinder, Moebius strip, torus) use row-major node
indexing, index = r * cols + c. Simple families (line, cycle, star,
complete) use the obvious 0..n-1 labelling with the star hub at index 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

GRID_KINDS = ("cylinder", "moebius", "torus")
SIMPLE_KINDS = ("line", "cycle", "star", "complete")


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected, unweighted, simple graph stored as a dense adjacency matrix."""

    n: int
    adjacency: np.ndarray
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.int64)
        if adj.shape != (self.n, self.n):
            raise ValueError(f"adjacency must be {self.n}x{self.n}, got {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise ValueError("adjacency must have zero diagonal")
        if not np.all((adj == 0) | (adj == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        adj.setflags(write=False)
        degrees = adj.sum(axis=1)
        degrees.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "degrees", degrees)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Undirected edge list with src < dst."""
        src, dst = np.nonzero(np.triu(self.adjacency))
        return list(zip(src.tolist(), dst.tolist()))

    def is_connected(self) -> bool:
        n_comp, _ = connected_components(self.adjacency, directed=False)
        return n_comp == 1

    def is_regular(self) -> bool:
        """True iff all node degrees are equal (exact integer comparison)."""
        return bool(np.all(self.degrees == self.degrees[0]))


def _from_edges(n: int, edges: set[tuple[int, int]]) -> NetworkGraph:
    adj = np.zeros((n, n), dtype=np.int64)
    for a, b in edges:
        if a == b:
            raise ValueError(f"self-loop at node {a}")
        adj[a, b] = 1
        adj[b, a] = 1
    return NetworkGraph(n=n, adjacency=adj)


def build_grid_topology(rows: int, cols: int, kind: str) -> NetworkGraph:
    """Build a rows x cols lattice closed up as a cylinder, Moebius strip or torus.

    All three share the open-sheet 4-neighbour edges. The column direction is
    periodic in every kind: node (r, cols-1) connects back to column 0, at row
    r for cylinder/torus and at the flipped row rows-1-r for the Moebius strip.
    Only the torus additionally wraps the row direction; the other two keep
    rows 0 and rows-1 as open boundaries of degree-3 nodes.
    """
    if kind not in GRID_KINDS:
        raise ValueError(f"unknown grid kind {kind!r}; expected one of {GRID_KINDS}")
    if rows < 3 or cols < 3:
        raise ValueError(f"rows and cols must be >= 3 (got {rows}x{cols}); "
                         "smaller wraps would create multi-edges")

    def idx(r: int, c: int) -> int:
        return r * cols + c

    edges: set[tuple[int, int]] = set()
    for r in range(rows):
        for c in range(cols - 1):
            edges.add((idx(r, c), idx(r, c + 1)))
        # column-direction wrap (seam)
        if kind == "moebius":
            edges.add(tuple(sorted((idx(r, cols - 1), idx(rows - 1 - r, 0)))))
        else:
            edges.add((idx(r, 0), idx(r, cols - 1)))
    for c in range(cols):
        for r in range(rows - 1):
            edges.add((idx(r, c), idx(r + 1, c)))
        if kind == "torus":
            edges.add((idx(0, c), idx(rows - 1, c)))

    return _from_edges(rows * cols, edges)


def build_simple_topology(n: int, kind: str) -> NetworkGraph:
    """Build a line, cycle, star (hub at index 0) or complete graph on n nodes."""
    if kind not in SIMPLE_KINDS:
        raise ValueError(f"unknown simple kind {kind!r}; expected one of {SIMPLE_KINDS}")
    minimum = 3 if kind == "cycle" else 2
    if n < minimum:
        raise ValueError(f"{kind} graph needs at least {minimum} nodes, got {n}")

    edges: set[tuple[int, int]] = set()
    if kind == "line":
        edges = {(i, i + 1) for i in range(n - 1)}
    elif kind == "cycle":
        edges = {(i, i + 1) for i in range(n - 1)} | {(0, n - 1)}
    elif kind == "star":
        edges = {(0, i) for i in range(1, n)}
    elif kind == "complete":
        edges = {(i, j) for i in range(n) for j in range(i + 1, n)}
    return _from_edges(n, edges)


def remove_node(g: NetworkGraph, k: int) -> tuple[NetworkGraph, dict[int, int]]:
    """Delete node k, keeping the relative order of the survivors.

    Returns the reduced graph together with the original->new index map, so
    node labels of the parent graph stay addressable after the defect.
    Raises if the removal disconnects the graph.
    """
    if not 0 <= k < g.n:
        raise ValueError(f"node index {k} out of range for {g.n}-node graph")
    keep = [i for i in range(g.n) if i != k]
    adj = g.adjacency[np.ix_(keep, keep)]
    reduced = NetworkGraph(n=g.n - 1, adjacency=adj)
    if not reduced.is_connected():
        raise ValueError(f"removing node {k} disconnects the graph")
    index_map = {orig: new for new, orig in enumerate(keep)}
    return reduced, index_map


def laplacian(g: NetworkGraph) -> np.ndarray:
    """Walk Hamiltonian H = D - A: degrees on the diagonal, -1 per edge."""
    return np.diag(g.degrees).astype(np.float64) - g.adjacency.astype(np.float64)


def edge_list_csv(g: NetworkGraph) -> str:
    """Serialize the undirected edge list as 'src,dst' lines with a header."""
    lines = ["src,dst"]
    lines += [f"{a},{b}" for a, b in g.edges]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GraphSpec:
    """Declarative graph description as it appears in run-config files.

    Grid families take rows/cols; simple families take n. Defects are node
    indices of the *original* graph, removed in order.
    """

    family: str
    rows: int | None = None
    cols: int | None = None
    n: int | None = None
    defects: tuple[int, ...] = ()

    def __post_init__(self):
        if self.family in GRID_KINDS:
            if self.rows is None or self.cols is None:
                raise ValueError(f"{self.family} graph spec needs rows and cols")
        elif self.family in SIMPLE_KINDS:
            if self.n is None:
                raise ValueError(f"{self.family} graph spec needs n")
        else:
            raise ValueError(f"unknown graph family {self.family!r}")
        object.__setattr__(self, "defects", tuple(int(d) for d in self.defects))

    def build(self) -> tuple[NetworkGraph, dict[int, int]]:
        """Construct the graph; returns it with the original->current index map."""
        if self.family in GRID_KINDS:
            g = build_grid_topology(self.rows, self.cols, self.family)
        else:
            g = build_simple_topology(self.n, self.family)
        index_map = {i: i for i in range(g.n)}
        for defect in self.defects:
            if defect not in index_map:
                raise ValueError(f"defect node {defect} was already removed or never existed")
            g, step_map = remove_node(g, index_map[defect])
            index_map = {orig: step_map[cur] for orig, cur in index_map.items()
                         if cur in step_map}
        return g, index_map
