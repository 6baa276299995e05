"""Scale blocks for weighted-graph Laplacians via Chebyshev operator filters.

The probabilistic Laplacian L u(x) = mu_x^{-1} sum_y mu_xy (u(x) - u(y)) has
spectrum in [0, 2]; the killed walk kappa L + (1 - kappa) stays in [0, 2] and
the resolvent L + m^2 in [0, 2 + m^2].  Applying the degree-floor(t)
polynomial W*_t((3/B) Lambda) moves supports by at most floor(t) steps of
graph distance, so the scale blocks

    C_j = int_{L^{j-1}}^{L^j} t^2 (3/B) C W*_t((3/B) Lambda) dt/t

are positive semi-definite with exact range L^j, and their sum over all
scales reproduces the inverse of Lambda.

L is self-adjoint on l^2(mu), not as a plain matrix; all symmetrizations and
eigenvalue certificates therefore happen in the mu-weighted geometry (for
graphs with constant vertex measure this is plain matrix symmetry).
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from .quadrature import log_gauss_legendre

DENSE_ORACLE_LIMIT = 256
DEFAULT_NODES_PER_BLOCK = 16


class GraphError(ValueError):
    pass


class SingularOperatorError(GraphError):
    """Reconstruction of a singular operator without zero-mode deflation."""


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with positive edge weights mu_xy and measure mu_x."""

    n: int
    adjacency: sp.csr_matrix
    mu: np.ndarray

    @classmethod
    def from_edges(cls, n, edges):
        rows, cols, vals = [], [], []
        for x, y, w in edges:
            x, y, w = int(x), int(y), float(w)
            if not (0 <= x < n and 0 <= y < n):
                raise GraphError(f"edge ({x},{y}) outside vertex range")
            if x == y:
                raise GraphError("self-loops are not allowed")
            if w <= 0:
                raise GraphError("edge weights must be positive")
            rows += [x, y]
            cols += [y, x]
            vals += [w, w]
        adj = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        mu = np.asarray(adj.sum(axis=1)).ravel()
        if np.any(mu <= 0):
            raise GraphError("graph has isolated vertices")
        return cls(n=n, adjacency=adj, mu=mu)

    @classmethod
    def from_edgelist_file(cls, path):
        """Parse lines "x y mu_xy" with 0-based vertex ids; '#' comments."""
        edges = []
        n = 0
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                x, y, w = line.split()
                edges.append((int(x), int(y), float(w)))
                n = max(n, int(x) + 1, int(y) + 1)
        return cls.from_edges(n, edges)

    def write_edgelist(self, path):
        coo = sp.triu(self.adjacency, k=1).tocoo()
        with open(path, "w") as fh:
            for x, y, w in zip(coo.row, coo.col, coo.data):
                fh.write(f"{x} {y} {w:.17g}\n")

    def distances(self):
        """Unweighted BFS distance matrix (inf on disconnected pairs)."""
        if not hasattr(self, "_dist"):
            d = shortest_path(self.adjacency, method="D", unweighted=True)
            object.__setattr__(self, "_dist", d)
        return self._dist


def cycle_graph(n, weight=1.0):
    return WeightedGraph.from_edges(n, [(i, (i + 1) % n, weight) for i in range(n)])


def two_vertex_graph(weight=1.0):
    return WeightedGraph.from_edges(2, [(0, 1, weight)])


class GraphOperator:
    """laplacian, killed(kappa) or resolvent(m2) operator on a weighted graph."""

    def __init__(self, graph, kind="laplacian", kappa=None, m2=None, m_plus2=64.0):
        if kind not in ("laplacian", "killed", "resolvent"):
            raise GraphError(f"unknown operator kind {kind!r}")
        if kind == "killed":
            if kappa is None or not 0.0 < kappa < 1.0:
                raise GraphError("killed operator requires kappa in (0, 1)")
        if kind == "resolvent":
            if m2 is None or not 0.0 <= m2 <= m_plus2:
                raise GraphError(f"resolvent requires m2 in [0, {m_plus2}]")
        self.graph = graph
        self.kind = kind
        self.kappa = kappa
        self.m2 = m2
        self._eig = None

    @property
    def n(self):
        return self.graph.n

    @property
    def B(self):
        if self.kind == "resolvent":
            return 2.0 + self.m2
        return 2.0

    @property
    def is_singular(self):
        return self.kind == "laplacian" or (self.kind == "resolvent" and self.m2 == 0.0)

    def apply_laplacian(self, u):
        """L u with L u(x) = mu_x^{-1} sum_y mu_xy (u(x) - u(y))."""
        u = np.asarray(u, dtype=float)
        wu = self.graph.adjacency @ u
        if u.ndim == 1:
            return u - wu / self.graph.mu
        return u - wu / self.graph.mu[:, None]

    def apply(self, u):
        """The full operator: L, kappa L + (1 - kappa), or L + m2."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.n:
            raise GraphError(f"vector length {u.shape[0]} != {self.n}")
        lu = self.apply_laplacian(u)
        if self.kind == "laplacian":
            return lu
        if self.kind == "killed":
            return self.kappa * lu + (1.0 - self.kappa) * u
        return lu + self.m2 * u

    def dense(self):
        return self.apply(np.eye(self.n))

    def sym_dense(self):
        """D^{1/2} Lambda D^{-1/2}: the symmetric conjugate of the operator."""
        s = np.sqrt(self.graph.mu)
        M = (self.dense() * (1.0 / s)[None, :]) * s[:, None]
        return 0.5 * (M + M.T)

    def eigensystem(self):
        if self._eig is None:
            vals, vecs = np.linalg.eigh(self.sym_dense())
            self._eig = (vals, vecs)
        return self._eig

    def spectral_gap(self):
        """Smallest eigenvalue on the working subspace (drops exact kernel)."""
        vals, _ = self.eigensystem()
        vmax = max(float(vals.max()), 1e-30)
        pos = vals[vals > 1e-12 * vmax]
        if len(pos) == 0:
            raise SingularOperatorError("operator has no positive spectrum")
        return float(pos.min())

    def apply_weight_dense(self, weight_fn):
        """Oracle: weight_fn of the operator via dense eigendecomposition.

        weight_fn receives the eigenvalue array; the result is the plain
        matrix of weight_fn(Lambda), mapped back from the symmetric conjugate.
        """
        vals, vecs = self.eigensystem()
        w = np.asarray(weight_fn(vals), dtype=float)
        s = np.sqrt(self.graph.mu)
        M = (vecs * w) @ vecs.T
        return (M * s[None, :]) / s[:, None]


def laplacian_apply(op, u):
    """Apply the operator of `op` to a vector (kind-dependent variant of L)."""
    return op.apply(u)


def chebyshev_apply(op, weight, u):
    """W*_t((3/B) Lambda) u by the three-term Chebyshev recurrence.

    weight is a RescaledWeight whose arg_scale must equal 3/op.B.  The
    recurrence runs in X = I - (3/(2B)) Lambda with T_{k+1} = 2 X T_k -
    T_{k-1}, accumulating c_0 u + 2 sum_k c_k T_k(X) u.  Since the result is
    a degree-floor(t) polynomial in Lambda applied to u, its support lies
    within graph distance floor(t) of supp(u).
    """
    if abs(weight.arg_scale - 3.0 / op.B) > 1e-12:
        raise GraphError(
            f"weight rescaled for B={3.0 / weight.arg_scale}, operator has B={op.B}")
    u = np.asarray(u, dtype=float)
    c = weight.base.coeffs
    half = 0.5 * weight.arg_scale

    def apply_x(v):
        return v - half * op.apply(v)

    acc = c[0] * u
    if len(c) == 1:
        return acc
    v_prev = u
    v_cur = apply_x(u)
    acc = acc + 2.0 * c[1] * v_cur
    for k in range(2, len(c)):
        v_prev, v_cur = v_cur, 2.0 * apply_x(v_cur) - v_prev
        acc = acc + 2.0 * c[k] * v_cur
    return acc


# ---------------------------------------------------------------------------
# scale blocks

@dataclass
class BlockCertificates:
    min_eig: float
    max_eig: float
    max_out_of_range: float
    range_bound: int
    asymmetry: float

    def to_json(self, extra=None):
        d = {"min_eig": self.min_eig, "max_eig": self.max_eig,
             "max_out_of_range": self.max_out_of_range,
             "range_bound": self.range_bound, "asymmetry": self.asymmetry}
        if extra:
            d.update(extra)
        return json.dumps(d, sort_keys=True)


@dataclass
class ScaleBlock:
    """C_j = scale integral of the decomposition kernel over [L^{j-1}, L^j]."""

    j: int
    L_ratio: float
    matrix: np.ndarray
    node_count: int
    certificates: BlockCertificates

    @property
    def t_interval(self):
        return (self.L_ratio ** (self.j - 1), self.L_ratio**self.j)


def _mu_symmetrize(matrix, mu):
    """Average with the mu-weighted transpose (detailed balance).

    Functions of the operator satisfy mu_x M_xy = mu_y M_yx exactly, i.e.
    M = D^{-1} M^T D; for constant mu this reduces to plain averaging.
    Returns the symmetrized matrix and the size of the correction.
    """
    partner = (matrix.T * mu[None, :]) / mu[:, None]
    asym = float(np.max(np.abs(matrix - partner)))
    return 0.5 * (matrix + partner), asym


def block_over_interval(op, family, t_lo, t_hi, nodes_per_octave=DEFAULT_NODES_PER_BLOCK):
    """Quadrature of t^2 (3/B) C W*_t((3/B) Lambda) dt/t over [t_lo, t_hi].

    Returns the plain matrix (columns are the integrated filters applied to
    basis vectors) before symmetrization or certification.
    """
    if abs(family.B - op.B) > 1e-12 * op.B:
        raise GraphError(f"family B={family.B} does not match operator B={op.B}")
    tq, wq = log_gauss_legendre(t_lo, t_hi, nodes_per_octave)
    eye = np.eye(op.n)
    total = np.zeros((op.n, op.n))
    scale = family.normalization.constant * family.multiplier
    for t, w in zip(tq, wq):
        filt = chebyshev_apply(op, family.rescaled(t), eye)
        total += (w * scale * t**2) * filt
    return total, len(tq)


def scale_block(op, family, j, L_ratio=2.0, nodes_per_block=DEFAULT_NODES_PER_BLOCK):
    """Build C_j with its range / PSD certificates."""
    if L_ratio <= 1.0:
        raise GraphError("L_ratio must exceed 1")
    if nodes_per_block < 4:
        raise GraphError("nodes_per_block must be at least 4")
    t_lo, t_hi = L_ratio ** (j - 1), L_ratio**j
    raw, node_count = block_over_interval(op, family, t_lo, t_hi, nodes_per_block)
    matrix, asym = _mu_symmetrize(raw, op.graph.mu)
    dist = op.graph.distances()
    range_bound = int(np.ceil(L_ratio**j))
    outside = dist >= range_bound
    oor = float(np.max(np.abs(matrix[outside]))) if outside.any() else 0.0
    s = np.sqrt(op.graph.mu)
    sym = matrix * s[:, None] / s[None, :]
    eigs = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    certs = BlockCertificates(
        min_eig=float(eigs.min()), max_eig=float(eigs.max()),
        max_out_of_range=oor, range_bound=range_bound, asymmetry=asym)
    return ScaleBlock(j=j, L_ratio=float(L_ratio), matrix=matrix,
                      node_count=node_count, certificates=certs)


# ---------------------------------------------------------------------------
# reconstruction

def default_scale_plan(op, family, L_ratio=2.0, t_min=0.25, target_tail_rel=1e-7):
    """(j_min, j_max) covering [t_min, t_max] with the tail below target.

    The lower end is fixed (everything below it is the exactly-known
    degree-0 region); the upper end comes from the periodization tail of phi
    at the smallest rescaled eigenvalue.
    """
    from .lattice import plan_t_max
    j_min = int(np.ceil(np.log(t_min) / np.log(L_ratio)))
    gap = op.spectral_gap()
    t_max = plan_t_max(family, gap, target_tail_rel)
    j_max = int(np.ceil(np.log(t_max) / np.log(L_ratio)))
    return j_min, j_max


@dataclass
class ReconstructionReport:
    matrix: np.ndarray
    oracle: Optional[np.ndarray]
    max_rel_error: Optional[float]
    j_min: int
    j_max: int
    L_ratio: float
    tail_low_exact: float
    tail_high_bound: float
    deflated: bool
    blocks: Optional[list] = None


def reconstruct_green(op, family, j_min=None, j_max=None, L_ratio=2.0,
                      nodes_per_block=DEFAULT_NODES_PER_BLOCK,
                      target_tail_rel=1e-7, keep_blocks=False,
                      compare_dense=True):
    """Sum scale blocks and compare to the dense inverse of the operator.

    Singular operators (massless Laplacian) are handled by deflation of the
    constant vector: the comparison runs on the mean-zero subspace against
    the pseudo-inverse; blocks themselves are not modified (their finite
    range is preserved).
    """
    if op.is_singular and op.kind != "laplacian":
        raise SingularOperatorError("resolvent with m2=0; use kind='laplacian'")
    if j_min is None or j_max is None:
        auto_min, auto_max = default_scale_plan(op, family, L_ratio,
                                                target_tail_rel=target_tail_rel)
        j_min = auto_min if j_min is None else j_min
        j_max = auto_max if j_max is None else j_max
    t0 = L_ratio ** (j_min - 1)
    if t0 > 1.0:
        raise GraphError("scale plan must start at t <= 1 (exact low piece)")
    total = family.low_scale_integral(0.0, t0) * np.eye(op.n)
    blocks = [] if keep_blocks else None
    for j in range(j_min, j_max + 1):
        blk = scale_block(op, family, j, L_ratio, nodes_per_block)
        total += blk.matrix
        if keep_blocks:
            blocks.append(blk)
    gap = op.spectral_gap()
    _, _, tail_high = family.scale_integral(
        np.array([gap]), 1.0, L_ratio**j_max, nodes_per_octave=4)
    oracle = None
    max_rel = None
    deflated = bool(op.is_singular)
    if compare_dense and op.n <= DENSE_ORACLE_LIMIT:
        compare = total
        if deflated:
            # mu-orthogonal pseudo-inverse oracle; compare on mean-zero subspace
            vals, vecs = op.eigensystem()
            s = np.sqrt(op.graph.mu)
            inv = np.zeros_like(vals)
            keep = vals > 1e-12 * vals.max()
            inv[keep] = 1.0 / vals[keep]
            oracle = ((vecs * inv) @ vecs.T) * s[None, :] / s[:, None]
            p = op.graph.mu / op.graph.mu.sum()
            proj = np.eye(op.n) - np.outer(np.ones(op.n), p)
            compare = proj @ total @ proj.T
            oracle = proj @ oracle @ proj.T
        else:
            oracle = np.linalg.solve(op.dense(), np.eye(op.n))
        max_rel = float(np.max(np.abs(compare - oracle)) / np.max(np.abs(oracle)))
    return ReconstructionReport(
        matrix=total, oracle=oracle, max_rel_error=max_rel, j_min=j_min,
        j_max=j_max, L_ratio=float(L_ratio),
        tail_low_exact=0.0, tail_high_bound=float(tail_high[0]) / gap,
        deflated=deflated, blocks=blocks)


def killed_green_consistency(graph, kappa):
    """Residual of G^kappa = kappa^{-1} G_{(1-kappa)/kappa} (two dense solves)."""
    if not 0.0 < kappa < 1.0:
        raise GraphError("kappa must lie in (0, 1)")
    killed = GraphOperator(graph, "killed", kappa=kappa)
    m2 = (1.0 - kappa) / kappa
    resolvent = GraphOperator(graph, "resolvent", m2=m2)
    g_killed = np.linalg.solve(killed.dense(), np.eye(graph.n))
    g_resolvent = np.linalg.solve(resolvent.dense(), np.eye(graph.n))
    diff = g_killed - g_resolvent / kappa
    return float(np.max(np.abs(diff)) / np.max(np.abs(g_killed)))
