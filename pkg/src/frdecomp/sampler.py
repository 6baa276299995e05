"""Multiscale Gaussian free field samplers.

The field is a sum of independent per-scale Gaussian components whose
covariances are the scale blocks C_j; summed over all scales they reproduce
the Green's function of the operator.  Two backends:

* torus: per scale, independent complex Gaussian Fourier modes with variance
  given by the block's spectral multiplier; the real part of the inverse
  transform has exactly the block covariance because the multiplier is even.

* graph: X_j = A_j xi with A_j the symmetric eigendecomposition square root
  of C_j (negative eigenvalues clipped at zero; clipping beyond tolerance is
  a block-quality failure).

Randomness is counter-based: each (scale, replicate batch) pair owns a
Philox stream keyed by (seed, scale index, batch), with replicates laid out
in fixed order inside a batch.  Per-scale independence is structural, output
is byte-identical for a given (config, seed) no matter how generation is
scheduled, and batches are safe parallel units.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graphs import GraphError
from .quadrature import log_gauss_legendre

WHITE_CLIP_TOL = 1e-8


class BlockQualityError(RuntimeError):
    """A scale block failed PSD clipping tolerance during sampling."""


class ZeroModeError(ValueError):
    """Massless backend sampled without zero-mode deflation."""


@dataclass(frozen=True)
class ScalePlan:
    j_min: int
    j_max: int
    L_ratio: float = 2.0
    nodes_per_block: int = 16
    include_white: bool = True   # the exact [0, L^{j_min - 1}] component

    def __post_init__(self):
        if self.j_max < self.j_min:
            raise ValueError("j_max must be >= j_min")
        if self.L_ratio <= 1.0:
            raise ValueError("L_ratio must exceed 1")
        if self.include_white and self.L_ratio ** (self.j_min - 1) > 1.0:
            raise ValueError("plan must start at t <= 1 (exact white piece); "
                             "use include_white=False for bare block sampling")

    @property
    def t_low(self):
        return self.L_ratio ** (self.j_min - 1)

    def scale_labels(self):
        """White sub-plan piece first (labelled j_min - 1), then the blocks."""
        blocks = list(range(self.j_min, self.j_max + 1))
        return ([self.j_min - 1] + blocks) if self.include_white else blocks


@dataclass
class SamplerConfig:
    backend: str                      # "torus" | "graph"
    plan: ScalePlan
    seed: int
    sample_count: int
    lattice: Optional[object] = None  # LatticeSpec
    operator: Optional[object] = None  # GraphOperator
    deflate_zero_mode: bool = False

    def __post_init__(self):
        if self.backend not in ("torus", "graph"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "torus" and self.lattice is None:
            raise ValueError("torus backend requires a lattice spec")
        if self.backend == "graph" and self.operator is None:
            raise ValueError("graph backend requires a graph operator")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")


@dataclass
class FieldSamples:
    """A batch of replicates; components has shape (replicates, scales, sites)."""

    scale_labels: list
    components: np.ndarray
    seed: int

    @property
    def totals(self):
        return self.components.sum(axis=1)

    def replicate(self, r):
        return self.components[r]


REPLICATE_BATCH = 4096


def _stream(seed, scale_index, batch):
    tag = (np.uint64(scale_index) << np.uint64(40)) | np.uint64(batch)
    key = np.array([np.uint64(seed), tag], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _batched_draws(seed, scale_index, count, draw_shape, consume):
    """Feed batches of standard normals (replicates, *draw_shape) to consume.

    Replicate r lives in batch r // REPLICATE_BATCH at a fixed offset, so
    its values never depend on the total count; within a batch the draws are
    sliced to bound memory (numpy Generator streams are draw-size agnostic).
    consume(lo, values) receives replicates [lo, lo + len(values)).
    """
    per_rep = int(np.prod(draw_shape))
    slice_reps = max(1, min(REPLICATE_BATCH, int(2**23 / max(per_rep, 1))))
    n_batches = (count + REPLICATE_BATCH - 1) // REPLICATE_BATCH
    for batch in range(n_batches):
        lo = batch * REPLICATE_BATCH
        hi = min(lo + REPLICATE_BATCH, count)
        rng = _stream(seed, scale_index, batch)
        pos = lo
        while pos < hi:
            k = min(slice_reps, hi - pos)
            vals = rng.standard_normal((k,) + tuple(draw_shape))
            consume(pos, vals)
            pos += k


# ---------------------------------------------------------------------------
# torus backend

def torus_mode_variances(spec, family, plan, table=None, deflate_zero_mode=False):
    """Per-scale Fourier-mode variances v_j(xi) on the dual grid.

    The white piece (scales below the plan) has the exact constant variance
    C (3/B) phi_hat(0) * t_low; each block integrates the spectral
    multiplier over its scale interval.
    """
    from .lattice import build_symbol_table
    if table is None:
        table = build_symbol_table(spec)
    lam = table.values.ravel()
    zero_mode = lam <= 1e-12
    if spec.m2 <= 0.0 and not deflate_zero_mode:
        raise ZeroModeError("m2 = 0 requires zero-mode deflation")
    variances = []
    if plan.include_white:
        variances.append(np.full(lam.shape,
                                 family.low_scale_integral(0.0, plan.t_low)))
    theta = 1.0 - 0.5 * family.arg_scale * lam
    for j in range(plan.j_min, plan.j_max + 1):
        t_lo, t_hi = plan.L_ratio ** (j - 1), plan.L_ratio**j
        tq, wq = log_gauss_legendre(t_lo, t_hi, plan.nodes_per_block)
        flat, offsets, factors = family.quadrature_factors(tq, wq)
        from ._accel import weighted_clenshaw_sum
        variances.append(weighted_clenshaw_sum(flat, offsets, factors, theta))
    # Clip roundoff negatives against the field scale, not the block scale:
    # high-j blocks are uniformly tiny and carry 1e-15-level Clenshaw noise.
    field_scale = max(float(np.max(v)) for v in variances)
    out = []
    for v in variances:
        v = np.asarray(v).copy()
        neg = v < 0
        if np.any(neg):
            worst = float(-v[neg].min())
            if worst > WHITE_CLIP_TOL * max(field_scale, 1e-300):
                raise BlockQualityError(f"negative mode variance {worst}")
            v[neg] = 0.0
        if deflate_zero_mode:
            v[zero_mode] = 0.0
        out.append(v.reshape(spec.shape))
    return out


def sample_torus(config, family, table=None):
    """Draw replicates of the multiscale field on the torus.

    Per scale and replicate, X = Re(ifftn(sqrt(v N^d) (a + i b))) with a, b
    i.i.d. standard normal; because v is even in xi this has covariance
    exactly N^{-d} sum_xi v(xi) e^{i xi (x - y)}, the block kernel.
    """
    spec = config.lattice
    variances = torus_mode_variances(spec, family, config.plan, table=table,
                                     deflate_zero_mode=config.deflate_zero_mode)
    n = spec.size
    scales = config.plan.scale_labels()
    comps = np.empty((config.sample_count, len(scales), n))
    fft_axes = tuple(range(-spec.d, 0))
    for s, v in enumerate(variances):
        amp = np.sqrt(v * n)

        def consume(lo, vals, s=s, amp=amp):
            z = amp * (vals[:, 0] + 1j * vals[:, 1])
            x = np.fft.ifftn(z, axes=fft_axes).real
            comps[lo:lo + len(vals), s] = x.reshape(len(vals), n)

        _batched_draws(config.seed, s, config.sample_count,
                       (2,) + spec.shape, consume)
    return FieldSamples(scale_labels=scales, components=comps, seed=config.seed)


# ---------------------------------------------------------------------------
# graph backend

def _block_factor(matrix, field_scale, clip_tol=WHITE_CLIP_TOL):
    """Symmetric square root with PSD clipping; reports clipped mass."""
    asym = float(np.max(np.abs(matrix - matrix.T)))
    scale = float(np.max(np.abs(matrix)))
    if asym > 1e-9 * max(scale, 1e-300):
        raise GraphError(
            "graph sampler requires a symmetric block (constant vertex measure)")
    sym = 0.5 * (matrix + matrix.T)
    vals, vecs = np.linalg.eigh(sym)
    clipped = float(max(0.0, -vals.min()))
    if clipped > clip_tol * max(field_scale, 1e-300):
        raise BlockQualityError(
            f"eigenvalue clipping {clipped} beyond tolerance of the field scale")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T, clipped


def graph_scale_factors(op, family, plan):
    """Square-root factors A_j for the white piece and every block."""
    from .graphs import scale_block
    blocks = [scale_block(op, family, j, plan.L_ratio, plan.nodes_per_block)
              for j in range(plan.j_min, plan.j_max + 1)]
    factors = []
    scales = [b.certificates.max_eig for b in blocks]
    if plan.include_white:
        white_var = family.low_scale_integral(0.0, plan.t_low)
        scales.append(white_var)
        factors.append(np.sqrt(white_var) * np.eye(op.n))
    field_scale = max(scales)
    for blk in blocks:
        A, _ = _block_factor(blk.matrix, field_scale)
        factors.append(A)
    return factors


def sample_graph(config, family, factors=None):
    """Draw replicates X_j = A_j xi_j on a graph (n <= 4096).

    With deflate_zero_mode the mu-weighted mean is removed from every
    component (massless fields exist on the mean-zero subspace only).
    """
    op = config.operator
    if op.n > 4096:
        raise GraphError("graph sampler limited to n <= 4096")
    if op.is_singular and not config.deflate_zero_mode:
        raise ZeroModeError("singular operator requires zero-mode deflation")
    if factors is None:
        factors = graph_scale_factors(op, family, config.plan)
    scales = config.plan.scale_labels()
    comps = np.empty((config.sample_count, len(scales), op.n))
    weights = op.graph.mu / op.graph.mu.sum()
    for s, A in enumerate(factors):

        def consume(lo, vals, s=s, A=A):
            x = vals @ A.T
            if config.deflate_zero_mode:
                x = x - (x @ weights)[:, None]
            comps[lo:lo + len(vals), s] = x

        _batched_draws(config.seed, s, config.sample_count, (op.n,), consume)
    return FieldSamples(scale_labels=scales, components=comps, seed=config.seed)


# ---------------------------------------------------------------------------
# statistical verification

@dataclass
class CovarianceReport:
    empirical: np.ndarray
    oracle: np.ndarray
    standard_errors: np.ndarray
    z_scores: np.ndarray
    sample_count: int

    @property
    def max_abs_z(self):
        return float(np.max(np.abs(self.z_scores)))


def covariance_report(samples, oracle_green, min_samples=1000):
    """Standardized deviation of the empirical covariance from the oracle.

    The fields have known mean zero, so the estimator is X^T X / R and the
    exact Gaussian sampling variance of each entry is
    (C_xx C_yy + C_xy^2) / R, evaluated with the oracle covariance.
    """
    totals = samples if isinstance(samples, np.ndarray) else samples.totals
    R = totals.shape[0]
    if R < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {R}")
    oracle = np.asarray(oracle_green, dtype=float)
    emp = totals.T @ totals / R
    diag = np.diag(oracle)
    var = (np.outer(diag, diag) + oracle**2) / R
    se = np.sqrt(var)
    z = (emp - oracle) / se
    return CovarianceReport(empirical=emp, oracle=oracle, standard_errors=se,
                            z_scores=z, sample_count=R)
