"""Scalar weight families for the scale decomposition of 1/lambda.

Two families share one mollifier and one normalization constant C:

* continuous:  W_t(lambda) = C phi(lambda^{gamma/2} t), defined for all
  lambda >= 0, with the exact homogeneity identity
  1/lambda = int_0^inf t^{2/gamma} W_t(lambda) dt/t.

* discrete (gamma = 1):  W*_t(lambda) = sum_n phi((x - 2 pi n) t) at
  x = arccos(1 - lambda/2), lambda in [0, 4].  By Poisson summation this is
  the Chebyshev polynomial sum_{|k| <= t} t^{-1} phi_hat(k/t) T_k(1 - lambda/2),
  i.e. a polynomial in lambda of degree at most t -- the property that turns
  the decomposition into finite-range operator filters.

For an operator with spectrum in [0, B] the discrete family is used through
the argument rescaling lambda -> (3/B) lambda with compensation factor 3/B,
so that int t^2 * (3/B) C W*_t((3/B) lambda) dt/t = 1/lambda exactly.

For t < 1 only the k = 0 coefficient survives, so W*_t is the constant
phi_hat(0)/t and the scale integral over [0, 1] equals C phi_hat(0) exactly;
every truncated integral in the package uses that closed form for its low
end and tabulated tail integrals of phi for the high end.
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._accel import clenshaw_folded, weighted_clenshaw_sum
from .quadrature import log_gauss_legendre

DEFAULT_NODES_PER_OCTAVE = 16
DEFAULT_EPS = 1.0
ZERO_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# single-scale weights

@dataclass(frozen=True)
class ChebyshevWeight:
    """Polynomial filter of degree <= t: coefficients c_k = phi_hat(k/t)/t."""

    t: float
    coeffs: np.ndarray

    @property
    def degree(self):
        return len(self.coeffs) - 1


def chebyshev_coefficients(m, t):
    """Coefficients c_k = phi_hat(k/t)/t for 0 <= k <= floor(t)."""
    if t <= 0:
        raise ValueError("scale t must be positive")
    k = np.arange(int(np.floor(t)) + 1, dtype=float)
    return ChebyshevWeight(t=float(t), coeffs=np.asarray(m.phi_hat(k / t)) / t)


def eval_discrete_weight(w, lam):
    """Clenshaw evaluation of W*_t(lambda) = c_0 + 2 sum_k c_k T_k(1 - lambda/2)."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr < 0.0) or np.any(lam_arr > 4.0):
        raise ValueError("lambda outside [0, 4]")
    out = clenshaw_folded(w.coeffs, 1.0 - 0.5 * lam_arr)
    return out if np.ndim(lam) else float(out[0])


def eval_discrete_weight_direct(m, lam, t):
    """Periodized-sum oracle W*_t(lambda) = sum_n phi((x - 2 pi n) t).

    Independent of the Chebyshev route: uses only the phi table.  The sum is
    truncated where |argument| > x_max, where the table is identically zero.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= 0.0) or np.any(lam_arr > 4.0):
        raise ValueError("lambda outside (0, 4]")
    if t <= 0:
        raise ValueError("scale t must be positive")
    x = np.arccos(1.0 - 0.5 * lam_arr)
    reach = m.x_max / t
    n_lo = int(np.floor((x.min() - reach) / (2.0 * np.pi)))
    n_hi = int(np.ceil((x.max() + reach) / (2.0 * np.pi)))
    ns = 2.0 * np.pi * np.arange(n_lo, n_hi + 1)
    out = m.phi((x[:, None] - ns[None, :]) * t).sum(axis=1)
    return out if np.ndim(lam) else float(out[0])


@dataclass(frozen=True)
class RescaledWeight:
    """A Chebyshev weight with argument map lambda -> arg_scale * lambda.

    For an operator with spectrum in [0, B], arg_scale = multiplier = 3/B:
    the argument lands in [0, 3] and the multiplier restores the 1/lambda
    normalization of the scale integral.
    """

    base: ChebyshevWeight
    arg_scale: float
    multiplier: float

    @property
    def t(self):
        return self.base.t

    def __call__(self, lam):
        return eval_discrete_weight(self.base, self.arg_scale * np.asarray(lam, dtype=float))


def rescale_for_operator(w, B):
    if B <= 0:
        raise ValueError("operator norm bound B must be positive")
    return RescaledWeight(base=w, arg_scale=3.0 / B, multiplier=3.0 / B)


# ---------------------------------------------------------------------------
# weight families

class ContinuousWeightFamily:
    """W_t(lambda) = C phi(lambda^{gamma/2} t)."""

    kind = "continuous"

    def __init__(self, mollifier, normalization):
        self.mollifier = mollifier
        self.normalization = normalization
        self.gamma = normalization.gamma
        self.lambda_max = np.inf

    def value(self, lam, t):
        lam = np.asarray(lam, dtype=float)
        arg = lam ** (0.5 * self.gamma) * t
        return self.normalization.constant * self.mollifier.phi(arg)

    def max_value(self):
        return self.normalization.constant * self.mollifier.phi_max

    def scale_integral(self, lam, t_min, t_max, nodes_per_octave=DEFAULT_NODES_PER_OCTAVE):
        """int_{t_min}^{t_max} t^{2/gamma} W_t(lambda) dt/t plus tail residual bounds.

        Returned tails are in identity units, i.e. bounds on the missing
        contribution to lambda * integral.
        """
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        g = self.gamma
        C = self.normalization.constant
        tq, wq = log_gauss_legendre(t_min, t_max, nodes_per_octave)
        args = np.outer(lam ** (0.5 * g), tq)
        vals = C * self.mollifier.phi(args)
        integral = vals @ (wq * tq ** (2.0 / g))
        tail_low = lam * C * self.mollifier.phi_max * (0.5 * g) * t_min ** (2.0 / g)
        tail_high = np.array([
            C * self.mollifier.weight_tail_integral(l ** (0.5 * g) * t_max, 2.0 / g - 1.0)
            for l in lam])
        return integral, tail_low, tail_high


class DiscreteWeightFamily:
    """Normalized Chebyshev family C * (3/B) * W*_t((3/B) lambda).

    B = 3 gives the bare family on [0, 4].  The family fulfils
    int_0^inf t^2 value(lambda, t) dt/t = 1/lambda for lambda in (0, 4B/3).
    """

    kind = "discrete"

    def __init__(self, mollifier, normalization, B=3.0):
        if abs(normalization.gamma - 1.0) > 1e-14:
            raise ValueError("discrete weights require gamma = 1")
        if B <= 0:
            raise ValueError("operator norm bound B must be positive")
        self.mollifier = mollifier
        self.normalization = normalization
        self.gamma = 1.0
        self.B = float(B)
        self.arg_scale = 3.0 / self.B
        self.multiplier = 3.0 / self.B
        self.lambda_max = 4.0 / self.arg_scale
        self._coeff_cache = {}

    # -- coefficients ------------------------------------------------------
    def coefficients(self, t):
        w = self._coeff_cache.get(t)
        if w is None:
            w = chebyshev_coefficients(self.mollifier, t)
            self._coeff_cache[t] = w
        return w

    def rescaled(self, t):
        return RescaledWeight(base=self.coefficients(t),
                              arg_scale=self.arg_scale, multiplier=self.multiplier)

    # -- evaluation --------------------------------------------------------
    def _check_lambda(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if np.any(lam < 0.0) or np.any(lam > self.lambda_max + 1e-12):
            raise ValueError(f"lambda outside [0, {self.lambda_max}]")
        return lam

    def value(self, lam, t):
        """C (3/B) W*_t((3/B) lambda), vectorized over lambda."""
        arr = self._check_lambda(lam)
        theta = 1.0 - 0.5 * self.arg_scale * arr
        out = clenshaw_folded(self.coefficients(t).coeffs, theta)
        out = self.normalization.constant * self.multiplier * out
        return out if np.ndim(lam) else float(out[0])

    def value_direct(self, lam, t):
        """Same quantity through the periodization oracle."""
        arr = self._check_lambda(lam)
        out = eval_discrete_weight_direct(self.mollifier, self.arg_scale * arr, t)
        out = self.normalization.constant * self.multiplier * out
        return out if np.ndim(lam) else float(out[0])

    def max_value(self, t_lo=0.1):
        # W*_t <= phi_hat(0)/t for t < 1 dominates every practical grid.
        return (self.normalization.constant * self.multiplier
                * self.mollifier.phi_hat0 / t_lo)

    # -- scale integrals ----------------------------------------------------
    def low_scale_integral(self, t_lo, t_hi):
        """Exact int over [t_lo, t_hi] of t^2 value dt/t for t_hi <= 1.

        W*_t is the constant phi_hat(0)/t there (degree-0 polynomial), so
        the integrand is the constant C (3/B) phi_hat(0).
        """
        if not 0.0 <= t_lo <= t_hi <= 1.0 + 1e-15:
            raise ValueError("exact low piece requires 0 <= t_lo <= t_hi <= 1")
        return (self.normalization.constant * self.multiplier
                * self.mollifier.phi_hat0 * (t_hi - t_lo))

    def quadrature_factors(self, tq, wq):
        """Flattened coefficients/offsets/factors for weighted_clenshaw_sum."""
        weights = [self.coefficients(t).coeffs for t in tq]
        offsets = np.zeros(len(weights) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(c) for c in weights])
        flat = np.concatenate(weights) if weights else np.zeros(0)
        factors = (self.normalization.constant * self.multiplier
                   * np.asarray(wq) * np.asarray(tq) ** 2)
        return flat, offsets, factors

    def scale_integral(self, lam, t_min, t_max, nodes_per_octave=DEFAULT_NODES_PER_OCTAVE):
        """Scale integral with the degree-0 region handled in closed form.

        For t <= 1 the weight is the constant phi_hat(0)/t, so whenever
        t_min <= 1 the whole piece [0, min(1, t_max)] is included exactly
        (tail_low = 0); quadrature covers the rest.
        """
        lam = self._check_lambda(lam)
        theta = 1.0 - 0.5 * self.arg_scale * lam
        integral = np.zeros_like(lam)
        scale = self.normalization.constant * self.multiplier
        split = min(1.0, t_max)
        if t_min <= 1.0:
            integral += self.low_scale_integral(0.0, split)
            tail_low = np.zeros_like(lam)
            q_lo = split
        else:
            # Window excludes the exactly-known region; bound what is missed.
            tail_low = lam * scale * (
                self.mollifier.phi_hat0
                + self.mollifier.phi_max * (0.5 * t_min**2
                                            + self.mollifier.x_max * t_min / np.pi))
            q_lo = t_min
        if t_max > q_lo * (1.0 + 1e-12):
            tq, wq = log_gauss_legendre(q_lo, t_max, nodes_per_octave)
            flat, offsets, factors = self.quadrature_factors(tq, wq)
            integral += weighted_clenshaw_sum(flat, offsets, factors, theta)
        # High tail: n = 0 term of the periodization plus the wrap terms.
        mu = self.arg_scale * lam
        x = np.arccos(1.0 - 0.5 * mu)
        wrap = self.mollifier.weight_tail_integral(np.pi * t_max, 1.0)
        tail_high = np.array([
            scale * (self.mollifier.weight_tail_integral(xi * t_max, 1.0) / xi**2
                     + 0.25 * wrap)
            for xi in x]) * lam
        return integral, tail_low, tail_high


# ---------------------------------------------------------------------------
# formula-level checks

@dataclass
class WeightCheckReport:
    """Empirical constants and residuals of the weight-family contracts."""

    lambda_grid: np.ndarray
    t_grid: np.ndarray
    identity_residuals: np.ndarray
    tail_low: np.ndarray
    tail_high: np.ndarray
    w_cont: Optional[np.ndarray] = None        # shape (lambda, t)
    w_disc: Optional[np.ndarray] = None        # shape (lambda, t)
    decay_constants: Optional[dict] = None     # order l -> sup
    approx_rate_fit: Optional["ApproxRateFit"] = None
    family_kind: str = "discrete"

    def max_residual(self):
        return float(np.max(self.identity_residuals))

    def max_certified_residual(self):
        return float(np.max(self.identity_residuals + self.tail_low + self.tail_high))

    def to_csv(self, path):
        """Rows (lambda, t, W_cont, W_disc, identity_residual)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "t", "W_cont", "W_disc", "identity_residual"])
            for i, lam in enumerate(self.lambda_grid):
                for j, t in enumerate(self.t_grid):
                    wc = self.w_cont[i, j] if self.w_cont is not None else np.nan
                    wd = self.w_disc[i, j] if self.w_disc is not None else np.nan
                    w.writerow([repr(float(lam)), repr(float(t)),
                                repr(float(wc)), repr(float(wd)),
                                repr(float(self.identity_residuals[i]))])


def default_lambda_grid(eps=DEFAULT_EPS):
    """lambda in {0.05, 0.10, ..., 4 - eps}."""
    return np.arange(0.05, 4.0 - eps + 1e-12, 0.05)


def check_decomposition_identity(family, lambda_grid=None, t_min=1e-3, t_max=1e3,
                                 nodes_per_octave=DEFAULT_NODES_PER_OCTAVE,
                                 report_t_grid=None):
    """Residuals |lambda * int t^{2/gamma} W_t(lambda) dt/t - 1| per lambda."""
    if lambda_grid is None:
        lambda_grid = default_lambda_grid()
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    integral, tail_low, tail_high = family.scale_integral(
        lambda_grid, t_min, t_max, nodes_per_octave)
    residuals = np.abs(lambda_grid * integral - 1.0)
    if report_t_grid is None:
        report_t_grid = np.geomspace(0.5, 64.0, 8)
    values = np.column_stack([family.value(lambda_grid, t) for t in report_t_grid])
    report = WeightCheckReport(
        lambda_grid=lambda_grid,
        t_grid=np.asarray(report_t_grid, dtype=float),
        identity_residuals=residuals,
        tail_low=np.broadcast_to(np.asarray(tail_low, dtype=float), lambda_grid.shape).copy(),
        tail_high=np.asarray(tail_high, dtype=float),
        family_kind=family.kind,
    )
    if family.kind == "continuous":
        report.w_cont = values
    else:
        report.w_disc = values
    return report


def decay_constants(family, orders=(0, 1, 2, 3), eps=DEFAULT_EPS,
                    t_lo=0.1, t_hi=1e3, n_lambda=160, n_t=120):
    """Measured suprema C_l = sup (1 + t^{2/gamma} lambda)^l W_t(lambda).

    The theory guarantees the suprema are finite for every order; their
    values are empirical properties of the chosen mollifier, so they are
    measured on a (lambda, t) grid rather than asserted.
    """
    lam_hi = (4.0 - eps) / getattr(family, "arg_scale", 1.0)
    lam = np.geomspace(1e-3, lam_hi, n_lambda)
    ts = np.geomspace(t_lo, t_hi, n_t)
    sups = {l: 0.0 for l in orders}
    g = family.gamma
    for t in ts:
        vals = family.value(lam, t)
        base = 1.0 + t ** (2.0 / g) * lam
        for l in orders:
            sups[l] = max(sups[l], float(np.max(base**l * vals)))
    return sups


def derivative_decay_constants(family, orders=(0, 1, 2, 3), eps=DEFAULT_EPS,
                               t_lo=0.1, t_hi=1e3, n_lambda=80, n_t=40,
                               rel_step=1e-6):
    """Suprema of lambda |dW/dlambda| (1 + t^{2/gamma} lambda)^l by centered differences."""
    lam_hi = (4.0 - eps) / getattr(family, "arg_scale", 1.0)
    lam = np.geomspace(1e-2, lam_hi * 0.999, n_lambda)
    ts = np.geomspace(t_lo, t_hi, n_t)
    h = rel_step * lam
    sups = {l: 0.0 for l in orders}
    g = family.gamma
    for t in ts:
        d = (family.value(lam + h, t) - family.value(lam - h, t)) / (2.0 * h)
        base = 1.0 + t ** (2.0 / g) * lam
        for l in orders:
            sups[l] = max(sups[l], float(np.max(base**l * lam * np.abs(d))))
    return sups


@dataclass
class ApproxRateFit:
    """Least-squares slope of log |W*_t - W_t| against log t."""

    t_list: np.ndarray
    diffs: np.ndarray
    slope: float
    intercept: float
    degenerate: bool
    scaled: bool


def approximation_rate(m, lam, t_list=(4, 8, 16, 32, 64), normalization=None,
                       scaled=False):
    """Measure |W*_t(lam) - W_t(lam)| across scales and fit the decay rate.

    With scaled=True the evaluation argument is lam/t^2 (the scaling regime
    in which W*_t(lam/t^2) -> C phi(sqrt(lam))).
    """
    from .mollifier import normalization_constant
    if normalization is None:
        normalization = normalization_constant(m, gamma=1.0)
    cont = ContinuousWeightFamily(m, normalization)
    disc = DiscreteWeightFamily(m, normalization)
    t_arr = np.asarray(t_list, dtype=float)
    diffs = np.empty_like(t_arr)
    ref = np.empty_like(t_arr)
    for i, t in enumerate(t_arr):
        arg = lam / t**2 if scaled else lam
        diffs[i] = abs(float(disc.value(arg, t)) - float(cont.value(arg, t)))
        ref[i] = abs(float(cont.value(arg, t)))
    degenerate = bool(np.any(diffs <= ZERO_FLOOR * max(ref.max(), 1e-300)))
    logs = np.log(np.maximum(diffs, 1e-300))
    slope, intercept = np.polyfit(np.log(t_arr), logs, 1)
    return ApproxRateFit(t_list=t_arr, diffs=diffs, slope=float(slope),
                         intercept=float(intercept), degenerate=degenerate,
                         scaled=scaled)


# ---------------------------------------------------------------------------
# Chebyshev coefficient identities

def chebyshev_polynomial_coeffs(n_max):
    """Monomial coefficient arrays (lowest first) of T_0 .. T_n_max.

    Coefficients are integers well below 2^53 for n_max <= 40, so float64
    arithmetic is exact here.
    """
    polys = [np.array([1.0]), np.array([0.0, 1.0])]
    for n in range(1, n_max):
        p = np.zeros(n + 2)
        p[1:] = 2.0 * polys[n]
        p[: n] -= polys[n - 1]
        polys.append(p)
    return polys[: n_max + 1]


def wave_identity_max_residual(n_max=32):
    """Coefficient-level residual of the discrete wave identity.

    For every n the second central difference in the index satisfies
    T_{n+1} + T_{n-1} - 2 T_n = 2 (X - 1) T_n as polynomials in X.
    """
    polys = chebyshev_polynomial_coeffs(n_max + 1)
    worst = 0.0
    for n in range(1, n_max + 1):
        lhs = polys[n + 1].copy()
        lhs[: n] += polys[n - 1]
        lhs[: n + 1] -= 2.0 * polys[n]
        rhs = np.zeros(n + 2)
        rhs[1:] += 2.0 * polys[n]
        rhs[: n + 1] -= 2.0 * polys[n]
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def coefficient_csv(w, path):
    """Dump a ChebyshevWeight as CSV rows (k, c_k)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "c_k"])
        for k, c in enumerate(w.coeffs):
            writer.writerow([k, repr(float(c))])
