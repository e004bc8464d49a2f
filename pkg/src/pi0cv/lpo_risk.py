"""Closed-form leave-p-out risk for histogram density estimates.

For a partition with cell widths w_k, cell counts m_k out of m points, and a
holdout size p in [1, m-1], the leave-p-out estimate of the quadratic risk has
the closed form

    R_p = (2m - p)/((m-1)(m-p)) * sum_k m_k/(m w_k)
        - m(m - p + 1)/((m-1)(m-p)) * sum_k (m_k/m)^2 / w_k

which averages, over all C(m, p) train/test splits, the squared norm of the
training histogram minus twice its mean over the held-out points
(``lpo_risk_oracle`` computes that average literally).

The holdout size is chosen per partition by minimising the mean squared error
of R_p as an estimator of the true risk.  Everything reduces to the moment
sums s_ij = sum_k alpha_k^i / w_k^j:

* the bias of R_p is  p/(m(m-p)) * (s11 - s21), always >= 0;
* the variance of R_p is a degree-2 polynomial in p over [m(m-1)(m-p)]^2,
  with coefficients derived from the factorial moments of the multinomial
  cell counts (``mse_coefficients``, cross-checked exactly against
  ``bias_variance_oracle``).

A second coefficient encoding (``phi_coefficients``, fields phi0..phi3) is
kept because the risk-debug interface reports it for cross-implementation
comparison.  Its variance part does not reproduce the exact multinomial
variance (it can even be negative where the enumeration oracle is zero), so
p-selection and anything downstream use ``mse_coefficients``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidP, PoleAtM, TooLargeForOracle
from .histogram_core import BinCounts, PartitionSpec, PValueSample, grid_prefix, bin_counts

__all__ = [
    "MomentSums",
    "PhiCoefficients",
    "MseCoefficients",
    "PSelection",
    "RiskEvaluation",
    "moment_sums",
    "moment_sums_from",
    "lpo_risk",
    "lpo_risk_oracle",
    "phi_coefficients",
    "mse_coefficients",
    "bias_hat",
    "variance_hat",
    "bias_variance_oracle",
    "mse_hat",
    "selection_mse",
    "select_p",
    "evaluate_partition",
    "partition_diagnostics",
]

ORACLE_MAX_M = 12
ENUM_MAX_M = 10
ENUM_MAX_BINS = 3


@dataclass(frozen=True)
class MomentSums:
    """Moment sums s[i][j] = sum_k alpha_k^i / omega_k^j, i in 1..3, j in 1..2."""

    s: np.ndarray          # shape (3, 2); s[i-1, j-1]
    alpha: np.ndarray
    omega: np.ndarray

    @property
    def s11(self) -> float: return float(self.s[0, 0])
    @property
    def s21(self) -> float: return float(self.s[1, 0])
    @property
    def s31(self) -> float: return float(self.s[2, 0])
    @property
    def s12(self) -> float: return float(self.s[0, 1])
    @property
    def s22(self) -> float: return float(self.s[1, 1])
    @property
    def s32(self) -> float: return float(self.s[2, 1])


@dataclass(frozen=True)
class PhiCoefficients:
    """Diagnostic coefficient encoding (phi0..phi3) of the p-selection MSE.

    phi3 is the squared-bias coefficient, (m-1)^2 (s11 - s21)^2.  The
    variance triple (phi2, phi1, phi0) is reported by the risk-debug dump but
    disagrees with the exact multinomial variance of the risk estimator; use
    ``mse_coefficients`` where the true variance matters.
    """

    m: int
    phi0: float
    phi1: float
    phi2: float
    phi3: float

    def mse_parts(self) -> tuple[float, float, float, float]:
        """(bias2, v2, v1, v0) so that MSE(x) ~ bias2 x^2 + (v2 x^2 + v1 x + v0)."""
        return self.phi3, self.phi2, self.phi1, self.phi0


@dataclass(frozen=True)
class MseCoefficients:
    """Exact squared-bias and variance polynomial coefficients for R_p.

    MSE(x) = [bias2 * x^2 + var2 * x^2 + var1 * x + var0] / [m(m-1)(m-x)]^2
    with the variance part equal to Var[R_p] for integer p (validated against
    ``bias_variance_oracle`` by exhaustive enumeration).
    """

    m: int
    bias2: float
    var2: float
    var1: float
    var0: float

    def mse_parts(self) -> tuple[float, float, float, float]:
        return self.bias2, self.var2, self.var1, self.var0


@dataclass(frozen=True)
class PSelection:
    """Outcome of the holdout-size choice for one partition."""

    p_hat: int
    p_real: float | None
    grid_override: bool      # integer grid argmin differed from the rounded root
    p_independent: bool      # risk does not depend on p (s11 == s21)
    clamped_points: int      # integer p where the variance polynomial went negative


@dataclass(frozen=True)
class RiskEvaluation:
    spec: PartitionSpec
    p_hat: int
    risk: float
    p_real: float | None


def moment_sums(counts: BinCounts, spec: PartitionSpec) -> MomentSums:
    """Plug-in moment sums with alpha_k = m_k / m."""
    alpha = counts.counts / counts.total
    omega = spec.widths()
    return moment_sums_from(alpha, omega)


def moment_sums_from(alpha, omega) -> MomentSums:
    alpha = np.asarray(alpha, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if alpha.shape != omega.shape:
        raise ValueError("alpha and omega must have equal length")
    if np.any(omega <= 0):
        raise ValueError("cell widths must be positive")
    s = np.empty((3, 2))
    for i in (1, 2, 3):
        for j in (1, 2):
            s[i - 1, j - 1] = math.fsum(alpha**i / omega**j)
    return MomentSums(s=s, alpha=alpha, omega=omega)


def _check_p(m: int, p) -> int:
    p = int(p)
    if not 1 <= p <= m - 1:
        raise InvalidP(f"holdout size must lie in [1, {m - 1}], got {p}")
    return p


def lpo_risk(counts: BinCounts, spec: PartitionSpec, p: int) -> float:
    """Closed-form leave-p-out risk estimate for one partition."""
    m = counts.total
    p = _check_p(m, p)
    ms = moment_sums(counts, spec)
    return _risk_from_sums(ms.s11, ms.s21, m, p)


def _risk_from_sums(s11: float, s21: float, m: int, p: int) -> float:
    # factor 1/((m-1)(m-p)) once; keeps the single-cell case exactly -1
    return ((2 * m - p) * s11 - m * (m - p + 1) * s21) / ((m - 1) * (m - p))


def lpo_risk_oracle(sample: PValueSample, spec: PartitionSpec, p: int) -> float:
    """Definitional LPO risk: average over all C(m, p) train/test splits.

    For each held-out subset of size p the training histogram is rebuilt from
    the remaining m - p points and scored by ||s_train||^2 minus twice its
    mean over the held-out points.  Feasible only for small m.
    """
    m = sample.m
    p = _check_p(m, p)
    if m > ORACLE_MAX_M:
        raise TooLargeForOracle(f"oracle enumeration capped at m={ORACLE_MAX_M}, got {m}")
    edges = spec.edges()
    cell = np.clip(np.searchsorted(edges, sample.values, side="right") - 1,
                   0, spec.dimension - 1)
    omega = spec.widths()
    full = np.bincount(cell, minlength=spec.dimension).astype(float)
    terms = []
    for test in itertools.combinations(range(m), p):
        train = full.copy()
        for i in test:
            train[cell[i]] -= 1
        h = train / ((m - p) * omega)
        norm2 = math.fsum(h * h * omega)
        test_mean = math.fsum(h[cell[i]] for i in test) / p
        terms.append(norm2 - 2.0 * test_mean)
    return math.fsum(terms) / len(terms)


def bias_hat(ms: MomentSums, m: int, p: int) -> float:
    """Bias of R_p: p/(m(m-p)) * sum_k alpha_k (1 - alpha_k) / w_k, >= 0."""
    p = _check_p(m, p)
    total = math.fsum(ms.alpha * (1.0 - ms.alpha) / ms.omega)
    return p / (m * (m - p)) * total


def phi_coefficients(ms: MomentSums, m: int) -> PhiCoefficients:
    """Diagnostic (phi0..phi3) coefficient set; see class docstring."""
    s11, s21 = ms.s11, ms.s21
    s12, s22, s32 = ms.s12, ms.s22, ms.s32
    phi3 = (m - 1) ** 2 * (s11 - s21) ** 2
    phi2 = 2 * m * (m - 1) * ((m - 2) * (s21 + s11 - s32) - m * s22
                              - (2 * m - 3) * s21 ** 2)
    phi1 = (-2 * m * (m - 1) * (3 * m + 1) * ((m - 2) * (s21 - s32) - m * s22)
            + 2 * m * (m - 1) * (2 * (m + 1) * (2 * m - 3) * s21 ** 2
                                 + (-3 * m ** 2 + 3 * m + 4) * s11))
    phi0 = (4 * m * (m - 1) * (m + 1) * ((m - 2) * (s21 - s32) - m * s22)
            - 2 * m * (m - 1) * ((m ** 2 + 2 * m + 1) * (2 * m - 3) * s21 ** 2
                                 + (2 * m ** 3 - 4 * m - 2) * s11)
            + m * (m - 1) ** 2 * (s12 - s11 ** 2))
    return PhiCoefficients(m=m, phi0=phi0, phi1=phi1, phi2=phi2, phi3=phi3)


def mse_coefficients(ms: MomentSums, m: int) -> MseCoefficients:
    """Exact MSE polynomial coefficients for R_p under multinomial counts."""
    s11, s21 = ms.s11, ms.s21
    s12, s22, s32 = ms.s12, ms.s22, ms.s32
    bias2 = (m - 1) ** 2 * (s11 - s21) ** 2
    var2 = 2 * m * (m - 1) * (2 * (m - 2) * s32 + s22 - (2 * m - 3) * s21 ** 2)
    var1 = 4 * m * (m - 1) * ((m + 1) * (2 * m - 3) * s21 ** 2
                              - 2 * (m - 2) * (m + 1) * s32
                              - (m - 1) * s11 * s21 - 2 * s22)
    var0 = m * (m - 1) * ((m - 1) * (s12 - s11 ** 2)
                          + 4 * (m - 1) * (m + 1) * s11 * s21
                          - 2 * (m + 1) ** 2 * (2 * m - 3) * s21 ** 2
                          + 4 * (m - 2) * (m + 1) ** 2 * s32
                          - 2 * (m - 3) * (m + 1) * s22)
    return MseCoefficients(m=m, bias2=bias2, var2=var2, var1=var1, var0=var0)


def variance_hat(phi: PhiCoefficients, m: int, p: int) -> float:
    """Variance polynomial of the phi encoding: [p^2 phi2 + p phi1 + phi0] / K^2.

    Diagnostic only; may be negative (the exact variance never is).
    """
    p = _check_p(m, p)
    k2 = (m * (m - 1) * (m - p)) ** 2
    return (phi.phi2 * p * p + phi.phi1 * p + phi.phi0) / k2


def mse_hat(coeffs, m: int, x: float) -> float:
    """MSE(x) = [x^2 (bias2 + v2) + x v1 + v0] / [m(m-1)(m-x)]^2 at real x."""
    if x == m:
        raise PoleAtM("MSE(x) has a pole at x = m")
    bias2, v2, v1, v0 = coeffs.mse_parts()
    k2 = (m * (m - 1) * (m - x)) ** 2
    return ((bias2 + v2) * x * x + v1 * x + v0) / k2


def selection_mse(coeffs, p) -> float | np.ndarray:
    """Squared bias plus variance clamped below at 0, the selection criterion."""
    m = coeffs.m
    bias2, v2, v1, v0 = coeffs.mse_parts()
    p = np.asarray(p, dtype=float)
    k2 = (m * (m - 1.0) * (m - p)) ** 2
    var = v2 * p * p + v1 * p + v0
    return (bias2 * p * p + np.maximum(var, 0.0)) / k2


def critical_point(coeffs) -> float | None:
    """Real root of the MSE derivative numerator, or None when degenerate.

    d/dx MSE(x) has numerator proportional to (2 A m + v1) x + (m v1 + 2 v0)
    with A = bias2 + v2, so the critical point is x* = -(m v1 + 2 v0)/(2 A m + v1).
    """
    m = coeffs.m
    bias2, v2, v1, v0 = coeffs.mse_parts()
    denom = 2.0 * (bias2 + v2) * m + v1
    if denom == 0.0 or not math.isfinite(denom):
        return None
    x = -(m * v1 + 2.0 * v0) / denom
    return x if math.isfinite(x) else None


def select_p(coeffs, m: int | None = None) -> PSelection:
    """Choose the holdout size minimising the selection MSE over 1..m-1.

    The authoritative answer is the integer grid argmin (exhaustive O(m) scan
    with the first minimiser winning ties).  The closed-form critical point is
    reported as ``p_real`` and the rounding rule round(x*) when x* lies in
    [1, m-1] (round half away from zero), else 1, is checked against the grid
    argmin; a disagreement sets ``grid_override``.
    """
    if m is None:
        m = coeffs.m
    elif m != coeffs.m:
        raise ValueError(f"coefficients were built for m={coeffs.m}, got m={m}")
    bias2, v2, v1, v0 = coeffs.mse_parts()
    p = np.arange(1, m, dtype=float)
    var = v2 * p * p + v1 * p + v0
    clamped = int(np.count_nonzero(var < 0.0))
    k2 = (m * (m - 1.0) * (m - p)) ** 2
    msep = (bias2 * p * p + np.maximum(var, 0.0)) / k2
    p_hat = int(p[int(np.argmin(msep))])

    x = critical_point(coeffs)
    if x is not None and 1.0 <= x <= m - 1.0:
        rounded = int(math.floor(x + 0.5))
    else:
        rounded = 1
    return PSelection(
        p_hat=p_hat,
        p_real=x,
        grid_override=(p_hat != rounded),
        p_independent=(bias2 == 0.0),
        clamped_points=clamped,
    )


def bias_variance_oracle(alpha, spec: PartitionSpec, m: int, p: int) -> tuple[float, float]:
    """Exact bias and variance of R_p by multinomial enumeration.

    Enumerates every count vector (m_1..m_D) with probabilities alpha, scores
    R_p on each, and returns (mean - truth, variance).  The truth is the risk
    of the histogram against the piecewise-constant density with cell masses
    alpha:  sum_k alpha_k(1-alpha_k)/(m w_k) - sum_k alpha_k^2 / w_k.
    """
    alpha = np.asarray(alpha, dtype=float)
    omega = spec.widths()
    d = len(alpha)
    if d != spec.dimension:
        raise ValueError("alpha length must match the partition dimension")
    if m > ENUM_MAX_M or d > ENUM_MAX_BINS:
        raise TooLargeForOracle(
            f"enumeration capped at m={ENUM_MAX_M}, D={ENUM_MAX_BINS}; got m={m}, D={d}")
    p = _check_p(m, p)
    truth = math.fsum(alpha * (1.0 - alpha) / (m * omega)) - math.fsum(alpha**2 / omega)
    probs, risks = [], []
    for counts in _compositions(m, d):
        coef = math.factorial(m)
        pr = 1.0
        for c, a in zip(counts, alpha):
            coef //= math.factorial(c)
            pr *= a ** c
        pr *= coef
        if pr == 0.0:
            continue
        s11 = math.fsum((c / m) / w for c, w in zip(counts, omega))
        s21 = math.fsum((c / m) ** 2 / w for c, w in zip(counts, omega))
        probs.append(pr)
        risks.append(_risk_from_sums(s11, s21, m, p))
    mean = math.fsum(pr * r for pr, r in zip(probs, risks))
    var = math.fsum(pr * (r - mean) ** 2 for pr, r in zip(probs, risks))
    return mean - truth, var


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def evaluate_partition(sample: PValueSample, spec: PartitionSpec,
                       fix_p: int | None = None) -> RiskEvaluation:
    """Score one partition: plug-in moments, holdout choice, risk at p_hat."""
    counts = bin_counts(grid_prefix(sample, spec.n), spec)
    ms = moment_sums(counts, spec)
    if fix_p is not None:
        p_hat, p_real = _check_p(sample.m, fix_p), None
    else:
        sel = select_p(mse_coefficients(ms, sample.m))
        p_hat, p_real = sel.p_hat, sel.p_real
    risk = _risk_from_sums(ms.s11, ms.s21, sample.m, p_hat)
    return RiskEvaluation(spec=spec, p_hat=p_hat, risk=risk, p_real=p_real)


def partition_diagnostics(sample: PValueSample, spec: PartitionSpec) -> dict:
    """Full per-partition record for the risk-debug interface."""
    counts = bin_counts(grid_prefix(sample, spec.n), spec)
    ms = moment_sums(counts, spec)
    phi = phi_coefficients(ms, sample.m)
    sel = select_p(mse_coefficients(ms, sample.m))
    risk = _risk_from_sums(ms.s11, ms.s21, sample.m, sel.p_hat)
    return {
        "N": spec.n, "k": spec.k, "l": spec.l,
        "s11": ms.s11, "s21": ms.s21, "s31": ms.s31,
        "s12": ms.s12, "s22": ms.s22, "s32": ms.s32,
        "phi0": phi.phi0, "phi1": phi.phi1, "phi2": phi.phi2, "phi3": phi.phi3,
        "p_hat": sel.p_hat, "p_real": sel.p_real, "risk": risk,
    }
