"""Step-up multiple testing with a plug-in null-proportion estimate.

The threshold sup{t in (0,1): theta * t / G_hat(t) <= alpha} is computed via
its step-up equivalence: with sorted p-values p_(1) <= ... <= p_(m),

    k_hat = max{ i : p_(i) <= i * alpha / (m * theta) }    (0 if none)

and all hypotheses with p-value <= p_(k_hat) are rejected.  The rejection set
is the contract; the reported numeric threshold is alpha * k_hat / (m * theta)
clamped into the half-open plateau [p_(k_hat), p_(k_hat+1)) and capped at 1,
so that {P_i <= threshold} recovers exactly the rejected set by value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidAlpha, InvalidTheta, LengthMismatch
from .histogram_core import PValueSample

__all__ = [
    "MtpResult",
    "ErrorMetrics",
    "ecdf",
    "threshold",
    "plugin_mtp",
    "bh_procedure",
    "error_metrics",
    "rejected_mask",
]


@dataclass(frozen=True)
class MtpResult:
    """Rejection decision; ``rejected`` indexes the sample's sorted values."""

    threshold: float
    rejected: np.ndarray
    k_hat: int
    alpha: float
    theta: float
    delta: float
    m: int

    def __post_init__(self):
        object.__setattr__(self, "rejected", np.asarray(self.rejected, dtype=np.int64))
        self.rejected.flags.writeable = False


@dataclass(frozen=True)
class ErrorMetrics:
    fdp: float
    fnr: float
    fp: int
    r: int


def ecdf(sample: PValueSample, t: float) -> float:
    """Empirical CDF #{P_i <= t} / m, right-continuous, via binary search."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return int(np.searchsorted(sample.values, t, side="right")) / sample.m


def _validate(alpha: float, theta: float):
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 < theta <= 1.0:
        raise InvalidTheta(f"theta must lie in (0, 1], got {theta}")


def _step_up(sample: PValueSample, alpha: float, theta: float, delta: float) -> MtpResult:
    _validate(alpha, theta)
    p = sample.values
    m = sample.m
    cut = np.arange(1, m + 1) * (alpha / (m * theta))
    hits = np.nonzero(p <= cut)[0]
    if hits.size == 0:
        return MtpResult(threshold=0.0, rejected=np.empty(0, dtype=np.int64), k_hat=0,
                         alpha=alpha, theta=theta, delta=delta, m=m)
    k_hat = int(hits[-1]) + 1
    t = alpha * k_hat / (m * theta)
    if k_hat < m:
        t = min(t, float(np.nextafter(p[k_hat], -np.inf)))
    t = min(t, 1.0)
    # p_(k_hat) <= t by the step-up inequality, so t stays inside the plateau
    rejected = np.nonzero(p <= t)[0]
    return MtpResult(threshold=float(t), rejected=rejected, k_hat=k_hat,
                     alpha=alpha, theta=theta, delta=delta, m=m)


def threshold(sample: PValueSample, alpha: float, theta: float) -> float:
    """Numeric rejection threshold for the given alpha and theta."""
    return _step_up(sample, alpha, theta, 0.0).threshold


def plugin_mtp(sample: PValueSample, alpha: float, pi0, delta: float = 0.0) -> MtpResult:
    """Step-up procedure at theta = min(1, pi0 + delta).

    ``pi0`` may be a Pi0Estimate (its clamped ``pi0`` field is used) or a
    plain float, e.g. the true proportion for an oracle run.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    value = getattr(pi0, "pi0", pi0)
    theta = min(1.0, float(value) + delta)
    return _step_up(sample, alpha, theta, delta)


def bh_procedure(sample: PValueSample, alpha: float) -> MtpResult:
    """The classic step-up baseline: theta fixed at 1."""
    return _step_up(sample, alpha, 1.0, 0.0)


def error_metrics(result: MtpResult, labels) -> ErrorMetrics:
    """False discovery proportion and miss rate against known labels.

    ``labels``: boolean, True marks a true null hypothesis, aligned with the
    sorted sample the result was computed from.
    """
    labels = np.asarray(labels, dtype=bool)
    if labels.size != result.m:
        raise LengthMismatch(f"{labels.size} labels for m={result.m}")
    rej = np.zeros(result.m, dtype=bool)
    rej[result.rejected] = True
    fp = int((rej & labels).sum())
    r = int(rej.sum())
    alts = ~labels
    n_alt = int(alts.sum())
    missed = int((~rej & alts).sum())
    return ErrorMetrics(fdp=fp / max(r, 1), fnr=missed / max(n_alt, 1), fp=fp, r=r)


def rejected_mask(raw_values, result: MtpResult) -> np.ndarray:
    """Recover the rejection decision for values in their original order.

    Rejection is by value (P_i <= threshold), so no index bookkeeping is
    needed across the sort.
    """
    arr = np.asarray(raw_values, dtype=float)
    if result.k_hat == 0:
        return np.zeros(arr.shape, dtype=bool)
    return arr <= result.threshold
