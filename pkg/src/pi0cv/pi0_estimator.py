"""Estimation of the proportion of true null hypotheses.

The estimator scans every non-regular partition (N, k, l) for N in
[n_min, n_max], scores each by the leave-p-out risk at its own selected
holdout size, and reads the estimate off the central cell of the winning
partition: pi0_raw = count / (m * (mu - lambda)) with lambda = k/N, mu = l/N.

Selection is the risk argmin robustified by a small statistical band: among
partitions whose risk lies within ``se_band`` standard errors of the minimum
(the standard error being the root selection-MSE of the argmin partition),
the coarsest grid N wins, then the smallest dimension, then the widest
central cell, then the largest k.  The band suppresses winner's-curse picks
from the ~1.7e5-strong family, where a noise-favoured fine partition can
otherwise park its central cell in a steep region of the density and read a
meaningless height; pure argmin is recovered with se_band=0.

The whole scan is vectorised: per grid N the cell counts and their power
prefix sums cost O(m + N) once, after which every (k, l) pair costs O(1).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import InvalidLambda, InvalidRange
from .histogram_core import PartitionSpec, PValueSample

__all__ = [
    "EstimatorConfig",
    "Pi0Estimate",
    "estimate_pi0",
    "ss_estimator",
    "storey_estimator",
    "consistency_probe",
    "estimate_json_dict",
]

DEFAULT_N_MIN = 1
DEFAULT_N_MAX = 100
DEFAULT_SE_BAND = 0.25


@dataclass(frozen=True)
class EstimatorConfig:
    n_min: int = DEFAULT_N_MIN
    n_max: int = DEFAULT_N_MAX
    method: str = "lpo"            # lpo | loo | ss | storey
    lam: float = 0.5               # cutoff for the ss method
    se_band: float = DEFAULT_SE_BAND

    def __post_init__(self):
        if self.n_min < 1 or self.n_min > self.n_max:
            raise InvalidRange(f"need 1 <= n_min <= n_max, got ({self.n_min}, {self.n_max})")
        if self.method not in ("lpo", "loo", "ss", "storey"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.se_band < 0:
            raise ValueError("se_band must be >= 0")


@dataclass(frozen=True)
class Pi0Estimate:
    method: str
    m: int
    pi0_raw: float
    pi0: float                     # clamped to [1/m, 1], used downstream
    lambda_hat: float
    mu_hat: float
    n_hat: int | None
    p_hat: int | None
    risk: float | None
    degenerate: bool = False


class _SearchTables:
    """Sample-independent index tables for one (n_min, n_max) range."""

    def __init__(self, n_min: int, n_max: int):
        self.n_min = n_min
        self.n_max = n_max
        ns, ks, ls, idx_k, idx_l, idx_n = [], [], [], [], [], []
        offset = 0
        self.grid = list(range(n_min, n_max + 1))
        self.offsets = {}
        for n in self.grid:
            kk, ll = np.triu_indices(n + 1, k=1)
            kk = kk.astype(np.int64)
            ll = ll.astype(np.int64)
            ns.append(np.full(kk.size, n, dtype=np.int64))
            ks.append(kk)
            ls.append(ll)
            idx_k.append(offset + kk)
            idx_l.append(offset + ll)
            idx_n.append(np.full(kk.size, offset + n, dtype=np.int64))
            self.offsets[n] = offset
            offset += n + 1
        self.cum_len = offset
        self.N = np.concatenate(ns)
        self.K = np.concatenate(ks)
        self.L = np.concatenate(ls)
        self.idx_k = np.concatenate(idx_k)
        self.idx_l = np.concatenate(idx_l)
        self.idx_n = np.concatenate(idx_n)
        nf = self.N.astype(float)
        self.Nf = nf
        self.W = (self.L - self.K) / nf
        self.D = (self.N + 1 - (self.L - self.K)).astype(float)
        self.lam = self.K / nf
        self.mu = self.L / nf


_tables_cache: dict[tuple[int, int], _SearchTables] = {}


def _tables(n_min: int, n_max: int) -> _SearchTables:
    key = (n_min, n_max)
    if key not in _tables_cache:
        _tables_cache[key] = _SearchTables(n_min, n_max)
    return _tables_cache[key]


def _scan(sample: PValueSample, tab: _SearchTables, adaptive_p: bool):
    """Vectorised risk scan; returns per-partition arrays."""
    values = sample.values
    m = sample.m
    cum = np.empty(tab.cum_len)
    pref1 = np.empty(tab.cum_len)
    pref2 = np.empty(tab.cum_len)
    pref3 = np.empty(tab.cum_len)
    for n in tab.grid:
        off = tab.offsets[n]
        edges = np.arange(n + 1) / n
        c = np.searchsorted(values, edges, side="left").astype(float)
        c[-1] = m
        cum[off:off + n + 1] = c
        ac = np.diff(c) / m
        pref1[off] = pref2[off] = pref3[off] = 0.0
        np.cumsum(ac, out=pref1[off + 1:off + n + 1])
        np.cumsum(ac * ac, out=pref2[off + 1:off + n + 1])
        np.cumsum(ac * ac * ac, out=pref3[off + 1:off + n + 1])

    cc = cum[tab.idx_l] - cum[tab.idx_k]
    ac = cc / m
    wc = tab.W
    nf = tab.Nf
    reg1 = pref1[tab.idx_k] + pref1[tab.idx_n] - pref1[tab.idx_l]
    reg2 = pref2[tab.idx_k] + pref2[tab.idx_n] - pref2[tab.idx_l]
    reg3 = pref3[tab.idx_k] + pref3[tab.idx_n] - pref3[tab.idx_l]
    s11 = reg1 * nf + ac / wc
    s21 = reg2 * nf + ac ** 2 / wc
    n2 = nf * nf
    s12 = reg1 * n2 + ac / wc ** 2
    s22 = reg2 * n2 + ac ** 2 / wc ** 2
    s32 = reg3 * n2 + ac ** 3 / wc ** 2

    # exact MSE polynomial coefficients, mirroring lpo_risk.mse_coefficients
    b2 = (m - 1) ** 2 * (s11 - s21) ** 2
    v2 = 2 * m * (m - 1) * (2 * (m - 2) * s32 + s22 - (2 * m - 3) * s21 ** 2)
    v1 = 4 * m * (m - 1) * ((m + 1) * (2 * m - 3) * s21 ** 2
                            - 2 * (m - 2) * (m + 1) * s32
                            - (m - 1) * s11 * s21 - 2 * s22)
    v0 = m * (m - 1) * ((m - 1) * (s12 - s11 ** 2)
                        + 4 * (m - 1) * (m + 1) * s11 * s21
                        - 2 * (m + 1) ** 2 * (2 * m - 3) * s21 ** 2
                        + 4 * (m - 2) * (m + 1) ** 2 * s32
                        - 2 * (m - 3) * (m + 1) * s22)

    if adaptive_p:
        # MSE is quadratic over [m(m-1)(m-x)]^2, so its derivative numerator is
        # linear in x: the integer argmin lies among {1, m-1, floor(x*), ceil(x*)}
        a2 = b2 + v2
        lin = 2 * a2 * m + v1
        const = m * v1 + 2 * v0
        with np.errstate(divide="ignore", invalid="ignore"):
            xstar = -const / lin
        interior = np.isfinite(xstar) & (lin > 0)
        cand = np.stack([
            np.ones_like(s11),
            np.full_like(s11, m - 1.0),
            np.where(interior, np.clip(np.floor(xstar), 1, m - 1), 1.0),
            np.where(interior, np.clip(np.ceil(xstar), 1, m - 1), 1.0),
        ])
        k2 = (m * (m - 1.0) * (m - cand)) ** 2
        msec = (b2 * cand ** 2 + np.maximum(v2 * cand ** 2 + v1 * cand + v0, 0.0)) / k2
        pick = np.argmin(msec, axis=0)
        cols = np.arange(cand.shape[1])
        phat = cand[pick, cols]
        mse_at_p = msec[pick, cols]
    else:
        phat = np.ones_like(s11)
        k2 = (m * (m - 1.0) * (m - 1.0)) ** 2
        mse_at_p = (b2 + np.maximum(v2 + v1 + v0, 0.0)) / k2

    risk = ((2 * m - phat) * s11 - m * (m - phat + 1) * s21) / ((m - 1) * (m - phat))
    return cc, phat, risk, mse_at_p


def estimate_pi0(sample: PValueSample, cfg: EstimatorConfig = EstimatorConfig()) -> Pi0Estimate:
    """Run the full partition search and return the selected estimate."""
    if cfg.method in ("ss", "storey"):
        lam = 0.5 if cfg.method == "storey" else cfg.lam
        return ss_estimator(sample, lam, method=cfg.method)
    tab = _tables(cfg.n_min, cfg.n_max)
    m = sample.m
    cc, phat, risk, mse_at_p = _scan(sample, tab, adaptive_p=(cfg.method == "lpo"))

    finite = np.isfinite(risk)
    if not finite.any():
        spec = PartitionSpec(cfg.n_min, 0, cfg.n_min)
        return Pi0Estimate(method=cfg.method, m=m, pi0_raw=1.0, pi0=1.0,
                           lambda_hat=spec.lam, mu_hat=spec.mu, n_hat=spec.n,
                           p_hat=1, risk=None, degenerate=True)
    if not finite.all():
        risk = np.where(finite, risk, np.inf)

    order = np.lexsort((-tab.K, -tab.W, tab.D, tab.N, risk))
    jmin = order[0]
    if cfg.se_band > 0.0:
        se = float(np.sqrt(max(mse_at_p[jmin], 0.0)))
        if not np.isfinite(se):
            se = 0.0
        band = risk[jmin] + cfg.se_band * se
        sel = np.nonzero(risk <= band)[0]
        j = sel[np.lexsort((-tab.K[sel], -tab.W[sel], tab.D[sel], tab.N[sel]))[0]]
    else:
        j = jmin

    pi0_raw = cc[j] / (m * tab.W[j])
    return Pi0Estimate(
        method=cfg.method,
        m=m,
        pi0_raw=float(pi0_raw),
        pi0=float(min(1.0, max(1.0 / m, pi0_raw))),
        lambda_hat=float(tab.lam[j]),
        mu_hat=float(tab.mu[j]),
        n_hat=int(tab.N[j]),
        p_hat=int(phat[j]),
        risk=float(risk[j]),
    )


def ss_estimator(sample: PValueSample, lam: float, method: str = "ss") -> Pi0Estimate:
    """Tail-ratio estimator: #{P_i in [lam, 1]} / (m (1 - lam))."""
    if not 0.0 <= lam < 1.0:
        raise InvalidLambda(f"lambda must lie in [0, 1), got {lam}")
    m = sample.m
    count = m - int(np.searchsorted(sample.values, lam, side="left"))
    raw = count / (m * (1.0 - lam))
    return Pi0Estimate(
        method=method, m=m, pi0_raw=float(raw),
        pi0=float(min(1.0, max(1.0 / m, raw))),
        lambda_hat=float(lam), mu_hat=1.0,
        n_hat=None, p_hat=None, risk=None,
    )


def storey_estimator(sample: PValueSample) -> Pi0Estimate:
    """The ss estimator at the conventional cutoff lambda = 0.5."""
    return ss_estimator(sample, 0.5, method="storey")


def consistency_probe(pi0: float, model, sizes: Sequence[int], seed: int,
                      cfg: EstimatorConfig = EstimatorConfig()) -> list[float]:
    """|pi0_hat(m) - pi0| for one replicate per sample size.

    ``model`` is a ScenarioSpec whose pi0 and m fields are overridden.
    """
    from .sim_harness import draw_sample, replicate_rng

    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    errors = []
    for i, m in enumerate(sizes):
        spec = replace(model, pi0=pi0, m=int(m))
        sample, _ = draw_sample(spec, replicate_rng(seed, i))
        est = estimate_pi0(sample, cfg)
        errors.append(abs(est.pi0 - pi0))
    return errors


def estimate_json_dict(est: Pi0Estimate) -> dict:
    """Stable JSON field layout for CLI and harness output."""
    return {
        "method": est.method,
        "m": est.m,
        "pi0": est.pi0,
        "pi0_raw": est.pi0_raw,
        "lambda_hat": est.lambda_hat,
        "mu_hat": est.mu_hat,
        "n_hat": est.n_hat,
        "p_hat": est.p_hat,
        "risk": est.risk,
    }
