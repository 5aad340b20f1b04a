"""Spectral regularization families ``g_lambda`` and a numerical checker of their conditions.

Every family satisfies, on ``0 < sigma <= a``::

    sigma * g(sigma) <= a1,   g(sigma) <= a2 / lam,   |r(sigma)| <= a3,
    |r(sigma)| * sigma**p <= omega_p * lam**p   for p up to the qualification,

with ``r(sigma) = 1 - sigma * g(sigma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import FAMILY_SLACK
from .errors import BadLambda, OutOfSpectralRange


@dataclass(frozen=True)
class Filter:
    """A spectral filter family selected by ``family``.

    ``family`` is one of ``"tikhonov"``, ``"cutoff"``, ``"showalter"``, ``"landweber"``.
    """

    family: str

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown filter {self.family!r}; choose from {sorted(_FAMILIES)}")

    @property
    def qualification(self) -> float:
        return 1.0 if self.family == "tikhonov" else math.inf

    def g(self, lam: float, sigma, a: float | None = None):
        lam = _check_lambda(lam)
        sigma = np.asarray(sigma, dtype=float)
        _check_range(self.family, sigma, a)
        return _FAMILIES[self.family](lam, sigma)

    def residual(self, lam: float, sigma, a: float | None = None):
        lam = _check_lambda(lam)
        sigma = np.asarray(sigma, dtype=float)
        _check_range(self.family, sigma, a)
        if self.family == "tikhonov":
            return lam / (sigma + lam)
        if self.family == "landweber":
            t = landweber_steps(lam)
            with np.errstate(invalid="ignore", divide="ignore"):
                smooth = np.exp(t * np.log1p(-sigma))
            return np.where(sigma < 1, smooth, (1.0 - sigma) ** t)
        if self.family == "showalter":
            return np.exp(-sigma / lam)
        # cut-off: exact 0/1 so round-off in sigma * (1/sigma) is not amplified
        return np.where(sigma >= lam, 0.0, 1.0)

    def omega(self, p: float) -> float:
        """Constant in ``sup |r| sigma^p <= omega_p lam^p`` (only meaningful for p <= qualification)."""
        if self.family in ("tikhonov", "cutoff"):
            return 1.0
        if self.family == "showalter":
            # sup_x x^p e^{-x} = (p/e)^p
            return (p / math.e) ** p if p > 0 else 1.0
        # (1-s)^t s^p <= (p/(t+p))^p <= (p lam)^p for p >= 1 since t >= 1/lam - 1.
        return max(p, 1.0) ** p

    def __str__(self) -> str:
        return self.family


def landweber_steps(lam: float) -> int:
    """Iteration count identified with ``lam``: the largest ``t`` with ``t <= 1/lam``."""
    return max(1, int(math.floor((1.0 / lam) * (1.0 + 1e-12))))


def _check_lambda(lam) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise BadLambda(f"lambda must be positive and finite, got {lam}")
    return lam


def _check_range(family: str, sigma: np.ndarray, a: float | None) -> None:
    if sigma.size == 0:
        return
    if np.min(sigma) < 0:
        raise OutOfSpectralRange("spectral argument must be nonnegative")
    if a is not None and np.max(sigma) > a * (1.0 + 1e-12):
        raise OutOfSpectralRange(f"spectral argument {np.max(sigma):.3e} exceeds range {a:.3e}")
    if family == "landweber" and np.max(sigma) >= 2.0:
        raise OutOfSpectralRange("Landweber iteration diverges for sigma >= 2")


def _tikhonov(lam, sigma):
    return 1.0 / (sigma + lam)


def _cutoff(lam, sigma):
    out = np.zeros_like(sigma)
    keep = sigma >= lam
    out[keep] = 1.0 / sigma[keep]
    return out


def _showalter(lam, sigma):
    out = np.full_like(sigma, 1.0 / lam)
    pos = sigma > 0
    s = sigma[pos]
    out[pos] = -np.expm1(-s / lam) / s
    return out


def _landweber(lam, sigma):
    t = landweber_steps(lam)
    out = np.full_like(sigma, float(t))
    small = (sigma > 0) & (sigma < 1)
    s = sigma[small]
    # 1 - (1-s)^t without cancellation for small s
    out[small] = -np.expm1(t * np.log1p(-s)) / s
    big = sigma >= 1
    s = sigma[big]
    out[big] = (1.0 - (1.0 - s) ** t) / s
    return out


_FAMILIES = {
    "tikhonov": _tikhonov,
    "cutoff": _cutoff,
    "showalter": _showalter,
    "landweber": _landweber,
}

FILTER_NAMES = tuple(_FAMILIES)


def filter_from_name(name: str) -> Filter:
    aliases = {"spectralcutoff": "cutoff", "spectral_cutoff": "cutoff"}
    key = name.strip().lower()
    return Filter(aliases.get(key, key))


def g(filt: Filter, lam: float, sigma, a: float | None = None):
    return filt.g(lam, sigma, a)


def residual(filt: Filter, lam: float, sigma, a: float | None = None):
    return filt.residual(lam, sigma, a)


def qualification(filt: Filter) -> float:
    return filt.qualification


# --------------------------------------------------------------------------
# family verification


@dataclass
class FilterReport:
    family: str
    qualification: float
    lambda_grid: list
    sigma_grid: list
    p_list: list
    a1: float  # max sigma * g
    a2: float  # max lam * g
    a3: float  # max |r|
    envelopes: dict  # p -> max |r| sigma^p / lam^p
    omegas: dict  # p -> declared omega_p
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "qualification": "inf" if math.isinf(self.qualification) else self.qualification,
            "a1_observed": self.a1,
            "a2_observed": self.a2,
            "a3_observed": self.a3,
            "envelopes": {str(p): v for p, v in self.envelopes.items()},
            "omegas": {str(p): v for p, v in self.omegas.items()},
            "checks": dict(self.checks),
            "passed": self.passed,
            "lambda_grid": list(self.lambda_grid),
            "sigma_grid": list(self.sigma_grid),
            "p_list": list(self.p_list),
        }


def verify_family(filt: Filter, lambda_grid, sigma_grid, p_list=(0.5, 1.0, 2.0)) -> FilterReport:
    """Empirical maxima of the four family conditions over a (sigma, lambda) grid.

    Qualification envelopes are only judged for ``p <= qualification``; larger
    ``p`` are reported so saturation can be inspected.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    sig = np.asarray(sigma_grid, dtype=float)
    if lam.size == 0 or sig.size == 0:
        raise ValueError("grids must be nonempty")
    if np.min(sig) <= 0:
        raise OutOfSpectralRange("sigma grid must lie in (0, a]")
    a = max(1.0, float(np.max(sig)))

    G = np.vstack([filt.g(l, sig, a) for l in lam])  # (n_lam, n_sig)
    R = np.vstack([filt.residual(l, sig, a) for l in lam])
    a1 = float(np.max(sig[None, :] * G))
    a2 = float(np.max(lam[:, None] * G))
    a3 = float(np.max(np.abs(R)))
    envelopes, omegas = {}, {}
    for p in p_list:
        env = np.abs(R) * sig[None, :] ** p / lam[:, None] ** p
        envelopes[p] = float(np.max(env))
        omegas[p] = filt.omega(p)

    checks = {
        "a1": a1 <= 1.0 + FAMILY_SLACK,
        "a2": a2 <= 1.0 + FAMILY_SLACK,
        "a3": a3 <= 1.0 + FAMILY_SLACK,
        "nonnegative": bool(np.min(sig[None, :] * G) >= -FAMILY_SLACK),
    }
    for p in p_list:
        if p <= filt.qualification:
            checks[f"qualification_p{p:g}"] = envelopes[p] <= omegas[p] + FAMILY_SLACK
    return FilterReport(
        family=filt.family,
        qualification=filt.qualification,
        lambda_grid=lam.tolist(),
        sigma_grid=sig.tolist(),
        p_list=list(p_list),
        a1=a1, a2=a2, a3=a3,
        envelopes=envelopes, omegas=omegas, checks=checks,
    )


def default_verification_grids(n_sigma: int = 200, n_lambda: int = 25):
    return np.logspace(-6, 0, n_lambda), np.logspace(-6, 0, n_sigma)
