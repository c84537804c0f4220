"""
Closed-form covertness quantities for power-detector wardens under
log-uniform noise-power uncertainty, plus Bob's achievable rate.

All powers are in watts.  Warden ``k`` has nominal noise power
``sigma2_w[k]``; its true noise power is log-uniform on
``[sigma2_w / varsigma, varsigma * sigma2_w]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import effective_gain

__all__ = [
    "CovertConfig",
    "WardenStats",
    "dbm_to_watt",
    "dep",
    "optimal_threshold",
    "optimal_dep",
    "covert_power_budget",
    "warden_stats",
    "log_mgf",
    "CovertRhs",
    "covert_rhs",
    "rate_bob",
    "noise_power_pdf",
]

EPS_ZERO_REL = 1e-12


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class CovertConfig:
    varsigma: float
    xi: float
    psi: float
    sigma2_w: tuple
    sigma2_b: float
    p_t: float

    def __post_init__(self):
        if not self.varsigma > 1:
            raise ValueError("varsigma must exceed 1")
        if not 0 < self.xi < 1:
            raise ValueError("xi must lie in (0, 1)")
        if self.psi < 0:
            raise ValueError("psi must be non-negative")
        sw = tuple(float(s) for s in np.atleast_1d(self.sigma2_w))
        object.__setattr__(self, "sigma2_w", sw)
        if any(s <= 0 for s in sw) or self.sigma2_b <= 0 or self.p_t < 0:
            raise ValueError("noise powers must be positive and p_t non-negative")

    @property
    def n_wardens(self):
        return len(self.sigma2_w)

    def replace(self, **changes):
        data = dict(varsigma=self.varsigma, xi=self.xi, psi=self.psi, sigma2_w=self.sigma2_w,
                    sigma2_b=self.sigma2_b, p_t=self.p_t)
        data.update(changes)
        return CovertConfig(**data)


@dataclass(frozen=True)
class WardenStats:
    mu: complex
    sigma_tilde2: float
    omega_det: float


def _sigma2(cfg, k):
    # a single nominal noise power is shared by every warden
    return cfg.sigma2_w[0] if len(cfg.sigma2_w) == 1 else cfg.sigma2_w[k]


def _noise_bounds(cfg, k):
    s2 = _sigma2(cfg, k)
    return s2 / cfg.varsigma, cfg.varsigma * s2


def noise_power_pdf(x, cfg, k):
    """Density of the warden's true noise power."""
    lo, hi = _noise_bounds(cfg, k)
    x = np.asarray(x, dtype=float)
    inside = (x >= lo) & (x <= hi)
    return np.where(inside, 1.0 / (2.0 * np.maximum(x, lo) * np.log(cfg.varsigma)), 0.0)


def dep(tau, omega, cfg: CovertConfig, k=0):
    """Detection error probability for threshold ``tau`` and received power ``omega``.

    Only thresholds inside the noise support are modelled.
    """
    lo, hi = _noise_bounds(cfg, k)
    # relative slack for thresholds produced by floating arithmetic at the edges
    if tau < lo * (1 - 1e-12) or tau > hi * (1 + 1e-12):
        raise ValueError(f"threshold {tau} outside [{lo}, {hi}]")
    if omega < 0:
        raise ValueError("omega must be non-negative")
    val = 1.0 - (np.log(tau) - np.log(max(tau - omega, lo))) / (2.0 * np.log(cfg.varsigma))
    return float(min(max(val, 0.0), 1.0))


def optimal_threshold(omega, cfg: CovertConfig, k=0):
    lo, hi = _noise_bounds(cfg, k)
    return min(omega + lo, hi)


def optimal_dep(omega, cfg: CovertConfig, k=0):
    s2, vs = _sigma2(cfg, k), cfg.varsigma
    if omega <= (vs**2 - 1.0) * s2 / vs:
        return float(max(1.0 - np.log1p(vs * omega / s2) / (2.0 * np.log(vs)), 0.0))
    return 0.0


def covert_power_budget(cfg: CovertConfig, k=0):
    """Largest warden received power keeping the optimal DEP at least ``1 - xi``."""
    vs = cfg.varsigma
    return (vs ** (2.0 * cfg.xi) - 1.0) * _sigma2(cfg, k) / vs


def warden_stats(theta_vec, freqs, chan, geom, cfg: CovertConfig, k=0):
    """Mean, NLoS variance and realised received power at warden ``k``."""
    p_t = cfg.p_t
    rho = chan.rho_rwk[k]
    los = chan.los_rw(k, freqs)
    mu = np.sqrt(p_t) * rho * chan.beta1 * effective_gain(theta_vec, los, chan.h_ar, geom)
    # |theta_l| = 1 so ||Theta Theta0 h_ar|| = A0 ||h_ar||
    s2 = p_t * rho**2 * chan.beta2**2 * geom.a0**2 * float(np.vdot(chan.h_ar, chan.h_ar).real)
    omega = p_t * abs(effective_gain(theta_vec, chan.h_rw(k, freqs), chan.h_ar, geom)) ** 2
    return WardenStats(mu=complex(mu), sigma_tilde2=float(s2), omega_det=float(omega))


def log_mgf(stats: WardenStats, psi):
    """``(1/psi) log E[exp(psi * omega)]`` for ``omega = |X|^2``, ``X ~ CN(mu, s2)``."""
    s2 = stats.sigma_tilde2
    m2 = abs(stats.mu) ** 2
    if psi < 0:
        raise ValueError("psi must be non-negative")
    if psi == 0:
        return m2 + s2
    x = psi * s2
    if x >= 1:
        raise ValueError(f"log-MGF undefined: psi * sigma_tilde2 = {x} >= 1")
    return m2 / (1.0 - x) - np.log1p(-x) / psi


@dataclass(frozen=True)
class CovertRhs:
    h: float
    rhs: float
    iota: float
    eps_zero: float
    clamped: bool


def covert_rhs(stats: WardenStats, cfg: CovertConfig, k, rho_rw, beta1):
    """Right-hand side ``max(0, h_k)`` of the LoS covert constraint.

    ``iota`` is the same bound normalised by ``P_t rho^2 beta1^2`` so that it
    applies to ``|b_k^H v|^2`` directly.  When ``h_k <= 0`` the bound becomes
    the floor ``eps_zero = 1e-12 P_t rho^2`` (a numerical stand-in for a null).
    """
    x = cfg.psi * stats.sigma_tilde2
    if x >= 1:
        raise ValueError(f"psi * sigma_tilde2 = {x} >= 1; reduce psi")
    h = (1.0 - x) * (covert_power_budget(cfg, k) + np.log1p(-x))
    scale = cfg.p_t * rho_rw**2
    eps_zero = EPS_ZERO_REL * scale
    clamped = h <= 0
    rhs = eps_zero if clamped else h
    return CovertRhs(h=float(h), rhs=float(rhs), iota=float(rhs / (scale * beta1**2)),
                     eps_zero=float(eps_zero), clamped=bool(clamped))


def rate_bob(theta_vec, freqs, chan, geom, cfg: CovertConfig):
    """Achievable rate in bits per channel use."""
    g = effective_gain(theta_vec, chan.h_rb(freqs), chan.h_ar, geom)
    return float(np.log2(1.0 + cfg.p_t * abs(g) ** 2 / cfg.sigma2_b))
