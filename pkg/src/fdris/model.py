"""
Reflection physics of a frequency-diverse RIS.

Phase convention
----------------
``BeamState.theta_vec`` holds the diagonal of the passive beamforming
matrix, ``theta_l = exp(-j 2 pi g f_l kappa_l)``, so the cascaded gain is
``h_rx^H Diag(theta) A0 e^{j phi0} h_ar``.  The optimizer works with the
conjugate vector ``v = conj(theta)`` (see :attr:`BeamState.optimizer_vector`),
for which the same gain reads ``v^H (conj(h_rx) * A0 e^{j phi0} h_ar)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SPEED_OF_LIGHT, RisGeometry, SphericalPosition, element_offsets

__all__ = [
    "BeamState",
    "fourier_coefficient",
    "theta_from_delays",
    "delays_from_theta",
    "effective_gain",
    "beampattern_fdris",
    "beampattern_conventional",
    "fdris_pattern",
    "conventional_pattern",
    "align_delays",
    "align_conventional",
]

_SINGULAR_TOL = 1e-9
_DELAY_SLACK = 1e-12


def fourier_coefficient(S, T, z, a0=1.0, phi0=0.0):
    """Fourier coefficient of order ``z`` for the sawtooth phase modulation.

    Parameters
    ----------
    S : float
        Phase slope in rad/s.
    T : float
        Modulation period in seconds.
    z : int
        Harmonic order.
    a0, phi0 : float
        Static amplitude and phase of the element.

    Returns
    -------
    complex
        ``j a0 e^{j phi0} (1 - e^{j x}) / x`` with ``x = S T - 2 z pi``; the
        removable singularity at ``x = 0`` returns its limit ``a0 e^{j phi0}``.
    """
    if not T > 0:
        raise ValueError("modulation period must be positive")
    x = S * T - 2.0 * z * np.pi
    base = a0 * np.exp(1j * phi0)
    if abs(x) < _SINGULAR_TOL:
        return complex(base)
    return complex(1j * base * (1.0 - np.exp(1j * x)) / x)


def theta_from_delays(freqs, delays, g=1):
    freqs = np.asarray(freqs, dtype=float)
    delays = np.asarray(delays, dtype=float)
    if np.any(delays < -_DELAY_SLACK) or np.any(delays * freqs > 1.0 + 1e-9):
        raise ValueError("delays must satisfy 0 <= kappa_l <= 1/f_l")
    return np.exp(-2j * np.pi * g * freqs * delays)


def delays_from_theta(theta_vec, freqs, g=1, tol=1e-6):
    """Invert the delay->phase map; result lies in ``[0, 1/(g f_l))``."""
    theta_vec = np.asarray(theta_vec)
    freqs = np.asarray(freqs, dtype=float)
    if np.max(np.abs(np.abs(theta_vec) - 1.0), initial=0.0) > tol:
        raise ValueError("theta entries must be unit modulus")
    turn = np.mod(-np.angle(theta_vec), 2.0 * np.pi)
    # mod can return exactly 2 pi after rounding
    turn = np.where(turn >= 2.0 * np.pi, 0.0, turn)
    return turn / (2.0 * np.pi * g * freqs)


@dataclass
class BeamState:
    """Decision variables: reflection phases, modulation frequencies, delays.

    ``delays`` is ``None`` for a conventional RIS (no modulation).
    """

    theta_vec: np.ndarray
    freqs: np.ndarray
    delays: np.ndarray | None = None

    @classmethod
    def from_delays(cls, freqs, delays, g=1):
        freqs = np.asarray(freqs, dtype=float)
        delays = np.asarray(delays, dtype=float)
        return cls(theta_from_delays(freqs, delays, g), freqs, delays)

    @classmethod
    def from_theta(cls, theta_vec, freqs, g=1):
        freqs = np.asarray(freqs, dtype=float)
        theta_vec = np.asarray(theta_vec, dtype=complex)
        delays = delays_from_theta(theta_vec, freqs, g) if np.all(freqs > 0) else None
        return cls(theta_vec, freqs, delays)

    @classmethod
    def from_optimizer(cls, v, freqs, g=1):
        return cls.from_theta(np.conj(v), freqs, g)

    @property
    def optimizer_vector(self):
        return np.conj(self.theta_vec)


def effective_gain(theta_vec, h_rx, h_ar, geom: RisGeometry):
    """Cascaded scalar gain ``h_rx^H Diag(theta) A0 e^{j phi0} h_ar``."""
    theta_vec, h_rx, h_ar = np.asarray(theta_vec), np.asarray(h_rx), np.asarray(h_ar)
    if not (theta_vec.shape == h_rx.shape == h_ar.shape):
        raise ValueError("theta, h_rx and h_ar must have equal length")
    return complex(np.sum(np.conj(h_rx) * theta_vec * h_ar) * geom.static_coeff)


def _probe_offsets(geom, theta, phi):
    """Offsets for arrays of probe angles; returns shape ``(..., L)``."""
    iy, iz = geom.grid_indices()
    theta = np.asarray(theta, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    return iz * geom.spacing * np.cos(theta) + iy * geom.spacing * np.sin(theta) * np.cos(phi)


def fdris_pattern(geom, pos_alice, theta, phi, dist, state: BeamState):
    """Vectorised FD-RIS beampattern over broadcastable probe arrays."""
    theta, phi, dist = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float),
                                           np.asarray(dist, float))
    ups_ar = element_offsets(geom, pos_alice).upsilon
    ups = _probe_offsets(geom, theta, phi)
    phi1 = 2.0 * np.pi * geom.f_c * (ups_ar + ups) / SPEED_OF_LIGHT
    phi3 = 2.0 * np.pi * geom.g * state.freqs * (dist[..., None] + ups) / SPEED_OF_LIGHT
    # exp(j phi2) = exp(j phi0) * theta_l
    terms = np.exp(-1j * (phi1 + phi3)) * np.exp(1j * geom.phi0) * state.theta_vec
    L = geom.n_elements
    return np.minimum(np.abs(terms.sum(axis=-1)) ** 2 / L**2, 1.0)


def conventional_pattern(geom, pos_alice, theta, phi, reflect_coeffs):
    """Vectorised conventional-RIS beampattern (angle only)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    ups_ar = element_offsets(geom, pos_alice).upsilon
    phi1 = 2.0 * np.pi * geom.f_c * (ups_ar + _probe_offsets(geom, theta, phi)) / SPEED_OF_LIGHT
    terms = np.exp(-1j * phi1) * np.asarray(reflect_coeffs)
    L = geom.n_elements
    return np.minimum(np.abs(terms.sum(axis=-1)) ** 2 / L**2, 1.0)


def beampattern_fdris(geom, pos_alice, probe: SphericalPosition, state: BeamState) -> float:
    """Normalised FD-RIS gain in ``[0, 1]`` at a single probe point."""
    return float(fdris_pattern(geom, pos_alice, probe.theta, probe.phi, probe.dist, state))


def beampattern_conventional(geom, pos_alice, probe: SphericalPosition, reflect_coeffs) -> float:
    coeffs = np.asarray(reflect_coeffs)
    if np.max(np.abs(np.abs(coeffs) - 1.0)) > 1e-6:
        raise ValueError("reflection coefficients must be unit modulus")
    return float(conventional_pattern(geom, pos_alice, probe.theta, probe.phi, coeffs))


def _phi1(geom, pos_alice, target):
    ups = element_offsets(geom, pos_alice).upsilon + element_offsets(geom, target).upsilon
    return 2.0 * np.pi * geom.f_c * ups / SPEED_OF_LIGHT


def align_delays(geom, pos_alice, target: SphericalPosition, freqs):
    """Delays meeting the phase alignment condition at ``target``."""
    freqs = np.asarray(freqs, dtype=float)
    link = element_offsets(geom, target)
    phi3 = 2.0 * np.pi * geom.g * freqs * link.dists / SPEED_OF_LIGHT
    need = np.mod(geom.phi0 - _phi1(geom, pos_alice, target) - phi3, 2.0 * np.pi)
    need = np.where(need >= 2.0 * np.pi, 0.0, need)
    return need / (2.0 * np.pi * geom.g * freqs)


def align_conventional(geom, pos_alice, target: SphericalPosition):
    """Unit-modulus coefficients ``U_l = exp(j phi1_l)`` focusing on ``target``'s angle."""
    return np.exp(1j * _phi1(geom, pos_alice, target))
