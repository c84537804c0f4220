"""
Array geometry, path loss and Rician channel synthesis for a planar RIS.

Element ``l`` (0-based here) sits at grid position ``(l_y, l_z)`` with
``l = l_z * l_y_count + l_y``, i.e. the y index runs fastest.  All LoS
vectors are pure phasors; the modulation-frequency dependent phase only
enters the RIS->receiver direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SPEED_OF_LIGHT",
    "SphericalPosition",
    "RisGeometry",
    "LinkGeometry",
    "ChannelRealization",
    "element_offsets",
    "path_loss_amplitude",
    "rician_split",
    "los_alice_ris",
    "los_ris_receiver",
    "assemble_rician",
    "sample_nlos",
    "draw_channel",
]

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SphericalPosition:
    """A point seen from the RIS reference element.

    Angles are radians; use :meth:`from_degrees` for config-style input.
    """

    theta: float
    phi: float
    dist: float

    def __post_init__(self):
        if not (np.isfinite(self.theta) and np.isfinite(self.phi)):
            raise ValueError("angles must be finite")
        if not self.dist > 0:
            raise ValueError(f"dist must be positive, got {self.dist}")

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg, dist):
        return cls(np.deg2rad(theta_deg), np.deg2rad(phi_deg), float(dist))

    def with_dist(self, dist):
        return SphericalPosition(self.theta, self.phi, float(dist))


@dataclass(frozen=True)
class RisGeometry:
    """Panel layout and static reflection parameters.

    ``spacing=None`` selects half a carrier wavelength.
    """

    l_y: int
    l_z: int
    f_c: float = 28e9
    spacing: float | None = None
    g: int = 1
    a0: float = 1.0
    phi0: float = 0.0

    def __post_init__(self):
        if self.l_y < 1 or self.l_z < 1:
            raise ValueError("element counts must be >= 1")
        if not self.f_c > 0:
            raise ValueError("carrier frequency must be positive")
        if self.spacing is None:
            object.__setattr__(self, "spacing", SPEED_OF_LIGHT / (2.0 * self.f_c))
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if int(self.g) != self.g or self.g < 1:
            raise ValueError("harmonic order g must be an integer >= 1")
        if not self.a0 > 0:
            raise ValueError("a0 must be positive")

    @property
    def n_elements(self):
        return self.l_y * self.l_z

    @property
    def static_coeff(self):
        """Common reflection coefficient ``A0 exp(j phi0)``."""
        return self.a0 * np.exp(1j * self.phi0)

    def grid_indices(self):
        """Return ``(iy, iz)`` zero-based index arrays in element order."""
        idx = np.arange(self.n_elements)
        return idx % self.l_y, idx // self.l_y


@dataclass(frozen=True)
class LinkGeometry:
    upsilon: np.ndarray
    dists: np.ndarray
    base_dist: float


@dataclass
class ChannelRealization:
    """One draw of every link.

    ``h_ar`` is the complete Alice->RIS channel.  The RIS->receiver links
    depend on the modulation frequencies, so only their geometry and frozen
    NLoS draws are stored; :meth:`h_rb` rebuilds Bob's channel for any ``f``.
    """

    h_ar: np.ndarray
    rb_geom: LinkGeometry
    rb_nlos: np.ndarray
    rwk_geoms: list
    rwk_nlos: list
    rho_rb: float
    rho_rwk: np.ndarray
    beta1: float
    beta2: float
    geom: RisGeometry = field(repr=False, default=None)

    @property
    def n_wardens(self):
        return len(self.rwk_geoms)

    def h_rb(self, freqs):
        los = los_ris_receiver(self.geom, self.rb_geom, freqs)
        return assemble_rician(self.rho_rb, self.beta1, self.beta2, los, self.rb_nlos)

    def h_rw(self, k, freqs):
        los = los_ris_receiver(self.geom, self.rwk_geoms[k], freqs)
        return assemble_rician(self.rho_rwk[k], self.beta1, self.beta2, los, self.rwk_nlos[k])

    def los_rw(self, k, freqs):
        return los_ris_receiver(self.geom, self.rwk_geoms[k], freqs)


def element_offsets(geom: RisGeometry, pos: SphericalPosition) -> LinkGeometry:
    """Per-element path-length offsets relative to the reference element."""
    iy, iz = geom.grid_indices()
    d = geom.spacing
    upsilon = iz * d * np.cos(pos.theta) + iy * d * np.sin(pos.theta) * np.cos(pos.phi)
    return LinkGeometry(upsilon=upsilon, dists=pos.dist + upsilon, base_dist=pos.dist)


def path_loss_amplitude(dist):
    """Amplitude ``rho`` with ``rho**2 = -45 - 20 log10(dist)`` dB."""
    dist = np.asarray(dist, dtype=float)
    if np.any(dist <= 0):
        raise ValueError("distance must be positive")
    out = np.sqrt(10.0 ** ((-45.0 - 20.0 * np.log10(dist)) / 10.0))
    return float(out) if out.ndim == 0 else out


def rician_split(beta_linear):
    """LoS/NLoS amplitude weights for Rician factor ``beta`` (linear)."""
    if not beta_linear > 0:
        raise ValueError("Rician factor must be positive")
    return np.sqrt(beta_linear / (beta_linear + 1.0)), np.sqrt(1.0 / (beta_linear + 1.0))


def los_alice_ris(geom: RisGeometry, pos_a: SphericalPosition) -> np.ndarray:
    link = element_offsets(geom, pos_a)
    return np.exp(-2j * np.pi * geom.f_c * link.upsilon / SPEED_OF_LIGHT)


def los_ris_receiver(geom: RisGeometry, link: LinkGeometry, freqs) -> np.ndarray:
    """LoS vector towards a receiver for modulation frequencies ``freqs`` (Hz).

    Entry ``l`` is ``exp(j 2 pi (f_c U_l + g f_l d_l) / c)``.  All-zero
    ``freqs`` reproduces a conventional (unmodulated) RIS.
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.shape != link.upsilon.shape:
        raise ValueError(f"expected {link.upsilon.shape[0]} frequencies, got shape {freqs.shape}")
    phase = geom.f_c * link.upsilon + geom.g * freqs * link.dists
    return np.exp(2j * np.pi * phase / SPEED_OF_LIGHT)


def assemble_rician(rho, beta1, beta2, los, nlos):
    los = np.asarray(los)
    nlos = np.asarray(nlos)
    # leading axes broadcast, so a batch of NLoS draws can share one LoS vector
    if los.shape[-1:] != nlos.shape[-1:]:
        raise ValueError("LoS and NLoS parts must have the same length")
    return rho * (beta1 * los + beta2 * nlos)


def sample_nlos(rng_seed, L, size=None):
    """i.i.d. CN(0, 1) draws.

    ``rng_seed`` may be anything accepted by :func:`numpy.random.default_rng`
    (including a Generator, which is then consumed).
    """
    rng = np.random.default_rng(rng_seed)
    shape = (L,) if size is None else (size, L)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_channel(geom, alice, bob, willies, beta_linear, rng) -> ChannelRealization:
    """Draw one realization of all links with a caller-owned generator."""
    rng = np.random.default_rng(rng)
    L = geom.n_elements
    beta1, beta2 = rician_split(beta_linear)
    nlos_ar = sample_nlos(rng, L)
    nlos_rb = sample_nlos(rng, L)
    nlos_rw = [sample_nlos(rng, L) for _ in willies]
    h_ar = assemble_rician(path_loss_amplitude(alice.dist), beta1, beta2,
                           los_alice_ris(geom, alice), nlos_ar)
    return ChannelRealization(
        h_ar=h_ar,
        rb_geom=element_offsets(geom, bob),
        rb_nlos=nlos_rb,
        rwk_geoms=[element_offsets(geom, w) for w in willies],
        rwk_nlos=nlos_rw,
        rho_rb=path_loss_amplitude(bob.dist),
        rho_rwk=np.array([path_loss_amplitude(w.dist) for w in willies]),
        beta1=float(beta1),
        beta2=float(beta2),
        geom=geom,
    )
