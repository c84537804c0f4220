"""
Joint design of time delays and modulation frequencies.

The outer loop alternates two block updates on the covert-rate problem:

* phases ``v`` (conjugate of the delay-induced reflection phases) through a
  weighted-MMSE minorant solved by penalty dual decomposition (PDD);
* modulation frequencies ``f`` through second-order majorize-minimize steps
  on Bob's gain with the LoS warden leakage kept below its cap.

Both blocks only accept points that are feasible and do not lower the rate,
so the recorded rate trace is non-decreasing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .covert import CovertConfig, covert_rhs, rate_bob, warden_stats
from .cqp import ConcaveQuadratic, FeasibleSet, SolverOpts, maximize
from .geometry import SPEED_OF_LIGHT, ChannelRealization, RisGeometry
from .model import BeamState

log = logging.getLogger(__name__)

__all__ = [
    "SolverOptions",
    "PddState",
    "MmseAux",
    "PddResult",
    "FreqContext",
    "PhasorSum",
    "FreqStepResult",
    "AlternateResult",
    "InfeasibleCovertError",
    "effective_channel",
    "mmse_aux",
    "surrogate_quadratic",
    "surrogate_value",
    "pdd_solve",
    "restore_slabs",
    "freq_gradient",
    "freq_hessian",
    "lipschitz_bound",
    "sca_freq_step",
    "linear_freqs",
    "alternate",
]

LN2 = np.log(2.0)


class InfeasibleCovertError(RuntimeError):
    """Raised when no covert-feasible starting point can be found."""


@dataclass
class SolverOptions:
    eps_outer: float = 1e-3
    eps_pdd: float = 1e-3
    max_outer: int = 60
    max_pdd: int = 200
    max_inner: int = 30
    seed: int = 0
    rho_pen: float = 100.0
    xi_scale: float = 0.5
    inner_tol: float = 1e-4
    modulus_tol: float = 1e-6
    slab_margin: float = 1e-6
    sca_steps: int = 200
    sca_tol: float = 1e-6
    sca_curvature: float = 1.0
    max_backtracks: int = 40
    freq_hold: str = "aligned"

    def __post_init__(self):
        if self.eps_outer <= 0 or self.eps_pdd <= 0:
            raise ValueError("tolerances must be positive")
        if min(self.max_outer, self.max_pdd, self.max_inner) < 1:
            raise ValueError("iteration caps must be >= 1")
        if not 0 < self.xi_scale < 1 or self.rho_pen <= 0:
            raise ValueError("PDD needs rho_pen > 0 and 0 < xi_scale < 1")
        if self.freq_hold not in ("aligned", "theta"):
            raise ValueError("freq_hold must be 'aligned' or 'theta'")


@dataclass
class PddState:
    lam: np.ndarray
    rho_pen: float
    xi_scale: float
    d_residual: float = np.inf
    eps_track: float = np.inf


@dataclass(frozen=True)
class MmseAux:
    u: complex
    w: float


@dataclass
class PddResult:
    v: np.ndarray
    converged: bool
    residual: float
    modulus_dev: float
    rho_pen: float
    outer_iterations: int
    value: float


# ---------------------------------------------------------------------------
# MMSE minorant

def effective_channel(h_rb, h_ar, geom: RisGeometry):
    """``h_tilde = conj(h_rb) * A0 e^{j phi0} h_ar`` so that gain = ``v^H h_tilde``."""
    return np.conj(h_rb) * geom.static_coeff * h_ar


def mmse_aux(v, h_tilde, p_t, sigma2_b) -> MmseAux:
    """Optimal equaliser and MSE weight at phases ``v``."""
    s = np.sqrt(p_t) * np.vdot(v, h_tilde)
    den = abs(s) ** 2 + sigma2_b
    u = s / den
    mse = sigma2_b / den  # equals |sqrt(p_t) conj(u) s - 1|^2 + sigma2 |u|^2 at the optimum
    return MmseAux(u=complex(u), w=float(1.0 / mse))


def _mse(v, h_tilde, aux: MmseAux, p_t, sigma2_b):
    s = np.sqrt(p_t) * np.vdot(v, h_tilde)
    return abs(np.conj(aux.u) * s - 1.0) ** 2 + sigma2_b * abs(aux.u) ** 2


def surrogate_value(v, h_tilde, aux: MmseAux, p_t, sigma2_b):
    """``(ln W - W E(v, u) + 1) / ln 2`` evaluated directly."""
    return float((np.log(aux.w) - aux.w * _mse(v, h_tilde, aux, p_t, sigma2_b) + 1.0) / LN2)


def surrogate_quadratic(aux: MmseAux, h_tilde, p_t, sigma2_b) -> ConcaveQuadratic:
    """Quadratic form of the MMSE minorant in bits.

    The constant keeps the ``+1`` and the ``sigma2 |u|^2`` term so the
    surrogate is tight at the expansion point.
    """
    w, u = aux.w, aux.u
    A = p_t * w * abs(u) ** 2 * np.outer(h_tilde, np.conj(h_tilde)) / LN2
    a = np.sqrt(p_t) * w * h_tilde * np.conj(u) / LN2
    c = (np.log(w) - w - w * sigma2_b * abs(u) ** 2 + 1.0) / LN2
    return ConcaveQuadratic(A, a, float(c))


# ---------------------------------------------------------------------------
# PDD for the unit-modulus subproblem

def _normalise_slabs(slabs, margin):
    out = []
    for b, iota in slabs:
        b = np.asarray(b, dtype=complex)
        nb2 = float(np.vdot(b, b).real)
        out.append((b / np.sqrt(nb2), max(iota / nb2 * (1.0 - margin), 0.0)))
    return out


def restore_slabs(v, slabs, max_iter=100, margin=1e-6):
    """Minimal phase corrections bringing unit-modulus ``v`` inside every slab.

    Gauss-Newton on the phase vector: each step is the least-norm phase
    change that moves the violated ``|b_k^H v|`` onto its (shrunk) bound.
    Returns ``(v, ok)``.
    """
    v = np.exp(1j * np.angle(v))
    norm = _normalise_slabs(slabs, 0.0)
    if not norm:
        return v, True
    B = np.array([b for b, _ in norm])
    caps = np.array([c for _, c in norm])
    target = np.sqrt(caps * (1.0 - margin))
    for _ in range(max_iter):
        s = B.conj() @ v
        mag = np.abs(s)
        bad = mag > np.sqrt(caps)
        if not np.any(bad):
            return v, True
        sb, Bb, mb = s[bad], B[bad], mag[bad]
        # d|s_k|/dphi_l = -Im(conj(s_k) conj(b_kl) v_l) / |s_k|
        J = -np.imag(np.conj(sb)[:, None] * np.conj(Bb) * v[None, :]) / mb[:, None]
        r = target[bad] - mb
        JJ = J @ J.T
        try:
            step = J.T @ np.linalg.solve(JJ + 1e-14 * np.trace(JJ) * np.eye(len(r)), r)
        except np.linalg.LinAlgError:
            return v, False
        phase = np.angle(v)
        best = np.sum(np.maximum(mag - np.sqrt(caps), 0.0))
        t = 1.0
        for _ in range(30):
            cand = np.exp(1j * (phase + t * step))
            viol = np.sum(np.maximum(np.abs(B.conj() @ cand) - np.sqrt(caps), 0.0))
            if viol < best:
                v = cand
                break
            t *= 0.5
        else:
            return v, False
    return v, bool(np.all(np.abs(B.conj() @ v) <= np.sqrt(caps)))


def pdd_solve(obj: ConcaveQuadratic, slabs, opts: SolverOptions | None = None, v0=None,
              cqp_opts: SolverOpts | None = None) -> PddResult:
    """Maximise ``obj`` over unit-modulus ``v`` with ``|b_k^H v|^2 <= iota_k``.

    Parameters
    ----------
    obj : ConcaveQuadratic
        Surrogate objective (typically from :func:`surrogate_quadratic`).
    slabs : list of (b_k, iota_k)
        Rank-one covert constraints.
    v0 : array, optional
        Warm start; defaults to the phases of ``obj.lin``.

    Returns
    -------
    PddResult
        ``v`` is exactly unit modulus; ``modulus_dev`` is the largest
        ``||v_l| - 1|`` of the consensus variable before renormalisation.
    """
    opts = opts or SolverOptions()
    A, a = obj.quad, obj.lin
    L = a.size
    nslabs = _normalise_slabs(slabs, opts.slab_margin)
    fset = FeasibleSet(balls=[(np.zeros(L, complex), np.sqrt(L))], slabs=nslabs)
    if v0 is None:
        v0 = np.exp(1j * np.angle(a)) if np.any(a) else np.ones(L, complex)
    v = np.asarray(v0, dtype=complex).copy()
    state = PddState(lam=np.zeros(L, complex), rho_pen=opts.rho_pen, xi_scale=opts.xi_scale)
    v_hat = np.exp(1j * np.angle(v))
    lam_a, U_a = np.linalg.eigh(A)
    lam_a = np.maximum(lam_a, 0.0)
    eye = np.eye(L)
    base = cqp_opts or SolverOpts()
    converged = False
    dev = np.inf
    outer = 0
    dual = None
    for outer in range(1, opts.max_pdd + 1):
        rho = state.rho_pen
        Qp = A + eye / (2.0 * rho)
        eig = (lam_a + 1.0 / (2.0 * rho), U_a)
        sub_opts = SolverOpts(opt_tol=base.opt_tol, feas_tol=base.feas_tol, max_iter=base.max_iter,
                              dykstra_iters=base.dykstra_iters, lipschitz=float(eig[0][-1]))
        al_prev = None
        for _ in range(opts.max_inner):
            shift = v_hat - rho * state.lam
            sub = ConcaveQuadratic(Qp, a + shift / (2.0 * rho),
                                   obj.offset - float(np.vdot(shift, shift).real) / (2.0 * rho), eig=eig)
            res = maximize(sub, fset, sub_opts, x0=v, dual0=dual)
            v, dual = res.x, res.dual
            v_hat = np.exp(1j * np.angle(v + rho * state.lam))
            gap = v - v_hat + rho * state.lam
            al = obj.value(v) - float(np.vdot(gap, gap).real) / (2.0 * rho)
            if al_prev is not None and abs(al - al_prev) <= opts.inner_tol * max(1.0, abs(al)):
                break
            al_prev = al
        d = float(np.linalg.norm(v - v_hat))
        state.eps_track = 0.9 * state.d_residual
        if d <= state.eps_track:
            state.lam = state.lam + (v - v_hat) / rho
        else:
            state.rho_pen = rho * state.xi_scale
        state.d_residual = d
        dev = float(np.max(np.abs(np.abs(v) - 1.0)))
        if d <= opts.eps_pdd and dev <= opts.modulus_tol:
            converged = True
            break
    v_out = v / np.maximum(np.abs(v), 1e-300)
    return PddResult(v=v_out, converged=converged, residual=state.d_residual, modulus_dev=dev,
                     rho_pen=state.rho_pen, outer_iterations=outer, value=obj.value(v_out))


# ---------------------------------------------------------------------------
# modulation-frequency block

@dataclass(frozen=True)
class PhasorSum:
    """``s(f) = sum_l p_l + q_l exp(j (base_l + slope_l f_l))`` and ``|s|^2``.

    Every gain the frequency block touches has this form, whichever phase
    variable is held fixed.
    """

    p: np.ndarray
    q: np.ndarray
    base: np.ndarray
    slope: np.ndarray

    def amplitude(self, f):
        return complex(np.sum(self.p + self.q * np.exp(1j * (self.base + self.slope * f))))

    def value(self, f):
        return abs(self.amplitude(f)) ** 2

    def _parts(self, f):
        rot = self.q * np.exp(1j * (self.base + self.slope * f))
        s = complex(np.sum(self.p + rot))
        return s, 1j * self.slope * rot

    def gradient(self, f):
        s, d = self._parts(f)
        return 2.0 * np.real(d * np.conj(s))

    def hessian(self, f):
        s, d = self._parts(f)
        H = 2.0 * np.real(np.outer(d, np.conj(d)))
        H[np.diag_indices_from(H)] += 2.0 * np.real(1j * self.slope * d * np.conj(s))
        return 0.5 * (H + H.T)

    def scale(self):
        """``(sum |p_l| + |q_l|)^2``, an upper bound on the value."""
        return float(np.sum(np.abs(self.p) + np.abs(self.q))) ** 2


def _link_phase(geom, link):
    """Base and slope of ``2 pi (f_c U_l + g f_l d_l) / c``."""
    k = 2.0 * np.pi / SPEED_OF_LIGHT
    return k * geom.f_c * link.upsilon, k * geom.g * link.dists


@dataclass
class FreqContext:
    """Bob's gain and the warden LoS leakages as functions of ``f`` alone.

    Two choices of the phase variable held fixed are supported:

    ``hold="theta"``
        The reflection coefficients ``theta`` are frozen, i.e.
        ``h_hat = Diag(theta) A0 e^{j phi0} h_ar`` is constant.
    ``hold="aligned"``
        The phases relative to Bob's LoS, ``omega = theta * conj(h_rb_los(f))``,
        are frozen, so moving ``f`` never disturbs the LoS alignment towards
        Bob; only the NLoS part of Bob's gain and the Bob/warden differential
        distance phase respond.  :meth:`phases_at` maps back to ``v``.
    """

    bob: PhasorSum
    wardens: list
    iotas: np.ndarray
    f_bounds: tuple
    hold: str = "theta"
    omega: np.ndarray | None = None
    bob_phase: tuple | None = None

    @classmethod
    def from_phases(cls, v, geom, chan, iotas, f_bounds, hold="theta", freqs=None):
        theta = np.conj(np.asarray(v, dtype=complex))
        a = geom.static_coeff * chan.h_ar
        zero = np.zeros(theta.size, complex)
        b_base, b_slope = _link_phase(geom, chan.rb_geom)
        w_phase = [_link_phase(geom, link) for link in chan.rwk_geoms]
        if hold == "theta":
            h_hat = theta * a
            bob = PhasorSum(chan.rho_rb * chan.beta2 * np.conj(chan.rb_nlos) * h_hat,
                            chan.rho_rb * chan.beta1 * h_hat, -b_base, -b_slope)
            wardens = [PhasorSum(zero, h_hat, -wb, -ws) for wb, ws in w_phase]
            return cls(bob, wardens, np.asarray(iotas, float), tuple(f_bounds), hold)
        if hold != "aligned":
            raise ValueError(f"unknown hold mode {hold!r}")
        if freqs is None:
            raise ValueError("hold='aligned' needs the current frequencies")
        omega = theta * np.exp(-1j * (b_base + b_slope * np.asarray(freqs, float)))
        wa = omega * a
        bob = PhasorSum(chan.rho_rb * chan.beta1 * wa, chan.rho_rb * chan.beta2 * np.conj(chan.rb_nlos) * wa,
                        b_base, b_slope)
        wardens = [PhasorSum(zero, wa, b_base - wb, b_slope - ws) for wb, ws in w_phase]
        return cls(bob, wardens, np.asarray(iotas, float), tuple(f_bounds), hold, omega, (b_base, b_slope))

    @property
    def n_wardens(self):
        return len(self.wardens)

    def phases_at(self, f, v_fixed=None):
        """Optimizer vector ``v`` that goes with frequencies ``f``."""
        if self.hold == "theta":
            return v_fixed
        base, slope = self.bob_phase
        return np.conj(self.omega * np.exp(1j * (base + slope * f)))

    def g_tilde(self, f):
        return self.bob.value(f)

    def g_hat(self, f):
        return np.array([w.value(f) for w in self.wardens])


def freq_gradient(f, ctx: FreqContext):
    """Analytic gradients of ``g_tilde`` and each ``g_hat_k`` w.r.t. ``f`` (Hz).

    Entry ``l`` only involves element ``l`` because ``f_l`` enters a single
    channel coefficient.
    """
    f = np.asarray(f, dtype=float)
    grads = np.array([w.gradient(f) for w in ctx.wardens]).reshape(ctx.n_wardens, f.size)
    return ctx.bob.gradient(f), grads


def freq_hessian(f, ctx: FreqContext):
    """Closed-form Hessians of ``g_tilde`` and each ``g_hat_k``, symmetrised."""
    f = np.asarray(f, dtype=float)
    Hk = np.array([w.hessian(f) for w in ctx.wardens]).reshape(ctx.n_wardens, f.size, f.size)
    return ctx.bob.hessian(f), Hk


def lipschitz_bound(H, iters=100, safeguard=1.1, floor=1e-12):
    """Scalar ``nu`` with ``nu I - H`` positive semidefinite."""
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    if n == 0 or not np.any(H):
        return floor
    v = np.ones(n) + 0.01 * np.arange(n)
    v /= np.linalg.norm(v)
    prev = est = 0.0
    for _ in range(iters):
        w = H @ v
        est = float(np.linalg.norm(w))
        if est == 0:
            break
        v = w / est
        if abs(est - prev) <= 1e-6 * est:
            break
        prev = est
    else:
        # no settling: fall back to the Frobenius norm, which bounds the spectrum
        return max(float(np.linalg.norm(H)), floor)
    return max(safeguard * est, floor)


@dataclass
class FreqStepResult:
    f: np.ndarray
    status: str
    nu: float
    nu_hat: np.ndarray
    backtracks: int
    curvature_scale: tuple | None = None


def sca_freq_step(f_p, ctx: FreqContext, opts: SolverOptions | None = None,
                  curvature_scale=1.0) -> FreqStepResult:
    """One majorize-minimize step on the modulation frequencies.

    The objective is replaced by its concave quadratic minorant with
    curvature ``nu`` and every warden leakage by a convex quadratic majorant
    (a ball in ``f``); the box is kept exactly.  Curvatures start at
    ``curvature_scale`` times the local Hessian bound and are doubled until
    the true objective does not decrease and the true leakages respect their
    caps, so the accepted point is always an ascent step that stays feasible.
    ``curvature_scale`` may be a scalar or ``(scale_obj, scales_k)``.
    """
    opts = opts or SolverOptions()
    f_p = np.asarray(f_p, dtype=float)
    lo, hi = ctx.f_bounds
    span = hi - lo
    K = ctx.n_wardens
    g_scale = max(ctx.bob.scale(), 1e-300)
    k_scale = np.array([max(w.scale(), 1e-300) for w in ctx.wardens])
    g0 = ctx.g_tilde(f_p)
    gk0 = ctx.g_hat(f_p)
    if np.any(gk0 > ctx.iotas):
        return FreqStepResult(f_p, "infeasible_start", np.nan, np.full(K, np.nan), 0)

    grad, grads = freq_gradient(f_p, ctx)
    H, Hk = freq_hessian(f_p, ctx)
    gu = grad * span / g_scale
    Hu = H * span**2 / g_scale
    gku = grads * span / k_scale[:, None]
    cs_obj, cs_k = curvature_scale if isinstance(curvature_scale, tuple) else (curvature_scale, curvature_scale)
    nu = lipschitz_bound(Hu) * cs_obj
    nu_hat = np.array([lipschitz_bound(Hk[k] * span**2 / k_scale[k]) for k in range(K)]) * cs_k
    nu0, nu_hat0 = nu, nu_hat.copy()
    u_p = (f_p - lo) / span
    slack = (ctx.iotas - gk0) / k_scale
    dual = None

    for bt in range(opts.max_backtracks + 1):
        balls = []
        for k in range(K):
            r2 = 2.0 * slack[k] / nu_hat[k] + float(gku[k] @ gku[k]) / nu_hat[k] ** 2
            balls.append((u_p - gku[k] / nu_hat[k], np.sqrt(max(r2, 1e-300))))
        fset = FeasibleSet(balls=balls, box=(0.0, 1.0))
        obj = ConcaveQuadratic(0.5 * nu * np.eye(f_p.size), 0.5 * (nu * u_p + gu))
        # the balls are majorants and every proposal is re-checked exactly below,
        # so a loose tolerance here only costs a possible extra backtrack
        res = maximize(obj, fset, SolverOpts(feas_tol=1e-6, dykstra_iters=20), x0=u_p, dual0=dual)
        dual = res.dual
        f_new = np.clip(lo + span * res.x, lo, hi)
        ok_obj = ctx.g_tilde(f_new) >= g0
        gk_new = ctx.g_hat(f_new)
        bad_k = gk_new > ctx.iotas
        if ok_obj and not np.any(bad_k):
            return FreqStepResult(f_new, "ok", nu, nu_hat, bt,
                                  (cs_obj * nu / nu0, np.asarray(cs_k * nu_hat / np.maximum(nu_hat0, 1e-300))))
        if not ok_obj:
            nu *= 2.0
        nu_hat[bad_k] *= 2.0
    return FreqStepResult(f_p, "stalled", nu, nu_hat, opts.max_backtracks)


# ---------------------------------------------------------------------------
# outer loop

def linear_freqs(L, f_bounds):
    lo, hi = f_bounds
    if L == 1:
        return np.array([float(lo)])
    return lo + np.arange(L) * (hi - lo) / (L - 1)


@dataclass
class AlternateResult:
    state: BeamState
    rate: float
    trace: list
    iterations: int
    converged: bool
    mode: str
    iotas: np.ndarray
    rhs: list = field(default_factory=list)

    @property
    def theta(self):
        return self.state.theta_vec

    @property
    def freqs(self):
        return self.state.freqs

    @property
    def delays(self):
        return self.state.delays

    @property
    def rates(self):
        return [row["rate_bpcu"] for row in self.trace]


def _covert_setup(chan, geom, cfg, freqs):
    rhs = []
    for k in range(chan.n_wardens):
        # sigma_tilde2 does not depend on the phases or frequencies
        stats = warden_stats(np.ones(geom.n_elements, complex), freqs, chan, geom, cfg, k)
        rhs.append(covert_rhs(stats, cfg, k, chan.rho_rwk[k], chan.beta1))
    return rhs


def _slab_vectors(chan, geom, freqs):
    hs = geom.static_coeff * chan.h_ar
    return [np.conj(chan.los_rw(k, freqs)) * hs for k in range(chan.n_wardens)]


def _leakage_ratio(v, bs, iotas):
    if not bs:
        return 0.0
    return max(abs(np.vdot(b, v)) ** 2 / iota for b, iota in zip(bs, iotas))


def _frequency_block(f, v, r_cur, rate, chan, geom, iotas, f_bounds, opts):
    """Up to ``opts.sca_steps`` SCA steps with the Bob-aligned phases held fixed.

    Curvature multipliers carry over between steps: halved after an accepted
    step, so the next surrogate is bolder, and doubled inside the step
    whenever a proposal fails the exact checks.
    """
    scale = (opts.sca_curvature, np.full(chan.n_wardens, opts.sca_curvature))
    for _ in range(opts.sca_steps):
        ctx = FreqContext.from_phases(v, geom, chan, iotas, f_bounds, hold=opts.freq_hold, freqs=f)
        step = sca_freq_step(f, ctx, opts, curvature_scale=scale)
        if step.status != "ok":
            break
        scale = (max(step.curvature_scale[0] / 2, 1e-8), np.maximum(step.curvature_scale[1] / 2, 1e-8))
        v_new = ctx.phases_at(step.f, v)
        r_new = rate(v_new, step.f)
        if r_new < r_cur:
            break
        gain = r_new - r_cur
        f, v, r_cur = step.f, v_new, r_new
        if gain <= opts.sca_tol:
            break
    return f, v, r_cur


def alternate(chan: ChannelRealization, geom: RisGeometry, cfg: CovertConfig, f_bounds,
              opts: SolverOptions | None = None, mode="fdris") -> AlternateResult:
    """Maximise Bob's rate under the covert constraints.

    ``mode="conventional"`` pins every modulation frequency to zero (a plain
    RIS) and only the phase block runs.
    """
    opts = opts or SolverOptions()
    if mode not in ("fdris", "conventional"):
        raise ValueError(f"unknown mode {mode!r}")
    L = geom.n_elements
    fdris = mode == "fdris"
    f = linear_freqs(L, f_bounds) if fdris else np.zeros(L)
    rhs = _covert_setup(chan, geom, cfg, f)
    iotas = np.array([r.iota for r in rhs])
    p_t, s2b = cfg.p_t, cfg.sigma2_b

    def rate(v, freqs):
        return rate_bob(np.conj(v), freqs, chan, geom, cfg)

    def feasible(v, freqs):
        return _leakage_ratio(v, _slab_vectors(chan, geom, freqs), iotas) <= 1.0

    def phase_block(v, freqs):
        h_t = effective_channel(chan.h_rb(freqs), chan.h_ar, geom)
        aux = mmse_aux(v, h_t, p_t, s2b)
        obj = surrogate_quadratic(aux, h_t, p_t, s2b)
        slabs = list(zip(_slab_vectors(chan, geom, freqs), iotas))
        res = pdd_solve(obj, slabs, opts, v0=v)
        cand, ok = restore_slabs(res.v, slabs, margin=opts.slab_margin)
        return cand, ok and feasible(cand, freqs), res

    h_t0 = effective_channel(chan.h_rb(f), chan.h_ar, geom)
    v = np.exp(1j * np.angle(h_t0))
    pdd_res = None
    if not feasible(v, f):
        cand, ok, pdd_res = phase_block(v, f)
        if not ok:
            raise InfeasibleCovertError(
                f"covert restoration failed: leakage ratio "
                f"{_leakage_ratio(cand, _slab_vectors(chan, geom, f), iotas):.3e}, "
                f"PDD residual {pdd_res.residual:.3e}")
        v = cand
    r_cur = rate(v, f)

    def row(it, pdd):
        return {
            "iter": it,
            "rate_bpcu": r_cur,
            "pdd_residual": pdd.residual if pdd is not None else 0.0,
            "max_covert_violation": max(0.0, _leakage_ratio(v, _slab_vectors(chan, geom, f), iotas) - 1.0),
            "rho_pen": pdd.rho_pen if pdd is not None else opts.rho_pen,
        }

    trace = [row(0, pdd_res)]
    converged = False
    it = 0
    for it in range(1, opts.max_outer + 1):
        r_prev = r_cur
        cand, ok, pdd_res = phase_block(v, f)
        if ok:
            r_cand = rate(cand, f)
            if r_cand >= r_cur:
                v, r_cur = cand, r_cand
        if fdris:
            f, v, r_cur = _frequency_block(f, v, r_cur, rate, chan, geom, iotas, f_bounds, opts)
        trace.append(row(it, pdd_res))
        if r_cur - r_prev <= opts.eps_outer:
            converged = True
            break

    state = BeamState.from_optimizer(v, f, geom.g) if fdris else BeamState(np.conj(v), f, None)
    return AlternateResult(state=state, rate=r_cur, trace=trace, iterations=it, converged=converged,
                           mode=mode, iotas=iotas, rhs=rhs)
