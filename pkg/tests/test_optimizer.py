import itertools

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from fdris.covert import CovertConfig, rate_bob
from fdris.cqp import ConcaveQuadratic
from fdris.geometry import SPEED_OF_LIGHT, RisGeometry, SphericalPosition, draw_channel
from fdris.optimizer import (
    FreqContext,
    SolverOptions,
    alternate,
    effective_channel,
    freq_gradient,
    freq_hessian,
    linear_freqs,
    lipschitz_bound,
    mmse_aux,
    pdd_solve,
    restore_slabs,
    sca_freq_step,
    surrogate_quadratic,
    surrogate_value,
)

LN2 = np.log(2)


def make_channel(l_y, l_z, n_wardens, seed, beta=10 ** 1.5):
    rng = np.random.default_rng(seed)
    geom = RisGeometry(l_y, l_z)
    alice = SphericalPosition.from_degrees(70, 10, 70)
    bob = SphericalPosition.from_degrees(120, 30, 20)
    willies = [SphericalPosition.from_degrees(rng.uniform(80, 140), rng.uniform(10, 60), rng.uniform(10, 60))
               for _ in range(n_wardens)]
    return geom, draw_channel(geom, alice, bob, willies, beta, rng)


def crandn(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


# ---------------------------------------------------------------------------
# MMSE minorant

def test_mmse_substitution_recovers_rate():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h = crandn(rng, 6) * 1e-6
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, 6))
        p_t, s2 = 0.03, 1e-14
        aux = mmse_aux(v, h, p_t, s2)
        rate = np.log2(1 + p_t * abs(np.vdot(v, h)) ** 2 / s2)
        assert surrogate_value(v, h, aux, p_t, s2) == pytest.approx(rate, rel=1e-12)
        assert aux.w > 0


def test_mmse_limits():
    h = np.array([1.0, 1j])
    v = np.ones(2)
    aux = mmse_aux(v, h, 0.0, 1.0)
    assert aux.u == 0 and aux.w == pytest.approx(1.0)
    # SNR of exactly one
    h1 = np.array([1.0 + 0j])
    aux = mmse_aux(np.ones(1), h1, 1.0, 1.0)
    assert surrogate_value(np.ones(1), h1, aux, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_surrogate_quadratic_tight_rank_one_minorant():
    rng = np.random.default_rng(1)
    L, p_t, s2 = 8, 0.03, 1e-14
    h = crandn(rng, L) * 1e-6
    v0 = np.exp(1j * rng.uniform(0, 2 * np.pi, L))
    aux = mmse_aux(v0, h, p_t, s2)
    obj = surrogate_quadratic(aux, h, p_t, s2)
    r0 = np.log2(1 + p_t * abs(np.vdot(v0, h)) ** 2 / s2)
    assert obj.value(v0) == pytest.approx(r0, abs=1e-10)
    sv = np.linalg.svd(obj.quad, compute_uv=False)
    assert sv[1] <= 1e-10 * sv[0]
    for _ in range(1000):
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, L))
        r = np.log2(1 + p_t * abs(np.vdot(v, h)) ** 2 / s2)
        assert obj.value(v) <= r + 1e-9
        assert obj.value(v) == pytest.approx(surrogate_value(v, h, aux, p_t, s2), abs=1e-9)


# ---------------------------------------------------------------------------
# PDD

def _grid_best(obj, L, slabs=()):
    levels = np.exp(2j * np.pi * np.arange(16) / 16)
    best = -np.inf
    for combo in itertools.product(range(16), repeat=L - 1):
        v = np.concatenate([[1.0], levels[list(combo)]])
        if all(abs(np.vdot(b, v)) ** 2 <= cap for b, cap in slabs):
            best = max(best, obj.value(v))
    return best


@pytest.mark.parametrize("L,seed", [(2, 0), (3, 1), (4, 2)])
def test_pdd_beats_phase_grid(L, seed):
    rng = np.random.default_rng(seed)
    M = np.array([crandn(rng, L) for _ in range(2)])
    Q = M.conj().T @ M
    obj = ConcaveQuadratic(Q, 2 * crandn(rng, L), 0.0)
    res = pdd_solve(obj, [], SolverOptions())
    assert res.converged
    np.testing.assert_allclose(np.abs(res.v), 1.0, atol=1e-12)
    assert res.modulus_dev <= 1e-6
    assert res.value >= _grid_best(obj, L) - 1e-3


def test_pdd_inactive_constraints_change_nothing():
    rng = np.random.default_rng(3)
    L = 4
    h = crandn(rng, L)
    obj = surrogate_quadratic(mmse_aux(np.ones(L), h, 1.0, 1.0), h, 1.0, 1.0)
    free = pdd_solve(obj, [])
    loose = pdd_solve(obj, [(crandn(rng, L), 1e6), (crandn(rng, L), 1e6)])
    assert loose.value == pytest.approx(free.value, rel=1e-6)


def test_pdd_respects_active_slabs():
    rng = np.random.default_rng(4)
    L = 6
    h = crandn(rng, L)
    b = crandn(rng, L)
    obj = surrogate_quadratic(mmse_aux(np.exp(1j * np.angle(h)), h, 1.0, 1.0), h, 1.0, 1.0)
    iota = 0.05 * float(np.vdot(b, b).real)
    res = pdd_solve(obj, [(b, iota)])
    v, ok = restore_slabs(res.v, [(b, iota)])
    assert ok
    assert abs(np.vdot(b, v)) / np.sqrt(iota) <= 1 + 1e-6
    np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# frequency derivatives

def _fd_checks(ctx, f, span):
    h = 1e-6 * span
    grad, grads = freq_gradient(f, ctx)
    H, Hk = freq_hessian(f, ctx)
    L = f.size
    fd_g = np.zeros(L)
    fd_gk = np.zeros((ctx.n_wardens, L))
    fd_H = np.zeros((L, L))
    fd_Hk = np.zeros((ctx.n_wardens, L, L))
    for l in range(L):
        e = np.zeros(L)
        e[l] = h
        fd_g[l] = (ctx.g_tilde(f + e) - ctx.g_tilde(f - e)) / (2 * h)
        fd_gk[:, l] = (ctx.g_hat(f + e) - ctx.g_hat(f - e)) / (2 * h)
        gp, gkp = freq_gradient(f + e, ctx)
        gm, gkm = freq_gradient(f - e, ctx)
        fd_H[:, l] = (gp - gm) / (2 * h)
        fd_Hk[:, :, l] = (gkp - gkm) / (2 * h)
    rel = lambda a, b: np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)  # noqa: E731
    errs = [rel(grad, fd_g)] + [rel(grads[k], fd_gk[k]) for k in range(ctx.n_wardens)]
    herrs = [rel(H, fd_H)] + [rel(Hk[k], fd_Hk[k]) for k in range(ctx.n_wardens)]
    return max(errs), max(herrs), H, Hk


@pytest.mark.parametrize("hold", ["theta", "aligned"])
def test_derivatives_match_finite_differences(hold):
    rng = np.random.default_rng(5)
    for trial in range(5):
        geom, chan = make_channel(2, 3, 3, 50 + trial)
        f = rng.uniform(10e6, 30e6, 6)
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, 6))
        ctx = FreqContext.from_phases(v, geom, chan, np.ones(3), (10e6, 30e6), hold=hold, freqs=f)
        g_err, h_err, H, Hk = _fd_checks(ctx, f, 20e6)
        assert g_err <= 1e-5 and h_err <= 1e-4
        assert np.max(np.abs(H - H.T)) <= 1e-10 * np.max(np.abs(H))
        for k in range(3):
            assert np.max(np.abs(Hk[k] - Hk[k].T)) <= 1e-10 * np.max(np.abs(Hk[k]))


def test_single_element_derivatives_by_hand():
    geom, chan = make_channel(1, 1, 0, 9)
    v = np.array([np.exp(0.7j)])
    f = np.array([17e6])
    ctx = FreqContext.from_phases(v, geom, chan, np.zeros(0), (10e6, 30e6), hold="theta")
    # g(f) = rho^2 |h_hat|^2 |b1 e^{j psi} + b2 n|^2 with psi = 2 pi (f_c U + g f d) / c
    d, ups = chan.rb_geom.dists[0], chan.rb_geom.upsilon[0]
    psi = 2 * np.pi * (geom.f_c * ups + geom.g * f[0] * d) / SPEED_OF_LIGHT
    dpsi = 2 * np.pi * geom.g * d / SPEED_OF_LIGHT
    amp = chan.rho_rb**2 * abs(chan.h_ar[0]) ** 2 * 2 * chan.beta1 * chan.beta2
    z = np.exp(1j * psi) * np.conj(chan.rb_nlos[0])
    grad, _ = freq_gradient(f, ctx)
    H, _ = freq_hessian(f, ctx)
    assert grad[0] == pytest.approx(-amp * dpsi * z.imag, rel=1e-10)
    assert H[0, 0] == pytest.approx(-amp * dpsi**2 * z.real, rel=1e-10)


def test_gradient_vanishes_at_perfect_alignment():
    geom, chan = make_channel(2, 2, 0, 10)
    chan.beta1, chan.beta2 = 1.0, 0.0
    f0 = linear_freqs(4, (10e6, 30e6))
    h_t = effective_channel(chan.h_rb(f0), chan.h_ar, geom)
    v = np.exp(1j * np.angle(h_t))  # every term of v^H h_t real positive
    ctx = FreqContext.from_phases(v, geom, chan, np.zeros(0), (10e6, 30e6), hold="theta")
    grad, _ = freq_gradient(f0, ctx)
    slope = 2 * np.pi * chan.rb_geom.dists / SPEED_OF_LIGHT
    assert np.max(np.abs(grad)) <= 1e-9 * ctx.bob.scale() * np.max(slope)


# ---------------------------------------------------------------------------
# Lipschitz bound

def test_lipschitz_examples():
    nu = lipschitz_bound(np.diag([1.0, 3.0]))
    assert 3.0 <= nu <= 3.3
    assert lipschitz_bound(np.zeros((4, 4))) == 1e-12
    rng = np.random.default_rng(6)
    for _ in range(50):
        A = rng.standard_normal((6, 6))
        H = A + A.T
        nu = lipschitz_bound(H)
        assert np.linalg.eigvalsh(nu * np.eye(6) - H).min() >= -1e-9


def test_lipschitz_falls_back_to_frobenius():
    H = np.diag([1.0, -1.0])  # power iteration oscillates between +-1 eigenvectors
    nu = lipschitz_bound(H, iters=5)
    assert nu >= 1.0


# ---------------------------------------------------------------------------
# SCA frequency step

def _scalar_ctx(lo, hi):
    geom, chan = make_channel(1, 1, 0, 12, beta=1.0)
    v = np.array([1.0 + 0j])
    return FreqContext.from_phases(v, geom, chan, np.zeros(0), (lo, hi), hold="theta")


def _scalar_argmax(ctx, lo, hi):
    grid = np.linspace(lo, hi, 20001)
    vals = [ctx.g_tilde(np.array([x])) for x in grid]
    return grid[int(np.argmax(vals))]


def test_sca_single_element_moves_towards_grid_maximiser():
    # the Bob phase turns once per c/d ~ 15 MHz, so a 6 MHz box holds one bump
    ctx0 = _scalar_ctx(10e6, 40e6)
    f_star = _scalar_argmax(ctx0, 10e6, 40e6)
    lo, hi = f_star - 3e6, f_star + 3e6
    ctx = _scalar_ctx(lo, hi)
    f0 = np.array([lo + 0.5e6])
    step = sca_freq_step(f0, ctx)
    assert step.status == "ok"
    assert ctx.g_tilde(step.f) >= ctx.g_tilde(f0)
    assert abs(step.f[0] - f_star) < abs(f0[0] - f_star)


def test_sca_fixed_point_at_stationary_point():
    ctx0 = _scalar_ctx(10e6, 40e6)
    guess = _scalar_argmax(ctx0, 10e6, 40e6)
    lo, hi = guess - 3e6, guess + 3e6
    ctx = _scalar_ctx(lo, hi)
    f_star = minimize_scalar(lambda x: -ctx.g_tilde(np.array([x])), bounds=(lo, hi), method="bounded",
                             options={"xatol": 1e-3}).x
    step = sca_freq_step(np.array([f_star]), ctx)
    assert abs(step.f[0] - f_star) <= 1.0  # Hz


def test_sca_stays_on_box_boundary():
    ctx0 = _scalar_ctx(10e6, 40e6)
    f_star = _scalar_argmax(ctx0, 10e6, 40e6)
    lo, hi = f_star - 4e6, f_star - 1e6  # maximiser lies above the box
    ctx = _scalar_ctx(lo, hi)
    grad, _ = freq_gradient(np.array([hi]), ctx)
    assert grad[0] > 0
    step = sca_freq_step(np.array([hi]), ctx)
    assert step.f[0] == hi


def test_sca_keeps_leakage_feasible():
    geom, chan = make_channel(3, 3, 3, 13)
    f = linear_freqs(9, (10e6, 30e6))
    v = np.exp(1j * np.angle(effective_channel(chan.h_rb(f), chan.h_ar, geom)))
    ctx = FreqContext.from_phases(v, geom, chan, np.ones(3), (10e6, 30e6), hold="aligned", freqs=f)
    iotas = 1.5 * ctx.g_hat(f)
    ctx = FreqContext.from_phases(v, geom, chan, iotas, (10e6, 30e6), hold="aligned", freqs=f)
    for _ in range(5):
        step = sca_freq_step(f, ctx)
        if step.status != "ok":
            break
        assert np.all(ctx.g_hat(step.f) <= iotas)
        assert ctx.g_tilde(step.f) >= ctx.g_tilde(f) - 1e-9 * ctx.bob.scale()
        assert np.all((step.f >= 10e6) & (step.f <= 30e6))
        f = step.f
    bad = FreqContext.from_phases(v, geom, chan, 0.5 * ctx.g_hat(f), (10e6, 30e6), hold="aligned", freqs=f)
    assert sca_freq_step(f, bad).status == "infeasible_start"


# ---------------------------------------------------------------------------
# alternating loop

CFG = CovertConfig(varsigma=2.0, xi=0.2, psi=100.0, sigma2_w=(1e-14,), sigma2_b=1e-14, p_t=10 ** 1.5 / 1e3)


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(eps_outer=0)
    with pytest.raises(ValueError):
        SolverOptions(max_inner=0)
    with pytest.raises(ValueError):
        SolverOptions(xi_scale=1.0)
    with pytest.raises(ValueError):
        SolverOptions(freq_hold="other")


def test_alternate_without_wardens_reaches_alignment_bound():
    geom, chan = make_channel(3, 3, 0, 14)
    res = alternate(chan, geom, CFG, (10e6, 30e6))
    h_rb = chan.h_rb(res.freqs)
    bound = np.log2(1 + CFG.p_t * geom.a0**2 * np.sum(np.abs(h_rb) * np.abs(chan.h_ar)) ** 2 / CFG.sigma2_b)
    assert res.rate == pytest.approx(bound, rel=0.01)
    assert res.rate <= bound + 1e-9


@pytest.mark.parametrize("mode", ["fdris", "conventional"])
def test_alternate_monotone_and_consistent(mode):
    geom, chan = make_channel(3, 3, 2, 15)
    res = alternate(chan, geom, CFG, (10e6, 30e6), mode=mode)
    rates = res.rates
    assert all(b >= a - 1e-9 for a, b in zip(rates, rates[1:]))
    assert res.rate == pytest.approx(rate_bob(res.theta, res.freqs, chan, geom, CFG), rel=1e-12)
    assert all(row["max_covert_violation"] == 0.0 for row in res.trace)
    if mode == "conventional":
        assert np.all(res.freqs == 0) and res.delays is None
    else:
        assert np.all((res.freqs >= 10e6) & (res.freqs <= 30e6))
        assert np.all(res.delays >= 0) and np.all(res.delays * res.freqs <= 1)


def test_alternate_rejects_unknown_mode():
    geom, chan = make_channel(2, 2, 1, 16)
    with pytest.raises(ValueError):
        alternate(chan, geom, CFG, (10e6, 30e6), mode="hybrid")
