"""
Maximise a concave quadratic over an intersection of simple convex sets.

The objective is ``-x^H Q x + 2 Re(x^H q) + offset`` with ``Q`` Hermitian
PSD.  Feasible sets are built from Euclidean balls, rank-one "slabs"
``|b^H x|^2 <= cap`` and coordinate boxes, each with a closed-form
projection.  Intersections are handled with Dykstra's algorithm.  The two
shapes the optimiser produces (scaled-identity curvature with balls and a
box, or positive definite curvature with slabs) are solved through their
duals with projected Newton; anything else falls back to accelerated
projected-gradient ascent (FISTA with monotone restarts).  Real and complex
vectors are both supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "ConcaveQuadratic",
    "FeasibleSet",
    "SolverOpts",
    "ProjectionResult",
    "SolveResult",
    "project_ball",
    "project_slab",
    "project_box",
    "project_intersection",
    "power_iteration",
    "maximize",
]


@dataclass
class ConcaveQuadratic:
    """``-x^H Q x + 2 Re(x^H q) + offset``.

    ``eig`` optionally caches ``numpy.linalg.eigh(quad)`` for callers that
    solve many problems sharing an eigenbasis.
    """

    quad: np.ndarray
    lin: np.ndarray
    offset: float = 0.0
    eig: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.quad = np.asarray(self.quad)
        self.lin = np.asarray(self.lin)
        if self.quad.shape != (self.lin.size, self.lin.size):
            raise ValueError("quad must be n x n for a length-n lin")
        if np.max(np.abs(self.quad - self.quad.conj().T), initial=0.0) > 1e-10 * max(
                1.0, np.max(np.abs(self.quad), initial=0.0)):
            raise ValueError("quad must be Hermitian")

    def value(self, x):
        x = np.asarray(x)
        return float(-np.vdot(x, self.quad @ x).real + 2.0 * np.vdot(x, self.lin).real + self.offset)

    def gradient(self, x):
        """Ascent direction w.r.t. the real inner product ``Re(a^H b)``."""
        return 2.0 * (self.lin - self.quad @ x)


@dataclass
class FeasibleSet:
    """Intersection of balls, slabs and an optional box.

    balls : list of ``(center, radius)``
    slabs : list of ``(b, cap)`` meaning ``|b^H x|^2 <= cap``
    box : ``(lo, hi)`` arrays or scalars, applied to real vectors
    """

    balls: list = field(default_factory=list)
    slabs: list = field(default_factory=list)
    box: tuple | None = None

    def __post_init__(self):
        for _, r in self.balls:
            if not r > 0:
                raise ValueError("ball radius must be positive")
        for b, cap in self.slabs:
            if cap < 0:
                raise ValueError("slab cap must be non-negative")
            if not np.any(np.asarray(b) != 0):
                raise ValueError("slab normal must be non-zero")
        if self.box is not None and np.any(np.asarray(self.box[0]) > np.asarray(self.box[1])):
            raise ValueError("box requires lo <= hi")

    def projections(self):
        ops = [(lambda x, c=c, r=r: project_ball(x, c, r)) for c, r in self.balls]
        ops += [(lambda x, b=b, cap=cap: project_slab(x, b, cap)) for b, cap in self.slabs]
        if self.box is not None:
            lo, hi = self.box
            ops.append(lambda x, lo=lo, hi=hi: project_box(x, lo, hi))
        return ops

    def violations(self, x):
        """Euclidean distance from ``x`` to each constituent set."""
        out = [max(0.0, float(np.linalg.norm(x - c)) - r) for c, r in self.balls]
        for b, cap in self.slabs:
            out.append(max(0.0, abs(np.vdot(b, x)) - np.sqrt(cap)) / float(np.linalg.norm(b)))
        if self.box is not None:
            lo, hi = self.box
            xr = np.real(x)
            out.append(float(np.linalg.norm(np.maximum(lo - xr, 0) + np.maximum(xr - hi, 0))))
        return out

    def max_violation(self, x):
        return max(self.violations(x), default=0.0)


@dataclass
class SolverOpts:
    opt_tol: float = 1e-7
    feas_tol: float = 1e-9
    max_iter: int = 3000
    dykstra_iters: int = 200
    power_iters: int = 50
    lipschitz: float | None = None


class ProjectionResult(NamedTuple):
    x: np.ndarray
    residual: float
    converged: bool
    iterations: int


@dataclass
class SolveResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    status: str
    violation: float
    dual: np.ndarray | None = None


def project_ball(x, center, radius):
    x = np.asarray(x)
    d = x - center
    n = float(np.linalg.norm(d))
    if n <= radius:
        return x
    return center + d * (radius / n)


def project_slab(x, b, cap):
    """Project onto ``{x : |b^H x|^2 <= cap}``."""
    b = np.asarray(b)
    bb = float(np.vdot(b, b).real)
    if bb == 0:
        raise ValueError("slab normal must be non-zero")
    s = np.vdot(b, x)
    mag = abs(s)
    root = np.sqrt(cap)
    if mag <= root:
        return x
    phase = s / mag if np.iscomplexobj(s) else np.sign(s)
    return x - ((mag - root) / bb) * phase * b


def project_box(x, lo, hi):
    if np.iscomplexobj(x):
        return np.clip(x.real, lo, hi) + 1j * x.imag
    return np.clip(x, lo, hi)


def project_intersection(x, fset: FeasibleSet, iters=200, tol=1e-9) -> ProjectionResult:
    """Dykstra's alternating projections onto the intersection of ``fset``."""
    x = np.array(x, copy=True)
    ops = fset.projections()
    if not ops:
        return ProjectionResult(x, 0.0, True, 0)
    if fset.max_violation(x) <= tol * 1e-3:
        return ProjectionResult(x, 0.0, True, 0)
    if len(ops) == 1:
        y = ops[0](x)
        return ProjectionResult(y, 0.0, True, 1)
    corr = [np.zeros_like(x) for _ in ops]
    res = np.inf
    for it in range(1, iters + 1):
        prev = x
        for i, op in enumerate(ops):
            y = op(x + corr[i])
            corr[i] = x + corr[i] - y
            x = y
        res = fset.max_violation(x)
        step = float(np.linalg.norm(x - prev))
        if res <= tol and step <= tol:
            return ProjectionResult(x, res, True, it)
    return ProjectionResult(x, res, res <= tol, iters)


def power_iteration(Q, iters=50, safeguard=1.05):
    """Upper estimate of the spectral radius of a Hermitian matrix."""
    Q = np.asarray(Q)
    n = Q.shape[0]
    if n == 0 or not np.any(Q):
        return 0.0
    v = np.ones(n, dtype=Q.dtype) + 0.1 * np.arange(n) / max(n, 1)
    v = v / np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = Q @ v
        nw = float(np.linalg.norm(w))
        if nw == 0:
            break
        lam = nw
        v = w / nw
    lam = max(lam, abs(float(np.vdot(v, Q @ v).real)))
    return safeguard * lam


def _woodbury_solver(lam, Bt, mu_sum, nu):
    """Return ``r -> (diag(lam + mu_sum) + Bt diag(nu) Bt^H)^{-1} r`` in the eigenbasis."""
    dinv = 1.0 / (lam + mu_sum)
    act = nu > 0
    if not np.any(act):
        return lambda r: dinv[:, None] * r if r.ndim == 2 else dinv * r
    Ba = Bt[:, act]
    DB = dinv[:, None] * Ba
    core = np.eye(Ba.shape[1]) + nu[act][:, None] * (Ba.conj().T @ DB)

    def solve(r):
        dr = dinv[:, None] * r if r.ndim == 2 else dinv * r
        return dr - DB @ np.linalg.solve(core, nu[act][:, None] * (Ba.conj().T @ dr)
                                         if r.ndim == 2 else nu[act] * (Ba.conj().T @ dr))
    return solve


def _projected_newton(evaluate, y0, gscale, max_iter=100, tol=1e-14):
    """Minimise a smooth convex dual over ``y >= 0``.

    ``evaluate(y)`` returns ``(g, x, grad, hess)``; ``x`` is the primal
    point that goes with ``y``.
    """
    y = np.maximum(np.asarray(y0, dtype=float), 0.0)
    m = y.size
    g, x, grad, hess = evaluate(y)
    it = 0
    for it in range(1, max_iter + 1):
        free = (y > 0) | (grad < 0)
        if np.max(np.abs(np.minimum(y, grad)), initial=0.0) <= tol * gscale or not np.any(free):
            break
        Hf = hess[np.ix_(free, free)]
        d = np.zeros(m)
        try:
            d[free] = -np.linalg.solve(Hf + 1e-14 * np.trace(Hf) * np.eye(Hf.shape[0]), grad[free])
        except np.linalg.LinAlgError:
            d[free] = -grad[free]
        t = 1.0
        for _ in range(50):
            y_new = np.maximum(y + t * d, 0.0)
            new = evaluate(y_new)
            if new[0] <= g + 1e-4 * float(grad @ (y_new - y)) + 1e-15 * gscale:
                break
            t *= 0.5
        else:
            break
        done = abs(g - new[0]) <= 1e-15 * gscale and np.allclose(y, y_new, rtol=0, atol=1e-15)
        y = y_new
        g, x, grad, hess = new
        if done:
            break
    return x, y, it


def _dual_eig(obj, fset, lam, U, y0=None):
    """Dual of a ball/slab constrained problem with positive definite ``Q``.

    With multipliers ``mu`` (balls) and ``nu`` (slabs) the maximiser of the
    Lagrangian is ``x = M^{-1}(q + sum mu_i c_i)`` where
    ``M = Q + sum(mu) I + sum nu_k b_k b_k^H``; in the eigenbasis of ``Q``
    every solve is a Woodbury update of a diagonal.  The dual is smooth and
    convex with gradient equal to the constraint slacks.
    """
    nb, ns = len(fset.balls), len(fset.slabs)
    n = lam.size
    qt = U.conj().T @ obj.lin
    C = np.array([U.conj().T @ c for c, _ in fset.balls]).T.reshape(n, nb)
    r2 = np.array([r * r for _, r in fset.balls])
    cc = np.array([float(np.vdot(c, c).real) for c, _ in fset.balls])
    Bt = np.array([U.conj().T @ b for b, _ in fset.slabs]).T.reshape(n, ns)
    caps = np.array([cap for _, cap in fset.slabs], dtype=float)
    lmax = max(float(lam.max()), 1e-300)
    # multipliers are optimised in units where each one is comparable to lam
    s = np.concatenate([np.full(nb, lmax), lmax / np.maximum(np.sum(np.abs(Bt) ** 2, axis=0), 1e-300)])

    def evaluate(y):
        w = s * y
        mu, nu = w[:nb], w[nb:]
        solve = _woodbury_solver(lam, Bt, float(mu.sum()), nu)
        rhs = qt + C @ mu
        x = solve(rhs)
        g = float(np.vdot(rhs, x).real) + float(mu @ (r2 - cc)) + float(nu @ caps)
        proj_b = Bt.conj().T @ x
        G = np.concatenate([x[:, None] - C, Bt * proj_b[None, :]], axis=1)
        grad = np.concatenate([r2 - np.sum(np.abs(x[:, None] - C) ** 2, axis=0), caps - np.abs(proj_b) ** 2])
        hess = 2.0 * np.real(G.conj().T @ solve(G))
        return g, x, grad * s, hess * np.outer(s, s)

    y_start = np.zeros(nb + ns) if y0 is None or len(y0) != nb + ns else np.asarray(y0, float) / s
    gscale = max(float(np.vdot(qt, qt).real) / lmax, 1e-300)
    x, y, it = _projected_newton(evaluate, y_start, gscale)
    return U @ x, it, y * s


def _dual_box(alpha, q, fset, y0=None):
    """Dual of ``max -alpha |x|^2 + 2 x.q`` over balls and a box (real ``x``).

    For fixed ball multipliers the box is handled exactly by clipping, so the
    dual only carries one variable per ball.
    """
    lo, hi = fset.box
    nb = len(fset.balls)
    C = np.array([c for c, _ in fset.balls]).T.reshape(q.size, nb)
    r2 = np.array([r * r for _, r in fset.balls])
    cc = np.sum(C * C, axis=0)

    def evaluate(y):
        mu = alpha * y
        S = alpha + float(mu.sum())
        z = (q + C @ mu) / S
        x = np.clip(z, lo, hi)
        g = -S * float(x @ x) + 2.0 * float(x @ (q + C @ mu)) + float(mu @ (r2 - cc))
        D = x[:, None] - C
        grad = r2 - np.sum(D * D, axis=0)
        inside = (z > lo) & (z < hi)
        Dz = (z[:, None] - C) * inside[:, None]
        hess = 2.0 * (Dz.T @ Dz) / S
        return g, x, grad * alpha, hess * alpha**2

    y_start = np.zeros(nb) if y0 is None or len(y0) != nb else np.asarray(y0, float) / alpha
    gscale = max(float(q @ q) / alpha, 1e-300)
    # clipping makes this dual only piecewise smooth, so cap the Newton work
    x, y, it = _projected_newton(evaluate, y_start, gscale, max_iter=40, tol=1e-10)
    return x, it, y * alpha


def maximize(obj: ConcaveQuadratic, fset: FeasibleSet, opts: SolverOpts | None = None,
             x0=None, dual0=None) -> SolveResult:
    """Maximise ``obj`` over ``fset``.

    Strategy, in order:

    * the unconstrained stationary point, if it is feasible;
    * real ``x``, ``Q = alpha I``, balls and a box: projected Newton on the
      ball multipliers with the box handled by clipping;
    * positive definite ``Q`` with balls and slabs only: projected Newton on
      the dual in the eigenbasis of ``Q``.

    Both dual routes warm-start from ``dual0`` (the ``dual`` field of an
    earlier result on a similar problem), and a dual answer that misses
    ``feas_tol`` is cleaned up with Dykstra.  Anything else runs accelerated
    projected gradient (FISTA) from ``x0`` with monotone restarts.
    """
    opts = opts or SolverOpts()
    Q, q = obj.quad, obj.lin
    dtype = np.result_type(Q, q, float)

    def proj(z):
        return project_intersection(z, fset, opts.dykstra_iters, opts.feas_tol).x

    n = q.size
    eig = obj.eig
    x_free = None
    if eig is not None and eig[0][0] > 0:
        lam, U = eig
        x_free = (U @ ((U.conj().T @ q) / lam)).astype(dtype)
    else:
        try:
            x_free = np.linalg.solve(Q, q).astype(dtype)
            if not np.all(np.isfinite(x_free)):
                x_free = None
        except np.linalg.LinAlgError:
            pass
    if x_free is not None and fset.max_violation(x_free) <= opts.feas_tol:
        return SolveResult(x_free, obj.value(x_free), 0, True, "interior", 0.0)

    def finish(x, it, dual, label):
        x = np.asarray(x).astype(dtype)
        if fset.max_violation(x) > opts.feas_tol:
            x = proj(x)
        viol = fset.max_violation(x)
        ok = viol <= opts.feas_tol
        return SolveResult(x, obj.value(x), it, ok, label if ok else label + "_infeasible", viol, dual)

    alpha = float(np.real(Q[0, 0])) if n else 0.0
    scaled_identity = alpha > 0 and np.allclose(Q, alpha * np.eye(n), rtol=0, atol=1e-14 * alpha)
    if scaled_identity and not np.iscomplexobj(q) and fset.box is not None and not fset.slabs:
        x, it, dual = _dual_box(alpha, q, fset, dual0)
        return finish(x, it, dual, "dual")

    if fset.box is None and (fset.balls or fset.slabs):
        lam, U = eig if eig is not None else np.linalg.eigh(Q)
        if lam[0] > 1e-12 * max(lam[-1], 0.0):
            x, it, dual = _dual_eig(obj, fset, lam, U, dual0)
            return finish(x, it, dual, "dual")

    lip = opts.lipschitz if opts.lipschitz is not None else power_iteration(Q, opts.power_iters)
    if lip <= 0:
        lip = 1e-12
    step = 1.0 / (2.0 * lip)
    if x0 is None:
        x0 = x_free if x_free is not None else np.zeros_like(q, dtype=dtype)
    x = proj(np.asarray(x0, dtype=dtype))
    fx = obj.value(x)
    y, t = x.copy(), 1.0
    scale = max(float(np.linalg.norm(q)), float(np.linalg.norm(Q @ x)), 1e-300)
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        x_new = proj(y + step * obj.gradient(y))
        gmap = float(np.linalg.norm(x_new - y)) / step
        f_new = obj.value(x_new)
        if f_new < fx:
            # restart momentum from the last accepted point
            x_new = proj(x + step * obj.gradient(x))
            gmap = float(np.linalg.norm(x_new - x)) / step
            f_new = obj.value(x_new)
            t = 1.0
            if f_new < fx:
                converged = gmap <= opts.opt_tol * scale * 10
                break
            y = x_new
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        x, fx = x_new, f_new
        if gmap <= opts.opt_tol * scale:
            converged = True
            break
    viol = fset.max_violation(x)
    status = "converged" if converged else "max_iter"
    return SolveResult(x, fx, it, converged, status, viol)
