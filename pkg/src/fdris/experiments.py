"""
Monte Carlo drivers, sweeps, beampattern rasters and file emission.

Every draw ``i`` of a run owns the generator ``default_rng([seed, i])``, so
results do not depend on how draws are scheduled.  Floats are written with
``repr`` (shortest round-trip form) and JSON keys are sorted, which makes
repeated runs byte-identical.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .covert import CovertConfig, covert_power_budget, dep
from .geometry import ChannelRealization, RisGeometry, draw_channel
from .model import BeamState, align_conventional, align_delays, conventional_pattern, fdris_pattern
from .optimizer import AlternateResult, InfeasibleCovertError, SolverOptions, alternate, linear_freqs
from .scenario import Scenario

log = logging.getLogger(__name__)

__all__ = [
    "SCHEMES",
    "SWEEP_PARAMS",
    "DrawOutcome",
    "RunResult",
    "draw_rng",
    "draw_for",
    "audit_solution",
    "solve_draw",
    "run_optimize",
    "run_conventional_baseline",
    "parse_grid",
    "beam_state_for",
    "run_beampattern",
    "run_sweep",
    "dep_curve",
    "write_csv",
    "write_json",
    "write_svg",
]

SCHEMES = ("fdris", "conventional")
SWEEP_PARAMS = ("L", "xi", "dfmax")
TRACE_FIELDS = ("iter", "rate_bpcu", "pdd_residual", "max_covert_violation", "rho_pen")
DRAW_FIELDS = ("draw", "rate_bpcu", "feasible", "iterations", "converged", "status")
# slack on the audited covert bound, relative to the warden's power budget
AUDIT_REL_TOL = 1e-8


def draw_rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def draw_for(scn: Scenario, index) -> ChannelRealization:
    """Channel realisation number ``index`` of ``scn``."""
    return draw_channel(scn.geom, scn.alice, scn.bob, scn.willies, scn.rician_beta,
                        draw_rng(scn.seed, index))


# ---------------------------------------------------------------------------
# audit

def audit_solution(state: BeamState, chan: ChannelRealization, geom: RisGeometry, cfg: CovertConfig):
    """Recompute rate and covert quantities from the raw channel.

    Deliberately avoids the optimizer's helpers: gains are summed element by
    element from the channel vectors, and the covert right-hand side is
    rebuilt from the noise-uncertainty budget.

    Returns
    -------
    dict
        ``rate_bpcu``, ``mu2[k]`` (LoS leakage power), ``omega_tilde[k]``,
        ``h_k[k]``, ``budget[k]`` and ``feasible``, which is true when every
        ``mu2[k] <= max(h_k, eps_zero) + 1e-8 budget[k]``.
    """
    theta = np.asarray(state.theta_vec, dtype=complex)
    static = geom.a0 * np.exp(1j * geom.phi0)
    refl = theta * static * chan.h_ar
    h_rb = chan.h_rb(state.freqs)
    gain_b = sum(np.conj(h_rb[i]) * refl[i] for i in range(refl.size))
    rate = float(np.log2(1.0 + cfg.p_t * abs(gain_b) ** 2 / cfg.sigma2_b))
    out = {"rate_bpcu": rate, "mu2": [], "omega_tilde": [], "h_k": [], "budget": [], "feasible": True}
    energy = float(np.sum(np.abs(static * chan.h_ar) ** 2))
    for k in range(chan.n_wardens):
        rho = chan.rho_rwk[k]
        los = chan.los_rw(k, state.freqs)
        mu = np.sqrt(cfg.p_t) * rho * chan.beta1 * sum(np.conj(los[i]) * refl[i] for i in range(refl.size))
        s2 = cfg.p_t * rho**2 * chan.beta2**2 * energy
        x = cfg.psi * s2
        budget = covert_power_budget(cfg, k)
        h = (1.0 - x) * (budget + np.log1p(-x))
        eps_zero = 1e-12 * cfg.p_t * rho**2
        mu2 = abs(mu) ** 2
        omega_t = mu2 / (1.0 - x) - (np.log1p(-x) / cfg.psi if cfg.psi > 0 else -s2)
        ok = mu2 <= max(h, eps_zero) + AUDIT_REL_TOL * budget
        out["mu2"].append(float(mu2))
        out["omega_tilde"].append(float(omega_t))
        out["h_k"].append(float(h))
        out["budget"].append(float(budget))
        out["feasible"] = out["feasible"] and bool(ok)
    return out


# ---------------------------------------------------------------------------
# Monte Carlo runs

@dataclass
class DrawOutcome:
    index: int
    rate: float
    feasible: bool
    iterations: int
    converged: bool
    status: str
    trace: list = field(default_factory=list)
    metrics: dict | None = None
    result: AlternateResult | None = None


@dataclass
class RunResult:
    scenario: str
    scheme: str
    seed: int
    draws: list

    @property
    def rates(self):
        return np.array([d.rate for d in self.draws], dtype=float)

    @property
    def mean_rate(self):
        r = self.rates[np.isfinite(self.rates)]
        return float(np.mean(r)) if r.size else float("nan")

    @property
    def std_rate(self):
        r = self.rates[np.isfinite(self.rates)]
        return float(np.std(r, ddof=1)) if r.size > 1 else 0.0

    @property
    def feasible_fraction(self):
        return sum(d.feasible for d in self.draws) / len(self.draws)

    def summary(self):
        return {
            "scenario": self.scenario,
            "scheme": self.scheme,
            "seed": self.seed,
            "n_mc": len(self.draws),
            "mean_rate": self.mean_rate,
            "std_rate": self.std_rate,
            "feasible_fraction": self.feasible_fraction,
        }


def solve_draw(scn: Scenario, index, scheme="fdris", opts: SolverOptions | None = None,
               keep_result=False) -> DrawOutcome:
    """Optimise one channel draw; failures are recorded, not raised."""
    chan = draw_for(scn, index)
    try:
        res = alternate(chan, scn.geom, scn.cfg, scn.f_bounds, opts, mode=scheme)
    except (InfeasibleCovertError, ValueError) as exc:
        log.warning("draw %d failed: %s", index, exc)
        return DrawOutcome(index, float("nan"), False, 0, False, f"error: {exc}")
    metrics = audit_solution(res.state, chan, scn.geom, scn.cfg)
    status = "ok" if metrics["feasible"] else "audit_failed"
    return DrawOutcome(index, res.rate, metrics["feasible"], res.iterations, res.converged, status,
                       res.trace, metrics, res if keep_result else None)


def _solve_task(args):
    return solve_draw(*args)


def run_optimize(scn: Scenario, opts: SolverOptions | None = None, scheme="fdris", workers=1,
                 out_dir=None, keep_results=False) -> RunResult:
    """Optimise ``scn.n_mc`` channel draws and optionally write the results.

    Parameters
    ----------
    scheme : {"fdris", "conventional"}
    workers : int
        Processes used for the draws; ``1`` runs in-process.
    out_dir : path, optional
        Receives ``draws.csv``, ``summary.json``, ``traces/draw_NNN.csv`` and
        ``metrics/draw_NNN.json``.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    tasks = [(scn, i, scheme, opts, keep_results) for i in range(scn.n_mc)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            draws = list(pool.map(_solve_task, tasks))
    else:
        draws = [_solve_task(t) for t in tasks]
    draws.sort(key=lambda d: d.index)
    run = RunResult(scn.name, scheme, scn.seed, draws)
    if out_dir is not None:
        _write_run(run, Path(out_dir))
    return run


def run_conventional_baseline(scn: Scenario, opts: SolverOptions | None = None, **kwargs) -> RunResult:
    """Same pipeline with every modulation frequency pinned to zero."""
    return run_optimize(scn, opts, scheme="conventional", **kwargs)


def _write_run(run: RunResult, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    rows = [{"draw": d.index, "rate_bpcu": d.rate, "feasible": int(d.feasible), "iterations": d.iterations,
             "converged": int(d.converged), "status": d.status} for d in run.draws]
    write_csv(out / "draws.csv", DRAW_FIELDS, rows)
    write_json(out / "summary.json", run.summary())
    for d in run.draws:
        name = f"draw_{d.index:03d}"
        write_csv(out / "traces" / f"{name}.csv", TRACE_FIELDS, d.trace)
        if d.metrics is not None:
            metrics = {key: d.metrics[key] for key in ("rate_bpcu", "omega_tilde", "h_k", "budget", "feasible")}
            write_json(out / "metrics" / f"{name}.json", metrics)


# ---------------------------------------------------------------------------
# sweeps

def _apply(scn: Scenario, param, value) -> Scenario:
    if param == "L":
        return scn.with_elements(int(round(value)))
    if param == "xi":
        return scn.with_xi(float(value))
    if param == "dfmax":
        return scn.with_dfmax(float(value))
    raise ValueError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")


def run_sweep(scn: Scenario, param, values, opts: SolverOptions | None = None, schemes=("fdris",),
              workers=1):
    """Mean and spread of the covert rate for each value of ``param``.

    Returns rows ``{param_value, scheme, mean_rate, std_rate}``; every point
    reuses the same channel seeds so schemes and values are compared on
    identical draws (``L`` changes the draws themselves).
    """
    rows = []
    for value in values:
        point = _apply(scn, param, value)
        for scheme in schemes:
            run = run_optimize(point, opts, scheme=scheme, workers=workers)
            rows.append({"param_value": value, "scheme": scheme, "mean_rate": run.mean_rate,
                         "std_rate": run.std_rate})
    return rows


# ---------------------------------------------------------------------------
# beampatterns

def parse_grid(text):
    """Parse ``"theta=0:180:1,dist=5:80:0.5"`` into ``{axis: values}``.

    Ranges are ``start:stop:step`` with ``stop`` included when it falls on
    the grid; a bare number gives a single value.
    """
    axes = {}
    for part in text.split(","):
        name, sep, spec = part.partition("=")
        name = name.strip()
        if not sep or name not in ("theta", "phi", "dist"):
            raise ValueError(f"bad grid axis {part!r}; expected theta=, phi= or dist=")
        nums = [float(t) for t in spec.split(":")]
        if len(nums) == 1:
            axes[name] = np.array(nums)
            continue
        if len(nums) != 3 or nums[2] <= 0 or nums[1] < nums[0]:
            raise ValueError(f"bad range {spec!r}; expected start:stop:step with step > 0")
        start, stop, step = nums
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        axes[name] = start + step * np.arange(n)
    return axes


def beam_state_for(scn: Scenario, scheme="fdris", source="aligned", opts: SolverOptions | None = None):
    """Reflection state to rasterise.

    ``source="aligned"`` focuses on Bob with linearly spaced frequencies
    (FD-RIS) or angle-only alignment (conventional); ``"optimized"`` runs the
    optimizer on channel draw 0.
    """
    geom = scn.geom
    if source == "aligned":
        if scheme == "fdris":
            freqs = linear_freqs(geom.n_elements, scn.f_bounds)
            return BeamState.from_delays(freqs, align_delays(geom, scn.alice, scn.bob, freqs), geom.g)
        return BeamState(align_conventional(geom, scn.alice, scn.bob), np.zeros(geom.n_elements))
    if source == "optimized":
        out = solve_draw(scn, 0, scheme, opts, keep_result=True)
        if out.result is None:
            raise RuntimeError(f"optimisation failed: {out.status}")
        return out.result.state
    raise ValueError(f"unknown state source {source!r}")


def run_beampattern(scn: Scenario, grid, scheme="fdris", state: BeamState | None = None,
                    phi_deg=None, dist_m=None):
    """Rasterise the normalised beampattern.

    ``grid`` maps axis names to degree/metre values (see :func:`parse_grid`)
    and must name two axes; the third comes from ``phi_deg`` or ``dist_m``,
    defaulting to Bob's coordinate.
    """
    grid = dict(grid)
    fixed = {"theta": None, "phi": phi_deg, "dist": dist_m}
    bob = {"theta": np.rad2deg(scn.bob.theta), "phi": np.rad2deg(scn.bob.phi), "dist": scn.bob.dist}
    for axis in ("theta", "phi", "dist"):
        if axis not in grid:
            val = fixed[axis] if fixed[axis] is not None else bob[axis]
            grid[axis] = np.array([float(val)])
    if sum(grid[a].size > 1 for a in grid) > 2:
        raise ValueError("beampattern grid may vary at most two axes")
    state = state or beam_state_for(scn, scheme)
    T, P, D = np.meshgrid(grid["theta"], grid["phi"], grid["dist"], indexing="ij")
    th, ph = np.deg2rad(T), np.deg2rad(P)
    if scheme == "fdris":
        gain = fdris_pattern(scn.geom, scn.alice, th, ph, D, state)
    else:
        gain = conventional_pattern(scn.geom, scn.alice, th, ph, state.theta_vec)
    rows = []
    for t, p, d, gval in zip(T.ravel(), P.ravel(), D.ravel(), gain.ravel()):
        gval = float(gval)
        rows.append({"theta_deg": float(t), "phi_deg": float(p), "dist_m": float(d), "gain_linear": gval,
                     "gain_db": float(10.0 * np.log10(max(gval, 1e-30)))})
    return rows


# ---------------------------------------------------------------------------
# detection error probability

def dep_curve(cfg: CovertConfig, omegas, n_tau=200, k=0):
    """DEP on a threshold grid spanning the noise-power support, per ``omega``."""
    s2 = cfg.sigma2_w[0] if len(cfg.sigma2_w) == 1 else cfg.sigma2_w[k]
    taus = np.geomspace(s2 / cfg.varsigma, s2 * cfg.varsigma, n_tau)
    return [{"tau": float(t), "omega": float(w), "dep": dep(t, w, cfg, k)} for w in omegas for t in taus]


# ---------------------------------------------------------------------------
# writers

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, fields, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_fmt(row[f]) for f in fields])


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_svg(path, rows, title=""):
    """Heatmap (in dB) of a beampattern raster; needs matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = {k: np.array([r[k] for r in rows]) for k in ("theta_deg", "phi_deg", "dist_m", "gain_db")}
    axes = [k for k in ("theta_deg", "phi_deg", "dist_m") if np.unique(cols[k]).size > 1]
    if len(axes) != 2:
        raise ValueError("SVG output needs a two-dimensional grid")
    xs, ys = np.unique(cols[axes[0]]), np.unique(cols[axes[1]])
    img = np.full((ys.size, xs.size), np.nan)
    img[np.searchsorted(ys, cols[axes[1]]), np.searchsorted(xs, cols[axes[0]])] = cols["gain_db"]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(xs, ys, np.maximum(img, -40.0), shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="normalised gain (dB)")
    ax.set_xlabel(axes[0])
    ax.set_ylabel(axes[1])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    # fixed metadata keeps the file reproducible
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
