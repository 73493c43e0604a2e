"""Time integration used to cross-validate certificates empirically.

The PDE side is a 1D method-of-lines discretization with cell-centered
states, mirror (reflecting) boundary closure, and Strang splitting: half a
Crank-Nicolson diffusion step, a full RK4 reaction step, half a diffusion
step. The mirror closure makes the discrete per-species spatial mean exactly
conserved under pure diffusion. A fully explicit RK4 stepper is available
for cross-checks. The network side integrates N coupled copies of the model
over a graph Laplacian with RK4.

Diagnostics per recorded time: the deviation-from-mean norm, the maximum
pairwise distance between cells or nodes, per-species means, and (when a
certificate is supplied) the quadratic functional built from its P.

Determinism: reaction evaluations are chunked into fixed-size row blocks
whose partition does not depend on the worker count, and all diagnostic
reductions run single-threaded in a fixed order, so results are identical
for any `workers` setting.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .envelope import Model
from .lmi import Certificate, diffusion_matrix
from .spectral import Graph, graph_laplacian

_BLOWUP = 1e12
_CHUNK = 64  # rows per reaction chunk; fixed so worker count cannot matter


@dataclass(frozen=True)
class PdeGrid:
    L: float
    m: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("interval length must be positive")
        if self.m < 8:
            raise ValueError("need at least 8 cells")

    @property
    def h(self) -> float:
        return self.L / self.m

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) * self.h


@dataclass
class Trace:
    kind: str  # "pde" | "network"
    times: np.ndarray
    snapshots: np.ndarray  # (T, cells_or_nodes, n)
    nonuniformity: np.ndarray
    sync_error: np.ndarray
    means: np.ndarray  # (T, n)
    lyapunov: np.ndarray | None = None
    blown_up: bool = False
    dt: float = math.nan


@dataclass
class ModalCoeffs:
    times: np.ndarray
    sigma: np.ndarray  # (T, K, n); row k holds mode k+1, mode 1 is the mean


@dataclass
class FitResult:
    rate: float
    r2: float
    window: tuple[float, float]
    n_points: int
    note: str = ""


def _chunks(rows: int) -> list[slice]:
    return [slice(i, min(i + _CHUNK, rows)) for i in range(0, rows, _CHUNK)]


def _rk4_map(f, x: np.ndarray, dt: float, pool) -> np.ndarray:
    """One RK4 step of dx/dt = f(x) applied rowwise in fixed-size chunks."""

    def step(sl: slice) -> np.ndarray:
        xs = x[sl]
        k1 = f(xs)
        k2 = f(xs + 0.5 * dt * k1)
        k3 = f(xs + 0.5 * dt * k2)
        k4 = f(xs + dt * k3)
        return xs + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    sls = _chunks(x.shape[0])
    parts = list(pool.map(step, sls)) if pool is not None else [step(s) for s in sls]
    out = np.empty_like(x)
    for sl, part in zip(sls, parts):
        out[sl] = part
    return out


def _mirror_lap(x: np.ndarray, h: float) -> np.ndarray:
    """Second-difference columnwise with mirror ends, divided by h^2."""
    out = np.empty_like(x)
    out[1:-1] = x[:-2] - 2.0 * x[1:-1] + x[2:]
    out[0] = x[1] - x[0]
    out[-1] = x[-2] - x[-1]
    return out / h ** 2


def _cn_half_step(x: np.ndarray, d: np.ndarray, h: float, tau: float) -> np.ndarray:
    """Crank-Nicolson diffusion over tau, species by species."""
    m = x.shape[0]
    out = x.copy()
    lap = _mirror_lap(x, h)
    for i, di in enumerate(d):
        if di == 0.0:
            continue
        th = 0.5 * tau * di
        rhs = x[:, i] + th * lap[:, i]
        c = th / h ** 2
        ab = np.zeros((3, m))
        ab[0, 1:] = -c
        ab[2, :-1] = -c
        ab[1, :] = 1.0 + 2.0 * c
        ab[1, 0] = 1.0 + c
        ab[1, -1] = 1.0 + c
        out[:, i] = solve_banded((1, 1), ab, rhs)
    return out


def _bad(x: np.ndarray) -> bool:
    return not np.all(np.isfinite(x)) or bool(np.abs(x).max() > _BLOWUP)


def _diagnostics(x: np.ndarray, weight: float, P: np.ndarray | None):
    mean = x.mean(axis=0)
    dev = x - mean
    nonuni = math.sqrt(weight * float(np.sum(dev * dev)))
    diff = x[:, None, :] - x[None, :, :]
    sync = math.sqrt(float(np.max(np.sum(diff * diff, axis=-1))))
    lyap = None
    if P is not None:
        lyap = 0.5 * weight * float(np.sum((dev @ P) * dev))
    return mean, nonuni, sync, lyap


def _record_steps(n_steps: int, record_every: int | None) -> list[int]:
    if record_every is None:
        record_every = max(1, n_steps // 400)
    steps = list(range(0, n_steps + 1, record_every))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def _run(kind: str, x: np.ndarray, advance, n_steps: int, dt: float,
         weight: float, P: np.ndarray | None, record_every: int | None,
         workers: int) -> Trace:
    pool = None
    if workers > 1:
        pool = concurrent.futures.ThreadPoolExecutor(max_workers=workers)
    try:
        record = set(_record_steps(n_steps, record_every))
        times, snaps, nonunis, syncs, means, lyaps = [], [], [], [], [], []
        blown = False

        def emit(step: int) -> None:
            mean, nonuni, sync, lyap = _diagnostics(x, weight, P)
            times.append(step * dt)
            snaps.append(x.copy())
            nonunis.append(nonuni)
            syncs.append(sync)
            means.append(mean)
            lyaps.append(lyap)

        emit(0)
        with np.errstate(over="ignore", invalid="ignore"):
            for step in range(1, n_steps + 1):
                x = advance(x, pool)
                if _bad(x):
                    blown = True
                    break
                if step in record:
                    emit(step)
    finally:
        if pool is not None:
            pool.shutdown()
    return Trace(kind, np.array(times), np.array(snaps), np.array(nonunis),
                 np.array(syncs), np.array(means),
                 None if P is None else np.array(lyaps), blown, dt)


def _cert_p(certificate: Certificate | None) -> np.ndarray | None:
    return None if certificate is None else certificate.P.a


def simulate_pde(model: Model, D, grid: PdeGrid, T: float, dt: float | None = None,
                 init: np.ndarray | None = None, stepper: str = "strang",
                 certificate: Certificate | None = None,
                 record_every: int | None = None, workers: int = 1) -> Trace:
    """Advance the reaction-diffusion system and record diagnostics.

    Diffusion must be diagonal nonnegative. The default stepper splits
    diffusion (Crank-Nicolson halves) around an RK4 reaction step; "explicit"
    integrates the full right-hand side with RK4 and enforces the
    dt <= h^2/(2 max d) stability bound. Any |state| above 1e12 truncates
    the trace and sets the blow-up flag.
    """
    Dm = diffusion_matrix(D, model.n)
    d = np.diag(Dm)
    if np.any(Dm != np.diag(d)) or np.any(d < 0):
        raise ValueError("PDE simulation needs diagonal nonnegative diffusion")
    if init is None:
        raise ValueError("an initial state of shape (m, n) is required")
    x = np.array(init, dtype=float)
    if x.shape != (grid.m, model.n):
        raise ValueError(f"init has shape {x.shape}, expected {(grid.m, model.n)}")
    if not np.all(np.isfinite(x)):
        raise ValueError("init must be finite")
    h = grid.h
    dmax = float(d.max()) if d.size else 0.0
    if stepper == "strang":
        if dt is None:
            dt = min(0.01, h) / 4.0
    elif stepper == "explicit":
        stable = math.inf if dmax == 0.0 else h ** 2 / (2.0 * dmax)
        if dt is None:
            dt = min(min(0.01, h) / 4.0, 0.5 * stable)
        if dt > stable:
            raise ValueError(f"explicit stepper unstable: dt={dt:.3g} > {stable:.3g}")
    else:
        raise ValueError(f"unknown stepper {stepper!r}")
    if not 0 < dt <= T:
        raise ValueError("need 0 < dt <= T")
    n_steps = max(1, int(round(T / dt)))
    dt = T / n_steps

    if stepper == "strang":
        def advance(state, pool):
            state = _cn_half_step(state, d, h, 0.5 * dt)
            state = _rk4_map(model.f, state, dt, pool)
            return _cn_half_step(state, d, h, 0.5 * dt)
    else:
        def rhs(state):
            return model.f(state) + _mirror_lap(state, h) * d

        def advance(state, pool):
            return _rk4_map(rhs, state, dt, pool)

    return _run("pde", x, advance, n_steps, dt, h, _cert_p(certificate),
                record_every, workers)


def simulate_network(model: Model, D, g: Graph, T: float, dt: float | None = None,
                     init: np.ndarray | None = None,
                     certificate: Certificate | None = None,
                     record_every: int | None = None, workers: int = 1) -> Trace:
    """Integrate N diffusively coupled copies of the model over a graph.

    Node k follows dx/dt = f(x_k) - D * sum_j L_kj x_j with the graph
    Laplacian L; directed graphs (zero row sums) are accepted. D may be a
    full matrix here.
    """
    Dm = diffusion_matrix(D, model.n)
    lap = graph_laplacian(g)
    N = g.n_nodes
    if init is None:
        raise ValueError("an initial state of shape (N, n) is required")
    x = np.array(init, dtype=float)
    if x.shape != (N, model.n):
        raise ValueError(f"init has shape {x.shape}, expected {(N, model.n)}")
    if not np.all(np.isfinite(x)):
        raise ValueError("init must be finite")
    if dt is None:
        dt = 0.01 / 4.0
    if not 0 < dt <= T:
        raise ValueError("need 0 < dt <= T")
    n_steps = max(1, int(round(T / dt)))
    dt = T / n_steps

    def rhs(state):
        return model.f(state) - (lap @ state) @ Dm.T

    # The coupling term needs all rows, so the RK4 step runs unchunked; the
    # reaction part dominates cost only for large models, and determinism is
    # what the chunk rule protects. Chunked f plus full coupling would split
    # a single RK4 stage inconsistently, so the whole step stays fused here.
    def advance(state, pool):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * dt * k1)
        k3 = rhs(state + 0.5 * dt * k2)
        k4 = rhs(state + dt * k3)
        return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return _run("network", x, advance, n_steps, dt, 1.0, _cert_p(certificate),
                record_every, workers)


def modal_projection(state: np.ndarray, n_modes: int) -> np.ndarray:
    """Cosine-mode coefficients of a cell-centered field, modes 1..n_modes.

    Mode 1 is the spatial mean; mode k >= 2 projects onto
    cos((k-1) pi (i+1/2)/m), the exact eigenvector of the mirror-closed
    second-difference operator.
    """
    m = state.shape[0]
    if not 1 <= n_modes <= m:
        raise ValueError("need 1 <= n_modes <= m")
    centers = np.arange(m) + 0.5
    out = np.empty((n_modes, state.shape[1]))
    out[0] = state.mean(axis=0)
    for k in range(2, n_modes + 1):
        v = np.cos((k - 1) * math.pi * centers / m)
        out[k - 1] = (2.0 / m) * (state * v[:, None]).sum(axis=0)
    return out


def modal_oracle(A, D, lambdas, sigma0s, times, dt: float = 0.01) -> ModalCoeffs:
    """Reference solution of the decoupled per-mode linear dynamics.

    Mode k evolves by sigma' = (A - lambda_k D) sigma; the first entry of
    lambdas should be 0 so mode 1 carries the mean dynamics. Integration is
    dense RK4 with substeps no longer than dt/10, landing exactly on each
    requested time.
    """
    A = np.asarray(A, dtype=float)
    Dm = diffusion_matrix(D, A.shape[0])
    lambdas = [float(v) for v in lambdas]
    sig = np.array(sigma0s, dtype=float)
    if sig.shape != (len(lambdas), A.shape[0]):
        raise ValueError("sigma0s must be (n_modes, n)")
    times = np.asarray(times, dtype=float)
    mats = [A - lam * Dm for lam in lambdas]
    out = np.empty((times.size, len(lambdas), A.shape[0]))
    out[0] = sig
    cur = sig.copy()
    for j in range(1, times.size):
        span = times[j] - times[j - 1]
        n_sub = max(1, math.ceil(span / (dt / 10.0)))
        hstep = span / n_sub
        for k, M in enumerate(mats):
            y = cur[k]
            for _ in range(n_sub):
                k1 = M @ y
                k2 = M @ (y + 0.5 * hstep * k1)
                k3 = M @ (y + 0.5 * hstep * k2)
                k4 = M @ (y + hstep * k3)
                y = y + (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            cur[k] = y
        out[j] = cur
    return ModalCoeffs(times.copy(), out)


def fit_decay_rate(trace: Trace, diagnostic: str = "nonuniformity",
                   window: tuple[float, float] | None = None) -> FitResult:
    """Least-squares slope of log(diagnostic) against time.

    Negative rate means decay. Nonpositive samples are dropped and the
    window shrinks to the surviving points, noted in the result.
    """
    if diagnostic not in ("nonuniformity", "sync_error", "lyapunov"):
        raise ValueError(f"unknown diagnostic {diagnostic!r}")
    y = getattr(trace, diagnostic)
    if y is None:
        raise ValueError(f"trace has no {diagnostic} data")
    t = trace.times
    if window is None:
        window = (float(t[0]), float(t[-1]))
    in_win = (t >= window[0]) & (t <= window[1])
    mask = in_win & (y > 0.0)
    note = ""
    if mask.sum() < in_win.sum():
        note = f"window shrunk to {int(mask.sum())} positive samples"
    if mask.sum() < 2:
        raise ValueError("need at least two positive samples in the window")
    ts, ys = t[mask], np.log(y[mask])
    slope, intercept = np.polyfit(ts, ys, 1)
    fitted = slope * ts + intercept
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(float(slope), r2, (float(ts[0]), float(ts[-1])),
                     int(mask.sum()), note)


def cosine_perturbation(base, amplitude: float, m: int, mode: int = 2) -> np.ndarray:
    """Uniform state times (1 + amplitude * cosine of the given mode)."""
    base = np.asarray(base, dtype=float).reshape(-1)
    centers = np.arange(m) + 0.5
    v = np.cos((mode - 1) * math.pi * centers / m)
    return base[None, :] * (1.0 + amplitude * v[:, None])


def random_states(n_items: int, n: int, lo: float, hi: float, seed: int) -> np.ndarray:
    """Seeded uniform initial conditions, one row per cell or node."""
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(n_items, n))


def export_trace_csv(trace: Trace, path, include_state: bool = False) -> None:
    """Write the trace as CSV, 12 significant digits, deterministic layout."""
    n = trace.means.shape[1]
    cols = ["t", "nonuniformity", "sync_error"]
    cols += [f"mean_{i + 1}" for i in range(n)]
    if trace.lyapunov is not None:
        cols.append("lyapunov")
    if include_state:
        rows = trace.snapshots.shape[1]
        cols += [f"x{r}_{i + 1}" for r in range(rows) for i in range(n)]

    def fmt(v: float) -> str:
        return f"{v:.12g}"

    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for j in range(trace.times.size):
            vals = [trace.times[j], trace.nonuniformity[j], trace.sync_error[j]]
            vals += list(trace.means[j])
            if trace.lyapunov is not None:
                vals.append(trace.lyapunov[j])
            if include_state:
                vals += list(trace.snapshots[j].reshape(-1))
            fh.write(",".join(fmt(v) for v in vals) + "\n")
