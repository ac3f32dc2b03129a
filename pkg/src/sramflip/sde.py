"""Monte Carlo time-to-failure for the reduced 1D model and the full 2D cell.

Every path owns a counter-based Philox stream keyed by ``(base_seed,
path_index)``, so an ensemble is identical however it is batched or
threaded, and disjoint index ranges can be merged.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .circuit import CellParams, Equilibria, node_noise_sigma
from .errors import CensoringWarning, DomainError, EmptyEnsembleError, EnsembleError
from .extraction import DriftTable

# Broadie-Glasserman-Kou continuity correction for discretely monitored barriers
BGK_BETA = 0.5826

MODE_1D = "reduced-1d"
MODE_2D = "full-2d"

_BLOCK0 = 1024
_BLOCK_MAX = 16384
_GRID_POINTS = 8193


@dataclass(frozen=True)
class SdeModel1D:
    """dv/dt = h(v) + sigma_w * w(t) on the range covered by ``drift``."""

    drift: DriftTable
    sigma_w: float
    delta_vv: float

    def __post_init__(self):
        if not self.sigma_w >= 0:
            raise ValueError("sigma_w must be >= 0")
        if not self.delta_vv > 0:
            raise ValueError("delta_vv must be > 0")
        if self.drift.vv[-1] < self.delta_vv * (1 - 1e-12):
            raise ValueError("drift table does not reach delta_vv")

    @property
    def tau(self) -> float:
        return self.drift.tau

    @property
    def sigma_vv(self) -> float:
        return self.sigma_w * math.sqrt(self.tau / 2.0)


@dataclass(frozen=True)
class TtfEnsemble:
    """Per-path results of one ensemble.

    ``by_index[j]`` is the TTF of path ``start_index + j`` (NaN if censored).
    For the 1D mode ``raw_by_index`` holds the undoubled first-passage times.
    """

    by_index: np.ndarray
    start_index: int
    dt: float
    seed: int
    mode: str
    t_max: float
    raw_by_index: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.by_index)

    @property
    def samples(self) -> np.ndarray:
        """Uncensored TTF, sorted."""
        x = self.by_index[np.isfinite(self.by_index)]
        return np.sort(x)

    @property
    def raw_samples(self) -> np.ndarray | None:
        if self.raw_by_index is None:
            return None
        x = self.raw_by_index[np.isfinite(self.raw_by_index)]
        return np.sort(x)

    @property
    def n_censored(self) -> int:
        return int(np.count_nonzero(~np.isfinite(self.by_index)))

    def merge(self, other: "TtfEnsemble") -> "TtfEnsemble":
        """Concatenate with an ensemble covering the next index range."""
        if (other.seed, other.dt, other.mode) != (self.seed, self.dt, self.mode):
            raise ValueError("can only merge ensembles of the same run settings")
        if other.start_index != self.start_index + self.n:
            raise ValueError("index ranges must be contiguous")
        raw = None
        if self.raw_by_index is not None and other.raw_by_index is not None:
            raw = np.concatenate((self.raw_by_index, other.raw_by_index))
        return TtfEnsemble(np.concatenate((self.by_index, other.by_index)), self.start_index, self.dt,
                           self.seed, self.mode, self.t_max, raw, dict(self.meta))


@dataclass(frozen=True)
class MttfEstimate:
    mean: float
    ci95: tuple[float, float]
    n: int
    method: str
    n_censored: int = 0
    lower_bound: bool = False

    @property
    def stderr(self) -> float:
        return (self.ci95[1] - self.ci95[0]) / (2 * 1.96)


def path_rng(base_seed: int, index: int) -> np.random.Generator:
    """Counter-based stream of path ``index``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(base_seed, spawn_key=(index,))))


@dataclass
class _Batch:
    raw: np.ndarray
    errors: dict


def _run_blocks(n_paths, n_max, draw, advance):
    """Drive ``advance`` over growing noise blocks until every path hits or ``n_max`` steps pass.

    ``draw(rows, k)`` returns the next ``k`` noise columns for the given rows;
    ``advance(rows, z)`` returns the hit column per row.
    Returns the 1-based hit step per path (0 = censored, -1 = domain error).
    """
    steps = np.zeros(n_paths, dtype=np.int64)
    active = np.arange(n_paths)
    done = 0
    block = _BLOCK0
    while active.size and done < n_max:
        k = min(block, n_max - done)
        z = draw(active, k)
        hit = advance(active, z)
        hit_rows = hit >= 0
        steps[active[hit_rows]] = done + hit[hit_rows] + 1
        steps[active[hit == _kernels.HIT_DOMAIN]] = -1
        active = active[hit == _kernels.HIT_NONE]
        done += k
        block = min(2 * block, _BLOCK_MAX)
    return steps


class Simulator1D:
    """Euler-Maruyama walker for the reduced model started at v = 0.

    The absorbing level is lowered by ``0.5826*sigma_w*sqrt(dt)`` to remove the
    leading discrete-monitoring bias unless ``boundary_correction=False``.
    Each recorded TTF is twice the first-passage time.
    """

    mode = MODE_1D

    def __init__(self, model: SdeModel1D, dt: float | None = None, t_max: float | None = None,
                 boundary_correction: bool = True, grid_points: int = _GRID_POINTS):
        tau = model.tau
        self.model = model
        self.dt = tau / 200.0 if dt is None else float(dt)
        if self.dt > tau / 100.0 * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt:.3g} s exceeds tau/100 = {tau / 100:.3g} s")
        self.t_max = 1e4 * tau if t_max is None else float(t_max)
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        self.n_max = int(math.ceil(self.t_max / self.dt - 1e-9))
        lo = model.drift.vv_min
        self.grid = np.linspace(lo, model.delta_vv, grid_points)
        self.h_grid = np.interp(self.grid, model.drift.vv, model.drift.h)
        self.lo = lo
        self.inv_dx = (grid_points - 1) / (model.delta_vv - lo)
        self.amp = model.sigma_w * math.sqrt(self.dt)
        shift = BGK_BETA * self.amp if boundary_correction else 0.0
        self.threshold = model.delta_vv - shift
        self.boundary_correction = boundary_correction

    def _advance(self, v, z):
        return _kernels.advance_1d(v, z, self.h_grid, self.lo, self.inv_dx, self.dt, self.amp, self.threshold)

    def run_batch(self, rngs, indices=None) -> _Batch:
        n = len(rngs)
        v = np.zeros(n)
        if self.amp == 0.0:
            return _Batch(np.full(n, np.nan), {})

        def draw(rows, k):
            z = np.empty((rows.size, k))
            for j, r in enumerate(rows):
                rngs[r].standard_normal(out=z[j])
            return z

        def advance(rows, z):
            vr = v[rows]
            hit = self._advance(vr, z)
            v[rows] = vr
            return hit

        steps = _run_blocks(n, self.n_max, draw, advance)
        raw = np.where(steps > 0, steps * self.dt, np.nan)
        errors = {}
        for j in np.flatnonzero(steps < 0):
            idx = j if indices is None else indices[j]
            errors[int(idx)] = DomainError(
                f"path {idx} left the drift table range at v = {v[j]:.6g} V (table starts at {self.lo:.6g} V)",
                value=float(v[j]), path_index=int(idx))
        return _Batch(raw, errors)

    def ttf_from_raw(self, raw):
        return 2.0 * raw


class Simulator2D:
    """Euler-Maruyama integration of the full cell with independent node noise.

    TTF is the first step at which the two node voltages cross; no doubling.
    ``start="stable1"`` runs the mirrored problem from the other stable state.
    """

    mode = MODE_2D

    def __init__(self, p: CellParams, eq: Equilibria, dt: float | None = None, t_max: float | None = None,
                 fmax: float | None = None, start: str = "stable0"):
        if dt is None:
            dt = 1.0 / (2.0 * fmax) if fmax is not None else p.tau_node / 20.0
        self.dt = float(dt)
        if self.dt > p.tau_node / 20.0 * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt:.3g} s exceeds r*c/20 = {p.tau_node / 20:.3g} s")
        self.t_max = 1e5 * p.tau_node if t_max is None else float(t_max)
        self.n_max = int(math.ceil(self.t_max / self.dt - 1e-9))
        self.p = p
        self.eq = eq
        self.amp = node_noise_sigma(p) * math.sqrt(self.dt)
        if start == "stable0":
            self.x0 = (eq.stable0.v2, eq.stable0.v1)
            self.d_lo, self.d_hi = p.dv2, p.dv1
        elif start == "stable1":
            self.x0 = (eq.stable1.v1, eq.stable1.v2)
            self.d_lo, self.d_hi = p.dv1, p.dv2
        else:
            raise ValueError(f"start must be 'stable0' or 'stable1', got {start!r}")
        self.start = start

    def run_batch(self, rngs, indices=None) -> _Batch:
        n = len(rngs)
        lo = np.full(n, self.x0[0])
        hi = np.full(n, self.x0[1])
        if self.amp == 0.0:
            return _Batch(np.full(n, np.nan), {})
        p = self.p

        def draw(rows, k):
            z = np.empty((rows.size, k, 2))
            for j, r in enumerate(rows):
                rngs[r].standard_normal(out=z[j])
            return z

        def advance(rows, z):
            a, b = lo[rows], hi[rows]
            hit = _kernels.advance_2d(a, b, z, 0.5 * p.vdd, p.vm, p.vs, self.d_lo, self.d_hi,
                                      1.0 / p.tau_node, self.dt, self.amp)
            lo[rows], hi[rows] = a, b
            return hit

        steps = _run_blocks(n, self.n_max, draw, advance)
        return _Batch(np.where(steps > 0, steps * self.dt, np.nan), {})

    def ttf_from_raw(self, raw):
        return raw


def _single(sim, rng):
    batch = sim.run_batch([rng])
    if batch.errors:
        raise next(iter(batch.errors.values()))
    raw = batch.raw[0]
    return None if math.isnan(raw) else float(sim.ttf_from_raw(raw))


def simulate_path_1d(m: SdeModel1D, dt: float, t_max: float, rng: np.random.Generator,
                     boundary_correction: bool = True) -> float | None:
    """TTF of one reduced-model path (twice its first-passage time), or None if censored."""
    return _single(Simulator1D(m, dt, t_max, boundary_correction), rng)


def simulate_path_2d(p: CellParams, eq: Equilibria, dt: float, t_max: float,
                     rng: np.random.Generator) -> float | None:
    """TTF of one full-cell path, or None if censored."""
    return _single(Simulator2D(p, eq, dt, t_max), rng)


def run_ensemble(sim, n: int, base_seed: int, start_index: int = 0, batch_size: int = 64,
                 workers: int = 1) -> TtfEnsemble:
    """Run paths ``start_index .. start_index+n-1`` of ``sim``.

    Raises :class:`EnsembleError` listing path indices if any path failed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    indices = np.arange(start_index, start_index + n)
    chunks = [indices[i:i + batch_size] for i in range(0, n, batch_size)]

    def work(chunk):
        return sim.run_batch([path_rng(base_seed, int(i)) for i in chunk], indices=chunk)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    raw = np.concatenate([r.raw for r in results])
    failures = {}
    for r in results:
        failures.update(r.errors)
    if failures:
        first = min(failures)
        raise EnsembleError(f"{len(failures)} path(s) failed, first at index {first}: {failures[first]}",
                            failures)
    ttf = sim.ttf_from_raw(raw)
    return TtfEnsemble(ttf, start_index, sim.dt, int(base_seed), sim.mode, sim.t_max,
                       raw if sim.mode == MODE_1D else None, {"backend": _kernels.BACKEND})


def mttf_stats(e: TtfEnsemble, method: str | None = None) -> MttfEstimate:
    """Sample mean with a normal 95% interval; censored paths are excluded.

    If every path is censored the estimate is a lower bound at the horizon
    (``lower_bound=True``, interval ``(t_max, inf)``).
    """
    method = method or ("mc-1d" if e.mode == MODE_1D else "mc-2d")
    if e.n == 0:
        raise EmptyEnsembleError("ensemble has no paths")
    x = e.samples
    n_cens = e.n_censored
    horizon = 2.0 * e.t_max if e.mode == MODE_1D else e.t_max
    if x.size == 0:
        warnings.warn("every path was censored; MTTF exceeds the horizon", CensoringWarning, stacklevel=2)
        return MttfEstimate(horizon, (horizon, math.inf), 0, method, n_cens, True)
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    half = 1.96 * sd / math.sqrt(x.size)
    if n_cens:
        warnings.warn(f"{n_cens} censored path(s); mean is a lower bound", CensoringWarning, stacklevel=2)
    return MttfEstimate(mean, (mean - half, mean + half), int(x.size), method, n_cens, n_cens > 0)


def write_ensemble_csv(path, e: TtfEnsemble, params_hash: str = "") -> None:
    """CSV ``path_index,ttf_s,censored`` followed by a ``# {json}`` metadata line."""
    meta = {"seed": e.seed, "dt": e.dt, "mode": e.mode, "t_max": e.t_max, "params_hash": params_hash,
            "n": e.n, "start_index": e.start_index}
    with open(path, "w", newline="") as fh:
        fh.write("path_index,ttf_s,censored\n")
        for j, t in enumerate(e.by_index):
            cens = not math.isfinite(t)
            fh.write(f"{e.start_index + j},{'' if cens else repr(float(t))},{int(cens)}\n")
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")


def read_ensemble_csv(path) -> TtfEnsemble:
    rows = []
    meta = {}
    with open(path) as fh:
        next(fh)
        for line in fh:
            if line.startswith("#"):
                meta = json.loads(line[1:])
                continue
            idx, ttf, cens = line.strip().split(",")
            rows.append(math.nan if cens == "1" else float(ttf))
    by_index = np.array(rows)
    raw = by_index / 2.0 if meta["mode"] == MODE_1D else None
    return TtfEnsemble(by_index, meta["start_index"], meta["dt"], meta["seed"], meta["mode"], meta["t_max"],
                       raw, {"params_hash": meta.get("params_hash", "")})
