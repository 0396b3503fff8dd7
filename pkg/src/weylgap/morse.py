"""Height-function Morse analysis and total-curvature Monte Carlo.

The direction side averages critical-point counts of height functions over
random directions (batched multistart Newton).  The normal-bundle side
integrates |det A| over the index strata of the unit normal bundle, which
for a hypersurface is the double cover {+nu, -nu}.  The two sides estimate
the same index-wise totals and are cross-checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import SymForm, weyl_map
from .gap import vol_sphere
from .hypersurfaces import (
    CHART_BOUND,
    TUBE,
    HypersurfaceSpec,
    chart_maps,
    sample_frames,
)

__all__ = [
    "CriticalPointConfig",
    "DirectionConfig",
    "AreaConfig",
    "CriticalPoint",
    "TauEstimate",
    "DegenerateDirection",
    "critical_points",
    "tau_direction_side",
    "tau_normal_bundle_side",
    "morse_audit",
    "pointwise_gap_check",
    "weyl_energy_mc",
]


@dataclass(frozen=True)
class CriticalPointConfig:
    grid_starts: int = 48
    newton_tol: float = 1e-10
    max_iter: int = 40
    dedupe_radius: float = 1e-5
    degeneracy_tol: float = 1e-8
    start_seed: int = 1234
    step_cap: float = 0.5


@dataclass(frozen=True)
class DirectionConfig:
    num_directions: int = 2000
    seed: int = 0
    critical: CriticalPointConfig = field(default_factory=CriticalPointConfig)
    direction_chunk: int = 2000
    max_rejection_rate: float = 0.10


@dataclass(frozen=True)
class AreaConfig:
    num_samples: int = 20000
    seed: int = 0


@dataclass(frozen=True)
class CriticalPoint:
    chart: int
    chart_coords: np.ndarray
    index: int
    height: float
    hessian_det: float


@dataclass(frozen=True)
class TauEstimate:
    tau: tuple
    stderr: tuple
    samples: int
    side: str

    def to_json(self) -> dict:
        return {
            "tau": list(self.tau),
            "stderr": list(self.stderr),
            "samples": self.samples,
            "side": self.side,
        }


class DegenerateDirection(Exception):
    """The height function for this direction has a (numerically)
    degenerate critical point; the direction lies in the measure-zero
    exceptional set and callers should resample."""


def _newton_starts(spec: HypersurfaceSpec, cfg: CriticalPointConfig):
    """Deterministic multistart seeds per chart, quasi-uniform over the
    parameter manifold."""
    rng = np.random.default_rng(cfg.start_seed)
    n = spec.n
    starts = {0: [], 1: []}
    if spec.family == TUBE:
        count = cfg.grid_starts
        theta = rng.uniform(0.0, 2.0 * np.pi, count)
        omega = rng.normal(size=(count, n))
        omega /= np.linalg.norm(omega, axis=1, keepdims=True)
        for c in (0, 1):
            pole = omega[:, -1] if c == 0 else -omega[:, -1]
            keep = pole > -0.2  # stay inside the chart with margin
            v = omega[keep, :-1] / (1.0 + pole[keep])[:, None]
            inside = np.linalg.norm(v, axis=1) <= CHART_BOUND
            starts[c] = np.column_stack([theta[keep][inside], v[inside]])
    else:
        x = rng.normal(size=(cfg.grid_starts, n + 1))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        for c in (0, 1):
            pole = x[:, -1] if c == 0 else -x[:, -1]
            keep = pole > -0.2
            u = x[keep, :-1] / (1.0 + pole[keep])[:, None]
            inside = np.linalg.norm(u, axis=1) <= CHART_BOUND
            starts[c] = u[inside]
    return starts


def _in_chart(spec: HypersurfaceSpec, coords: np.ndarray) -> np.ndarray:
    if spec.family == TUBE:
        radial = np.linalg.norm(coords[:, 1:], axis=1)
    else:
        radial = np.linalg.norm(coords, axis=1)
    return radial <= CHART_BOUND


def _wrap(spec: HypersurfaceSpec, coords: np.ndarray) -> np.ndarray:
    if spec.family == TUBE:
        coords[:, 0] = np.mod(coords[:, 0], 2.0 * np.pi)
    return coords


def _newton_candidates(spec, chart, starts, directions, cfg):
    """Run damped Newton on grad h_u = J^T u = 0 for every
    (direction, start) pair in one chart.  Returns candidate arrays
    (direction index, coords, position)."""
    num_d = directions.shape[0]
    num_s = starts.shape[0]
    if num_s == 0:
        return (np.empty(0, dtype=int), np.empty((0, spec.n)),
                np.empty((0, spec.n + 1)))
    coords = np.tile(starts, (num_d, 1))
    dir_idx = np.repeat(np.arange(num_d), num_s)
    u = directions[dir_idx]
    alive = np.ones(coords.shape[0], dtype=bool)

    for _ in range(cfg.max_iter):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        _, jac, hess, _ = chart_maps(spec, chart, coords[idx])
        ua = u[idx]
        grad = np.einsum("mia,mi->ma", jac, ua)
        hu = np.einsum("miab,mi->mab", hess, ua)
        scale = np.abs(hu).max(axis=(1, 2))
        dets = np.abs(np.linalg.det(hu))
        ok = dets > 1e-14 * np.maximum(scale, 1e-30) ** spec.n
        if not ok.all():
            alive[idx[~ok]] = False
            idx = idx[ok]
            grad, hu = grad[ok], hu[ok]
        if idx.size == 0:
            break
        step = np.linalg.solve(hu, grad[:, :, None])[:, :, 0]
        norms = np.linalg.norm(step, axis=1)
        big = norms > cfg.step_cap
        step[big] *= (cfg.step_cap / norms[big])[:, None]
        new = coords[idx] - step
        new = _wrap(spec, new)
        finite = np.isfinite(new).all(axis=1)
        if spec.family == TUBE:
            sane = np.linalg.norm(new[:, 1:], axis=1) <= 4.0 * CHART_BOUND
        else:
            sane = np.linalg.norm(new, axis=1) <= 4.0 * CHART_BOUND
        good = finite & sane
        coords[idx[good]] = new[good]
        alive[idx[~good]] = False
        done = np.linalg.norm(step[good], axis=1) < 0.1 * cfg.newton_tol
        alive[idx[good][done]] = False  # converged; freeze

    # final residual filter
    keep = _in_chart(spec, coords)
    keep &= np.isfinite(coords).all(axis=1)
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        return (np.empty(0, dtype=int), np.empty((0, spec.n)),
                np.empty((0, spec.n + 1)))
    pos, jac, _, _ = chart_maps(spec, chart, coords[idx])
    grad = np.einsum("mia,mi->ma", jac, u[idx])
    resid_ok = np.linalg.norm(grad, axis=1) <= cfg.newton_tol
    idx = idx[resid_ok]
    return dir_idx[idx], coords[idx], pos[resid_ok]


def _classify_candidates(spec, chart, coords, directions_at, cfg):
    """Generalized-eigenvalue data of the height Hessian pencil at
    candidate critical points: (index, det A_u, min/max |eigenvalue|)."""
    _, jac, hess, _ = chart_maps(spec, chart, coords)
    metric = np.einsum("mia,mib->mab", jac, jac)
    hu = np.einsum("miab,mi->mab", hess, directions_at)
    chol = np.linalg.cholesky(metric)
    m1 = np.linalg.solve(chol, hu)
    pencil = np.linalg.solve(chol, m1.transpose(0, 2, 1))
    pencil = 0.5 * (pencil + pencil.transpose(0, 2, 1))
    eig = np.linalg.eigvalsh(pencil)
    index = np.sum(eig < 0.0, axis=1)
    det_au = np.prod(eig, axis=1)
    min_abs = np.abs(eig).min(axis=1)
    max_abs = np.abs(eig).max(axis=1)
    return index, det_au, min_abs, max_abs


def _critical_points_batch(spec, directions, cfg):
    """Find critical points of the height functions for a batch of unit
    directions.  Returns a list (one entry per direction): either a list of
    CriticalPoint or None when the direction is numerically degenerate or
    the solver found no critical point."""
    starts = _newton_starts(spec, cfg)
    num_d = directions.shape[0]
    cand_dir, cand_chart, cand_coords, cand_pos = [], [], [], []
    for chart in (0, 1):
        d_idx, coords, pos = _newton_candidates(
            spec, chart, np.asarray(starts[chart]), directions, cfg)
        if d_idx.size:
            cand_dir.append(d_idx)
            cand_chart.append(np.full(d_idx.size, chart))
            cand_coords.append(coords)
            cand_pos.append(pos)
    if not cand_dir:
        return [None] * num_d
    cand_dir = np.concatenate(cand_dir)
    cand_chart = np.concatenate(cand_chart)
    cand_coords = np.vstack(cand_coords)
    cand_pos = np.vstack(cand_pos)

    # dedupe within each direction by ambient position: coarse grid buckets
    # first (cheap, vectorized), then a greedy merge of the few bucket
    # representatives per direction
    pos_scale = 1.0 + np.abs(cand_pos).max(initial=0.0)
    tol = cfg.dedupe_radius * pos_scale
    keys = np.column_stack([cand_dir,
                            np.round(cand_pos / (10.0 * tol)).astype(np.int64)])
    _, rep = np.unique(keys, axis=0, return_index=True)
    rep_dir = cand_dir[rep]
    order = np.argsort(rep_dir, kind="stable")
    rep = rep[order]
    rep_dir = rep_dir[order]
    bounds = np.searchsorted(rep_dir, np.arange(num_d + 1))
    unique_sel = []
    for d in range(num_d):
        lo, hi = bounds[d], bounds[d + 1]
        kept: list = []
        for i in rep[lo:hi]:
            p = cand_pos[i]
            if all(np.linalg.norm(p - cand_pos[j]) > tol for j in kept):
                kept.append(i)
        unique_sel.extend(kept)
    if not unique_sel:
        return [None] * num_d
    sel = np.asarray(unique_sel)
    u_dir, u_chart = cand_dir[sel], cand_chart[sel]
    u_coords, u_pos = cand_coords[sel], cand_pos[sel]

    index = np.empty(sel.size, dtype=int)
    det_au = np.empty(sel.size)
    min_abs = np.empty(sel.size)
    max_abs = np.empty(sel.size)
    for chart in (0, 1):
        mask = u_chart == chart
        if not mask.any():
            continue
        out = _classify_candidates(spec, chart, u_coords[mask],
                                   directions[u_dir[mask]], cfg)
        index[mask], det_au[mask], min_abs[mask], max_abs[mask] = out

    results: list = []
    degenerate = min_abs < cfg.degeneracy_tol * (1.0 + max_abs)
    heights = np.einsum("mi,mi->m", u_pos, directions[u_dir])
    for d in range(num_d):
        mask = u_dir == d
        if not mask.any():
            results.append(None)
            continue
        if degenerate[mask].any():
            results.append(None)
            continue
        pts = [
            CriticalPoint(
                chart=int(u_chart[i]),
                chart_coords=u_coords[i].copy(),
                index=int(index[i]),
                height=float(heights[i]),
                hessian_det=float(det_au[i]),
            )
            for i in np.flatnonzero(mask)
        ]
        results.append(pts)
    return results


def critical_points(spec: HypersurfaceSpec, u,
                    cfg: CriticalPointConfig = CriticalPointConfig()):
    """All critical points of the height function in direction u.

    Raises DegenerateDirection when a degenerate critical point is met and
    RuntimeError when the solver finds nothing at all.
    """
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector")
    out = _critical_points_batch(spec, u[None, :], cfg)[0]
    if out is None:
        raise DegenerateDirection(
            "degenerate or unsolvable height function; resample the direction")
    return out


def tau_direction_side(spec: HypersurfaceSpec,
                       cfg: DirectionConfig = DirectionConfig()) -> TauEstimate:
    """Monte Carlo average of index-wise critical-point counts over uniform
    random directions."""
    n = spec.n
    rng = np.random.default_rng(cfg.seed)
    mu = np.zeros((cfg.num_directions, n + 1))
    accepted = 0
    rejected = 0
    max_attempts = 2 * cfg.num_directions + 1000
    attempts = 0
    while accepted < cfg.num_directions and attempts < max_attempts:
        want = min(cfg.direction_chunk, cfg.num_directions - accepted)
        dirs = rng.normal(size=(want, n + 1))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        attempts += want
        for res in _critical_points_batch(spec, dirs, cfg.critical):
            if res is None:
                rejected += 1
                continue
            if accepted >= cfg.num_directions:
                break
            for pt in res:
                mu[accepted, pt.index] += 1
            accepted += 1
    if accepted < cfg.num_directions:
        raise RuntimeError("direction sampling stalled: too many rejections")
    rate = rejected / (accepted + rejected)
    if rate > cfg.max_rejection_rate:
        raise RuntimeError(
            f"rejection rate {rate:.1%} exceeds {cfg.max_rejection_rate:.0%}; "
            "solver quality is insufficient for this family")
    tau = mu.mean(axis=0)
    stderr = mu.std(axis=0, ddof=1) / np.sqrt(cfg.num_directions)
    return TauEstimate(tau=tuple(tau), stderr=tuple(stderr),
                       samples=cfg.num_directions, side="DIRECTION_SIDE")


def _bin_indices(shape_eigs: np.ndarray) -> tuple:
    """Index bins for both unit normals at a point: the bin of (p, xi) is
    the Morse index of the height function h_xi there, which is the number
    of positive eigenvalues of the shape operator w.r.t. xi."""
    plus = np.sum(shape_eigs > 0.0, axis=1)
    minus = np.sum(-shape_eigs > 0.0, axis=1)
    return plus, minus


def tau_normal_bundle_side(spec: HypersurfaceSpec,
                           cfg: AreaConfig = AreaConfig()) -> TauEstimate:
    """Index-binned integral of |det A| over the unit normal bundle (both
    normal signs), normalized by the volume of the direction sphere."""
    n = spec.n
    rng = np.random.default_rng(cfg.seed)
    frames, jrel, total = sample_frames(spec, cfg.num_samples, rng)
    eigs = np.linalg.eigvalsh(frames["shape"])
    det_abs = np.abs(np.prod(eigs, axis=1))
    bin_plus, bin_minus = _bin_indices(eigs)
    weight = total * det_abs * jrel / vol_sphere(n)
    contrib = np.zeros((cfg.num_samples, n + 1))
    rows = np.arange(cfg.num_samples)
    np.add.at(contrib, (rows, bin_plus), weight)
    np.add.at(contrib, (rows, bin_minus), weight)
    tau = contrib.mean(axis=0)
    stderr = contrib.std(axis=0, ddof=1) / np.sqrt(cfg.num_samples)
    return TauEstimate(tau=tuple(tau), stderr=tuple(stderr),
                       samples=cfg.num_samples, side="NORMAL_BUNDLE_SIDE")


def morse_audit(spec: HypersurfaceSpec, betti,
                cfg: DirectionConfig = DirectionConfig()) -> dict:
    """Check the weak Morse inequalities tau_i >= betti_i against a
    direction-side estimate (3 standard errors of slack)."""
    betti = list(betti)
    if len(betti) != spec.n + 1:
        raise ValueError("betti vector must have n+1 entries")
    est = tau_direction_side(spec, cfg)
    table = []
    ok = True
    for i, (t, s, b) in enumerate(zip(est.tau, est.stderr, betti)):
        passed = t >= b - 3.0 * s - 1e-12
        ok = ok and passed
        table.append({"index": i, "tau": t, "stderr": s, "betti": b, "ok": passed})
    return {"ok": ok, "table": table, "estimate": est}


def _weyl_norms_sq(shapes: np.ndarray) -> np.ndarray:
    return np.array([weyl_map(SymForm(a)).norm_sq() for a in shapes])


def pointwise_gap_check(spec: HypersurfaceSpec, epsilon_hat: float,
                        cfg: AreaConfig = AreaConfig()) -> dict:
    """Sample the unit normal bundle and test the pointwise inequality
    |W|^2 >= epsilon_hat |det A_xi|^(4/n) wherever the index is middle."""
    if epsilon_hat <= 0:
        raise ValueError("epsilon_hat must be positive")
    n = spec.n
    if n < 4:
        raise ValueError("the pointwise gap needs n >= 4")
    rng = np.random.default_rng(cfg.seed)
    frames, _, _ = sample_frames(spec, cfg.num_samples, rng)
    eigs = np.linalg.eigvalsh(frames["shape"])
    det_abs = np.abs(np.prod(eigs, axis=1))
    bin_plus, bin_minus = _bin_indices(eigs)
    w2 = _weyl_norms_sq(frames["shape"])  # even in the normal sign
    middle = 0
    violations = 0
    threshold = epsilon_hat * (1.0 - 1e-9)
    for bins in (bin_plus, bin_minus):
        mask = (bins >= 2) & (bins <= n - 2)
        middle += int(mask.sum())
        lhs = w2[mask]
        rhs = threshold * det_abs[mask] ** (4.0 / n)
        violations += int(np.sum(lhs < rhs))
    return {
        "checked": 2 * cfg.num_samples,
        "middle_index_points": middle,
        "violations": violations,
        "max_weyl_norm_sq": float(w2.max(initial=0.0)),
    }


def weyl_energy_mc(spec: HypersurfaceSpec,
                   cfg: AreaConfig = AreaConfig()) -> dict:
    """Monte Carlo estimate of the Weyl energy, with the structural
    double-cover identity: the normal-bundle integral over both normal
    signs equals exactly twice the base integral."""
    n = spec.n
    if n < 4:
        raise ValueError("the Weyl energy needs n >= 4")
    rng = np.random.default_rng(cfg.seed)
    frames, jrel, total = sample_frames(spec, cfg.num_samples, rng)
    w_plus = _weyl_norms_sq(frames["shape"]) ** (n / 4.0)
    w_minus = _weyl_norms_sq(-frames["shape"]) ** (n / 4.0)
    base_contrib = total * w_plus * jrel
    bundle_contrib = total * (w_plus + w_minus) * jrel
    energy = float(base_contrib.mean())
    stderr = float(base_contrib.std(ddof=1) / np.sqrt(cfg.num_samples))
    bundle = float(bundle_contrib.mean())
    double_cover = bundle / (2.0 * energy) if energy > 0 else 1.0
    return {
        "energy": energy,
        "stderr": stderr,
        "double_cover_check": double_cover,
    }
