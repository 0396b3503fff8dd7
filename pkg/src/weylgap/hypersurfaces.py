"""Parametric immersed hypersurfaces in Euclidean space.

Three families are supported, each with closed-form first and second
derivatives in chart coordinates:

* ellipsoid: n+1 semi-axes applied to the round sphere;
* tube: a circle of radius R with an (n-1)-sphere fiber of radius r,
  giving S^1 x S^(n-1) in R^(n+1);
* rgraph: a radial graph rho(x) * x over the unit sphere with
  rho = 1 + eps * P(x) for a supplied polynomial P.

Ellipsoid and radial graphs use two stereographic charts (north/south);
tubes use a periodic angle times two stereographic fiber charts.  All chart
evaluations are vectorized over a leading batch axis.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .algebra import SymForm
from .gap import vol_sphere

__all__ = [
    "Quadric",
    "HypersurfaceSpec",
    "SurfacePoint",
    "chart_frames",
    "geometry_at",
    "sample_frames",
    "chart_from_sphere",
]

ELLIPSOID = "ellipsoid"
TUBE = "tube"
RGRAPH = "rgraph"

# stereographic coordinates are trusted out to this radius; the two charts
# overlap in a wide band around the equator
CHART_BOUND = 1.5


class Quadric:
    """Diagonal quadric polynomial P(x) = sum c_i x_i^2 with analytic
    derivatives, used as the radial-graph perturbation."""

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)

    def value(self, x):
        return np.sum(self.coeffs * x ** 2, axis=-1)

    def grad(self, x):
        return 2.0 * self.coeffs * x

    def hess(self, x):
        h = 2.0 * np.diag(self.coeffs)
        return np.broadcast_to(h, x.shape[:-1] + h.shape)

    def __str__(self):
        return "quadric:" + ",".join(f"{c:g}" for c in self.coeffs)

    def __eq__(self, other):
        return (isinstance(other, Quadric)
                and self.coeffs.shape == other.coeffs.shape
                and bool(np.all(self.coeffs == other.coeffs)))


@dataclass(frozen=True)
class HypersurfaceSpec:
    family: str
    n: int
    semi_axes: tuple | None = None
    ring_radius: float | None = None
    tube_radius: float | None = None
    eps: float = 0.0
    perturbation: Quadric | None = None

    def __post_init__(self):
        if self.family == ELLIPSOID:
            axes = tuple(float(a) for a in self.semi_axes)
            if len(axes) != self.n + 1 or any(a <= 0 for a in axes):
                raise ValueError("ellipsoid needs n+1 positive semi-axes")
            object.__setattr__(self, "semi_axes", axes)
        elif self.family == TUBE:
            if self.ring_radius is None or self.tube_radius is None:
                raise ValueError("tube needs ring and tube radii")
            if not self.ring_radius > self.tube_radius > 0:
                raise ValueError("tube needs R > r > 0")
            if self.n < 2:
                raise ValueError("tube needs n >= 2")
        elif self.family == RGRAPH:
            if self.perturbation is None:
                raise ValueError("radial graph needs a perturbation polynomial")
            if self.perturbation.coeffs.size != self.n + 1:
                raise ValueError("perturbation must live on R^(n+1)")
        else:
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def num_charts(self) -> int:
        return 2

    @property
    def ambient_dim(self) -> int:
        return self.n + 1

    @classmethod
    def parse(cls, text: str) -> "HypersurfaceSpec":
        """Parse CLI spec strings such as "ellipsoid:1,1,1,1,2",
        "tube:R=2,r=1,n=4", "rgraph:eps=0.3,P=quadric:1,-1,1,-1,0"."""
        family, _, rest = text.strip().partition(":")
        family = family.lower()
        if family == ELLIPSOID:
            axes = tuple(float(tok) for tok in rest.split(","))
            return cls(ELLIPSOID, n=len(axes) - 1, semi_axes=axes)
        if family == TUBE:
            kv = dict(item.split("=", 1) for item in rest.split(","))
            return cls(TUBE, n=int(kv["n"]),
                       ring_radius=float(kv["R"]), tube_radius=float(kv["r"]))
        if family == RGRAPH:
            m = re.match(r"eps=([0-9.eE+\-]+),P=quadric:(.+)$", rest)
            if m is None:
                raise ValueError(f"cannot parse radial graph spec {text!r}")
            eps = float(m.group(1))
            coeffs = tuple(float(tok) for tok in m.group(2).split(","))
            return cls(RGRAPH, n=len(coeffs) - 1, eps=eps,
                       perturbation=Quadric(coeffs))
        raise ValueError(f"unknown hypersurface family {family!r}")

    def __str__(self) -> str:
        if self.family == ELLIPSOID:
            return "ellipsoid:" + ",".join(f"{a:g}" for a in self.semi_axes)
        if self.family == TUBE:
            return f"tube:R={self.ring_radius:g},r={self.tube_radius:g},n={self.n}"
        return f"rgraph:eps={self.eps:g},P={self.perturbation}"


@dataclass(frozen=True)
class SurfacePoint:
    chart: int
    chart_coords: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    shape_operator: SymForm
    area_weight: float


def _stereo(u: np.ndarray, south: bool):
    """Stereographic parametrization of the unit d-sphere from R^d with
    closed-form first and second derivatives.

    Returns x (m, d+1), jac (m, d+1, d), hess (m, d+1, d, d).  The pole
    coordinate is the last one; ``south`` flips its sign.
    """
    m, d = u.shape
    s = np.sum(u ** 2, axis=1)
    big_d = 1.0 + s
    inv = 1.0 / big_d
    inv2 = inv ** 2
    inv3 = inv ** 3

    x = np.empty((m, d + 1))
    x[:, :d] = 2.0 * u * inv[:, None]
    x[:, d] = (1.0 - s) * inv

    eye = np.eye(d)
    jac = np.empty((m, d + 1, d))
    jac[:, :d, :] = 2.0 * inv[:, None, None] * eye - 4.0 * inv2[:, None, None] \
        * u[:, :, None] * u[:, None, :]
    jac[:, d, :] = -4.0 * u * inv2[:, None]

    hess = np.empty((m, d + 1, d, d))
    sym3 = (np.einsum("ab,mc->mabc", eye, u)
            + np.einsum("ac,mb->mabc", eye, u)
            + np.einsum("bc,ma->mabc", eye, u))
    hess[:, :d] = (-4.0 * inv2[:, None, None, None] * sym3
                   + 16.0 * inv3[:, None, None, None]
                   * u[:, :, None, None] * u[:, None, :, None] * u[:, None, None, :])
    hess[:, d] = (-4.0 * inv2[:, None, None] * eye
                  + 16.0 * inv3[:, None, None] * u[:, :, None] * u[:, None, :])
    if south:
        x[:, d] *= -1.0
        jac[:, d] *= -1.0
        hess[:, d] *= -1.0
    return x, jac, hess


def chart_from_sphere(x: np.ndarray):
    """Assign unit-sphere points to a stereographic chart and return
    (chart index array, chart coordinates)."""
    d = x.shape[1] - 1
    chart = (x[:, d] < 0.0).astype(int)
    denom = 1.0 + np.abs(x[:, d])
    return chart, x[:, :d] / denom[:, None]


def _ellipsoid_maps(spec, x, jac_x, hess_x):
    a = np.asarray(spec.semi_axes)
    pos = x * a
    jac = jac_x * a[None, :, None]
    hess = hess_x * a[None, :, None, None]
    w = x / a
    normal = w / np.linalg.norm(w, axis=1, keepdims=True)
    return pos, jac, hess, normal


def _rgraph_maps(spec, x, jac_x, hess_x):
    p = spec.perturbation
    rho = 1.0 + spec.eps * p.value(x)
    if np.any(rho <= 0.0):
        raise ValueError("radial graph degenerate: rho <= 0 at a chart point")
    grho = spec.eps * p.grad(x)
    hrho = spec.eps * p.hess(x)

    pos = rho[:, None] * x
    gj = np.einsum("mi,mib->mb", grho, jac_x)  # directional derivatives of rho
    jac = x[:, :, None] * gj[:, None, :] + rho[:, None, None] * jac_x
    quad = (np.einsum("mib,mij,mjc->mbc", jac_x, hrho, jac_x)
            + np.einsum("mi,mibc->mbc", grho, hess_x))
    hess = (x[:, :, None, None] * quad[:, None, :, :]
            + gj[:, None, :, None] * jac_x[:, :, None, :]
            + gj[:, None, None, :] * jac_x[:, :, :, None]
            + rho[:, None, None, None] * hess_x)

    radial = np.einsum("mi,mi->m", grho, x)
    tangential = grho - radial[:, None] * x
    w = x - tangential / rho[:, None]
    normal = w / np.linalg.norm(w, axis=1, keepdims=True)
    return pos, jac, hess, normal


def _tube_maps(spec, chart, coords):
    n = spec.n
    big_r, small_r = spec.ring_radius, spec.tube_radius
    theta = coords[:, 0]
    v = coords[:, 1:]
    omega, jac_o, hess_o = _stereo(v, south=(chart == 1))
    m = coords.shape[0]
    c, s = np.cos(theta), np.sin(theta)
    ring = big_r + small_r * omega[:, 0]

    pos = np.empty((m, n + 1))
    pos[:, 0] = ring * c
    pos[:, 1] = ring * s
    pos[:, 2:] = small_r * omega[:, 1:]

    jac = np.zeros((m, n + 1, n))
    jac[:, 0, 0] = -ring * s
    jac[:, 1, 0] = ring * c
    jac[:, 0, 1:] = small_r * jac_o[:, 0, :] * c[:, None]
    jac[:, 1, 1:] = small_r * jac_o[:, 0, :] * s[:, None]
    jac[:, 2:, 1:] = small_r * jac_o[:, 1:, :]

    hess = np.zeros((m, n + 1, n, n))
    hess[:, 0, 0, 0] = -ring * c
    hess[:, 1, 0, 0] = -ring * s
    hess[:, 0, 0, 1:] = -small_r * jac_o[:, 0, :] * s[:, None]
    hess[:, 1, 0, 1:] = small_r * jac_o[:, 0, :] * c[:, None]
    hess[:, 0, 1:, 0] = hess[:, 0, 0, 1:]
    hess[:, 1, 1:, 0] = hess[:, 1, 0, 1:]
    hess[:, 0, 1:, 1:] = small_r * hess_o[:, 0] * c[:, None, None]
    hess[:, 1, 1:, 1:] = small_r * hess_o[:, 0] * s[:, None, None]
    hess[:, 2:, 1:, 1:] = small_r * hess_o[:, 1:]

    normal = np.empty((m, n + 1))
    normal[:, 0] = omega[:, 0] * c
    normal[:, 1] = omega[:, 0] * s
    normal[:, 2:] = omega[:, 1:]
    return pos, jac, hess, normal


def chart_maps(spec: HypersurfaceSpec, chart: int, coords: np.ndarray):
    """Batched position, Jacobian, chart Hessian, and unit normal."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != spec.n:
        raise ValueError(f"expected (m, {spec.n}) chart coordinates")
    if chart not in (0, 1):
        raise ValueError("chart index must be 0 or 1")
    if spec.family == TUBE:
        return _tube_maps(spec, chart, coords)
    x, jac_x, hess_x = _stereo(coords, south=(chart == 1))
    if spec.family == ELLIPSOID:
        return _ellipsoid_maps(spec, x, jac_x, hess_x)
    return _rgraph_maps(spec, x, jac_x, hess_x)


def chart_frames(spec: HypersurfaceSpec, chart: int, coords: np.ndarray) -> dict:
    """Full pointwise frame data for a batch of chart points.

    Returns position, normal, first fundamental form, the shape operator in
    an orthonormal tangent frame (sign convention: the unit sphere with its
    outward normal has shape operator +identity), its determinant, and the
    chart area density sqrt(det G).
    """
    pos, jac, hess, normal = chart_maps(spec, chart, coords)
    metric = np.einsum("mia,mib->mab", jac, jac)
    try:
        chol = np.linalg.cholesky(metric)
    except np.linalg.LinAlgError as exc:
        raise ValueError("irregular point: first fundamental form is not "
                         "positive definite") from exc
    second = -np.einsum("miab,mi->mab", hess, normal)
    tmp = np.linalg.solve(chol, second)
    shape = np.linalg.solve(chol, tmp.transpose(0, 2, 1)).transpose(0, 2, 1)
    shape = 0.5 * (shape + shape.transpose(0, 2, 1))
    diag = np.einsum("maa->ma", chol)
    area_weight = np.prod(diag, axis=1)
    return {
        "position": pos,
        "jacobian": jac,
        "hessian": hess,
        "normal": normal,
        "metric": metric,
        "second_form": second,
        "shape": shape,
        "det_shape": np.linalg.det(shape),
        "area_weight": area_weight,
    }


def geometry_at(spec: HypersurfaceSpec, chart_coords, chart: int = 0) -> SurfacePoint:
    """Scalar convenience wrapper around ``chart_frames``."""
    coords = np.asarray(chart_coords, dtype=float)[None, :]
    f = chart_frames(spec, chart, coords)
    return SurfacePoint(
        chart=chart,
        chart_coords=coords[0],
        position=f["position"][0],
        normal=f["normal"][0],
        shape_operator=SymForm(f["shape"][0]),
        area_weight=float(f["area_weight"][0]),
    )


def _sphere_chart_density(coords: np.ndarray, d: int) -> np.ndarray:
    """Round-sphere area density of a stereographic chart of S^d."""
    s = np.sum(coords ** 2, axis=1)
    return (2.0 / (1.0 + s)) ** d


def sample_frames(spec: HypersurfaceSpec, num_samples: int, rng) -> tuple:
    """Draw points uniformly on the parameter manifold and return
    (frames, jrel, total_measure) such that the surface integral of any
    pointwise quantity f equals total_measure * mean(f * jrel).
    """
    n = spec.n
    if spec.family == TUBE:
        theta = rng.uniform(0.0, 2.0 * np.pi, num_samples)
        omega = rng.normal(size=(num_samples, n))
        omega /= np.linalg.norm(omega, axis=1, keepdims=True)
        chart, v = chart_from_sphere(omega)
        coords = np.column_stack([theta, v])
        base_density = _sphere_chart_density(v, n - 1)
        total = 2.0 * np.pi * vol_sphere(n - 1)
    else:
        x = rng.normal(size=(num_samples, n + 1))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        chart, coords = chart_from_sphere(x)
        base_density = _sphere_chart_density(coords, n)
        total = vol_sphere(n)

    frames = {}
    jrel = np.empty(num_samples)
    order = np.arange(num_samples)
    for c in (0, 1):
        mask = chart == c
        if not np.any(mask):
            continue
        f = chart_frames(spec, c, coords[mask])
        jrel[mask] = f["area_weight"] / base_density[mask]
        for key, value in f.items():
            if key not in frames:
                shape = (num_samples,) + value.shape[1:]
                frames[key] = np.empty(shape)
            frames[key][mask] = value
    frames["chart"] = chart
    frames["coords"] = coords
    _ = order
    return frames, jrel, total
