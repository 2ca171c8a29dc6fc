"""Constant-curvature hyperbolic space H^n, its boundary, and parabolic actions.

Two models are supported and converted freely: the upper half-space
{x in R^n : x_n > 0} with base point o = (0, ..., 0, 1), and the unit ball
with base point 0.  The conversion is the inversion J(x) = -e_n +
2(x + e_n)/|x + e_n|^2, an involution exchanging the models and the base
points; on the boundary it restricts to the stereographic pair
u -> (2u, 1 - |u|^2)/(1 + |u|^2) and infinity -> -e_n.

Busemann functions use the convention
    B_xi(p, q) = lim_t [d(p, alpha(t)) - d(q, alpha(t))],  alpha(t) -> xi,
so B is positive when q sits deeper toward xi than p.  Gromov products are
computed at the closest point of the connecting geodesic, which the Busemann
cocycle identity makes equal to the value at any other point of the geodesic.

Only parabolic isometries are implemented: horizontal translations of the
half-space fixing infinity.  Orbits of boundary points map to the ball-model
sphere for box-counting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxdim import PointCloud
from .numerics import acosh1p

__all__ = [
    "HALF_SPACE",
    "BALL",
    "HyperbolicPoint",
    "BoundaryPoint",
    "ParabolicGroupSpec",
    "TriangleComparisonReport",
    "half_space_point",
    "ball_point",
    "base_point",
    "boundary_plane_point",
    "boundary_infinity",
    "boundary_sphere_point",
    "to_ball",
    "to_half_space",
    "distance",
    "busemann",
    "gromov_product",
    "point_on_boundary_geodesic",
    "bourdon_metric",
    "spherical_metric",
    "translate",
    "orbit_distance",
    "parabolic_orbit",
    "comparison_triangle_check",
]

HALF_SPACE = "upper-half-space"
BALL = "ball"
_MODEL_TOL = 1e-12


def _readonly(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class HyperbolicPoint:
    """Interior point of H^n in one of the two models."""

    model: str
    coords: np.ndarray

    def __post_init__(self):
        coords = _readonly(self.coords)
        if coords.ndim != 1 or coords.size < 2:
            raise ValueError("hyperbolic points need at least 2 coordinates")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        if self.model == HALF_SPACE:
            if coords[-1] <= _MODEL_TOL:
                raise ValueError("half-space points need a positive last coordinate")
        elif self.model == BALL:
            if np.dot(coords, coords) >= 1.0 - _MODEL_TOL:
                raise ValueError("ball points must have norm < 1")
        else:
            raise ValueError(f"unknown model {self.model!r}")
        object.__setattr__(self, "coords", coords)

    @property
    def ambient(self) -> int:
        return self.coords.size

    @property
    def height(self) -> float:
        if self.model != HALF_SPACE:
            raise ValueError("height is a half-space notion")
        return float(self.coords[-1])

    @property
    def horizontal(self) -> np.ndarray:
        if self.model != HALF_SPACE:
            raise ValueError("horizontal part is a half-space notion")
        return self.coords[:-1]


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    """Point of the boundary sphere of H^n.

    Half-space model: a point u of the boundary plane R^{n-1}, or infinity.
    Ball model: a unit vector of R^n.
    """

    model: str
    coords: np.ndarray | None = None
    at_infinity: bool = False

    def __post_init__(self):
        if self.model == HALF_SPACE:
            if self.at_infinity:
                if self.coords is not None:
                    raise ValueError("infinity carries no coordinates")
                return
            coords = _readonly(self.coords)
            if coords.ndim != 1 or coords.size < 1:
                raise ValueError("boundary plane points need at least 1 coordinate")
        elif self.model == BALL:
            if self.at_infinity:
                raise ValueError("the ball model has no infinity flag")
            coords = _readonly(self.coords)
            if coords.ndim != 1 or coords.size < 2:
                raise ValueError("ball boundary points need at least 2 coordinates")
            if abs(np.dot(coords, coords) - 1.0) > _MODEL_TOL:
                raise ValueError("ball boundary points must be unit vectors")
        else:
            raise ValueError(f"unknown model {self.model!r}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    @property
    def ambient(self) -> int:
        if self.model == BALL:
            return self.coords.size
        if self.at_infinity:
            raise ValueError("infinity does not determine the dimension")
        return self.coords.size + 1


def half_space_point(coords) -> HyperbolicPoint:
    return HyperbolicPoint(HALF_SPACE, np.asarray(coords, dtype=float))


def ball_point(coords) -> HyperbolicPoint:
    return HyperbolicPoint(BALL, np.asarray(coords, dtype=float))


def base_point(model: str, ambient: int) -> HyperbolicPoint:
    """Reference point o: (0, ..., 0, 1) in the half-space, 0 in the ball."""
    if ambient < 2:
        raise ValueError("ambient dimension must be >= 2")
    coords = np.zeros(ambient)
    if model == HALF_SPACE:
        coords[-1] = 1.0
    return HyperbolicPoint(model, coords)


def boundary_plane_point(u) -> BoundaryPoint:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return BoundaryPoint(HALF_SPACE, u)


def boundary_infinity() -> BoundaryPoint:
    return BoundaryPoint(HALF_SPACE, None, at_infinity=True)


def boundary_sphere_point(v) -> BoundaryPoint:
    return BoundaryPoint(BALL, np.asarray(v, dtype=float))


def _invert(x: np.ndarray) -> np.ndarray:
    """J(x) = -e_n + 2(x + e_n)/|x + e_n|^2, the model-swapping involution."""
    y = x.copy()
    y[-1] += 1.0
    nn = float(np.dot(y, y))
    if nn == 0.0:
        raise ValueError("inversion pole")
    y *= 2.0 / nn
    y[-1] -= 1.0
    return y


def to_half_space(obj):
    """Convert a point or boundary point to the half-space model."""
    if isinstance(obj, HyperbolicPoint):
        if obj.model == HALF_SPACE:
            return obj
        return HyperbolicPoint(HALF_SPACE, _invert(obj.coords))
    if isinstance(obj, BoundaryPoint):
        if obj.model == HALF_SPACE:
            return obj
        v = obj.coords
        denom = 1.0 + float(v[-1])
        if denom <= _MODEL_TOL:
            return boundary_infinity()
        return BoundaryPoint(HALF_SPACE, v[:-1] / denom)
    raise TypeError("expected a HyperbolicPoint or BoundaryPoint")


def to_ball(obj):
    """Convert a point or boundary point to the ball model."""
    if isinstance(obj, HyperbolicPoint):
        if obj.model == BALL:
            return obj
        return HyperbolicPoint(BALL, _invert(obj.coords))
    if isinstance(obj, BoundaryPoint):
        if obj.model == BALL:
            return obj
        if obj.at_infinity:
            raise ValueError("converting infinity needs an ambient dimension; "
                             "use boundary_sphere_point on -e_n directly")
        u = obj.coords
        nn = float(np.dot(u, u))
        out = np.empty(u.size + 1)
        out[:-1] = 2.0 * u
        out[-1] = 1.0 - nn
        out /= 1.0 + nn
        return BoundaryPoint(BALL, out)
    raise TypeError("expected a HyperbolicPoint or BoundaryPoint")


def _as_pair_half_space(p: HyperbolicPoint, q: HyperbolicPoint):
    if p.ambient != q.ambient:
        raise ValueError("points live in different dimensions")
    if p.model == q.model == BALL:
        return p, q, BALL
    return to_half_space(p), to_half_space(q), HALF_SPACE


def distance(p: HyperbolicPoint, q: HyperbolicPoint) -> float:
    """Hyperbolic distance; models are aligned automatically.

    Half-space: arccosh(1 + |p-q|^2 / (2 p_n q_n)); ball:
    arccosh(1 + 2|p-q|^2 / ((1-|p|^2)(1-|q|^2))).  Both evaluate through
    acosh1p for full relative accuracy at small separations.
    """
    p2, q2, model = _as_pair_half_space(p, q)
    diff = p2.coords - q2.coords
    d2 = float(np.dot(diff, diff))
    if model == HALF_SPACE:
        return acosh1p(d2 / (2.0 * p2.coords[-1] * q2.coords[-1]))
    wp = 1.0 - float(np.dot(p2.coords, p2.coords))
    wq = 1.0 - float(np.dot(q2.coords, q2.coords))
    return acosh1p(2.0 * d2 / (wp * wq))


def _busemann_half_space(xi: BoundaryPoint, p: HyperbolicPoint, q: HyperbolicPoint) -> float:
    pn = p.coords[-1]
    qn = q.coords[-1]
    if xi.at_infinity:
        return math.log(qn / pn)
    u = xi.coords
    if u.size != p.ambient - 1:
        raise ValueError("boundary point dimension mismatch")
    dp = p.coords[:-1] - u
    dq = q.coords[:-1] - u
    np2 = float(np.dot(dp, dp)) + pn * pn
    nq2 = float(np.dot(dq, dq)) + qn * qn
    if np2 == 0.0 or nq2 == 0.0:
        raise ValueError("Busemann denominator vanishes at the boundary point")
    return math.log(np2 / pn) - math.log(nq2 / qn)


def busemann(xi: BoundaryPoint, p: HyperbolicPoint, q: HyperbolicPoint) -> float:
    """B_xi(p, q) = lim_t [d(p, alpha(t)) - d(q, alpha(t))] with alpha -> xi.

    Closed forms in the half-space: log(q_n/p_n) for xi = infinity, and
    log[(|p-u|^2/p_n) * (q_n/|q-u|^2)] for a finite boundary point u (the
    norms taken in R^n with u embedded at height 0).  Ball-model inputs are
    converted first.  B is a cocycle in (p, q) and bounded by distance.
    """
    if p.ambient != q.ambient:
        raise ValueError("points live in different dimensions")
    return _busemann_half_space(to_half_space(xi), to_half_space(p), to_half_space(q))


def _same_boundary(xi: BoundaryPoint, eta: BoundaryPoint) -> bool:
    if xi.at_infinity or eta.at_infinity:
        return xi.at_infinity and eta.at_infinity
    if xi.coords.size != eta.coords.size:
        return False
    return bool(np.array_equal(xi.coords, eta.coords))


def _closest_on_geodesic(xi: BoundaryPoint, eta: BoundaryPoint,
                         p: HyperbolicPoint) -> HyperbolicPoint:
    """Closest point of the geodesic (xi, eta) to p, all in the half-space.

    Vertical line over u (one endpoint at infinity): the minimum of
    cosh d sits at height h = |p - (u, 0)|.  Semicircle with center c and
    radius R: with beta = (p_x - c) . e and A = |p_x - c|^2 + R^2 + p_n^2,
    minimizing cosh d over the angle gives cos(theta*) = 2 R beta / A,
    which always lies in (-1, 1) for interior p.
    """
    px = p.coords[:-1]
    pn = p.coords[-1]
    if xi.at_infinity or eta.at_infinity:
        u = eta.coords if xi.at_infinity else xi.coords
        du = px - u
        h = math.sqrt(float(np.dot(du, du)) + pn * pn)
        return HyperbolicPoint(HALF_SPACE, np.append(u, h))
    u = xi.coords
    v = eta.coords
    chord = v - u
    width = float(np.linalg.norm(chord))
    c = 0.5 * (u + v)
    radius = 0.5 * width
    e = chord / width
    beta = float(np.dot(px - c, e))
    amp = float(np.dot(px - c, px - c)) + radius * radius + pn * pn
    cos_t = 2.0 * radius * beta / amp
    sin_t = math.sqrt(max(1.0 - cos_t * cos_t, 0.0))
    return HyperbolicPoint(HALF_SPACE, np.append(c + radius * cos_t * e, radius * sin_t))


def point_on_boundary_geodesic(xi: BoundaryPoint, eta: BoundaryPoint, s: float) -> HyperbolicPoint:
    """A half-space point of the geodesic (xi, eta), parameterized by s in (0,1).

    Semicircles use the angle theta = pi*(1-s); vertical lines the height
    s/(1-s).  Intended for z-independence checks of the Gromov product.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie strictly between 0 and 1")
    xi = to_half_space(xi)
    eta = to_half_space(eta)
    if _same_boundary(xi, eta):
        raise ValueError("boundary points coincide; no geodesic")
    if xi.at_infinity or eta.at_infinity:
        u = eta.coords if xi.at_infinity else xi.coords
        return HyperbolicPoint(HALF_SPACE, np.append(u, s / (1.0 - s)))
    u = xi.coords
    v = eta.coords
    c = 0.5 * (u + v)
    radius = 0.5 * float(np.linalg.norm(v - u))
    e = (v - u) / (2.0 * radius)
    theta = math.pi * (1.0 - s)
    return HyperbolicPoint(
        HALF_SPACE, np.append(c + radius * math.cos(theta) * e, radius * math.sin(theta))
    )


def gromov_product(xi: BoundaryPoint, eta: BoundaryPoint, base: HyperbolicPoint,
                   z: HyperbolicPoint | None = None) -> float:
    """(xi|eta)_base = [B_xi(base, z) + B_eta(base, z)] / 2.

    z defaults to the closest point of the geodesic (xi, eta) to the base;
    the value does not depend on which point of the geodesic is used (an
    exact consequence of the Busemann cocycle), so callers may pass any
    other z from point_on_boundary_geodesic to cross-check.
    """
    xi_h = to_half_space(xi)
    eta_h = to_half_space(eta)
    if _same_boundary(xi_h, eta_h):
        raise ValueError("boundary points coincide; the Gromov product is +infinity")
    base_h = to_half_space(base)
    z_h = _closest_on_geodesic(xi_h, eta_h, base_h) if z is None else to_half_space(z)
    return 0.5 * (_busemann_half_space(xi_h, base_h, z_h)
                  + _busemann_half_space(eta_h, base_h, z_h))


def bourdon_metric(xi: BoundaryPoint, eta: BoundaryPoint, base: HyperbolicPoint) -> float:
    """Boundary metric e^{-(xi|eta)_base}; 0 for equal points.

    With the ball origin as base this takes values in [0, 1] and equals
    sin of half the angle subtended at the origin.
    """
    xi_h = to_half_space(xi)
    eta_h = to_half_space(eta)
    if _same_boundary(xi_h, eta_h):
        return 0.0
    return math.exp(-gromov_product(xi_h, eta_h, base))


def spherical_metric(xi: BoundaryPoint, eta: BoundaryPoint) -> float:
    """Angle metric on the ball boundary: arccos of the dot product."""
    if xi.model != BALL or eta.model != BALL:
        raise ValueError("the spherical metric needs ball-model boundary points")
    if xi.coords.size != eta.coords.size:
        raise ValueError("boundary point dimension mismatch")
    return math.acos(min(1.0, max(-1.0, float(np.dot(xi.coords, eta.coords)))))


@dataclass(frozen=True, eq=False)
class ParabolicGroupSpec:
    """Rank-k group of horizontal translations of the upper half-space H^n.

    Generators translate by linearly independent vectors alpha_1..alpha_k of
    the boundary plane R^{n-1}; every element fixes infinity and preserves
    the horospheres x_n = const.
    """

    ambient: int
    rank: int
    alphas: np.ndarray

    def __post_init__(self):
        if self.ambient < 2:
            raise ValueError("ambient dimension must be >= 2")
        if not 1 <= self.rank <= self.ambient - 1:
            raise ValueError("rank must lie in [1, ambient-1]")
        alphas = np.array(self.alphas, dtype=float)
        alphas = np.atleast_2d(alphas)
        if alphas.shape != (self.rank, self.ambient - 1):
            raise ValueError(
                f"need {self.rank} translation vectors of length {self.ambient - 1}, "
                f"got shape {alphas.shape}"
            )
        sing = np.linalg.svd(alphas, compute_uv=False)
        if sing.size < self.rank or sing[self.rank - 1] <= 1e-12 * max(1.0, sing[0]):
            raise ValueError("translation vectors must be linearly independent")
        alphas.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "_sigma_min", float(sing[self.rank - 1]))
        object.__setattr__(self, "_sigma_max", float(sing[0]))

    @property
    def sigma_min(self) -> float:
        return self._sigma_min

    @property
    def sigma_max(self) -> float:
        return self._sigma_max

    @property
    def fixed_point(self) -> BoundaryPoint:
        return boundary_infinity()

    def displacement(self, coeffs) -> np.ndarray:
        """Translation vector sum_i coeffs_i alpha_i in the boundary plane."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.rank,):
            raise ValueError(f"need {self.rank} coefficients")
        return coeffs @ self.alphas


def translate(group: ParabolicGroupSpec, coeffs, obj):
    """Apply the group element with lattice coordinates coeffs.

    Acts on interior points (any model; the model is preserved) and on
    boundary points; infinity is fixed.
    """
    v = group.displacement(coeffs)
    if isinstance(obj, HyperbolicPoint):
        if obj.ambient != group.ambient:
            raise ValueError("point dimension does not match the group")
        if obj.model == BALL:
            return to_ball(translate(group, coeffs, to_half_space(obj)))
        out = obj.coords.copy()
        out[:-1] += v
        return HyperbolicPoint(HALF_SPACE, out)
    if isinstance(obj, BoundaryPoint):
        if obj.model == BALL:
            return to_ball(translate(group, coeffs, to_half_space(obj)))
        if obj.at_infinity:
            return obj
        if obj.coords.size != group.ambient - 1:
            raise ValueError("boundary point dimension does not match the group")
        return BoundaryPoint(HALF_SPACE, obj.coords + v)
    raise TypeError("expected a HyperbolicPoint or BoundaryPoint")


def orbit_distance(group: ParabolicGroupSpec, coeffs) -> float:
    """d(o, N.o) = 2 arcsinh(|sum_i N_i alpha_i| / 2) at the base o."""
    v = group.displacement(coeffs)
    return 2.0 * math.asinh(0.5 * float(np.linalg.norm(v)))


def _lattice_grid(rank: int, radius: int) -> np.ndarray:
    """All N in Z^rank with |N|_inf <= radius, lexicographic order."""
    axes = [np.arange(-radius, radius + 1, dtype=np.int64)] * rank
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def parabolic_orbit(group: ParabolicGroupSpec, xi: BoundaryPoint, radius: int) -> PointCloud:
    """Orbit {N.xi : |N|_inf <= radius} as a ball-model sphere cloud.

    The plane points xi + sum N_i alpha_i are pushed to the unit sphere by
    u -> (2u, 1-|u|^2)/(1+|u|^2); the cloud accumulates at the image -e_n of
    the fixed point.  Points are deduplicated; the label records the build.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    xi = to_half_space(xi)
    if xi.at_infinity:
        raise ValueError("xi is fixed by P")
    if xi.coords.size != group.ambient - 1:
        raise ValueError("boundary point dimension does not match the group")
    lattice = _lattice_grid(group.rank, radius).astype(float)
    plane = xi.coords[None, :] + lattice @ group.alphas
    nn = np.einsum("ij,ij->i", plane, plane)
    scale = 1.0 / (1.0 + nn)
    sphere = np.empty((plane.shape[0], group.ambient))
    sphere[:, :-1] = 2.0 * plane * scale[:, None]
    sphere[:, -1] = (1.0 - nn) * scale
    label = f"parabolic-orbit(ambient={group.ambient}, rank={group.rank}, radius={radius})"
    return PointCloud(sphere, "sphere", label)


@dataclass(frozen=True)
class TriangleComparisonReport:
    """Reverse-triangle slack of a geodesic triangle with a wide angle.

    slack = d(x,y) - d(z,x) - d(z,y) is always <= 0; when the angle at z is
    at least D the slack is bounded below by -C(D) with
    C(D) = 2 log(2 / (1 - cos D)).  The asymptotically exact constant (long
    sides) is log(2/(1-cos D)); the reported C doubles it, a documented
    sufficient margin rather than a sharp one.
    """

    side_xy: float
    side_zx: float
    side_zy: float
    angle_at_z: float
    min_angle: float
    slack: float
    constant: float
    passed: bool


def comparison_triangle_check(x: HyperbolicPoint, y: HyperbolicPoint,
                              z: HyperbolicPoint, min_angle: float) -> TriangleComparisonReport:
    """Check d(x,y) >= d(z,x) + d(z,y) - C at a vertex of angle >= min_angle.

    The angle at z comes from the hyperbolic law of cosines
    cos(angle) = (cosh a cosh b - cosh c) / (sinh a sinh b) with a = d(z,x),
    b = d(z,y), c = d(x,y).  Degenerate triangles (a side collapses) and
    angles below min_angle are rejected.
    """
    if not 0.0 < min_angle <= math.pi:
        raise ValueError("min_angle must lie in (0, pi]")
    a = distance(z, x)
    b = distance(z, y)
    c = distance(x, y)
    if min(a, b) < 1e-12:
        raise ValueError("degenerate triangle: a vertex pair coincides")
    cos_angle = (math.cosh(a) * math.cosh(b) - math.cosh(c)) / (math.sinh(a) * math.sinh(b))
    angle = math.acos(min(1.0, max(-1.0, cos_angle)))
    if angle < min_angle:
        raise ValueError(f"angle at z is {angle:.6f}, below the required {min_angle:.6f}")
    slack = c - a - b
    constant = 2.0 * math.log(2.0 / (1.0 - math.cos(min_angle)))
    return TriangleComparisonReport(
        side_xy=c, side_zx=a, side_zy=b, angle_at_z=angle, min_angle=min_angle,
        slack=slack, constant=constant, passed=slack >= -constant,
    )
