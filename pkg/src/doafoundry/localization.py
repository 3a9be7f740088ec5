"""3D AOA emitter localization from per-subarray bearing measurements.

Each subarray contributes two planes through its position, both containing
the measured bearing ray: a vertical plane fixed by the azimuth and a
tilted plane fixed by the elevation.  The emitter position minimizes the
sum of absolute point-plane distances, a convex problem solved either by
its linear-programming reformulation or by iteratively reweighted least
squares.  In the planar three-bearing picture the minimum-distance-sum
point is classically identified with the incenter of the bearing-line
triangle, so that special case ships as its own closed-form operation.

Angle convention: azimuth rotates about +z starting at +x; elevation is
measured from the horizontal plane.  A target on the +x axis of a sensor
has azimuth 0 and elevation 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DegeneratePlaneError,
    NoTriangleError,
    SolverFailedError,
    UnidentifiableError,
)

IRLS_EPSILON = 1e-9
IRLS_OBJECTIVE_TOL = 1e-10
IRLS_MAX_ITERATIONS = 500


@dataclass
class BearingMeasurement:
    subarray_origin: np.ndarray
    azimuth_deg: float
    elevation_deg: float
    angle_variance_deg2: float

    def __post_init__(self):
        self.subarray_origin = np.asarray(self.subarray_origin, dtype=float)
        if self.subarray_origin.shape != (3,):
            raise ValueError("subarray origin must be a 3-vector")
        if not -90.0 < self.elevation_deg < 90.0:
            raise ValueError("elevation must lie in (-90, 90)")
        if not -180.0 < self.azimuth_deg <= 180.0:
            raise ValueError("azimuth must lie in (-180, 180]")


@dataclass
class PlaneSet:
    """Stacked unit-normal plane equations ``A u = b`` (rows are metric)."""

    A: np.ndarray
    b: np.ndarray
    provenance: list

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.A.ndim != 2 or self.A.shape[1] != 3:
            raise ValueError("A must be R x 3")
        if self.b.shape != (self.A.shape[0],):
            raise ValueError("b length must match the row count of A")
        norms = np.linalg.norm(self.A, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("every plane normal must have unit norm")

    def residuals(self, u) -> np.ndarray:
        return self.A @ np.asarray(u, dtype=float) - self.b

    def objective(self, u) -> float:
        return float(np.sum(np.abs(self.residuals(u))))


@dataclass
class PositionEstimate:
    u: np.ndarray
    objective: float
    solver: str
    iterations: int

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.objective < 0:
            raise ValueError("objective must be nonnegative")


def bearing_angles(target, origin) -> tuple[float, float]:
    """Geometric (azimuth, elevation) in degrees from origin to target."""
    d = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    az = math.degrees(math.atan2(d[1], d[0]))
    el = math.degrees(math.atan2(d[2], math.hypot(d[0], d[1])))
    return az, el


def simulate_bearings(
    true_position, subarray_origins, angle_sigma_deg: float, seed
) -> list[BearingMeasurement]:
    """Exact geometric bearings plus independent Gaussian angle noise."""
    rng = np.random.default_rng(seed)
    target = np.asarray(true_position, dtype=float)
    out = []
    for origin in subarray_origins:
        origin = np.asarray(origin, dtype=float)
        if np.allclose(origin, target):
            raise ValueError("target coincides with a subarray origin")
        az, el = bearing_angles(target, origin)
        az += angle_sigma_deg * rng.standard_normal()
        el += angle_sigma_deg * rng.standard_normal()
        az = (az + 180.0) % 360.0 - 180.0
        out.append(
            BearingMeasurement(origin, az, min(max(el, -89.99), 89.99), angle_sigma_deg**2)
        )
    return out


def build_planes(measurements) -> PlaneSet:
    """Two unit-normal planes per bearing, both containing the ray.

    Azimuth plane: vertical, normal ``(-sin az, cos az, 0)``.  Elevation
    plane: contains the ray, normal orthogonal to it within the vertical
    plane, ``(-sin el cos az, -sin el sin az, cos el)``.
    """
    if len(measurements) < 2:
        raise ValueError("need at least two bearing measurements")
    rows, b, provenance = [], [], []
    for idx, meas in enumerate(measurements):
        if abs(meas.elevation_deg) >= 89.9995:
            raise DegeneratePlaneError("vertical bearing defines no azimuth plane")
        az = math.radians(meas.azimuth_deg)
        el = math.radians(meas.elevation_deg)
        n_az = np.array([-math.sin(az), math.cos(az), 0.0])
        n_el = np.array(
            [
                -math.sin(el) * math.cos(az),
                -math.sin(el) * math.sin(az),
                math.cos(el),
            ]
        )
        for n, tag in ((n_az, "azimuth-plane"), (n_el, "elevation-plane")):
            rows.append(n)
            b.append(float(n @ meas.subarray_origin))
            provenance.append((idx, tag))
    return PlaneSet(np.array(rows), np.array(b), provenance)


def _least_squares_seed(planes: PlaneSet) -> np.ndarray:
    u, *_ = np.linalg.lstsq(planes.A, planes.b, rcond=None)
    return u


def _vertex_polish(planes: PlaneSet, u: np.ndarray, seed_pt: np.ndarray) -> np.ndarray:
    """Exact final step: the optimum of a full-rank L1 fit lies where three
    residuals vanish, so enumerate plane triples near the iterate and keep
    the best vertex.  Ties go to the vertex nearest the least-squares seed.
    """
    rows = planes.A.shape[0]
    order = np.argsort(np.abs(planes.residuals(u)))
    active = order[: min(rows, 6)]
    best_u, best_obj = u, planes.objective(u)
    best_dist = float(np.linalg.norm(u - seed_pt))
    for i in range(len(active)):
        for j in range(i + 1, len(active)):
            for k in range(j + 1, len(active)):
                sel = planes.A[[active[i], active[j], active[k]]]
                if abs(np.linalg.det(sel)) < 1e-12:
                    continue
                cand = np.linalg.solve(
                    sel, planes.b[[active[i], active[j], active[k]]]
                )
                obj = planes.objective(cand)
                dist = float(np.linalg.norm(cand - seed_pt))
                if obj < best_obj - 1e-12 or (
                    abs(obj - best_obj) <= 1e-12 and dist < best_dist
                ):
                    best_u, best_obj, best_dist = cand, obj, dist
    return best_u


def _solve_irls(planes: PlaneSet) -> PositionEstimate:
    seed_pt = _least_squares_seed(planes)
    u = seed_pt
    prev = planes.objective(u)
    best_obj = prev
    # anneal the smoothing floor; a fixed tiny floor identifies the active
    # planes painfully slowly when the geometry is nearly degenerate
    scale = max(np.max(np.abs(planes.residuals(u))), 1.0)
    eps_schedule = []
    eps = 1e-3 * scale
    while eps > IRLS_EPSILON:
        eps_schedule.append(eps)
        eps = eps / 100.0
    eps_schedule.append(IRLS_EPSILON)
    iterations = 0
    for eps in eps_schedule:
        stalled = 0
        # a stage that exhausts its budget hands over to the next one; the
        # closing vertex enumeration settles the exact optimum either way
        for _ in range(IRLS_MAX_ITERATIONS):
            iterations += 1
            r = planes.residuals(u)
            sw = 1.0 / np.sqrt(np.maximum(np.abs(r), eps))
            u = np.linalg.lstsq(planes.A * sw[:, None], planes.b * sw, rcond=None)[0]
            obj = planes.objective(u)
            if abs(prev - obj) < IRLS_OBJECTIVE_TOL:
                prev = obj
                break
            stalled = stalled + 1 if obj > best_obj - IRLS_OBJECTIVE_TOL else 0
            best_obj = min(best_obj, obj)
            prev = obj
            if stalled >= 50:  # numerical jitter floor reached
                break
    if not np.all(np.isfinite(u)):
        raise SolverFailedError(
            "IRLS produced a non-finite iterate",
            best=PositionEstimate(seed_pt, planes.objective(seed_pt), "IRLS", iterations),
        )
    u = _vertex_polish(planes, u, seed_pt)
    return PositionEstimate(u, planes.objective(u), "IRLS", iterations)


def _solve_lp(planes: PlaneSet) -> PositionEstimate:
    # min sum t  s.t.  -t <= A u - b <= t, via variables [u, t]
    rows = planes.A.shape[0]
    c = np.concatenate([np.zeros(3), np.ones(rows)])
    eye = np.eye(rows)
    a_ub = np.block([[planes.A, -eye], [-planes.A, -eye]])
    b_ub = np.concatenate([planes.b, -planes.b])
    bounds = [(None, None)] * 3 + [(0, None)] * rows
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise SolverFailedError(f"LP solver failed: {res.message}")
    u = res.x[:3]
    return PositionEstimate(u, planes.objective(u), "LP", int(res.nit))


def solve_l1(planes: PlaneSet, solver: str = "irls") -> PositionEstimate:
    """Minimize the summed absolute plane distances ``||A u - b||_1``.

    ``solver="irls"`` (default) starts from the least-squares seed and is
    the canonical tie-break when the optimum is not unique; ``"lp"`` is the
    linear-programming reformulation.  Both agree on non-degenerate inputs.
    """
    if np.linalg.matrix_rank(planes.A) < 3:
        raise UnidentifiableError("plane normals do not span 3-space")
    if solver == "irls":
        return _solve_irls(planes)
    if solver == "lp":
        return _solve_lp(planes)
    raise ValueError(f"unknown solver {solver!r}")


def incenter_2d(lines) -> np.ndarray:
    """Incenter of the triangle formed by three planar lines.

    Lines are ``(point, direction)`` pairs.  The incenter weights each
    vertex by the length of its opposite side.
    """
    if len(lines) != 3:
        raise ValueError("exactly three lines required")
    pts = [np.asarray(p, dtype=float) for p, _ in lines]
    dirs = [np.asarray(d, dtype=float) for _, d in lines]

    def intersect(i, j):
        cross = dirs[i][0] * dirs[j][1] - dirs[i][1] * dirs[j][0]
        if abs(cross) < 1e-12 * np.linalg.norm(dirs[i]) * np.linalg.norm(dirs[j]):
            raise NoTriangleError("two bearing lines are parallel")
        rhs = pts[j] - pts[i]
        t = (rhs[0] * dirs[j][1] - rhs[1] * dirs[j][0]) / cross
        return pts[i] + t * dirs[i]

    # vertex k is opposite line k
    v0 = intersect(1, 2)
    v1 = intersect(0, 2)
    v2 = intersect(0, 1)
    a = np.linalg.norm(v1 - v2)
    b = np.linalg.norm(v0 - v2)
    c = np.linalg.norm(v0 - v1)
    return (a * v0 + b * v1 + c * v2) / (a + b + c)


def rmse(estimates, truth) -> float:
    """Root mean squared deviation; Euclidean for points, scalar for angles."""
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size == 0:
        raise ValueError("need at least one estimate")
    truth = np.asarray(truth, dtype=float)
    if estimates.ndim == 1:
        sq = (estimates - truth) ** 2
    else:
        sq = np.sum((estimates - truth[None, :]) ** 2, axis=1)
    return float(np.sqrt(np.mean(sq)))


@dataclass
class PositionBound:
    matrix: np.ndarray  # 3x3 covariance lower bound, m^2
    trace_m2: float

    @property
    def rmse_m(self) -> float:
        return math.sqrt(self.trace_m2)


def crlb_position(
    subarray_origins, true_position, angle_variance_deg2: float, step_m: float = 1e-5
) -> PositionBound:
    """Position bound from the bearing Jacobian under Gaussian angle noise.

    The Jacobian of (azimuth, elevation) with respect to position is taken
    by central differences with ``step_m`` spacing; the information matrix
    sums ``J^T J / variance`` over measurements.
    """
    target = np.asarray(true_position, dtype=float)
    fim = np.zeros((3, 3))
    for origin in subarray_origins:
        jac = np.zeros((2, 3))
        for k in range(3):
            tp, tm = target.copy(), target.copy()
            tp[k] += step_m
            tm[k] -= step_m
            azp, elp = bearing_angles(tp, origin)
            azm, elm = bearing_angles(tm, origin)
            daz = (azp - azm + 180.0) % 360.0 - 180.0
            jac[0, k] = daz / (2 * step_m)
            jac[1, k] = (elp - elm) / (2 * step_m)
        fim += jac.T @ jac / angle_variance_deg2
    eigvals = np.linalg.eigvalsh(fim)
    if eigvals.min() <= eigvals.max() * 1e-12:
        raise UnidentifiableError("bearing geometry is unidentifiable")
    cov = np.linalg.inv(fim)
    return PositionBound(cov, float(np.trace(cov)))


def localization_pipeline(
    true_position, subarray_origins, angle_sigma_deg: float, seed, solver: str = "irls"
) -> PositionEstimate:
    """simulate -> build planes -> solve, in one call (one Monte Carlo trial)."""
    meas = simulate_bearings(true_position, subarray_origins, angle_sigma_deg, seed)
    return solve_l1(build_planes(meas), solver=solver)
