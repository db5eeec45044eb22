"""CMM measurement processing.

Balls fixed to the platform are probed point by point, each ball centre is
recovered with a sphere fit, and the three centres locate the platform
frame through a relation stored once (ball positions in the platform
frame).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    CollinearBallsError,
    DegeneratePointsError,
    NoConvergenceError,
    ShapeMismatchError,
)
from .geometry import Transform3D, inverse

DEFAULT_POINTS_PER_BALL = 9
DEFAULT_CONGRUENCE_TOL = 0.025  # mm
MIN_TRIANGLE_AREA = 1.0  # mm^2


class SphereFit(NamedTuple):
    center: np.ndarray
    radius: float
    rms_residual: float


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DegeneratePointsError(f"expected an (n, 3) array of points, got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DegeneratePointsError("probe points must be finite")
    return pts


def _geometric_residual(pts, center, radius):
    return np.linalg.norm(pts - center, axis=1) - radius


def fit_sphere_algebraic(points) -> tuple[np.ndarray, float]:
    """Linear least-squares sphere: solves |p|^2 = 2 c.p + (r^2 - |c|^2)."""
    pts = _as_points(points)
    shift = pts.mean(axis=0)
    local = pts - shift
    design = np.column_stack([2.0 * local, np.ones(len(local))])
    rhs = np.sum(local**2, axis=1)
    sol, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    center = sol[:3]
    r2 = sol[3] + center @ center
    if r2 <= 0.0:
        raise DegeneratePointsError("algebraic fit produced a non-positive squared radius")
    return center + shift, float(np.sqrt(r2))


def fit_sphere(points, max_iter: int = 100, coplanar_tol: float = 1e-9) -> SphereFit:
    """Fit a sphere to probe points (mm).

    The algebraic solution seeds a Gauss-Newton refinement of the geometric
    residual ``|p - c| - r``. Steps are halved whenever they would increase
    the sum of squared residuals, so the refinement is monotone.

    Raises:
        DegeneratePointsError: fewer than four points, or all of them within
            ``coplanar_tol`` of a common plane.
        NoConvergenceError: the refinement did not settle in ``max_iter``.
    """
    pts = _as_points(points)
    if len(pts) < 4:
        raise DegeneratePointsError(f"need at least 4 points, got {len(pts)}")
    centred = pts - pts.mean(axis=0)
    normal = np.linalg.svd(centred, full_matrices=False)[2][-1]
    if np.max(np.abs(centred @ normal)) <= coplanar_tol:
        raise DegeneratePointsError("probe points are coplanar")

    center, radius = fit_sphere_algebraic(pts)
    res = _geometric_residual(pts, center, radius)
    cost = res @ res
    scale = max(radius, 1.0)
    for _ in range(max_iter):
        diff = pts - center
        dist = np.linalg.norm(diff, axis=1)
        jac = np.column_stack([-diff / dist[:, None], -np.ones(len(pts))])
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        damping = 1.0
        while damping > 1e-8:
            c_new = center + damping * step[:3]
            r_new = radius + damping * step[3]
            res_new = _geometric_residual(pts, c_new, r_new)
            cost_new = res_new @ res_new
            if cost_new <= cost:
                break
            damping *= 0.5
        else:
            break  # no descent left: at the minimum to round-off
        center, radius, res, cost = c_new, r_new, res_new, cost_new
        if np.linalg.norm(damping * step) <= 1e-14 * scale:
            break
    else:
        raise NoConvergenceError(f"sphere fit did not converge in {max_iter} iterations")
    if radius <= 0.0:
        raise DegeneratePointsError("sphere fit produced a non-positive radius")
    rms = float(np.sqrt(cost / len(pts)))
    return SphereFit(center, float(radius), rms)


def _triangle_area(points) -> float:
    a, b, c = np.asarray(points, dtype=float)
    return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))


def _check_triangle(points):
    pts = np.asarray(points, dtype=float)
    if pts.shape != (3, 3):
        raise CollinearBallsError(f"need exactly three ball centres, got shape {pts.shape}")
    area = _triangle_area(pts)
    if area <= MIN_TRIANGLE_AREA:
        raise CollinearBallsError(f"ball triangle area {area:.3g} mm^2 is too small")
    return pts


@dataclass(frozen=True, eq=False)
class BallPlateRelation:
    """Ball centres expressed in the platform frame (mm), one row per ball."""

    ball_positions: np.ndarray

    def __post_init__(self):
        pts = _check_triangle(self.ball_positions).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "ball_positions", pts)

    @property
    def edge_lengths(self) -> np.ndarray:
        return _edge_lengths(self.ball_positions)


def _edge_lengths(pts) -> np.ndarray:
    return np.linalg.norm(pts - np.roll(pts, -1, axis=0), axis=1)


def establish_relation(ball_centers_in_m, platform_frame_in_m: Transform3D) -> BallPlateRelation:
    """Record where the balls sit in the platform frame, from one joint measurement."""
    centers = _check_triangle(ball_centers_in_m)
    return BallPlateRelation(inverse(platform_frame_in_m).apply(centers))


def rigid_fit(source, target) -> Transform3D:
    """Least-squares rigid transform taking ``source`` points onto ``target``.

    Centroid alignment plus the SVD solution of the orthogonal Procrustes
    problem, with the reflection guard that keeps det(R) = +1.
    """
    src = np.asarray(source, dtype=float)
    dst = np.asarray(target, dtype=float)
    src_mean, dst_mean = src.mean(axis=0), dst.mean(axis=0)
    cov = (dst - dst_mean).T @ (src - src_mean)
    u, _, vt = np.linalg.svd(cov)
    d = np.sign(np.linalg.det(u @ vt))
    rotation = u @ np.diag([1.0, 1.0, d]) @ vt
    return Transform3D(rotation, dst_mean - rotation @ src_mean)


def frame_from_balls(
    relation: BallPlateRelation,
    measured_centers_in_m,
    congruence_tol: float = DEFAULT_CONGRUENCE_TOL,
) -> Transform3D:
    """Platform frame in M from the three measured ball centres."""
    measured = _check_triangle(measured_centers_in_m)
    mismatch = np.abs(_edge_lengths(measured) - relation.edge_lengths)
    if mismatch.max() > congruence_tol:
        raise ShapeMismatchError(
            f"ball triangle edge differs by {mismatch.max() * 1e3:.1f} um "
            f"(tolerance {congruence_tol * 1e3:.1f} um); mis-identified ball?"
        )
    return rigid_fit(relation.ball_positions, measured)
