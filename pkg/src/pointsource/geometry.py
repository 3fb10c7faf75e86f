"""Source configurations and the preferred-axis construction for 3D -> 2D projection.

Source locations live strictly inside the unit ball (or disk) and field points
outside it.  For the dimensional reduction we need an axis such that the
orthogonal projection keeps every source distinct and keeps every dipole
nonzero; `find_preferred_axis` picks one from a deterministic grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    DegenerateInput,
    DuplicatePoint,
    EmptyConfiguration,
    ExhaustedCandidates,
    OutsideAnnulus,
    ProjectionCollision,
    ZeroProjection,
)

DEFAULT_R_MIN = 0.05
DEFAULT_R_MAX = 0.95
DEFAULT_MIN_SEP = 1e-3
DEFAULT_ANGLE_CLEARANCE = 1e-3
DEFAULT_SWEEP_SIZE = 100_000

# two directions closer than this (radians) are the same direction
DIRECTION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SourceConfiguration:
    """Validated, ordered set of distinct source locations.

    ``points`` has shape ``(n_k, dim)`` with ``dim`` 2 or 3 and is read-only.
    Build instances with :func:`validate_configuration`.
    """

    points: np.ndarray
    r_min: float = DEFAULT_R_MIN
    r_max: float = DEFAULT_R_MAX
    min_sep: float = DEFAULT_MIN_SEP

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_k(self) -> int:
        return self.points.shape[0]

    def as_complex(self) -> np.ndarray:
        """Planar sources as z_k = x_k + i y_k."""
        if self.dim != 2:
            raise ValueError("complex view needs a 2D configuration")
        return self.points[:, 0] + 1j * self.points[:, 1]

    def __len__(self) -> int:
        return self.n_k

    def __eq__(self, other) -> bool:
        if not isinstance(other, SourceConfiguration):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
            and (self.r_min, self.r_max, self.min_sep)
            == (other.r_min, other.r_max, other.min_sep)
        )

    def __hash__(self):
        return hash((self.points.tobytes(), self.r_min, self.r_max, self.min_sep))

    def to_dict(self) -> dict:
        return {
            "dim": int(self.dim),
            "points": self.points.tolist(),
            "r_min": self.r_min,
            "r_max": self.r_max,
            "min_sep": self.min_sep,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SourceConfiguration":
        points = np.asarray(doc["points"], dtype=float)
        dim = int(doc.get("dim", points.shape[-1] if points.size else 2))
        if points.size == 0:
            points = points.reshape(0, dim)
        if points.ndim != 2 or points.shape[1] != dim:
            raise ValueError(f"points do not match dim={dim}")
        return validate_configuration(
            points,
            r_min=float(doc.get("r_min", DEFAULT_R_MIN)),
            r_max=float(doc.get("r_max", DEFAULT_R_MAX)),
            min_sep=float(doc.get("min_sep", DEFAULT_MIN_SEP)),
        )


def as_point_array(points) -> np.ndarray:
    """Coerce complex numbers, point sequences or a configuration to an (n, dim) array."""
    if isinstance(points, SourceConfiguration):
        return points.points
    arr = np.asarray(points)
    if np.iscomplexobj(arr):
        arr = arr.reshape(-1)
        return np.column_stack([arr.real, arr.imag]).astype(float)
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size in (2, 3) else arr.reshape(0, 2)
    return arr


def validate_configuration(
    points,
    r_min: float = DEFAULT_R_MIN,
    r_max: float = DEFAULT_R_MAX,
    min_sep: float = DEFAULT_MIN_SEP,
) -> SourceConfiguration:
    """Check a point set against the annulus and separation rules.

    Parameters
    ----------
    points : array_like or SourceConfiguration
        ``(n_k, 2)`` or ``(n_k, 3)`` coordinates, or a 1-D complex array of
        planar sources.  Input order is preserved.
    r_min, r_max : float
        Every source must satisfy ``r_min <= |X_k| <= r_max`` with
        ``0 < r_min < r_max < 1``.
    min_sep : float
        Minimum Euclidean distance between two sources.

    Raises
    ------
    EmptyConfiguration, OutsideAnnulus, DuplicatePoint
    """
    if isinstance(points, SourceConfiguration) and (
        (points.r_min, points.r_max, points.min_sep) == (r_min, r_max, min_sep)
    ):
        return points
    if not 0.0 < r_min < r_max < 1.0:
        raise ValueError(f"need 0 < r_min < r_max < 1, got {r_min}, {r_max}")
    if not min_sep > 0.0:
        raise ValueError("min_sep must be positive")

    pts = np.array(as_point_array(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise EmptyConfiguration("configuration has no points")
    if pts.shape[1] not in (2, 3):
        raise ValueError(f"points must be 2D or 3D, got dim={pts.shape[1]}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")

    radii = np.linalg.norm(pts, axis=1)
    bad = np.flatnonzero((radii < r_min) | (radii > r_max))
    if bad.size:
        k = int(bad[0])
        raise OutsideAnnulus(
            f"point {k} has |X|={radii[k]:.6g} outside [{r_min}, {r_max}]"
        )

    if pts.shape[0] > 1:
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        iu = np.triu_indices(pts.shape[0], k=1)
        close = np.flatnonzero(d[iu] < min_sep)
        if close.size:
            i, j = iu[0][close[0]], iu[1][close[0]]
            raise DuplicatePoint(
                f"points {i} and {j} are {d[i, j]:.3g} apart (min_sep={min_sep})"
            )

    pts.setflags(write=False)
    return SourceConfiguration(pts, float(r_min), float(r_max), float(min_sep))


# -- directions ------------------------------------------------------------------

def _unit_rows(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=1, keepdims=True)
    return v / n


def _dedupe_directions(dirs: np.ndarray, tol: float = DIRECTION_TOL) -> np.ndarray:
    kept: list[np.ndarray] = []
    cos_tol = np.cos(tol)
    for d in dirs:
        if all(float(np.dot(d, k)) < cos_tol for k in kept):
            kept.append(d)
    if not kept:
        return np.zeros((0, dirs.shape[1]))
    return np.array(kept)


def pairwise_directions(points) -> np.ndarray:
    """All directions +-(X_j - X_k)/|X_j - X_k|, deduplicated.

    Returns an ``(m, dim)`` array of unit vectors with
    ``m <= 2 n_k (n_k - 1)``.
    """
    pts = as_point_array(points)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise DegenerateInput("need at least two points")
    i, j = np.triu_indices(pts.shape[0], k=1)
    diff = pts[j] - pts[i]
    if np.any(np.linalg.norm(diff, axis=1) == 0.0):
        raise DegenerateInput("coincident points")
    u = _unit_rows(diff)
    return _dedupe_directions(np.concatenate([u, -u]))


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, nearly uniform grid of ``n`` unit 3-vectors."""
    i = np.arange(n, dtype=float)
    zc = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(1.0 - zc * zc)
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), zc])


def _forbidden_set(points, extra_dirs, avoid_origin: bool) -> np.ndarray:
    pts = as_point_array(points)
    blocks = []
    if pts.shape[0] >= 2:
        blocks.append(pairwise_directions(pts))
    if avoid_origin:
        r = np.linalg.norm(pts, axis=1)
        if np.any(r > 0):
            blocks.append(_unit_rows(pts[r > 0]))
    if extra_dirs is not None:
        extra = np.asarray(extra_dirs, dtype=float).reshape(-1, pts.shape[1])
        extra = extra[np.linalg.norm(extra, axis=1) > 0]
        if extra.size:
            blocks.append(_unit_rows(extra))
    if not blocks:
        return np.zeros((0, pts.shape[1]))
    return np.concatenate(blocks)


def angular_clearance(axis, directions) -> float:
    """Smallest angle between the line through ``axis`` and any of ``directions``."""
    directions = np.asarray(directions, dtype=float)
    if directions.size == 0:
        return np.pi / 2
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    c = np.abs(_unit_rows(directions.reshape(-1, a.size)) @ a)
    return float(np.arccos(np.clip(c.max(), -1.0, 1.0)))


def find_preferred_axis(
    points,
    extra_dirs=None,
    delta: float = DEFAULT_ANGLE_CLEARANCE,
    n_candidates: int = DEFAULT_SWEEP_SIZE,
    avoid_origin: bool = True,
) -> np.ndarray:
    """Choose a projection axis away from every forbidden direction.

    The forbidden set is every pairwise source direction, every entry of
    ``extra_dirs`` (dipole vectors, typically) and, with ``avoid_origin``,
    the direction of each source from the origin so no source projects onto
    the origin.  ``e_z`` is returned when it already clears all of them by
    ``delta``; otherwise the candidate of a Fibonacci-sphere sweep with the
    largest clearance wins.

    Raises
    ------
    ExhaustedCandidates
        If even the best candidate is closer than ``delta`` to the forbidden set.
    """
    pts = as_point_array(points)
    if pts.shape[1] != 3:
        raise ValueError("preferred axis is defined for 3D configurations")
    forbidden = _forbidden_set(pts, extra_dirs, avoid_origin)
    e_z = np.array([0.0, 0.0, 1.0])
    if angular_clearance(e_z, forbidden) >= delta:
        return e_z

    grid = fibonacci_sphere(n_candidates)
    grid = grid[grid[:, 2] >= 0.0]  # an axis and its negative are equivalent
    best, best_cos = None, np.inf
    chunk = 8192
    for start in range(0, grid.shape[0], chunk):
        g = grid[start:start + chunk]
        worst_cos = np.abs(g @ forbidden.T).max(axis=1)
        idx = int(np.argmin(worst_cos))
        if worst_cos[idx] < best_cos:
            best, best_cos = g[idx], float(worst_cos[idx])
    angle = float(np.arccos(np.clip(best_cos, -1.0, 1.0)))
    if best is None or angle < delta:
        raise ExhaustedCandidates(
            f"best candidate clears forbidden set by {angle:.3g} rad < {delta}"
        )
    return best / np.linalg.norm(best)


def rotation_to_z(axis) -> np.ndarray:
    """Minimal rotation matrix R with R @ axis = e_z (identity for axis = e_z)."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    v = np.cross(a, [0.0, 0.0, 1.0])
    s = np.linalg.norm(v)
    c = a[2]
    if s < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.eye(3) + vx + vx @ vx * ((1.0 - c) / (s * s))


def project_to_plane(
    config: SourceConfiguration,
    axis,
    dipoles=None,
    tol: float = 1e-9,
) -> tuple[SourceConfiguration, np.ndarray | None]:
    """Project a 3D configuration (and optional dipoles) onto the plane orthogonal to ``axis``.

    Coordinates are expressed in the rotated frame where ``axis`` is ``e_z``,
    so for ``axis = e_z`` this is a plain coordinate drop.

    Raises
    ------
    ProjectionCollision
        Two projected points closer than ``tol``, or a source projecting onto
        the origin.
    ZeroProjection
        A nonzero dipole whose in-plane component vanishes.
    """
    if config.dim != 3:
        raise ValueError("project_to_plane needs a 3D configuration")
    R = rotation_to_z(axis)
    p2 = (config.points @ R.T)[:, :2]

    radii = np.linalg.norm(p2, axis=1)
    if np.any(radii <= tol):
        k = int(np.argmin(radii))
        raise ProjectionCollision(f"source {k} projects onto the origin")
    if config.n_k > 1:
        d = np.linalg.norm(p2[:, None, :] - p2[None, :, :], axis=-1)
        d[np.diag_indices_from(d)] = np.inf
        if d.min() <= tol:
            i, j = np.unravel_index(np.argmin(d), d.shape)
            raise ProjectionCollision(f"sources {i} and {j} collide after projection")

    d2 = None
    if dipoles is not None:
        D = np.asarray(dipoles, dtype=float).reshape(-1, 3)
        d2 = (D @ R.T)[:, :2]
        full = np.linalg.norm(D, axis=1)
        flat = np.linalg.norm(d2, axis=1)
        bad = np.flatnonzero((full > 0) & (flat <= tol * np.maximum(full, 1.0)))
        if bad.size:
            raise ZeroProjection(f"dipole {int(bad[0])} is parallel to the axis")

    r_min = min(config.r_min, 0.5 * float(radii.min()))
    sep = min(config.min_sep, 0.5 * tol) if config.n_k == 1 else min(
        config.min_sep, 0.5 * float(d.min())
    )
    return validate_configuration(p2, r_min=r_min, r_max=config.r_max, min_sep=sep), d2


def min_pairwise_distance(points: Iterable) -> float:
    pts = as_point_array(points)
    if pts.shape[0] < 2:
        return np.inf
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def random_configuration(
    rng: np.random.Generator,
    n_k: int,
    dim: int = 2,
    r_min: float = DEFAULT_R_MIN,
    r_max: float = DEFAULT_R_MAX,
    min_sep: float = DEFAULT_MIN_SEP,
    max_tries: int = 10_000,
) -> SourceConfiguration:
    """Volume-uniform sources in the annulus/shell, rejection-sampled for separation."""
    pts: list[np.ndarray] = []
    for _ in range(max_tries):
        if len(pts) == n_k:
            break
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        u = rng.uniform(r_min**dim, r_max**dim)
        p = direction * u ** (1.0 / dim)
        if all(np.linalg.norm(p - q) >= min_sep for q in pts):
            pts.append(p)
    if len(pts) < n_k:
        raise RuntimeError("could not place sources with the requested separation")
    return validate_configuration(np.array(pts), r_min, r_max, min_sep)
