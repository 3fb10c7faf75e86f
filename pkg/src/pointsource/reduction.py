"""Line integrals that carry 3D point sources to planar ones.

Integrating a 3D point-mass potential along lines parallel to a projection
axis gives, in the limit of infinite length, twice the planar logarithmic
potential of the projected source; for point dipoles the in-plane part of
the moment survives and the axial part integrates to zero.  This module
evaluates the truncated integrals (closed form for masses, adaptive
quadrature for dipoles) and measures how far a truncated reduction is from
the planar expansion.

Frame: after :func:`geometry.rotation_to_z` the axis is ``e_z``; a source at
rotated position ``(x_k, y_k, h_k)`` and a field line through ``(x, y)`` have
in-plane distance ``a`` and the line runs over ``s`` in ``[-L, L]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, quad_vec

from .errors import DomainViolation, MassImbalance
from .geometry import find_preferred_axis, project_to_plane, rotation_to_z
from .real_basis import RealExpansionSpec2, RealExpansionSpec3, eval_expansion_r2, psi_r2

DEFAULT_L = 1e4
DEFAULT_PROBE_RADIUS = 2.0
DEFAULT_PROBES = 20
MASS_BALANCE_TOL = 1e-12
QUAD_TOL = 1e-10


def _positive(**vals) -> None:
    for name, v in vals.items():
        if not (np.all(np.isfinite(v)) and np.all(np.asarray(v) > 0)):
            raise DomainViolation(f"{name} must be finite and positive")


def line_integral_pm(a, b, L):
    """``int_{-L}^{L} (a^2+s^2)^{-1/2} - (b^2+s^2)^{-1/2} ds``.

    Closed form ``2 ln((1+sqrt((a/L)^2+1)) / (1+sqrt((b/L)^2+1))) - 2 ln(a/b)``,
    evaluated with the first log rewritten as a ``log1p`` of a difference
    that is formed without cancellation.
    """
    a, b, L = (np.asarray(v, dtype=float) for v in (a, b, L))
    _positive(a=a, b=b, L=L)
    ua, ub = (a / L) ** 2, (b / L) ** 2
    sa, sb = np.sqrt(ua + 1.0), np.sqrt(ub + 1.0)
    head = 2.0 * np.log1p((ua - ub) / (sa + sb) / (1.0 + sb))
    out = head - 2.0 * np.log(a / b)
    return out[()] if out.ndim == 0 else out


def line_integral_pm_quad(a: float, b: float, L: float, tol: float = QUAD_TOL) -> float:
    """Adaptive-quadrature oracle for :func:`line_integral_pm` on dyadic panels."""
    _positive(a=a, b=b, L=L)

    def f(s):
        return 1.0 / math.hypot(a, s) - 1.0 / math.hypot(b, s)

    total, lo, hi = 0.0, 0.0, min(1.0, L)
    while lo < L:
        val, _ = quad(f, lo, hi, epsabs=tol * 1e-3, epsrel=tol, limit=200)
        total += val
        lo, hi = hi, min(2.0 * hi, L)
    return 2.0 * total


def _segment_integral(a, h, L):
    # int_{-L}^{L} (a^2 + (s-h)^2)^{-1/2} ds
    return np.arcsinh((L - h) / a) + np.arcsinh((L + h) / a)


def mass_line_integral(X2, sources_rot, masses, L: float, counter_term: bool = True):
    """``int_{-L}^{L} sum_k m_k / |X - X_k| ds`` per term, shape ``(n_points, n_k)``.

    With ``counter_term`` each term subtracts ``m_k`` times the same line
    integral for a unit mass at the origin, which makes every term finite as
    L grows and is a no-op for the sum when the masses balance.
    """
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    P = np.asarray(sources_rot, dtype=float)
    a = np.linalg.norm(X2[:, None, :] - P[None, :, :2], axis=-1)
    _positive(a=a)
    vals = _segment_integral(a, P[None, :, 2], L)
    if counter_term:
        b = np.linalg.norm(X2, axis=-1)[:, None]
        vals = vals - 2.0 * np.arcsinh(L / b)
    return vals * np.asarray(masses, dtype=float)[None, :]


def _dipole_integrand(X2, P, D, s):
    # W(s) per (point, source): D . grad_X |X - X_k|^{-1} on the line (x, y, s)
    dx = X2[:, None, 0] - P[None, :, 0]
    dy = X2[:, None, 1] - P[None, :, 1]
    dz = s - P[None, :, 2]
    r3 = (dx * dx + dy * dy + dz * dz) ** 1.5
    inplane = -(D[None, :, 0] * dx + D[None, :, 1] * dy) / r3
    axial = -(D[None, :, 2] * dz) / r3
    return np.stack([inplane, axial])


def dipole_line_integral(X2, sources_rot, dipoles_rot, L: float, tol: float = QUAD_TOL) -> np.ndarray:
    """Quadrature of the dipole potential along ``[-L, L]``, split into in-plane and axial parts.

    Returns shape ``(2, n_points, n_k)``.  Panels double outward from
    ``[-1, 1]`` so the peak near the sources is resolved and the tails are
    cheap.
    """
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    P = np.asarray(sources_rot, dtype=float)
    D = np.asarray(dipoles_rot, dtype=float)
    _positive(L=L)

    def f(s):
        return _dipole_integrand(X2, P, D, s)

    edges = [0.0]
    w = 1.0
    while w < L:
        edges.append(w)
        w *= 2.0
    edges.append(L)
    edges = np.array(edges)
    pts = np.concatenate([-edges[:0:-1], edges])
    total = np.zeros((2, len(X2), len(P)))
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = quad_vec(f, lo, hi, epsabs=tol * 1e-3, epsrel=tol)
        total += val
    return total


def probe_points(n: int = DEFAULT_PROBES, radius: float = DEFAULT_PROBE_RADIUS) -> np.ndarray:
    th = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    return radius * np.column_stack([np.cos(th), np.sin(th)])


@dataclass(frozen=True)
class ReductionReport:
    """Outcome of reducing a 3D spec to the plane.

    ``defect`` is the maximum over probe points of the gap between the
    truncated line integral and twice the planar expansion; ``richardson``
    is the same gap for the extrapolation ``(4 I(2L) - I(L)) / 3``.
    """

    L: float
    probe_radius: float
    defect: float
    per_term: list = field(default_factory=list)
    axis: tuple = (0.0, 0.0, 1.0)
    richardson: float = 0.0
    axial_integral: float = 0.0
    axial_richardson: float = 0.0

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "probe_radius": self.probe_radius,
            "defect": self.defect,
            "per_term": self.per_term,
            "axis": list(self.axis),
            "richardson": self.richardson,
            "axial_integral": self.axial_integral,
            "axial_richardson": self.axial_richardson,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _rotated(spec: RealExpansionSpec3, axis):
    R = rotation_to_z(axis)
    return R, spec.sources.points @ R.T


def reduce_pm_r3(spec: RealExpansionSpec3, L: float = DEFAULT_L, axis=None,
                 probe_radius: float = DEFAULT_PROBE_RADIUS, n_probes: int = DEFAULT_PROBES
                 ) -> tuple[RealExpansionSpec2, ReductionReport]:
    """Carry balanced point masses to the plane orthogonal to ``axis``.

    The planar spec keeps the masses at the projected points; the report's
    defect compares ``sum_k m_k int V_k ds`` (closed form per term, with the
    origin counter-term) to ``2 sum_k m_k Psi_k`` at probe points.
    """
    _positive(L=L)
    m = spec.masses
    if abs(float(np.sum(m))) > MASS_BALANCE_TOL * max(1.0, float(np.sum(np.abs(m)))):
        raise MassImbalance(f"masses sum to {float(np.sum(m)):.3e}, expected 0")
    axis = find_preferred_axis(spec.sources.points) if axis is None else np.asarray(axis, dtype=float)
    proj, _ = project_to_plane(spec.sources, axis)
    spec2 = RealExpansionSpec2(proj, m)
    _, P = _rotated(spec, axis)

    X2 = probe_points(n_probes, probe_radius)
    target = 2.0 * psi_r2(X2[:, None, :], proj.points) * m[None, :]
    I_L = mass_line_integral(X2, P, m, L)
    I_2L = mass_line_integral(X2, P, m, 2 * L)
    gap = np.abs(I_L.sum(axis=1) - target.sum(axis=1))
    rich = (4.0 * I_2L - I_L) / 3.0
    gap_r = np.abs(rich.sum(axis=1) - target.sum(axis=1))

    per_term = [
        {"k": k + 1, "mass": float(m[k]), "height": float(P[k, 2]),
         "defect": float(np.max(np.abs(I_L[:, k] - target[:, k])))}
        for k in range(spec.sources.n_k)
    ]
    report = ReductionReport(float(L), float(probe_radius), float(gap.max()), per_term,
                             tuple(float(v) for v in axis), float(gap_r.max()))
    return spec2, report


def reduce_dipole_r3(spec: RealExpansionSpec3, L: float = DEFAULT_L, axis=None,
                     probe_radius: float = DEFAULT_PROBE_RADIUS, n_probes: int = DEFAULT_PROBES
                     ) -> tuple[RealExpansionSpec2, ReductionReport]:
    """Carry point dipoles to the plane orthogonal to ``axis``.

    The planar dipoles are the in-plane components of the rotated moments.
    The report compares the quadrature of the in-plane part of the line
    integral with ``2 sum_k D_k . grad ln(1/|X - X_k|)`` and records the
    largest axial-part integral (zero in the limit), both raw at L and
    Richardson-extrapolated from L and 2L.

    Raises ZeroProjection when a nonzero dipole is parallel to the axis.
    """
    _positive(L=L)
    D = spec.dipoles
    if axis is None:
        nz = D[np.linalg.norm(D, axis=1) > 0]
        extra = np.vstack([nz, -nz]) if len(nz) else None
        axis = find_preferred_axis(spec.sources.points, extra_dirs=extra)
    axis = np.asarray(axis, dtype=float)
    proj, D2 = project_to_plane(spec.sources, axis, D)
    spec2 = RealExpansionSpec2(proj, None, D2)
    R, P = _rotated(spec, axis)
    Drot = D @ R.T

    X2 = probe_points(n_probes, probe_radius)
    target = 2.0 * eval_expansion_r2(spec2, X2)
    I_L = dipole_line_integral(X2, P, Drot, L)
    I_2L = dipole_line_integral(X2, P, Drot, 2 * L)
    rich = (4.0 * I_2L - I_L) / 3.0
    gap = np.abs(I_L[0].sum(axis=1) - target)
    gap_r = np.abs(rich[0].sum(axis=1) - target)
    axial = float(np.max(np.abs(I_L[1].sum(axis=1)))) if len(P) else 0.0
    axial_r = float(np.max(np.abs(rich[1].sum(axis=1)))) if len(P) else 0.0

    per_term = []
    for k in range(spec.sources.n_k):
        dk = np.zeros_like(D2)
        dk[k] = D2[k]
        tk = 2.0 * eval_expansion_r2(RealExpansionSpec2(proj, None, dk), X2)
        per_term.append({
            "k": k + 1,
            "dipole": [float(v) for v in D[k]],
            "projected": [float(v) for v in D2[k]],
            "height": float(P[k, 2]),
            "defect": float(np.max(np.abs(I_L[0][:, k] - tk))),
            "axial": float(np.max(np.abs(I_L[1][:, k]))),
        })
    report = ReductionReport(float(L), float(probe_radius), float(gap.max()), per_term,
                             tuple(float(v) for v in axis), float(gap_r.max()), axial, axial_r)
    return spec2, report
