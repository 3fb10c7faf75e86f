"""Point masses, dipoles and low-order multipoles in R^2 and R^3.

Sign conventions: dipole and multipole gradients are taken with respect to
the field point X, so the first-order pair is

    A1 = d/dx ln(1/|X - X_k|) = -(x - x_k)/r^2,   B1 = -(y - y_k)/r^2,

and the higher orders are the closed forms of d^2/dx^2, d^2/dxdy, d^3/dx^3,
d^3/dy^3 of ln(1/r).  With those, Re{mu/(z - z_k)^n} = a A_n + b B_n where
(a, b) = pole_to_multipole(mu, n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex_basis import ComplexExpansionSpec
from .errors import BadOrder, DomainViolation
from .geometry import SourceConfiguration, validate_configuration

EXTERIOR_SLACK = 1e-12
MULTIPOLE_ORDERS = (1, 2, 3)


def _check_exterior(X, X_k) -> None:
    if np.any(np.linalg.norm(X, axis=-1) < 1.0 - EXTERIOR_SLACK):
        raise DomainViolation("field point inside the unit ball")
    if np.any(np.linalg.norm(X_k, axis=-1) >= 1.0):
        raise DomainViolation("source on or outside the unit sphere")


def _scalar(out):
    return out[()] if np.ndim(out) == 0 else out


def psi_r2(X, X_k):
    """``ln(|X| / |X - X_k|)``, the planar mass basis normalized to vanish at infinity."""
    X = np.asarray(X, dtype=float)
    X_k = np.asarray(X_k, dtype=float)
    _check_exterior(X, X_k)
    return _scalar(np.log(np.linalg.norm(X, axis=-1) / np.linalg.norm(X - X_k, axis=-1)))


def multipole_r2(X, X_k, n: int):
    """Independent planar multipole pair ``(A_n, B_n)`` at source ``X_k``.

    n = 1: ``(-dx/r^2, -dy/r^2)``;
    n = 2: ``((dx^2 - dy^2)/r^4, 2 dx dy/r^4)``;
    n = 3: ``(2dx(3dy^2 - dx^2)/r^6, 2dy(3dx^2 - dy^2)/r^6)``.
    """
    if n not in MULTIPOLE_ORDERS:
        raise BadOrder(f"planar multipoles are implemented for n in 1..3, got {n}")
    d = np.asarray(X, dtype=float) - np.asarray(X_k, dtype=float)
    dx, dy = d[..., 0], d[..., 1]
    r2 = dx * dx + dy * dy
    if np.any(r2 == 0.0):
        raise DomainViolation("field point coincides with the source")
    if n == 1:
        A, B = -dx / r2, -dy / r2
    elif n == 2:
        A, B = (dx * dx - dy * dy) / r2**2, 2.0 * dx * dy / r2**2
    else:
        r6 = r2**3
        A = 2.0 * dx * (3.0 * dy * dy - dx * dx) / r6
        B = 2.0 * dy * (3.0 * dx * dx - dy * dy) / r6
    return _scalar(A), _scalar(B)


# map (a, b) -> (alpha, beta) is diagonal with these entries per order
_POLE_MULTIPOLE_SCALE = {1: (-1.0, -1.0), 2: (1.0, 1.0), 3: (-0.5, 0.5)}


def pole_to_multipole(mu: complex, n: int) -> tuple[float, float]:
    """Real multipole coefficients reproducing ``Re{mu / (z - z_k)^n}``."""
    if n not in _POLE_MULTIPOLE_SCALE:
        raise BadOrder(f"pole/multipole correspondence holds for n in 1..3, got {n}")
    sa, sb = _POLE_MULTIPOLE_SCALE[n]
    mu = complex(mu)
    return sa * mu.real, sb * mu.imag


def multipole_to_pole(a: float, b: float, n: int) -> complex:
    """Inverse of :func:`pole_to_multipole`."""
    if n not in _POLE_MULTIPOLE_SCALE:
        raise BadOrder(f"pole/multipole correspondence holds for n in 1..3, got {n}")
    sa, sb = _POLE_MULTIPOLE_SCALE[n]
    return complex(a / sa, b / sb)


def pm_r3(X, X_k, m: float = 1.0):
    """Point-mass potential ``m / |X - X_k|``."""
    X = np.asarray(X, dtype=float)
    X_k = np.asarray(X_k, dtype=float)
    _check_exterior(X, X_k)
    return _scalar(m / np.linalg.norm(X - X_k, axis=-1))


def dipole_r3(X, X_k, D):
    """Dipole potential ``D . grad_X |X - X_k|^-1 = -D.(X - X_k)/|X - X_k|^3``."""
    X = np.asarray(X, dtype=float)
    X_k = np.asarray(X_k, dtype=float)
    _check_exterior(X, X_k)
    d = X - X_k
    r = np.linalg.norm(d, axis=-1)
    return _scalar(-np.sum(np.asarray(D, dtype=float) * d, axis=-1) / r**3)


def _zeros_or(arr, shape) -> np.ndarray:
    if arr is None:
        return np.zeros(shape)
    out = np.asarray(arr, dtype=float).reshape(shape)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite strengths")
    return out


@dataclass(frozen=True, eq=False)
class RealExpansionSpec2:
    """Planar expansion: masses, dipoles and ``multipoles[n] -> (n_k, 2)`` pairs (a, b)."""

    sources: SourceConfiguration
    masses: np.ndarray | None = None
    dipoles: np.ndarray | None = None
    multipoles: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.sources.dim != 2:
            raise ValueError("RealExpansionSpec2 needs planar sources")
        n = self.sources.n_k
        object.__setattr__(self, "masses", _zeros_or(self.masses, (n,)))
        object.__setattr__(self, "dipoles", _zeros_or(self.dipoles, (n, 2)))
        mp = {}
        for order, ab in self.multipoles.items():
            if order not in MULTIPOLE_ORDERS:
                raise BadOrder(f"multipole order {order} not in 1..3")
            mp[int(order)] = _zeros_or(ab, (n, 2))
        object.__setattr__(self, "multipoles", dict(sorted(mp.items())))

    def to_dict(self) -> dict:
        return {
            "sources": self.sources.to_dict(),
            "masses": self.masses.tolist(),
            "dipoles": self.dipoles.tolist(),
            "multipoles": [
                {"k": k + 1, "n": order, "a": float(a), "b": float(b)}
                for order, ab in self.multipoles.items()
                for k, (a, b) in enumerate(ab)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RealExpansionSpec2":
        sources = _sources_from(doc["sources"])
        n = sources.n_k
        mp: dict[int, np.ndarray] = {}
        for e in doc.get("multipoles", []):
            k, order = int(e["k"]), int(e["n"])
            if not 1 <= k <= n:
                raise ValueError(f"multipole references source {k} of {n}")
            arr = mp.setdefault(order, np.zeros((n, 2)))
            arr[k - 1] += (float(e.get("a", 0.0)), float(e.get("b", 0.0)))
        return cls(sources, doc.get("masses"), doc.get("dipoles"), mp)


@dataclass(frozen=True, eq=False)
class RealExpansionSpec3:
    """Spatial expansion of point masses and point dipoles."""

    sources: SourceConfiguration
    masses: np.ndarray | None = None
    dipoles: np.ndarray | None = None

    def __post_init__(self):
        if self.sources.dim != 3:
            raise ValueError("RealExpansionSpec3 needs 3D sources")
        n = self.sources.n_k
        object.__setattr__(self, "masses", _zeros_or(self.masses, (n,)))
        object.__setattr__(self, "dipoles", _zeros_or(self.dipoles, (n, 3)))

    def to_dict(self) -> dict:
        return {
            "sources": self.sources.to_dict(),
            "masses": self.masses.tolist(),
            "dipoles": self.dipoles.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RealExpansionSpec3":
        return cls(_sources_from(doc["sources"]), doc.get("masses"), doc.get("dipoles"))


def _sources_from(src) -> SourceConfiguration:
    if isinstance(src, dict):
        return SourceConfiguration.from_dict(src)
    return validate_configuration(np.asarray(src, dtype=float))


def eval_expansion_r2(spec: RealExpansionSpec2, X):
    """Evaluate masses (via ``psi_r2``), dipoles and multipoles at exterior point(s) ``X``."""
    X = np.asarray(X, dtype=float)
    Xk = spec.sources.points
    _check_exterior(X, Xk)
    XX = X[..., None, :]
    total = psi_r2(XX, Xk) @ spec.masses
    A1, B1 = multipole_r2(XX, Xk, 1)
    total = total + A1 @ spec.dipoles[:, 0] + B1 @ spec.dipoles[:, 1]
    for order, ab in spec.multipoles.items():
        A, B = multipole_r2(XX, Xk, order)
        total = total + A @ ab[:, 0] + B @ ab[:, 1]
    return _scalar(total)


def eval_expansion_r3(spec: RealExpansionSpec3, X):
    """Evaluate point masses and dipoles at exterior point(s) ``X``."""
    X = np.asarray(X, dtype=float)
    Xk = spec.sources.points
    _check_exterior(X, Xk)
    d = X[..., None, :] - Xk
    r = np.linalg.norm(d, axis=-1)
    total = (1.0 / r) @ spec.masses
    total = total - np.sum(spec.dipoles * d, axis=-1) / r**3 @ np.ones(len(Xk))
    return _scalar(total)


def real_spec_from_complex(spec: ComplexExpansionSpec) -> RealExpansionSpec2:
    """Planar spec whose value is ``Re`` of the complex expansion.

    Poles of order 1..3 map through :func:`pole_to_multipole` (order 1 lands
    in ``dipoles`` as ``D_k = (-alpha_k, -beta_k)``); real log strengths map to
    masses.  Imaginary log strengths have no planar counterpart.
    """
    n = spec.sources.n_k
    masses = np.zeros(n)
    if spec.log_strengths is not None:
        if np.any(spec.log_strengths.imag != 0.0):
            raise ValueError("imaginary log strengths have no point-mass counterpart")
        masses = spec.log_strengths.real.copy()
    dipoles = np.zeros((n, 2))
    mp: dict[int, np.ndarray] = {}
    for m, s in spec.poles.items():
        if m not in MULTIPOLE_ORDERS:
            raise BadOrder(f"no planar multipole pair for pole order {m}")
        ab = np.array([pole_to_multipole(mu, m) for mu in s])
        if m == 1:
            dipoles += ab
        else:
            mp[m] = ab
    return RealExpansionSpec2(spec.sources, masses, dipoles, mp)
