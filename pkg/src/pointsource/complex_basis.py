"""Logarithmic and pole basis functions in the exterior of the unit disk.

The logarithmic basis is the regularized

    psi_k(z) = log(z / (z - z_k)) = -log(1 - z_k / z),

evaluated as a single principal-branch logarithm.  For |z| >= 1 > |z_k| the
argument ``1 - z_k/z`` has positive real part, so the result is analytic on
the whole exterior and ``|Im psi_k| < pi/2``.  Never rewrite it as a
difference of two logarithms: each of those carries its own branch cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadOrder, DomainViolation
from .geometry import SourceConfiguration, validate_configuration

# |z| == 1 evaluated from exp(i theta) may land a few ulps inside the circle
EXTERIOR_SLACK = 1e-12


def _check_domain(z, z_k) -> None:
    if np.any(np.abs(z) < 1.0 - EXTERIOR_SLACK):
        raise DomainViolation("field point inside the unit disk")
    if np.any(np.abs(z_k) >= 1.0):
        raise DomainViolation("source on or outside the unit circle")


def _log1p_complex(w):
    # log(1 + w) with an accurate real part for small |w|
    w = np.asarray(w, dtype=complex)
    re = 0.5 * np.log1p(2.0 * w.real + (w.real * w.real + w.imag * w.imag))
    im = np.arctan2(w.imag, 1.0 + w.real)
    return re + 1j * im


def psi(z, z_k):
    """Regularized logarithmic basis function ``log(1 / (1 - z_k/z))``.

    Vectorized over ``z`` and ``z_k`` (numpy broadcasting).

    Raises
    ------
    DomainViolation
        If ``|z| < 1`` or ``|z_k| >= 1``.
    """
    z = np.asarray(z, dtype=complex)
    z_k = np.asarray(z_k, dtype=complex)
    _check_domain(z, z_k)
    out = -_log1p_complex(-z_k / z)
    return out[()] if out.ndim == 0 else out


def dpsi_dz(z, z_k):
    """Derivative ``1/z - 1/(z - z_k)`` of :func:`psi`."""
    z = np.asarray(z, dtype=complex)
    return 1.0 / z - 1.0 / (z - z_k)


def pole(z, z_k, m: int):
    """``1 / (z - z_k)**m`` for integer order ``m >= 1``."""
    if int(m) != m or m < 1:
        raise BadOrder(f"pole order must be a positive integer, got {m}")
    z = np.asarray(z, dtype=complex)
    z_k = np.asarray(z_k, dtype=complex)
    _check_domain(z, z_k)
    out = 1.0 / (z - z_k) ** int(m)
    return out[()] if out.ndim == 0 else out


def binomial_pole_coefficient(m: int, n: int) -> float:
    """Coefficient S_{m,n} of ``(z_k/z)**n`` in ``z**m / (z - z_k)**m``.

    ``S_{m,0} = 1`` and ``S_{m,n} = (m+n-1)! / (n! (m-1)!)``, accumulated as a
    running product so large arguments saturate to ``inf`` instead of
    overflowing an intermediate factorial.
    """
    if int(m) != m or m < 1:
        raise BadOrder(f"pole order must be a positive integer, got {m}")
    if int(n) != n or n < 0:
        raise BadOrder(f"series index must be a non-negative integer, got {n}")
    s = 1.0
    for i in range(1, int(n) + 1):
        s *= (m - 1 + i) / i
    return s


@dataclass(frozen=True, eq=False)
class ComplexExpansionSpec:
    """Finite mixed expansion of logarithmic and pole terms.

    ``log_strengths[k]`` multiplies ``psi_k``; ``poles[m][k]`` multiplies
    ``1/(z - z_k)**m``.  Either may be absent, not both.
    """

    sources: SourceConfiguration
    log_strengths: np.ndarray | None = None
    poles: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.sources.dim != 2:
            raise ValueError("complex expansions need planar sources")
        n = self.sources.n_k
        if self.log_strengths is not None:
            ls = np.asarray(self.log_strengths, dtype=complex).reshape(-1)
            if ls.size != n:
                raise ValueError(f"need {n} log strengths, got {ls.size}")
            object.__setattr__(self, "log_strengths", ls)
        clean = {}
        for m, s in self.poles.items():
            if int(m) != m or m < 1:
                raise BadOrder(f"pole order must be a positive integer, got {m}")
            s = np.asarray(s, dtype=complex).reshape(-1)
            if s.size != n:
                raise ValueError(f"need {n} strengths for order {m}, got {s.size}")
            clean[int(m)] = s
        object.__setattr__(self, "poles", dict(sorted(clean.items())))
        if self.log_strengths is None and not self.poles:
            raise ValueError("expansion has no terms")
        strengths = [self.log_strengths] if self.log_strengths is not None else []
        strengths += list(self.poles.values())
        if not all(np.all(np.isfinite(s)) for s in strengths):
            raise ValueError("non-finite strengths")

    @property
    def nodes(self) -> np.ndarray:
        return self.sources.as_complex()

    @property
    def max_order(self) -> int:
        return max(self.poles, default=0)

    def scaled(self, factor: complex) -> "ComplexExpansionSpec":
        ls = None if self.log_strengths is None else factor * self.log_strengths
        return ComplexExpansionSpec(
            self.sources, ls, {m: factor * s for m, s in self.poles.items()}
        )

    def to_dict(self) -> dict:
        doc: dict = {"sources": self.sources.to_dict()}
        if self.log_strengths is not None:
            doc["log"] = [[float(c.real), float(c.imag)] for c in self.log_strengths]
        doc["poles"] = [
            {"k": k + 1, "m": m, "re": float(s.real), "im": float(s.imag)}
            for m, arr in self.poles.items()
            for k, s in enumerate(arr)
        ]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ComplexExpansionSpec":
        src = doc["sources"]
        sources = (
            SourceConfiguration.from_dict(src)
            if isinstance(src, dict)
            else validate_configuration(np.asarray(src, dtype=float))
        )
        n = sources.n_k
        log = doc.get("log")
        ls = None
        if log is not None:
            ls = np.array([complex(re, im) for re, im in log])
        poles: dict[int, np.ndarray] = {}
        for entry in doc.get("poles", []):
            m, k = int(entry["m"]), int(entry["k"])
            if not 1 <= k <= n:
                raise ValueError(f"pole references source {k} of {n}")
            arr = poles.setdefault(m, np.zeros(n, dtype=complex))
            arr[k - 1] += complex(entry.get("re", 0.0), entry.get("im", 0.0))
        return cls(sources, ls, poles)


def eval_expansion(spec: ComplexExpansionSpec, z):
    """Sum of all log and pole terms of ``spec`` at exterior point(s) ``z``."""
    z = np.asarray(z, dtype=complex)
    zk = spec.nodes
    _check_domain(z, zk)
    zz = z[..., None]
    total = np.zeros(zz.shape, dtype=complex)
    if spec.log_strengths is not None:
        total = total + spec.log_strengths * (-_log1p_complex(-zk / zz))
    for m, s in spec.poles.items():
        total = total + s / (zz - zk) ** m
    out = total.sum(axis=-1)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SeriesCoefficients:
    """Coefficients ``b_j`` of ``z**-j``, ``j = 1..n_max`` (``b[0]`` is ``b_1``)."""

    b: np.ndarray

    @property
    def n_max(self) -> int:
        return self.b.size

    @property
    def residue_sum(self) -> complex:
        # coefficient of 1/z; the mixed systems drop this condition
        return complex(self.b[0])

    def evaluate(self, z):
        # Horner in w = 1/z
        w = 1.0 / np.asarray(z, dtype=complex)
        acc = np.zeros_like(w)
        for bj in self.b[::-1]:
            acc = (acc + bj) * w
        return acc[()] if acc.ndim == 0 else acc


def series_coefficients(spec: ComplexExpansionSpec, n_max: int) -> SeriesCoefficients:
    """Exterior Laurent coefficients of ``spec`` up to ``z**-n_max``.

    ``b_j = sum_k [rho_k z_k^j / j + sum_m S_{m, j-m} z_k^(j-m) s_{k,m}]``
    with the pole sum restricted to ``j >= m``.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ValueError("n_max must be a positive integer")
    n_max = int(n_max)
    zk = spec.nodes
    j = np.arange(1, n_max + 1)
    b = np.zeros(n_max, dtype=complex)
    if spec.log_strengths is not None:
        b += (zk[None, :] ** j[:, None] / j[:, None]) @ spec.log_strengths
    for m, s in spec.poles.items():
        if m > n_max:
            continue
        n = np.arange(0, n_max - m + 1)
        S = np.array([binomial_pole_coefficient(m, int(i)) for i in n])
        b[m - 1:] += S * ((zk[None, :] ** n[:, None]) @ s)
    return SeriesCoefficients(b)


def _coefficient_bound(spec: ComplexExpansionSpec, j: np.ndarray) -> np.ndarray:
    r = np.abs(spec.nodes)
    bound = np.zeros(j.shape, dtype=float)
    if spec.log_strengths is not None:
        bound += (r[None, :] ** j[:, None] / j[:, None]) @ np.abs(spec.log_strengths)
    for m, s in spec.poles.items():
        shift = np.maximum(j - m, 0)
        # S_{m,n} as a float gamma ratio, vectorized
        logS = np.array(
            [math.lgamma(m + n) - math.lgamma(n + 1) - math.lgamma(m) for n in shift]
        )
        term = np.exp(logS)[:, None] * r[None, :] ** shift[:, None]
        bound += np.where(j >= m, (term @ np.abs(s)), 0.0)
    return bound


def tail_bound(spec: ComplexExpansionSpec, n_max: int, z_abs: float) -> float:
    """Upper bound on ``|sum_{j > n_max} b_j z**-j|`` for ``|z| = z_abs``.

    Uses ``|b_j| <= sum_k (|rho_k| r_k^j / j + sum_m |s_km| S_{m,j-m} r_k^(j-m))``
    summed explicitly until the terms fall below 1e-30 of the running total,
    then closes with a geometric remainder.  Conservative by construction.
    """
    q = np.abs(spec.nodes).max() / z_abs
    if q >= 1.0:
        return np.inf
    total = 0.0
    start = n_max + 1
    block = 256
    while True:
        j = np.arange(start, start + block)
        t = _coefficient_bound(spec, j) / float(z_abs) ** j
        total += float(t.sum())
        last = float(t[-1])
        if last <= 1e-30 * max(total, 1e-300) or start > 100_000:
            # ratio of successive term bounds tends to q from above
            ratio = float(t[-1] / t[-2]) if t[-2] > 0 else q
            ratio = min(max(ratio, q), 1.0 - 1e-12)
            return total + last * ratio / (1.0 - ratio)
        start += block


def truncation_order(spec: ComplexExpansionSpec, z_abs: float, rtol: float = 1e-14) -> int:
    """Smallest ``n_max`` whose tail bound is below ``rtol`` times the absolute series scale."""
    q = np.abs(spec.nodes).max() / z_abs
    if q >= 1.0:
        raise DomainViolation("series diverges: need max|z_k| < |z|")
    if q == 0.0:
        return max(spec.max_order, 1)
    n = max(int(math.ceil(math.log(rtol) / math.log(q))), spec.max_order, 1)
    j = np.arange(1, n + 1)
    scale = float((_coefficient_bound(spec, j) / float(z_abs) ** j).sum())
    while tail_bound(spec, n, z_abs) > rtol * max(scale, 1e-300):
        n = int(n * 1.25) + 1
    return n


def verify_branch_free(z_k: complex, radius: float = 1.0, samples: int = 4096) -> float:
    """Largest ``|Im psi(radius e^{i theta}, z_k)|`` over ``samples`` uniform angles.

    The theta = 0 sample is always included.  Callers compare the result with
    ``pi/2``.
    """
    if samples < 8:
        raise ValueError("need at least 8 samples")
    if abs(z_k) >= 1.0 or radius < 1.0:
        raise DomainViolation("need |z_k| < 1 <= radius")
    theta = 2.0 * np.pi * np.arange(samples) / samples
    z = radius * np.exp(1j * theta)
    return float(np.abs(psi(z, z_k).imag).max())
