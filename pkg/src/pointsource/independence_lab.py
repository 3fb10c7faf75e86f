"""Numerical checks that point-source families are linearly independent.

Three complementary probes per family ("kind"):

* the moment test: the square matrix of power-series conditions must be
  injective; its smallest singular value is the primary arbiter;
* the sampled Gram test: basis functions evaluated on a circle or sphere
  outside the unit ball, Gram matrix of the sample vectors;
* coefficient recovery: fit the basis to sampled values of a known
  expansion and compare strengths.

Verdicts are ``independent`` or ``flagged``; finite precision can exhibit
near-dependence but never prove dependence.

Kinds
-----
complex plane: ``log``, ``pole<m>`` (m >= 1), ``mixed12`` (simple plus
second-order poles), ``log-pole`` (logs plus simple poles);
R^2: ``mass2``, ``dipole2``, ``multipole2-<n>`` (n = 2, 3);
R^3: ``mass3``, ``dipole3``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple

import numpy as np
from scipy.spatial.transform import Rotation

from . import structured_matrices as sm
from .complex_basis import ComplexExpansionSpec, eval_expansion, pole, psi
from .errors import InsufficientSamples
from .geometry import (
    SourceConfiguration,
    find_preferred_axis,
    fibonacci_sphere,
    project_to_plane,
    random_configuration,
    rotation_to_z,
)
from .real_basis import (
    RealExpansionSpec2,
    RealExpansionSpec3,
    eval_expansion_r2,
    eval_expansion_r3,
    multipole_r2,
    psi_r2,
)

DEFAULT_RADIUS = 2.0
RECOVERY_TOL = 1e-8
OPEN_KINDS = ("mixed12", "log-pole")
_POLE_RE = re.compile(r"^pole(\d+)$")
_MULTI_RE = re.compile(r"^multipole2-([23])$")


def parse_kind(kind: str) -> tuple[str, int]:
    """Split a kind tag into ``(family, order)``; order is 0 when meaningless."""
    if kind in ("log", "mixed12", "log-pole", "mass2", "dipole2", "mass3", "dipole3"):
        return kind, 0
    if m := _POLE_RE.match(kind):
        order = int(m.group(1))
        if order >= 1:
            return "pole", order
    if m := _MULTI_RE.match(kind):
        return "multipole2", int(m.group(1))
    raise ValueError(f"unknown kind {kind!r}")


def kind_dim(kind: str) -> int:
    fam, _ = parse_kind(kind)
    return 3 if fam in ("mass3", "dipole3") else 2


def basis_count(kind: str, n_k: int) -> int:
    """Number of (complex or real) unknowns of the family."""
    fam, _ = parse_kind(kind)
    per = {"mixed12": 2, "log-pole": 2, "dipole2": 2, "multipole2": 2, "dipole3": 3}.get(fam, 1)
    return per * n_k


# ---------------------------------------------------------------------------
# moment test


def _realify(M: np.ndarray) -> np.ndarray:
    # complex matrix acting on real unknowns
    return np.vstack([M.real, M.imag])


def _complex_as_real_pairs(M: np.ndarray) -> np.ndarray:
    """Complex linear map on mu = a + ib written as a real map on (a, b) pairs."""
    Mr, Mi = M.real, M.imag
    return np.block([[Mr, -Mi], [Mi, Mr]])


def moment_matrix(config: SourceConfiguration, kind: str) -> np.ndarray:
    """Square (or tall, for real unknowns) matrix whose injectivity is the uniqueness claim."""
    fam, order = parse_kind(kind)
    if fam in ("mass3", "dipole3"):
        return _moment_matrix_3d(config, fam)
    z = config.as_complex()
    if fam == "log":
        return sm.log_moment_matrix(z).entries
    if fam == "pole":
        return sm.pole_moment_block(z, order).entries
    if fam == "mixed12":
        return sm.mixed_block_system(z, ("pole1", "pole2")).entries
    if fam == "log-pole":
        return sm.log_pole_block(z).entries
    if fam == "mass2":
        return _realify(sm.log_moment_matrix(z).entries)
    if fam == "dipole2":
        # D = (-alpha, -beta) with mu = alpha + i beta
        return -_complex_as_real_pairs(sm.vandermonde(z).entries)
    # planar multipoles: (a, b) = diag scale of (alpha, beta)
    sa, sb = {2: (1.0, 1.0), 3: (-0.5, 0.5)}[order]
    P = _complex_as_real_pairs(sm.pole_moment_block(z, order).entries)
    n = len(z)
    return P @ np.diag(np.r_[np.full(n, 1 / sa), np.full(n, 1 / sb)])


def _moment_matrix_3d(config: SourceConfiguration, fam: str) -> np.ndarray:
    # integrating along a preferred axis turns a vanishing 3D expansion into a
    # vanishing planar one on the projected sources
    axis = find_preferred_axis(config.points)
    proj, _ = project_to_plane(config, axis)
    z = proj.as_complex()
    if fam == "mass3":
        return _realify(sm.log_moment_matrix(z).entries)
    # each axis sees only the in-plane dipole components; two axes see all three
    axis2 = find_preferred_axis(config.points, extra_dirs=np.vstack([axis, -axis]), delta=0.1)
    blocks = []
    for ax in (axis, axis2):
        proj, _ = project_to_plane(config, ax)
        R = rotation_to_z(ax)[:2]  # 3D -> in-plane components
        n = proj.n_k
        P = np.zeros((2 * n, 3 * n))
        for k in range(n):
            P[k, 3 * k:3 * k + 3] = R[0]
            P[n + k, 3 * k:3 * k + 3] = R[1]
        G = -_complex_as_real_pairs(sm.vandermonde(proj.as_complex()).entries)
        blocks.append(G @ P)
    return np.vstack(blocks)


def moment_rank_test(config: SourceConfiguration, kind: str) -> tuple[float, float]:
    """``(sigma_min, sigma_max)`` of the family's moment matrix."""
    s = sm.singular_values(moment_matrix(config, kind))
    return float(s[-1]), float(s[0])


# ---------------------------------------------------------------------------
# sampled Gram test


def sample_points(dim: int, n_samples: int, radius: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Circle: equispaced angles with a random phase.  Sphere: a randomly rotated Fibonacci grid."""
    rng = np.random.default_rng(0) if rng is None else rng
    if dim == 2:
        th = 2 * np.pi * (np.arange(n_samples) + rng.uniform()) / n_samples
        return radius * np.column_stack([np.cos(th), np.sin(th)])
    rot = Rotation.random(random_state=rng)
    return radius * rot.apply(fibonacci_sphere(n_samples))


def basis_matrix(config: SourceConfiguration, kind: str, X: np.ndarray) -> np.ndarray:
    """Columns are the family's basis functions evaluated at the rows of ``X``."""
    fam, order = parse_kind(kind)
    P = config.points
    if fam in ("mass3", "dipole3"):
        d = X[:, None, :] - P[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        if fam == "mass3":
            return 1.0 / r
        g = -d / r[..., None] ** 3
        return g.reshape(len(X), -1)
    if fam in ("mass2", "dipole2", "multipole2"):
        XX = X[:, None, :]
        if fam == "mass2":
            return psi_r2(XX, P)
        A, B = multipole_r2(XX, P, 1 if fam == "dipole2" else order)
        return np.hstack([A, B])
    z = (X[:, 0] + 1j * X[:, 1])[:, None]
    zk = config.as_complex()[None, :]
    cols = {
        "log": lambda: [psi(z, zk)],
        "pole": lambda: [pole(z, zk, order)],
        "mixed12": lambda: [pole(z, zk, 1), pole(z, zk, 2)],
        "log-pole": lambda: [psi(z, zk), pole(z, zk, 1)],
    }[fam]()
    return np.hstack(cols)


def sampled_gram_test(config: SourceConfiguration, kind: str, n_samples: int,
                      radius: float = DEFAULT_RADIUS, rng: np.random.Generator | None = None) -> float:
    """Smallest eigenvalue of the Gram matrix ``Phi^H Phi`` of sampled basis functions.

    Computed as the squared smallest singular value of ``Phi`` so small
    eigenvalues keep their accuracy.
    """
    return gram_spectrum(config, kind, n_samples, radius, rng)[0]


def gram_spectrum(config: SourceConfiguration, kind: str, n_samples: int,
                  radius: float = DEFAULT_RADIUS, rng: np.random.Generator | None = None) -> tuple[float, float]:
    """``(lambda_min, lambda_max)`` of the sampled Gram matrix."""
    nb = basis_count(kind, config.n_k)
    if n_samples < 2 * nb:
        raise InsufficientSamples(f"{n_samples} samples for {nb} basis functions; need >= {2 * nb}")
    if radius <= 1.0:
        raise ValueError("sampling radius must exceed 1")
    X = sample_points(config.dim, n_samples, radius, rng)
    s = np.linalg.svd(basis_matrix(config, kind, X), compute_uv=False)
    return float(s[-1] ** 2), float(s[0] ** 2)


# ---------------------------------------------------------------------------
# coefficient recovery


class Recovery(NamedTuple):
    spec: object
    max_error: float
    rank: int
    cond: float
    rank_deficient: bool


def _spec_layout(spec):
    """(kind tag, flat strength vector, rebuild function) for a spec."""
    if isinstance(spec, ComplexExpansionSpec):
        parts, orders = [], []
        if spec.log_strengths is not None:
            parts.append(spec.log_strengths)
        for m, s in spec.poles.items():
            parts.append(s)
            orders.append(m)
        has_log = spec.log_strengths is not None
        n = spec.sources.n_k

        def rebuild(x):
            x = np.asarray(x, dtype=complex)
            i = n if has_log else 0
            poles = {m: x[i + j * n:i + (j + 1) * n] for j, m in enumerate(orders)}
            return ComplexExpansionSpec(spec.sources, x[:n] if has_log else None, poles)

        def design(X):
            z = (X[:, 0] + 1j * X[:, 1])[:, None]
            zk = spec.nodes[None, :]
            cols = [psi(z, zk)] if has_log else []
            cols += [pole(z, zk, m) for m in orders]
            return np.hstack(cols)

        return np.concatenate(parts), rebuild, design, lambda X: eval_expansion(spec, X[:, 0] + 1j * X[:, 1])

    if isinstance(spec, RealExpansionSpec2):
        n = spec.sources.n_k
        cfg = spec.sources
        # (basis kind, strength array, slot) with slot None/"dipoles"/order
        fams = [("mass2", spec.masses[:, None], None), ("dipole2", spec.dipoles, "dipoles")]
        fams += [(f"multipole2-{o}" if o > 1 else "dipole2", ab, o) for o, ab in spec.multipoles.items()]
        active = [f for f in fams if np.any(f[1])] or fams[:1]
        x0 = np.concatenate([a.T.ravel() for _, a, _ in active])

        def rebuild(x):
            masses, dip, mp, i = np.zeros(n), np.zeros((n, 2)), {}, 0
            for _, a, slot in active:
                w = a.shape[1]
                block = x[i:i + w * n].reshape(w, n).T
                i += w * n
                if slot is None:
                    masses = block[:, 0]
                elif slot == "dipoles":
                    dip = block
                else:
                    mp[slot] = block
            return RealExpansionSpec2(cfg, masses, dip, mp)

        def design(X):
            return np.hstack([basis_matrix(cfg, k, X) for k, _, _ in active])

        return x0, rebuild, design, lambda X: eval_expansion_r2(spec, X)

    if isinstance(spec, RealExpansionSpec3):
        n = spec.sources.n_k
        cfg = spec.sources
        x0 = np.concatenate([spec.masses, spec.dipoles.ravel()])

        def rebuild(x):
            return RealExpansionSpec3(cfg, x[:n], x[n:].reshape(n, 3))

        def design(X):
            return np.hstack([basis_matrix(cfg, "mass3", X), basis_matrix(cfg, "dipole3", X)])

        return x0, rebuild, design, lambda X: eval_expansion_r3(spec, X)

    raise TypeError(f"unsupported spec type {type(spec).__name__}")


def recover_coefficients(spec, n_samples: int, radius: float = DEFAULT_RADIUS, noise: float = 0.0,
                         rng: np.random.Generator | None = None) -> Recovery:
    """Least-squares refit of the spec's own basis to its sampled values.

    ``rank_deficient`` is set (not raised) when the design matrix has
    numerical rank below the unknown count; the fit is still returned.
    Real specs fit only the families that carry nonzero strengths (masses
    alone for an all-zero spec); mixing all planar families in one design
    would test a different, much worse conditioned, question.
    """
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = np.random.default_rng(0) if rng is None else rng
    x0, rebuild, design, values = _spec_layout(spec)
    if n_samples < x0.size:
        raise InsufficientSamples(f"{n_samples} samples for {x0.size} unknowns")
    dim = 3 if isinstance(spec, RealExpansionSpec3) else 2
    X = sample_points(dim, n_samples, radius, rng)
    A = design(X)
    y = np.asarray(values(X))
    if noise > 0:
        if np.iscomplexobj(y):
            y = y + noise * (rng.normal(size=y.shape) + 1j * rng.normal(size=y.shape)) / math.sqrt(2)
        else:
            y = y + noise * rng.normal(size=y.shape)
    if not np.any(y):
        # null right-hand side: the minimum-norm solution is exactly zero
        x = np.zeros_like(x0)
        s = np.linalg.svd(A, compute_uv=False)
    else:
        x, _, _, s = np.linalg.lstsq(A, y, rcond=None)
    tol = s[0] * max(A.shape) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    cond = math.inf if s[-1] == 0 else float(s[0] / s[-1])
    err = float(np.max(np.abs(x - x0))) if x0.size else 0.0
    return Recovery(rebuild(x), err, rank, cond, rank < x0.size)


def random_spec_for_kind(config: SourceConfiguration, kind: str, rng: np.random.Generator):
    """Unit-scale random strengths for the family (used by recovery checks)."""
    fam, order = parse_kind(kind)
    n = config.n_k

    def cplx():
        return rng.normal(size=n) + 1j * rng.normal(size=n)

    if fam == "log":
        return ComplexExpansionSpec(config, cplx(), {})
    if fam == "pole":
        return ComplexExpansionSpec(config, None, {order: cplx()})
    if fam == "mixed12":
        return ComplexExpansionSpec(config, None, {1: cplx(), 2: cplx()})
    if fam == "log-pole":
        return ComplexExpansionSpec(config, cplx(), {1: cplx()})
    if fam == "mass2":
        return RealExpansionSpec2(config, rng.normal(size=n))
    if fam == "dipole2":
        return RealExpansionSpec2(config, None, rng.normal(size=(n, 2)))
    if fam == "multipole2":
        return RealExpansionSpec2(config, None, None, {order: rng.normal(size=(n, 2))})
    if fam == "mass3":
        return RealExpansionSpec3(config, rng.normal(size=n))
    return RealExpansionSpec3(config, None, rng.normal(size=(n, 3)))


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class IndependenceVerdict:
    kind: str
    n_k: int
    seed: int
    sigma_min_moment: float
    sigma_min_gram: float
    recovered_error: float
    verdict: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def verify_configuration(config: SourceConfiguration, kind: str, seed: int,
                         radius: float = DEFAULT_RADIUS, n_samples: int | None = None,
                         rtol: float = sm.SINGULAR_RTOL, recovery_tol: float = RECOVERY_TOL
                         ) -> IndependenceVerdict:
    """Run all three probes on one configuration.

    Independent iff the moment and Gram singular values both clear ``rtol``
    relative to their largest, and the noiseless refit recovers the strengths
    within ``recovery_tol`` scaled by the design conditioning beyond 1e6.
    """
    rng = np.random.default_rng(seed)
    nb = basis_count(kind, config.n_k)
    n_samples = max(64, 4 * nb) if n_samples is None else n_samples

    s_min, s_max = moment_rank_test(config, kind)
    g_min, g_max = gram_spectrum(config, kind, n_samples, radius, rng)
    rec = recover_coefficients(random_spec_for_kind(config, kind, rng), n_samples, radius, 0.0, rng)
    tol = recovery_tol * max(1.0, rec.cond * 1e-6)

    ok = (
        s_min > rtol * s_max
        and math.sqrt(g_min) > rtol * math.sqrt(g_max)
        and rec.max_error < tol
        and not rec.rank_deficient
    )
    return IndependenceVerdict(kind, config.n_k, int(seed), s_min, g_min, rec.max_error,
                               "independent" if ok else "flagged")


def run_verification(kind: str, n_k: int, trials: int, seed: int, radius: float = DEFAULT_RADIUS,
                     n_samples: int | None = None) -> list[IndependenceVerdict]:
    """Trial t uses seed ``seed + t`` for both the configuration and the strengths."""
    parse_kind(kind)
    if n_k < 1:
        raise ValueError("n_k must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = []
    for t in range(trials):
        s = seed + t
        cfg = random_configuration(np.random.default_rng([s, 0]), n_k, dim=kind_dim(kind))
        out.append(verify_configuration(cfg, kind, s, radius, n_samples))
    return out


def write_verdicts(verdicts: Iterable[IndependenceVerdict], fh) -> None:
    for v in verdicts:
        fh.write(v.to_json() + "\n")
