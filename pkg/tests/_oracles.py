"""Independent high-precision references built directly from the defining formulas.

Nothing here calls into the package; every matrix is assembled entry by entry
in mpmath and only converted to numpy at the end.
"""

from __future__ import annotations

import mpmath
import numpy as np

DPS = 60


def _mp(z):
    return mpmath.mpc(complex(z).real, complex(z).imag)


def vandermonde_mp(nodes, rows=None):
    z = [_mp(v) for v in nodes]
    rows = len(z) if rows is None else rows
    return mpmath.matrix([[zk**i for zk in z] for i in range(rows)])


def det_mp(nodes) -> complex:
    with mpmath.workdps(DPS):
        return complex(mpmath.det(vandermonde_mp(nodes)))


def to_numpy(M) -> np.ndarray:
    return np.array([[complex(M[i, j]) for j in range(M.cols)] for i in range(M.rows)])


def c_literal(nodes, m: int = 1) -> np.ndarray:
    """``C = p I - N + U^{-1} N U``, ``U = G X^p G^{-1}``, ``p = m N_k``, straight from the definition."""
    with mpmath.workdps(DPS):
        n = len(nodes)
        p = m * n
        z = [_mp(v) for v in nodes]
        G = vandermonde_mp(nodes)
        Xp = mpmath.diag([zk**p for zk in z])
        N = mpmath.diag(list(range(1, n + 1)))
        U = G * Xp * G**-1
        C = p * mpmath.eye(n) - N + U**-1 * N * U
        return to_numpy(C)


def bracket_literal(nodes, m: int = 1) -> np.ndarray:
    """``p I - G^{-1}NG + X^{-p} G^{-1}NG X^p`` in mpmath."""
    with mpmath.workdps(DPS):
        n = len(nodes)
        p = m * n
        z = [_mp(v) for v in nodes]
        G = vandermonde_mp(nodes)
        N = mpmath.diag(list(range(1, n + 1)))
        M = G**-1 * N * G
        Xp = mpmath.diag([zk**p for zk in z])
        Xm = mpmath.diag([zk**-p for zk in z])
        return to_numpy(p * mpmath.eye(n) - M + Xm * M * Xp)


def min_singular_mp(A) -> float:
    with mpmath.workdps(DPS):
        M = mpmath.matrix([[_mp(v) for v in row] for row in np.asarray(A)])
        s = mpmath.svd_c(M, compute_uv=False)
        return float(min(abs(v) for v in s))


def psi_mp(z, zk) -> complex:
    with mpmath.workdps(DPS):
        return complex(mpmath.log(_mp(z) / (_mp(z) - _mp(zk))))


def expansion_mp(nodes, log_strengths, poles, z) -> complex:
    """Direct evaluation of a mixed log/pole expansion at one point."""
    with mpmath.workdps(DPS):
        zz = _mp(z)
        total = mpmath.mpc(0)
        for k, zk in enumerate(nodes):
            zk = _mp(zk)
            if log_strengths is not None:
                total += _mp(log_strengths[k]) * mpmath.log(zz / (zz - zk))
            for m, s in poles.items():
                total += _mp(s[k]) / (zz - zk) ** m
        return complex(total)
