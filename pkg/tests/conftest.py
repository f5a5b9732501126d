"""Shared test helpers: independent oracles and random-matrix samplers."""

import mpmath as mp
import numpy as np

# reference problem used across the suite: rate vector, its hat matrix,
# squared rate norm, step and horizon of the long benchmark run
BENCH_RATE = np.array([0.0, -0.1, -2.0])
BENCH_MAT = np.array(
    [
        [0.0, 2.0, -0.1],
        [-2.0, 0.0, 0.0],
        [0.1, 0.0, 0.0],
    ]
)
BENCH_THETA_SQ = float(BENCH_RATE @ BENCH_RATE)
BENCH_STEP = 0.1
BENCH_T_END = 2000.0


def series_expm(x, dps=60, max_terms=2000):
    """Brute-force matrix exponential: plain power series in mpmath.

    Deliberately shares nothing with the library implementation (no
    scaling-and-squaring, no closed forms); precision comes from summing in
    high-precision arithmetic until the terms vanish.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    with mp.workdps(dps):
        xm = mp.matrix(x.tolist())
        acc = mp.eye(n)
        term = mp.eye(n)
        cutoff = mp.mpf(10) ** (-dps + 5)
        for k in range(1, max_terms):
            term = term * xm / k
            acc = acc + term
            if mp.norm(term, mp.inf) < cutoff:
                break
        else:
            raise RuntimeError("series did not converge; raise dps/max_terms")
        return np.array(acc.tolist(), dtype=float)


def mp_rk2_energy(theta_sq, h, k, m=3, dps=50):
    """High-precision recomputation of the explicit-RK2 energy growth."""
    with mp.workdps(dps):
        growth = 1 + mp.mpf(h) ** 4 * mp.mpf(theta_sq) ** 2 / 4
        return float((m - 2) + 2 * growth**k)


def random_skew(rng, dim, norm=None):
    """Random dense skew-symmetric matrix, optionally scaled to a spectral norm."""
    a = rng.standard_normal((dim, dim))
    s = (a - a.T) / 2.0
    if norm is not None:
        current = np.linalg.norm(s, 2)
        if current == 0.0:
            s = np.zeros_like(s)
            if dim >= 2:
                s[0, 1], s[1, 0] = norm, -norm
        else:
            s *= norm / current
    return s


def random_orthogonal(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))
