"""Conservation meters and analysis oracles for matrix trajectories.

The flow Q' = S*Q with skew-symmetric S conserves the energy trace(Q^T Q),
the full Gram matrix Q^T Q, and det(Q).  The meters here measure how far a
numerical trajectory drifts from those laws; the forecast and order
estimators provide closed-form and asymptotic cross-checks that are
independent of the stepping code they judge.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import det


class IndeterminateOrderError(ArithmeticError):
    """All sampled errors sit at rounding level; no order can be fitted."""


@dataclass(frozen=True)
class StepRecord:
    """Snapshot of one recorded step.

    ``energy`` is trace(Q^T Q); ``energy_err`` and ``det_drift`` are signed
    differences against the first record of the trajectory; ``orth_defect``
    is ``||Q^T Q - I||_F``.
    """

    t: float
    energy: float
    energy_err: float
    orth_defect: float
    det_drift: float
    q: np.ndarray | None = None


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples of one propagation run."""

    method: str
    step: float
    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        times = [r.t for r in self.records]
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise ValueError("record times must be strictly increasing")

    def __len__(self):
        return len(self.records)

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    @property
    def energies(self):
        return np.array([r.energy for r in self.records])

    @property
    def energy_errors(self):
        return np.array([r.energy_err for r in self.records])

    @property
    def orth_defects(self):
        return np.array([r.orth_defect for r in self.records])

    @property
    def det_drifts(self):
        return np.array([r.det_drift for r in self.records])


def energy(q):
    """Energy trace(q^T q), i.e. the sum of squared entries."""
    q = np.asarray(q, dtype=float)
    return float(np.sum(q * q))


def orthogonality_defect(q):
    """Distance from the orthogonal group: ||q^T q - I||_F."""
    q = np.asarray(q, dtype=float)
    return float(np.linalg.norm(q.T @ q - np.eye(q.shape[0])))


def det_drift(q, det0):
    """Signed determinant drift det(q) - det0."""
    return det(q) - float(det0)


def pseudo_symplectic_defect(phi, s):
    """How far a transfer matrix is from satisfying phi^T S phi = S.

    For one-step maps Q -> phi @ Q this measures (in Frobenius norm) the
    violation of the two-form conservation that symplectic tableaus
    guarantee.  Accepts a TransferMatrix or a bare array for ``phi``.
    """
    p = phi.phi if hasattr(phi, "phi") else np.asarray(phi, dtype=float)
    m = s.mat
    return float(np.linalg.norm(p.T @ m @ p - m))


def rk2_energy_forecast(theta_sq, h, k, m=3):
    """Closed-form energy after k explicit-RK2 steps on a single-axis problem.

    For Q0 = I and a 3x3 rank-2 skew coefficient whose nonzero eigenvalue
    pair is +/- i*theta, the RK2 one-step map phi = I + h*S + (h^2/2) S^2
    satisfies phi^T phi = I + (h^4/4) S^4, so the energy after k steps is
    ``(m - 2) + 2 * (1 + h^4 * theta_sq^2 / 4)**k``.

    ``theta_sq`` is the squared rate norm ||omega||^2, supplied by the
    caller so the forecast stays independent of the matrix code it checks.
    Valid only for the single-rotation-axis case.
    """
    theta_sq = float(theta_sq)
    h = float(h)
    k = int(k)
    m = int(m)
    if theta_sq < 0:
        raise ValueError("theta_sq must be nonnegative")
    if h <= 0:
        raise ValueError("step must be positive")
    if k < 0:
        raise ValueError("step count must be nonnegative")
    growth = 1.0 + (h**4) * theta_sq**2 / 4.0
    return (m - 2) + 2.0 * growth**k


def convergence_order(method, s, q0, t_end, steps):
    """Least-squares slope of log global error against log step size.

    For each step size the problem is propagated from ``q0`` to ``t_end``
    and the terminal state is compared (Frobenius norm) against the exact
    flow ``exp((t_end - t0) S) @ q0``.  Raises
    :class:`IndeterminateOrderError` when every error is at rounding level,
    since a fit through noise would be meaningless.
    """
    from .integrators import IntegratorConfig, propagate
    from .linalg import expm

    steps = [float(h) for h in steps]
    if len(steps) < 3:
        raise ValueError("need at least 3 step sizes for an order fit")
    if any(h <= 0 for h in steps):
        raise ValueError("step sizes must be positive")

    reference = expm(s, t_end - q0.t) @ q0.q
    errors = []
    for h in steps:
        config = IntegratorConfig(method=method, step=h)
        traj = propagate(config, s, q0, t_end, record_every=2**62)
        errors.append(float(np.linalg.norm(traj.records[-1].q - reference)))

    if max(errors) < 1e-14:
        raise IndeterminateOrderError(
            "all errors below 1e-14; order cannot be determined"
        )
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)
