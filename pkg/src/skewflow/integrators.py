"""Fixed-step integrators for the linear matrix flow Q' = S*Q.

Three step families are provided: the general s-stage Runge-Kutta step
driven by a Butcher tableau, and two closed forms obtained by eliminating
the stage equations for specific tableaus — the Cayley-transform implicit
midpoint step and the explicit second-order step.  Every scheme is linear
in Q, which is what makes transfer-matrix extraction (stepping the
identity) exact.
"""

from dataclasses import dataclass

import numpy as np

from .diagnostics import StepRecord, Trajectory, energy, orthogonality_defect
from .linalg import OrthogonalState, SingularMatrixError, det, solve_linear
from .tableaus import ButcherTableau

CLOSED_FORM_METHODS = ("cayley-midpoint", "rk2-closed")


class StageSolveError(ValueError):
    """The linear stage system could not be solved."""


class ConvergenceError(ValueError):
    """Fixed-point stage iteration failed to converge; carries the residual."""

    def __init__(self, residual, iterations):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(
            f"stage iteration did not converge within {iterations} iterations "
            f"(last residual {self.residual:.3e})"
        )


@dataclass(frozen=True)
class IntegratorConfig:
    """Method selection plus fixed step size and stage-solver options.

    ``method`` is a :class:`ButcherTableau` or one of the closed-form labels
    in :data:`CLOSED_FORM_METHODS`.  The implicit stage system is solved
    directly by default; ``stage_solver="fixed-point"`` switches to simple
    iteration (useful for cross-validation, converges for small h*||S||).
    """

    method: object
    step: float
    stage_solver: str = "direct"
    fp_tol: float = 1e-14
    fp_max_iters: int = 100

    def __post_init__(self):
        if not (isinstance(self.method, ButcherTableau) or self.method in CLOSED_FORM_METHODS):
            raise ValueError(
                f"method must be a ButcherTableau or one of {CLOSED_FORM_METHODS}, "
                f"got {self.method!r}"
            )
        if not (np.isfinite(self.step) and self.step > 0):
            raise ValueError("step must be positive and finite")
        if self.stage_solver not in ("direct", "fixed-point"):
            raise ValueError(f"unknown stage solver {self.stage_solver!r}")
        if self.fp_tol <= 0:
            raise ValueError("fixed-point tolerance must be positive")
        if self.fp_max_iters < 1:
            raise ValueError("fixed-point iteration limit must be >= 1")


@dataclass(frozen=True)
class TransferMatrix:
    """One-step map phi with Q_next = phi @ Q, plus its provenance."""

    phi: np.ndarray
    method: str
    step: float


def method_label(method):
    """Human-readable label for a method object."""
    if isinstance(method, ButcherTableau):
        return method.name or f"rk-{method.stages}-stage"
    return str(method)


def _apply_cayley(m, q, h):
    # (I - (h/2) S)^-1 (I + (h/2) S) Q via one linear solve, never inversion
    n = m.shape[0]
    eye = np.eye(n)
    rhs = q + (h / 2.0) * (m @ q)
    try:
        return solve_linear(eye - (h / 2.0) * m, rhs)
    except SingularMatrixError as exc:
        raise StageSolveError(f"Cayley step failed: {exc}") from exc


def _apply_rk2_closed(m, q, h):
    sq = m @ q
    return q + h * sq + (h * h / 2.0) * (m @ sq)


def _apply_tableau(tab, m, q, h, stage_solver, fp_tol, fp_max_iters):
    s = tab.stages
    a, b = tab.a, tab.b
    if tab.is_explicit:
        sy = [None] * s
        for i in range(s):
            yi = q.copy()
            for j in range(i):
                if a[i, j] != 0.0:
                    yi += (h * a[i, j]) * sy[j]
            sy[i] = m @ yi
    elif stage_solver == "direct":
        dim = m.shape[0]
        system = np.eye(s * dim) - h * np.kron(a, m)
        rhs = np.tile(q, (s, 1))
        try:
            stacked = solve_linear(system, rhs)
        except SingularMatrixError as exc:
            raise StageSolveError(f"stacked stage system is singular: {exc}") from exc
        sy = [m @ stacked[i * dim : (i + 1) * dim] for i in range(s)]
    else:
        sy = _fixed_point_stages(tab, m, q, h, fp_tol, fp_max_iters)

    out = q.copy()
    for i in range(s):
        if b[i] != 0.0:
            out += (h * b[i]) * sy[i]
    return out


def _fixed_point_stages(tab, m, q, h, tol, max_iters):
    s = tab.stages
    a = tab.a
    scale = max(1.0, float(np.linalg.norm(q)))
    y = [q.copy() for _ in range(s)]
    residual = np.inf
    for _ in range(max_iters):
        sy = [m @ yi for yi in y]
        new = []
        for i in range(s):
            yi = q.copy()
            for j in range(s):
                if a[i, j] != 0.0:
                    yi += (h * a[i, j]) * sy[j]
            new.append(yi)
        residual = max(float(np.linalg.norm(n_ - o)) for n_, o in zip(new, y))
        y = new
        if residual <= tol * scale:
            return [m @ yi for yi in y]
    raise ConvergenceError(residual, max_iters)


def _resolve(method, stage_solver="direct", fp_tol=1e-14, fp_max_iters=100):
    """Return (label, apply(m, q, h)) for a method object."""
    if isinstance(method, ButcherTableau):
        def apply_fn(m, q, h):
            return _apply_tableau(method, m, q, h, stage_solver, fp_tol, fp_max_iters)

        return method_label(method), apply_fn
    if method == "cayley-midpoint":
        return method, _apply_cayley
    if method == "rk2-closed":
        return method, _apply_rk2_closed
    raise ValueError(
        f"unknown method {method!r}; expected a ButcherTableau or one of "
        f"{CLOSED_FORM_METHODS}"
    )


def _require_step(h):
    if not (np.isfinite(h) and h > 0):
        raise ValueError("step must be positive and finite")


def rk_step(tableau, s, q, h, stage_solver="direct", fp_tol=1e-14, fp_max_iters=100):
    """One Runge-Kutta step for Q' = S*Q.

    The stages satisfy ``Y_i = Q + h sum_j a_ij S Y_j`` and the update is
    ``Q + h sum_i b_i S Y_i``.  Explicit tableaus are evaluated by forward
    substitution; implicit tableaus solve the stacked linear stage system
    ``(I - h A (x) S)`` once per step (all columns of Q share the
    factorization), or iterate to the same fixed point when requested.

    Parameters
    ----------
    tableau : ButcherTableau
    s : SkewMatrix
    q : OrthogonalState
    h : float
        Step size, > 0.

    Returns
    -------
    OrthogonalState
        The state advanced to ``q.t + h``.
    """
    _require_step(h)
    out = _apply_tableau(tableau, s.mat, q.q, h, stage_solver, fp_tol, fp_max_iters)
    return OrthogonalState(out, q.t + h)


def cayley_step(s, q, h):
    """Implicit midpoint step in closed form: the Cayley transform of S.

    Computes ``(I - (h/2)S)^-1 (I + (h/2)S) Q`` with a linear solve.  For a
    genuinely skew S the system matrix has eigenvalues ``1 - i*h*theta/2``
    and is nonsingular for every real h, so no step-size restriction
    applies; the map is orthogonal and preserves the Gram matrix of Q up to
    rounding.
    """
    _require_step(h)
    return OrthogonalState(_apply_cayley(s.mat, q.q, h), q.t + h)


def rk2_closed_step(s, q, h):
    """Explicit second-order step in closed form: (I + hS + (h^2/2)S^2) Q."""
    _require_step(h)
    return OrthogonalState(_apply_rk2_closed(s.mat, q.q, h), q.t + h)


def transfer_matrix(method, s, h, stage_solver="direct", fp_tol=1e-14, fp_max_iters=100):
    """Extract the one-step map phi by stepping the identity.

    Valid because every implemented scheme is linear in Q, so
    ``step(Q) == phi @ Q`` exactly (to rounding) for any Q.
    """
    _require_step(h)
    label, apply_fn = _resolve(method, stage_solver, fp_tol, fp_max_iters)
    phi = apply_fn(s.mat, np.eye(s.dim), h)
    phi.setflags(write=False)
    return TransferMatrix(phi=phi, method=label, step=float(h))


def adjoint_defect(method, s, h, stage_solver="direct", fp_tol=1e-14, fp_max_iters=100):
    """Symmetry meter ``||phi(h) @ phi(-h) - I||_F``.

    A method equal to its adjoint (phi(-h)^-1) is symmetric and yields zero
    up to rounding; the Cayley midpoint is, the explicit RK2 map is not.
    """
    _require_step(h)
    _, apply_fn = _resolve(method, stage_solver, fp_tol, fp_max_iters)
    eye = np.eye(s.dim)
    forward = apply_fn(s.mat, eye, h)
    backward = apply_fn(s.mat, eye, -h)
    return float(np.linalg.norm(forward @ backward - eye))


def _n_steps(t0, t_end, h):
    # small slack so an interval that is a multiple of h up to rounding
    # does not grow a spurious extra step
    n = int(np.ceil((t_end - t0) / h - 1e-9))
    return max(n, 1)


def _march(apply_fn, m, q, t0, t_end, h, visit=None):
    """Advance q from t0 to t_end with fixed step h (last step shrunk).

    Times are recomputed as ``t0 + k*h`` from the integer step index so a
    long run does not accumulate additive drift; the final step lands
    exactly on ``t_end``.  ``visit(k, t, q)`` is called after each step.
    """
    n = _n_steps(t0, t_end, h)
    for k in range(1, n + 1):
        if k < n:
            hk = h
            t = t0 + k * h
        else:
            hk = t_end - (t0 + (n - 1) * h)
            t = t_end
        q = apply_fn(m, q, hk)
        if visit is not None:
            visit(k, t, q)
    return q


def propagate(config, s, q0, t_end, record_every=1):
    """Propagate a state to ``t_end`` with a fixed step, recording meters.

    A :class:`~skewflow.diagnostics.StepRecord` is emitted for the initial
    state, after every ``record_every``-th step, and for the final state.
    Energy and determinant drifts are measured against the first record.

    Parameters
    ----------
    config : IntegratorConfig
    s : SkewMatrix
    q0 : OrthogonalState
        Starting state; ``t_end`` must exceed ``q0.t``.
    t_end : float
    record_every : int, optional

    Returns
    -------
    Trajectory
    """
    t_end = float(t_end)
    if not np.isfinite(t_end) or t_end <= q0.t:
        raise ValueError(f"t_end ({t_end}) must exceed the starting time ({q0.t})")
    record_every = int(record_every)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if s.dim != q0.dim:
        raise ValueError(
            f"coefficient dimension {s.dim} does not match state dimension {q0.dim}"
        )

    label, apply_fn = _resolve(
        config.method, config.stage_solver, config.fp_tol, config.fp_max_iters
    )
    e0 = energy(q0.q)
    det0 = det(q0.q)

    def make_record(t, q):
        en = energy(q)
        return StepRecord(
            t=float(t),
            energy=en,
            energy_err=en - e0,
            orth_defect=orthogonality_defect(q),
            det_drift=det(q) - det0,
            q=q,
        )

    records = [make_record(q0.t, q0.q)]
    n = _n_steps(q0.t, t_end, config.step)

    def visit(k, t, q):
        if k % record_every == 0 or k == n:
            q.setflags(write=False)
            records.append(make_record(t, q))

    _march(apply_fn, s.mat, q0.q, q0.t, t_end, config.step, visit)
    return Trajectory(method=label, step=config.step, records=tuple(records))
