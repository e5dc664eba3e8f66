"""Numerical calculus substrate.

Smooth-map handles over flat coordinates, central finite differences,
dense linear solves and a damped Newton iteration. Everything downstream
(connections, discrete Euler-Lagrange residuals, reduction) is built on
these few primitives, so their conventions are fixed here once:

* all manifolds are represented in global coordinates as R^n;
* central differences use a per-coordinate step ``fd_step * (1 + |x_i|)``
  with ``fd_step = eps**(1/3)`` by default.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonConvergence, SingularJacobian

EPS = float(np.finfo(float).eps)
#: Default central-difference step scale (relative; scaled by 1 + |x_i|).
DEFAULT_FD_STEP = EPS ** (1.0 / 3.0)
#: Step scale for the fourth-order stencil used on Lagrangian gradients.
FD_STEP_GRADIENT = EPS ** (1.0 / 5.0)


def as_vector(x, dim=None):
    """Coerce to a 1-d float array, optionally checking its length."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected length {dim}, got {v.shape[0]}")
    return v


@dataclass(frozen=True, eq=False)
class SmoothMapHandle:
    """An evaluatable map R^in_dim -> R^out_dim with optional Jacobian.

    ``eval`` must accept a 1-d array of length ``in_dim`` and return a
    1-d array of length ``out_dim`` (scalars are promoted). When ``jac``
    is supplied it must agree with central finite differences; that is
    checked by tests, not at call time.
    """

    in_dim: int
    out_dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x) -> np.ndarray:
        x = as_vector(x, self.in_dim)
        return as_vector(self.eval(x), self.out_dim)

    def jacobian(self, x, step: float | None = None) -> np.ndarray:
        """Analytic Jacobian when available, else central differences."""
        x = as_vector(x, self.in_dim)
        if self.jac is not None:
            J = np.asarray(self.jac(x), dtype=float).reshape(self.out_dim, self.in_dim)
            return J
        return jacobian_fd(self, x, step=step)


def identity_map(dim: int) -> SmoothMapHandle:
    return SmoothMapHandle(dim, dim, lambda x: x, jac=lambda x: np.eye(dim))


def jacobian_fd(f, x, step: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``.

    The step per coordinate is ``step * (1 + |x_i|)``. Domain errors from
    ``f`` propagate.
    """
    x = np.asarray(x, dtype=float)
    h0 = DEFAULT_FD_STEP if step is None else float(step)
    f0 = as_vector(f(x))
    J = np.empty((f0.shape[0], x.shape[0]))
    for i in range(x.shape[0]):
        h = h0 * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (as_vector(f(xp)) - as_vector(f(xm))) / (2.0 * h)
    return J


def gradient_fd5(f, x, step: float | None = None) -> np.ndarray:
    """Fourth-order central-difference gradient of a scalar map.

    The five-point stencil keeps the rounding floor near eps^(4/5)|f| and
    is exact on polynomials of degree four, which covers every shipped
    Lagrangian; it backs the discrete Euler-Lagrange residuals, where the
    two-point floor would sit above the solver tolerance.
    """
    x = np.asarray(x, dtype=float)
    h0 = FD_STEP_GRADIENT if step is None else float(step)

    def val(y):
        return float(as_vector(f(y), 1)[0])

    g = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        h = h0 * (1.0 + abs(x[i]))
        xp, xm, xp2, xm2 = x.copy(), x.copy(), x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        xp2[i] += 2.0 * h
        xm2[i] -= 2.0 * h
        g[i] = (8.0 * (val(xp) - val(xm)) - (val(xp2) - val(xm2))) / (12.0 * h)
    return g


def directional_derivative(f, x, v, step: float | None = None) -> np.ndarray:
    """Central difference of ``t -> f(x + t v)`` at ``t = 0``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
    h = (DEFAULT_FD_STEP if step is None else float(step)) * (1.0 + float(np.max(np.abs(x), initial=0.0))) / scale
    return (as_vector(f(x + h * v)) - as_vector(f(x - h * v))) / (2.0 * h)


@dataclass(frozen=True)
class NewtonConfig:
    """Tunables for the damped Newton iteration."""

    residual_tol: float = 1e-12
    max_iters: int = 50
    fd_step: float = DEFAULT_FD_STEP
    backtracking: bool = True
    max_halvings: int = 20

    def __post_init__(self):
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


def _inf_norm(r):
    return float(np.max(np.abs(r), initial=0.0))


def newton_solve(residual: SmoothMapHandle, x0, cfg: NewtonConfig | None = None) -> np.ndarray:
    """Solve ``residual(x) = 0`` by damped Newton iteration.

    Returns x with ``||residual(x)||_inf <= cfg.residual_tol``; raises
    NonConvergence when the iteration budget is exhausted and
    SingularJacobian when the dense linear solve fails. There are no
    silent near-solutions.
    """
    cfg = cfg or NewtonConfig()
    if residual.in_dim != residual.out_dim:
        raise ValueError("newton_solve needs a square residual map")
    x = as_vector(x0, residual.in_dim).copy()
    if x.size == 0:
        return x
    r = residual(x)
    rnorm = _inf_norm(r)
    for _ in range(cfg.max_iters):
        if rnorm <= cfg.residual_tol:
            return x
        J = residual.jacobian(x, step=cfg.fd_step)
        if not np.all(np.isfinite(J)):
            raise SingularJacobian("non-finite Jacobian entries")
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        if cfg.backtracking:
            t = 1.0
            for _ in range(cfg.max_halvings):
                trial = residual(x + t * delta)
                if _inf_norm(trial) < rnorm:
                    break
                t *= 0.5
            else:
                trial = residual(x + t * delta)
            x = x + t * delta
            r = trial
        else:
            x = x + delta
            r = residual(x)
        rnorm = _inf_norm(r)
    if rnorm <= cfg.residual_tol:
        return x
    raise NonConvergence(
        f"Newton did not reach tolerance {cfg.residual_tol:g} in "
        f"{cfg.max_iters} iterations (residual {rnorm:.3e})",
        residual_norm=rnorm, last_iterate=x)
