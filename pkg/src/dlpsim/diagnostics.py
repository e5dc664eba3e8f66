"""Structure-preservation diagnostics.

Discrete momentum maps and their evolution identity, symplecticity of the
one-step map of a regular discrete mechanical system in discrete Legendre
coordinates, and the orbit-invariance form of Poisson descent. Everything
here reports; only regularity failures raise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dlps import (DiscretePath, DlpsSystem, d1_lagrangian, d2_lagrangian,
                   del_residual)
from .errors import RegularityError
from .lie import ActionModel, orbit_frame, sample_group
from .reduction import ReducedModel
from .smooth import (DEFAULT_FD_STEP, NewtonConfig, SmoothMapHandle, as_vector,
                     newton_solve)


@dataclass(frozen=True, eq=False)
class MomentumValue:
    """Momentum paired with each Lie-algebra basis element."""

    components: np.ndarray

    def __getitem__(self, i):
        return float(self.components[i])


def momentum(sys: DlpsSystem, action: ActionModel, eps0, m1) -> MomentumValue:
    """Minus the fiber-slot Lagrangian gradient paired with the generators."""
    eps0 = as_vector(eps0, sys.bundle.total_dim)
    m1 = as_vector(m1, sys.bundle.base_dim)
    g1 = d1_lagrangian(sys, eps0, m1)
    frame = orbit_frame(action, eps0)
    return MomentumValue(components=-(g1 @ frame))


def momentum_evolution_check(sys: DlpsSystem, action: ActionModel,
                             trajectory: DiscretePath,
                             residual_tol: float = 1e-6) -> dict:
    """Check the per-step momentum evolution identity along a trajectory.

    The momentum at step k must equal the momentum at step k-1 plus the
    chaining correction (the previous fiber-slot gradient through the
    chaining map, evaluated on the generator). Also reports the raw
    conservation drift, which vanishes whenever the chaining correction
    does. A path that is not a trajectory is flagged, not rejected.
    """
    pairs = trajectory.pairs
    max_residual = 0.0
    for k in range(1, len(pairs)):
        res = del_residual(sys, pairs[k - 1][0], pairs[k - 1][1],
                           pairs[k][0], pairs[k][1])
        max_residual = max(max_residual, float(np.max(np.abs(res))))
    precondition_ok = max_residual <= residual_tol

    momenta = [momentum(sys, action, eps, m).components for eps, m in pairs]
    max_violation = 0.0
    max_drift = 0.0
    for k in range(1, len(pairs)):
        g1_prev = d1_lagrangian(sys, pairs[k - 1][0], pairs[k - 1][1])
        ivcm_m = sys.ivcm_mat(pairs[k - 1], pairs[k])
        frame_k = orbit_frame(action, pairs[k][0])
        correction = g1_prev @ (ivcm_m @ frame_k)
        violation = momenta[k] - momenta[k - 1] - correction
        max_violation = max(max_violation, float(np.max(np.abs(violation), initial=0.0)))
        max_drift = max(max_drift, float(np.max(np.abs(momenta[k] - momenta[0]),
                                                initial=0.0)))
    return {
        "max_violation": max_violation,
        "max_conservation_drift": max_drift,
        "precondition_ok": bool(precondition_ok),
        "max_del_residual": max_residual,
        "momenta": [m.tolist() for m in momenta],
    }


def _require_dms(sys: DlpsSystem) -> int:
    if sys.bundle.total_dim != sys.bundle.base_dim:
        raise ValueError("this diagnostic needs a DMS (identity bundle)")
    return sys.bundle.total_dim


def _mixed_partial(sys: DlpsSystem, q0, q1, step=DEFAULT_FD_STEP) -> np.ndarray:
    """d^2 L_d / dq0 dq1 by differencing the fiber-slot gradient."""
    n = sys.bundle.total_dim
    D = np.empty((n, n))
    for j in range(n):
        h = step * (1.0 + abs(q1[j]))
        qp = q1.copy()
        qm = q1.copy()
        qp[j] += h
        qm[j] -= h
        D[:, j] = (d1_lagrangian(sys, q0, qp) - d1_lagrangian(sys, q0, qm)) / (2.0 * h)
    return D


def _check_regularity(sys: DlpsSystem, q0, q1, cond_tol: float = 1e-8) -> float:
    """Smallest singular value of the mixed-partial block, scale-guarded.

    The reference scale is max(sigma_max, 1): a block sitting at the FD
    noise floor is singular for every practical purpose even though its
    singular values are mutually balanced.
    """
    D12 = _mixed_partial(sys, q0, q1)
    sv = np.linalg.svd(D12, compute_uv=False)
    scale = max(float(sv[0]), 1.0)
    if sv[-1] <= cond_tol * scale:
        raise RegularityError(
            f"mixed-partial block nearly singular "
            f"(sigma_min/scale {sv[-1] / scale:.3e})")
    return float(sv[-1] / scale)


def _inverse_minus_legendre(sys: DlpsSystem, q0, p0, q1_guess,
                            cfg: NewtonConfig) -> np.ndarray:
    """Solve the fiber-slot gradient equation: find q1 with -D1 L(q0,q1) = p0."""
    n = sys.bundle.total_dim

    def res(q1):
        return d1_lagrangian(sys, q0, q1) + p0

    return newton_solve(SmoothMapHandle(n, n, res), q1_guess, cfg)


def canonical_step_map(sys: DlpsSystem, q1_guess,
                       cfg: NewtonConfig | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """The one-step map in discrete Legendre coordinates (q, p) -> (q', p').

    Given (q0, p0), the next configuration solves the implicit
    discrete Legendre relation; the new momentum is the second-slot
    gradient there. ``q1_guess`` warm-starts the inner Newton solve.
    """
    n = _require_dms(sys)
    cfg = cfg or NewtonConfig(residual_tol=1e-10)
    state = {"guess": as_vector(q1_guess, n).copy()}

    def phi(z):
        q0, p0 = z[:n], z[n:]
        q1 = _inverse_minus_legendre(sys, q0, p0, state["guess"], cfg)
        state["guess"] = q1
        return np.concatenate([q1, d2_lagrangian(sys, q0, q1)])

    return phi


def symplectic_check(dms: DlpsSystem, trajectory: DiscretePath,
                     cfg: NewtonConfig | None = None) -> dict:
    """Per-step symplecticity defect of the flow in Legendre coordinates.

    Each step is transported to canonical coordinates via the discrete
    Legendre transforms; the step map's Jacobian K is formed by central
    differences and the report gives max |K^T Omega K - Omega| per step.
    Raises RegularityError when the mixed-partial block degenerates.
    """
    n = _require_dms(dms)
    cfg = cfg or NewtonConfig(residual_tol=1e-10)
    Omega = np.block([[np.zeros((n, n)), np.eye(n)],
                      [-np.eye(n), np.zeros((n, n))]])
    per_step = []
    min_cond = np.inf
    for k in range(len(trajectory) - 1):
        q0, q1 = trajectory[k]
        min_cond = min(min_cond, _check_regularity(dms, q0, q1))
        p0 = -d1_lagrangian(dms, q0, q1)
        z = np.concatenate([q0, p0])
        phi = canonical_step_map(dms, trajectory[k + 1][0], cfg)
        K = np.empty((2 * n, 2 * n))
        for j in range(2 * n):
            h = DEFAULT_FD_STEP * (1.0 + abs(z[j]))
            zp = z.copy()
            zm = z.copy()
            zp[j] += h
            zm[j] -= h
            K[:, j] = (phi(zp) - phi(zm)) / (2.0 * h)
        per_step.append(float(np.max(np.abs(K.T @ Omega @ K - Omega))))
    return {
        "max_violation": float(max(per_step, default=0.0)),
        "per_step": per_step,
        "min_mixed_partial_sigma_ratio": (float(min_cond) if per_step else None),
        "n_steps": len(per_step),
    }


def _pullback_gradient_legendre(sys: DlpsSystem, fn: SmoothMapHandle,
                                model: ReducedModel, z, q1_guess,
                                cfg: NewtonConfig) -> np.ndarray:
    """Gradient in Legendre coordinates of a reduced function's pullback."""
    n = sys.bundle.total_dim
    state = {"guess": as_vector(q1_guess, n).copy()}

    def value(zz):
        q0, p0 = zz[:n], zz[n:]
        q1 = _inverse_minus_legendre(sys, q0, p0, state["guess"], cfg)
        state["guess"] = q1
        return float(fn(model.upsilon(np.concatenate([q0, q1])))[0])

    g = np.empty(2 * n)
    for j in range(2 * n):
        h = DEFAULT_FD_STEP * (1.0 + abs(z[j]))
        zp = z.copy()
        zm = z.copy()
        zp[j] += h
        zm[j] -= h
        g[j] = (value(zp) - value(zm)) / (2.0 * h)
    return g


def bracket_via_legendre_chart(sys: DlpsSystem, model: ReducedModel,
                               f1: SmoothMapHandle, f2: SmoothMapHandle,
                               x, cfg: NewtonConfig | None = None) -> float:
    """Canonical bracket of pullbacks computed in the Legendre chart.

    Slow route (each perturbed evaluation re-solves the implicit Legendre
    relation); kept as the independent cross-check of
    ``bracket_of_pullbacks``.
    """
    n = _require_dms(sys)
    cfg = cfg or NewtonConfig(residual_tol=1e-10)
    x = as_vector(x, 2 * n)
    q0, q1 = x[:n], x[n:]
    _check_regularity(sys, q0, q1)
    p0 = -d1_lagrangian(sys, q0, q1)
    z = np.concatenate([q0, p0])
    g1 = _pullback_gradient_legendre(sys, f1, model, z, q1, cfg)
    g2 = _pullback_gradient_legendre(sys, f2, model, z, q1, cfg)
    return float(g1[:n] @ g2[n:] - g1[n:] @ g2[:n])


def _pair_space_gradient(model: ReducedModel, fn: SmoothMapHandle, x) -> np.ndarray:
    """FD gradient over pair coordinates of a reduced function's pullback."""
    m = x.shape[0]
    g = np.empty(m)
    for j in range(m):
        h = DEFAULT_FD_STEP * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        g[j] = (float(fn(model.upsilon(xp))[0])
                - float(fn(model.upsilon(xm))[0])) / (2.0 * h)
    return g


def _bracket_table(sys: DlpsSystem, model: ReducedModel,
                   test_fns: Sequence[SmoothMapHandle], x) -> np.ndarray:
    """All pairwise brackets of pulled-back functions at one point.

    Uses the inverse of the discrete Lagrangian two-form in pair
    coordinates, whose only block is the FD mixed partial:

        {F, G} = -F_q0^T D12^{-T} G_q1 + F_q1^T D12^{-1} G_q0.
    """
    n = _require_dms(sys)
    x = as_vector(x, 2 * n)
    q0, q1 = x[:n], x[n:]
    _check_regularity(sys, q0, q1)
    D12 = _mixed_partial(sys, q0, q1)
    grads = [_pair_space_gradient(model, fn, x) for fn in test_fns]
    k = len(grads)
    table = np.zeros((k, k))
    for j in range(k):
        a = np.linalg.solve(D12.T, grads[j][n:])
        b = np.linalg.solve(D12, grads[j][:n])
        for i in range(k):
            if i != j:
                table[i, j] = float(-grads[i][:n] @ a + grads[i][n:] @ b)
    return table


def bracket_of_pullbacks(sys: DlpsSystem, model: ReducedModel,
                         f1: SmoothMapHandle, f2: SmoothMapHandle,
                         x, cfg: NewtonConfig | None = None) -> float:
    """Poisson bracket of two pulled-back reduced functions.

    Computed from the inverse of the discrete Lagrangian two-form in pair
    coordinates (mixed partials and gradients by FD); agrees with the
    canonical bracket in the Legendre chart.
    """
    return float(_bracket_table(sys, model, [f1, f2], as_vector(x))[0, 1])


def poisson_descent_check(model: ReducedModel, dms: DlpsSystem,
                          test_fns: Sequence[SmoothMapHandle],
                          n_samples: int,
                          rng: np.random.Generator | None = None,
                          n_group: int = 5,
                          group_scale: float = 1.0) -> dict:
    """Orbit-invariance of the bracket of pulled-back reduced functions.

    The reduced bracket is defined by pushing the bracket of pullbacks
    through the quotient; the computable content is that the bracket of
    pullbacks is constant on group orbits. Reports the max variation over
    samples and group elements, for every function pair.
    """
    rng = rng or np.random.default_rng(5)
    if model.sample_cprime is None:
        raise ValueError("the reduced model provides no sampler")
    worst = 0.0
    n_pairs = len(test_fns) * (len(test_fns) - 1) // 2
    for _ in range(n_samples):
        x = model.sample_cprime(rng)
        base = _bracket_table(dms, model, test_fns, x)
        for _ in range(n_group):
            g = sample_group(model.group, rng, scale=group_scale)
            gx = model.group_action.act(g, x)
            moved = _bracket_table(dms, model, test_fns, gx)
            worst = max(worst, float(np.max(np.abs(moved - base), initial=0.0)))
    return {"max_orbit_variation": worst, "n_samples": int(n_samples),
            "n_pairs": n_pairs, "n_group": int(n_group)}
