"""Symmetry reduction of discrete Lagrange-Poincare systems.

Reduction by a symmetry group plus a discrete connection produces a new
system on (a coordinate model of) the conjugate bundle times the reduced
base. The quotient itself is never represented abstractly: every
reduction requires an explicit coordinate model, given by a chart for the
fiber space (E x G)/G and a section choosing orbit representatives, and
the structural identities that make the model consistent are validated
numerically at build time.

The module also provides path projection, reconstruction of full
trajectories from reduced ones, two-stage reduction with the comparison
map against one-shot reduction, and a numeric morphism checker.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .connection import DiscreteConnection, QuotientModel
from .dlps import (DiscretePath, DlpsSystem, FiberBundleModel, Pair, make_path)
from .errors import MatchingError, SingularJacobian, ValidationError
from .lie import (ActionModel, GroupElement, LieGroupModel, sample_group,
                  trivial_action, trivial_group)
from .smooth import (SmoothMapHandle, as_vector, directional_derivative,
                     identity_map, jacobian_fd)

logger = logging.getLogger(__name__)

FiberChart = Callable[[np.ndarray, GroupElement], np.ndarray]
FiberSection = Callable[[np.ndarray], tuple[np.ndarray, GroupElement]]


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """Coordinate model of the reduced phase space and its bundle maps.

    ``upsilon`` realizes the reduction morphism C'(E) -> C'(reduced);
    ``lift_section`` is a right inverse choosing orbit representatives.
    ``group_action`` is the diagonal action on C'(E) whose orbits are the
    fibers of upsilon; ``action_e`` / ``action_m`` are its factors.
    """

    group: LieGroupModel
    source_bundle: FiberBundleModel
    reduced_bundle: FiberBundleModel
    upsilon: SmoothMapHandle
    lift_section: SmoothMapHandle
    group_action: ActionModel
    action_e: ActionModel
    action_m: ActionModel
    sample_cprime: Optional[Callable[[np.random.Generator], np.ndarray]] = None

    def split_reduced(self, y) -> Pair:
        y = as_vector(y, self.reduced_bundle.total_dim + self.reduced_bundle.base_dim)
        return y[:self.reduced_bundle.total_dim], y[self.reduced_bundle.total_dim:]

    def split_source(self, x) -> Pair:
        x = as_vector(x, self.source_bundle.total_dim + self.source_bundle.base_dim)
        return x[:self.source_bundle.total_dim], x[self.source_bundle.total_dim:]


@dataclass(frozen=True, eq=False)
class ReductionResult:
    """A reduced system together with the model that produced it."""

    system: DlpsSystem
    model: ReducedModel


def solve_matching(action: ActionModel, q_from, q_to, tol: float = 1e-9,
                   max_iters: int = 50) -> GroupElement:
    """The group element carrying q_from to q_to under the action.

    Uses the action's closed-form matcher when present, otherwise a
    Gauss-Newton iteration over the group parameters. The result is
    always verified; failure raises MatchingError.
    """
    q_from = as_vector(q_from, action.space_dim)
    q_to = as_vector(q_to, action.space_dim)
    G = action.group
    if action.match is not None:
        try:
            g = action.match(q_from, q_to)
        except ZeroDivisionError as exc:
            raise MatchingError(str(exc)) from exc
    elif G.dim == 0:
        g = G.identity
    else:
        theta = np.zeros(G.dim)
        for _ in range(max_iters):
            res = action.act(G.from_params(theta), q_from) - q_to
            if float(np.max(np.abs(res))) <= 0.1 * tol:
                break
            f = SmoothMapHandle(G.dim, action.space_dim,
                                lambda th: action.act(G.from_params(th), q_from) - q_to)
            J = jacobian_fd(f, theta)
            delta, *_ = np.linalg.lstsq(J, -res, rcond=None)
            theta = theta + delta
        g = G.from_params(theta)
    defect = float(np.max(np.abs(action.act(g, q_from) - q_to), initial=0.0))
    if defect > tol:
        raise MatchingError(
            f"no group element maps {q_from} to {q_to} (defect {defect:.3e})")
    return g


def _diagonal_cprime_action(action_e: ActionModel, action_m: ActionModel) -> ActionModel:
    ne = action_e.space_dim

    def act(g, x):
        x = as_vector(x, ne + action_m.space_dim)
        return np.concatenate([action_e.act(g, x[:ne]), action_m.act(g, x[ne:])])

    return ActionModel(group=action_e.group, space_dim=ne + action_m.space_dim, act=act)


def build_upsilon(conn: DiscreteConnection, sys: DlpsSystem,
                  fiber_chart: FiberChart, fiber_section: FiberSection,
                  action_e: ActionModel,
                  sample_cprime: Callable[[np.random.Generator], np.ndarray],
                  rng: np.random.Generator | None = None,
                  n_validate: int = 50,
                  lagrangian_tol: float = 1e-10,
                  ivcm_tol: float = 1e-8,
                  roundtrip_tol: float = 1e-10) -> ReducedModel:
    """Assemble and validate the reduction morphism for (sys, conn).

    ``fiber_chart(eps, w)`` are invariant coordinates of the class of
    (eps, w) in (E x G)/G and ``fiber_section`` picks a representative,
    with chart o section = id. The returned model's upsilon composes the
    connection form, the quotient projection and the chart; its
    lift_section transports the horizontal lift by the stored group
    offset.

    Validation (sampled): the group is a symmetry of sys (Lagrangian
    invariance and chaining-map equivariance), upsilon o lift_section is
    the identity and upsilon is constant on orbits. Violations raise
    ValidationError naming the identity and the sample.
    """
    rng = rng or np.random.default_rng(20240817)
    quotient = conn.quotient
    action_m = quotient.action
    G = action_m.group
    nE, nM = sys.bundle.total_dim, sys.bundle.base_dim
    nEr, nMr = nE, quotient.base_dim

    def upsilon_eval(x):
        eps, m = x[:nE], x[nE:]
        w = conn.ad_form(as_vector(sys.bundle.phi(eps), nM), m)
        return np.concatenate([as_vector(fiber_chart(eps, w), nEr),
                               as_vector(quotient.project(m), nMr)])

    def lift_eval(y):
        v, r = y[:nEr], y[nEr:]
        eps, w = fiber_section(v)
        eps = as_vector(eps, nE)
        base = conn.hor_lift(as_vector(sys.bundle.phi(eps), nM), r)
        return np.concatenate([eps, action_m.act(w, base)])

    upsilon = SmoothMapHandle(nE + nM, nEr + nMr, upsilon_eval)
    lift_section = SmoothMapHandle(nEr + nMr, nE + nM, lift_eval)

    def reduced_phi_eval(v):
        eps, _w = fiber_section(v)
        return quotient.project(sys.bundle.phi(as_vector(eps, nE)))

    def reduced_section_eval(r):
        eps = sys.bundle.section(quotient.section(r))
        return fiber_chart(as_vector(eps, nE), G.identity)

    reduced_bundle = FiberBundleModel(
        total_dim=nEr, base_dim=nMr,
        phi=SmoothMapHandle(nEr, nMr, reduced_phi_eval),
        section=SmoothMapHandle(nMr, nEr, reduced_section_eval))

    group_action = _diagonal_cprime_action(action_e, action_m)
    model = ReducedModel(group=G, source_bundle=sys.bundle,
                         reduced_bundle=reduced_bundle, upsilon=upsilon,
                         lift_section=lift_section, group_action=group_action,
                         action_e=action_e, action_m=action_m,
                         sample_cprime=sample_cprime)

    # -- sampled validation ------------------------------------------------
    for _ in range(n_validate):
        x = as_vector(sample_cprime(rng), nE + nM)
        g = sample_group(G, rng)
        gx = group_action.act(g, x)
        dL = abs(sys.lag(gx[:nE], gx[nE:]) - sys.lag(x[:nE], x[nE:]))
        if dL > lagrangian_tol:
            raise ValidationError("lagrangian G-invariance", sample=x, violation=dL)
        dU = float(np.max(np.abs(upsilon(gx) - upsilon(x))))
        if dU > roundtrip_tol:
            raise ValidationError("upsilon orbit invariance", sample=x, violation=dU)
        y = upsilon(x)
        dR = float(np.max(np.abs(upsilon(lift_section(y)) - y)))
        if dR > roundtrip_tol:
            raise ValidationError("upsilon o lift_section = id", sample=y, violation=dR)

    for _ in range(n_validate):
        xa = as_vector(sample_cprime(rng), nE + nM)
        xb = as_vector(sample_cprime(rng), nE + nM)
        eps0, eps1, m2 = xa[:nE], xb[:nE], xb[nE:]
        m1 = as_vector(sys.bundle.phi(eps1), nM)
        g = sample_group(G, rng)
        delta = rng.standard_normal(nE)
        out = sys.ivcm((eps0, m1), (eps1, m2), delta)
        pushed = directional_derivative(lambda q: action_e.act(g, q), eps0, out)
        g_eps0, g_m1 = action_e.act(g, eps0), action_m.act(g, m1)
        g_eps1, g_m2 = action_e.act(g, eps1), action_m.act(g, m2)
        g_delta = directional_derivative(lambda q: action_e.act(g, q), eps1, delta)
        out_g = sys.ivcm((g_eps0, g_m1), (g_eps1, g_m2), g_delta)
        dI = float(np.max(np.abs(out_g - pushed), initial=0.0))
        if dI > ivcm_tol:
            raise ValidationError("chaining-map G-equivariance", sample=xa, violation=dI)

    return model


def _solve_isomorphism(J: np.ndarray, pinv_tol: float = 1e-6) -> np.ndarray:
    """Invert the fiber-slot derivative block, flagging degeneracies."""
    n = J.shape[0]
    if J.shape[0] != J.shape[1]:
        raise SingularJacobian(
            f"fiber-slot derivative block is not square: {J.shape}")
    try:
        return np.linalg.solve(J, np.eye(n))
    except np.linalg.LinAlgError:
        logger.warning("fiber-slot derivative block singular; using pseudo-inverse")
        Jinv = np.linalg.pinv(J)
        defect = float(np.max(np.abs(J @ Jinv - np.eye(n))))
        if defect > pinv_tol:
            raise SingularJacobian(
                f"fiber-slot derivative block is rank deficient (defect {defect:.3e})")
        return Jinv


def reduce(sys: DlpsSystem, group: LieGroupModel, conn: DiscreteConnection,
           model: ReducedModel) -> ReductionResult:
    """The reduced system determined by a validated model.

    The reduced Lagrangian is the original one through the lift section.
    The reduced chaining map lifts a reduced second-order point to a
    compatible pair upstairs, converts the reduced tangent through the
    fiber-slot derivative isomorphism (a small dense solve), pushes it
    through the original chaining map and the bundle projection, and
    maps both pieces back down with the two partial derivatives of the
    fiber part of upsilon.
    """
    if group.name != model.group.name:
        raise ValueError("group does not match the reduced model")
    nE, nM = sys.bundle.total_dim, sys.bundle.base_dim
    nEr = model.reduced_bundle.total_dim

    lagrangian = SmoothMapHandle(
        nEr + model.reduced_bundle.base_dim, 1,
        lambda y: sys.lagrangian(model.lift_section(y)))

    def fiber_part(x):
        return model.upsilon(x)[:nEr]

    def reduced_ivcm_matrix(pair0: Pair, pair1: Pair) -> np.ndarray:
        v0, r1 = pair0
        v1, r2 = pair1
        # Lift over the base point carried by v1 itself: on the
        # second-order compatibility set this equals r1, and off it (solver
        # iterates between constraint projections) it is the smooth
        # extension that keeps the matching equation solvable.
        r1_compat = as_vector(model.reduced_bundle.phi(v1),
                              model.reduced_bundle.base_dim)
        x0 = model.lift_section(np.concatenate([v0, r1_compat]))
        eps0, m1 = x0[:nE], x0[nE:]
        x1 = model.lift_section(np.concatenate([v1, r2]))
        g = solve_matching(model.action_m, sys.bundle.phi(x1[:nE]), m1)
        eps1 = model.action_e.act(g, x1[:nE])
        m2 = model.action_m.act(g, x1[nE:])

        J = jacobian_fd(lambda e: fiber_part(np.concatenate([e, m2])), eps1)
        Jinv = _solve_isomorphism(J)
        K1 = jacobian_fd(lambda e: fiber_part(np.concatenate([e, m1])), eps0)
        K2 = jacobian_fd(lambda m: fiber_part(np.concatenate([eps0, m])), m1)
        jphi1 = sys.bundle.phi.jacobian(eps1)
        inner = sys.ivcm_mat((eps0, m1), (eps1, m2))
        return (K1 @ inner + K2 @ jphi1) @ Jinv

    def reduced_ivcm(pair0: Pair, pair1: Pair, delta_v1) -> np.ndarray:
        return reduced_ivcm_matrix(pair0, pair1) @ as_vector(delta_v1, nEr)

    reduced_sys = DlpsSystem(bundle=model.reduced_bundle, lagrangian=lagrangian,
                             ivcm=reduced_ivcm, ivcm_matrix=reduced_ivcm_matrix)
    return ReductionResult(system=reduced_sys, model=model)


def trivial_reduction(sys: DlpsSystem,
                      sample_cprime: Callable[[np.random.Generator], np.ndarray],
                      rng: np.random.Generator | None = None) -> ReductionResult:
    """Reduction by the one-element group: the identity model.

    Exercises the generic machinery end to end; the reduced system's
    dynamics coincide with the input's.
    """
    nE, nM = sys.bundle.total_dim, sys.bundle.base_dim
    quotient = QuotientModel(total_dim=nM, base_dim=nM,
                             project=identity_map(nM), section=identity_map(nM),
                             action=trivial_action(nM))
    G = trivial_group()
    conn = DiscreteConnection(
        quotient=quotient,
        ad_form=lambda q0, q1: G.identity,
        hor_lift=lambda q0, r1: as_vector(r1, nM).copy())
    model = build_upsilon(conn, sys,
                          fiber_chart=lambda eps, w: eps.copy(),
                          fiber_section=lambda v: (as_vector(v, nE).copy(), G.identity),
                          action_e=trivial_action(nE),
                          sample_cprime=sample_cprime, rng=rng)
    return reduce(sys, G, conn, model)


def project_path(model: ReducedModel, path: DiscretePath) -> DiscretePath:
    """Pointwise image of a path under the reduction morphism."""
    pairs = []
    for eps, m in path.pairs:
        y = model.upsilon(np.concatenate([eps, m]))
        pairs.append(model.split_reduced(y))
    return make_path(pairs)


def reconstruct_path(model: ReducedModel, reduced_path: DiscretePath,
                     eps0, m1, start_tol: float = 1e-9,
                     match_tol: float = 1e-9) -> DiscretePath:
    """The unique lift of a reduced path through a given starting point.

    Each step lifts the next reduced pair by the section, then acts by
    the unique group element matching the base condition (the new fiber
    point must project onto the previous base point). Inconsistent input
    surfaces as MatchingError.
    """
    nE = model.source_bundle.total_dim
    eps0 = as_vector(eps0, nE)
    m1 = as_vector(m1, model.source_bundle.base_dim)
    x = np.concatenate([eps0, m1])
    y0 = np.concatenate(reduced_path[0])
    start_defect = float(np.max(np.abs(model.upsilon(x) - y0)))
    if start_defect > start_tol:
        raise ValueError(
            f"starting point does not project onto the reduced path "
            f"(defect {start_defect:.3e})")
    pairs = [(eps0.copy(), m1.copy())]
    for k in range(1, len(reduced_path)):
        y = np.concatenate(reduced_path[k])
        xk = model.lift_section(y)
        eps_prev_m = pairs[-1][1]
        g = solve_matching(model.action_m,
                           model.source_bundle.phi(xk[:nE]), eps_prev_m,
                           tol=match_tol)
        pairs.append((model.action_e.act(g, xk[:nE]),
                      model.action_m.act(g, xk[nE:])))
    return make_path(pairs)


def two_stage(sys: DlpsSystem, stage_h: ReductionResult,
              stage_gh: ReductionResult, one_shot: ReductionResult,
              trajectory: DiscretePath,
              conn_h: DiscreteConnection | None = None,
              full_group_action: ActionModel | None = None,
              conjugate_in_full: Callable[[GroupElement, GroupElement], GroupElement] | None = None,
              rng: np.random.Generator | None = None,
              n_checks: int = 100,
              equivariance_tol: float = 1e-10) -> tuple[dict, Callable]:
    """Compare two-stage reduction with one-shot reduction on a trajectory.

    Returns a report and the comparison map F, realized as lift through
    both stage sections followed by the one-shot morphism. When the
    first-stage connection and the full group action are supplied, the
    conjugation-equivariance condition that makes the second stage
    possible is validated first (worst sample raises ValidationError).
    """
    rng = rng or np.random.default_rng(11235)
    report: dict = {}

    if conn_h is not None and full_group_action is not None and conjugate_in_full is not None:
        worst, worst_sample = 0.0, None
        quotient = conn_h.quotient
        for _ in range(n_checks):
            q0 = quotient.sample(rng)
            q1 = quotient.sample(rng)
            g = sample_group(full_group_action.group, rng)
            lhs = conn_h.ad_form(full_group_action.act(g, q0),
                                 full_group_action.act(g, q1))
            rhs = conjugate_in_full(g, conn_h.ad_form(q0, q1))
            v = float(np.max(np.abs(lhs.coords - rhs.coords), initial=0.0))
            if v > worst:
                worst, worst_sample = v, (q0, q1)
        report["conjugation_equivariance_max"] = worst
        if worst > equivariance_tol:
            raise ValidationError("subgroup connection conjugation-equivariance",
                                  sample=worst_sample, violation=worst)

    def F(y):
        x_h = stage_gh.model.lift_section(y)
        x = stage_h.model.lift_section(x_h)
        return one_shot.model.upsilon(x)

    worst = 0.0
    per_step = []
    for eps, m in trajectory.pairs:
        x = np.concatenate([eps, m])
        y_h = stage_h.model.upsilon(x)
        y_gh = stage_gh.model.upsilon(y_h)
        y_g = one_shot.model.upsilon(x)
        d = float(np.max(np.abs(F(y_gh) - y_g)))
        per_step.append(d)
        worst = max(worst, d)
    report["stage_comparison_max"] = worst
    report["per_step"] = per_step
    return report, F


def check_morphism(candidate: SmoothMapHandle, sys: DlpsSystem,
                   sys_target: DlpsSystem,
                   sample_cprime: Callable[[np.random.Generator], np.ndarray],
                   n_samples: int = 50,
                   rng: np.random.Generator | None = None,
                   n_tangents: int = 3,
                   rank_tol: float = 1e-8) -> dict:
    """Numeric point checks of the morphism conditions between systems.

    Reports per-condition maxima over samples; never raises. The global
    surjectivity/submersion condition is reported as a rank check only.
    """
    rng = rng or np.random.default_rng(97)
    nE, nM = sys.bundle.total_dim, sys.bundle.base_dim
    nEr = sys_target.bundle.total_dim
    nMr = sys_target.bundle.base_dim
    if candidate.in_dim != nE + nM or candidate.out_dim != nEr + nMr:
        raise ValueError("candidate dimensions are incompatible with the systems")

    full_rank_ok = True
    cond2_rank_ok = True
    cond2_min_sv = np.inf
    cond3 = cond4 = cond5 = cond6 = 0.0
    for _ in range(n_samples):
        xa = as_vector(sample_cprime(rng), nE + nM)
        xb = as_vector(sample_cprime(rng), nE + nM)
        eps0, eps1, m2 = xa[:nE], xb[:nE], xb[nE:]
        m1 = as_vector(sys.bundle.phi(eps1), nM)
        x0 = np.concatenate([eps0, m1])
        x1 = np.concatenate([eps1, m2])

        J0 = jacobian_fd(candidate, x0)
        sv_full = np.linalg.svd(J0, compute_uv=False)
        if sv_full[min(J0.shape) - 1] <= rank_tol * sv_full[0]:
            full_rank_ok = False

        D1p1 = J0[:nEr, :nE]
        sv = np.linalg.svd(D1p1, compute_uv=False)
        cond2_min_sv = min(cond2_min_sv, float(sv[-1]))
        if np.sum(sv > rank_tol * max(sv[0], 1.0)) < nEr:
            cond2_rank_ok = False

        cond3 = max(cond3, float(np.max(np.abs(J0[nEr:, :nE]))))

        y0 = candidate(x0)
        y1 = candidate(x1)
        base_defect = y0[nEr:] - sys_target.bundle.phi(y1[:nEr])
        cond4 = max(cond4, float(np.max(np.abs(base_defect))))

        cond5 = max(cond5, abs(sys.lag(eps0, m1)
                               - sys_target.lag(y0[:nEr], y0[nEr:])))

        J1 = jacobian_fd(candidate, x1)
        D1p1_at_x1 = J1[:nEr, :nE]
        D2p1_at_x0 = J0[:nEr, nE:]
        jphi1 = sys.bundle.phi.jacobian(eps1)
        inner = sys.ivcm_mat((eps0, m1), (eps1, m2))
        pair0t = (y0[:nEr], y0[nEr:])
        pair1t = (y1[:nEr], y1[nEr:])
        for _ in range(n_tangents):
            delta = rng.standard_normal(nE)
            lhs = sys_target.ivcm(pair0t, pair1t, D1p1_at_x1 @ delta)
            rhs = D1p1 @ (inner @ delta) + D2p1_at_x0 @ (jphi1 @ delta)
            cond6 = max(cond6, float(np.max(np.abs(lhs - rhs), initial=0.0)))

    return {
        "cond1_submersion_rank_ok": bool(full_rank_ok),
        "cond1_note": "rank check only",
        "cond2_fiber_slot_rank_ok": bool(cond2_rank_ok),
        "cond2_min_singular_value": float(cond2_min_sv),
        "cond3_base_independence_max": cond3,
        "cond4_base_compatibility_max": cond4,
        "cond5_lagrangian_match_max": cond5,
        "cond6_chaining_intertwine_max": cond6,
        "n_samples": int(n_samples),
    }
