"""Discrete Lagrange-Poincare systems and their dynamics.

A system lives on the discrete velocity phase space E x M of a fiber
bundle phi: E -> M and consists of a discrete Lagrangian on E x M plus a
chaining map that feeds the fixed-endpoint variation of one step into the
previous one. Ordinary discrete mechanical systems (DMS) embed as the
identity bundle with a zero chaining map; symmetry reduction (see
``reduction``) produces systems with a nontrivial one.

Trajectories are solved step by step: the three-term discrete
Euler-Lagrange covector plus the bundle constraint rows form a square
residual handed to the damped Newton solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SimulationError
from .smooth import (DEFAULT_FD_STEP, FD_STEP_GRADIENT, NewtonConfig,
                     SmoothMapHandle, as_vector, identity_map, newton_solve)

#: A point of E x M: (fiber-space coordinates, base coordinates).
Pair = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class FiberBundleModel:
    """A fiber bundle in coordinates: phi: R^total_dim -> R^base_dim.

    ``section`` is any smooth right inverse of ``phi``; it seeds Newton
    guesses and surjectivity validation.
    """

    total_dim: int
    base_dim: int
    phi: SmoothMapHandle
    section: SmoothMapHandle

    @property
    def fiber_dim(self) -> int:
        return self.total_dim - self.base_dim

    def validate(self, sample_base, rng, n_samples=20, tol=1e-9):
        """Check phi o section = id on sampled base points."""
        worst = 0.0
        for _ in range(n_samples):
            r = sample_base(rng)
            worst = max(worst, float(np.max(np.abs(self.phi(self.section(r)) - r))))
        if worst > tol:
            raise ValueError(f"phi o section differs from id by {worst:.3e}")
        return worst


@dataclass(frozen=True, eq=False)
class DlpsSystem:
    """(bundle, discrete Lagrangian, infinitesimal variation chaining map).

    ``lagrangian`` is a scalar handle on R^(total+base). ``ivcm`` maps
    (pair_k, pair_{k+1}, delta_eps_{k+1}) to a tangent vector at eps_k,
    linearly in the last argument, with image in ker(d phi). The optional
    ``ivcm_matrix`` returns its matrix on the standard basis in one call;
    when absent it is assembled column by column.
    """

    bundle: FiberBundleModel
    lagrangian: SmoothMapHandle
    ivcm: Callable[[Pair, Pair, np.ndarray], np.ndarray]
    ivcm_matrix: Optional[Callable[[Pair, Pair], np.ndarray]] = None

    def lag(self, eps, m) -> float:
        return float(self.lagrangian(np.concatenate([eps, m]))[0])

    def ivcm_mat(self, pair0: Pair, pair1: Pair) -> np.ndarray:
        n = self.bundle.total_dim
        if self.ivcm_matrix is not None:
            return np.asarray(self.ivcm_matrix(pair0, pair1), dtype=float).reshape(n, n)
        cols = np.empty((n, n))
        basis = np.eye(n)
        for j in range(n):
            cols[:, j] = as_vector(self.ivcm(pair0, pair1, basis[j]), n)
        return cols


@dataclass(frozen=True, eq=False)
class DiscretePath:
    """A discrete path: pairs (eps_k, m_{k+1}) with matching junctions."""

    pairs: tuple[Pair, ...]

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, k) -> Pair:
        return self.pairs[k]

    def compatibility_defect(self, bundle: FiberBundleModel) -> float:
        """Max over junctions of |phi(eps_{k+1}) - m_{k+1}|."""
        worst = 0.0
        for (eps0, m1), (eps1, _m2) in zip(self.pairs, self.pairs[1:]):
            worst = max(worst, float(np.max(np.abs(bundle.phi(eps1) - m1))))
        return worst

    def validate(self, bundle: FiberBundleModel, tol: float = 1e-9):
        defect = self.compatibility_defect(bundle)
        if defect > tol:
            raise ValueError(f"path junction defect {defect:.3e} exceeds {tol:g}")
        return defect


@dataclass(frozen=True, eq=False)
class Variation:
    """Tangent data (delta_eps_k, delta_m_{k+1}) over a discrete path."""

    deltas: tuple[Pair, ...]


def make_path(pairs: Sequence[Pair]) -> DiscretePath:
    return DiscretePath(tuple((as_vector(e).copy(), as_vector(m).copy())
                              for e, m in pairs))


def path_from_points(points: Sequence[np.ndarray]) -> DiscretePath:
    """A DMS path from configuration points q_0, ..., q_N."""
    pts = [as_vector(p) for p in points]
    return make_path([(pts[k], pts[k + 1]) for k in range(len(pts) - 1)])


# --- FD derivatives of the Lagrangian -------------------------------------

def _lagrangian_grad(sys: DlpsSystem, eps, m, slot: int,
                     step: float = FD_STEP_GRADIENT) -> np.ndarray:
    """Fourth-order central-difference gradient of L_d in one slot of E x M."""
    x = np.concatenate([eps, m])
    n = sys.bundle.total_dim
    idx = range(n) if slot == 1 else range(n, n + sys.bundle.base_dim)
    L = sys.lagrangian
    g = np.empty(len(idx))
    for j, i in enumerate(idx):
        h = step * (1.0 + abs(x[i]))
        xp, xm, xp2, xm2 = x.copy(), x.copy(), x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        xp2[i] += 2.0 * h
        xm2[i] -= 2.0 * h
        g[j] = (8.0 * (L(xp)[0] - L(xm)[0]) - (L(xp2)[0] - L(xm2)[0])) / (12.0 * h)
    return g


def d1_lagrangian(sys: DlpsSystem, eps, m) -> np.ndarray:
    return _lagrangian_grad(sys, eps, m, 1)


def d2_lagrangian(sys: DlpsSystem, eps, m) -> np.ndarray:
    return _lagrangian_grad(sys, eps, m, 2)


# --- dynamics --------------------------------------------------------------

def action_sum(sys: DlpsSystem, path: DiscretePath) -> float:
    """The discrete action: sum of L_d over the path's pairs."""
    return float(sum(sys.lag(eps, m) for eps, m in path.pairs))


def del_residual(sys: DlpsSystem, eps_prev, m_cur, eps_cur, m_next) -> np.ndarray:
    """The discrete Euler-Lagrange covector at the middle point.

    Components (against the standard basis of the fiber-space tangent) of

        D1 L_d(eps_k, m_{k+1})
        + D2 L_d(eps_{k-1}, m_k) o d phi(eps_k)
        + D1 L_d(eps_{k-1}, m_k) o IVCM((eps_{k-1}, m_k), (eps_k, m_{k+1})).

    D1/D2 are central differences; d phi uses the bundle's Jacobian.
    """
    eps_prev = as_vector(eps_prev, sys.bundle.total_dim)
    m_cur = as_vector(m_cur, sys.bundle.base_dim)
    eps_cur = as_vector(eps_cur, sys.bundle.total_dim)
    m_next = as_vector(m_next, sys.bundle.base_dim)

    term1 = d1_lagrangian(sys, eps_cur, m_next)
    g2_prev = d2_lagrangian(sys, eps_prev, m_cur)
    jphi = sys.bundle.phi.jacobian(eps_cur)
    term2 = g2_prev @ jphi
    g1_prev = d1_lagrangian(sys, eps_prev, m_cur)
    ivcm_m = sys.ivcm_mat((eps_prev, m_cur), (eps_cur, m_next))
    term3 = g1_prev @ ivcm_m
    return term1 + term2 + term3


def _default_guess(sys: DlpsSystem, eps0, m1) -> np.ndarray:
    """Linear extrapolation seed: section-transport of eps0 over m1."""
    b = sys.bundle
    eps1 = eps0 + b.section(m1) - b.section(b.phi(eps0))
    m2 = m1 + (m1 - b.phi(eps0))
    return np.concatenate([eps1, m2])


def step(sys: DlpsSystem, eps0, m1, guess=None,
         cfg: NewtonConfig | None = None,
         diagnostics: dict | None = None) -> Pair:
    """One step of the discrete Lagrangian flow.

    Solves for (eps1, m2) such that phi(eps1) = m1 (constraint rows) and
    the discrete Euler-Lagrange covector vanishes. Raises NonConvergence
    or SingularJacobian when the implicit solve fails, which signals a
    failure of the flow's regularity hypotheses at this point.
    """
    b = sys.bundle
    eps0 = as_vector(eps0, b.total_dim)
    m1 = as_vector(m1, b.base_dim)
    n, nb = b.total_dim, b.base_dim

    def residual(z):
        eps1, m2 = z[:n], z[n:]
        out = np.empty(n + nb)
        out[:n] = del_residual(sys, eps0, m1, eps1, m2)
        out[n:] = b.phi(eps1) - m1
        return out

    handle = SmoothMapHandle(n + nb, n + nb, residual)
    z0 = _default_guess(sys, eps0, m1) if guess is None else as_vector(guess, n + nb)
    z = newton_solve(handle, z0, cfg)
    if diagnostics is not None:
        J = handle.jacobian(z, step=(cfg or NewtonConfig()).fd_step)
        diagnostics["jacobian_rank"] = int(np.linalg.matrix_rank(J))
        diagnostics["jacobian_cond"] = float(np.linalg.cond(J))
        diagnostics["residual_norm"] = float(np.max(np.abs(residual(z))))
    return z[:n], z[n:]


def simulate(sys: DlpsSystem, eps0, m1, n_steps: int,
             cfg: NewtonConfig | None = None) -> DiscretePath:
    """Chain ``step`` n_steps times from (eps0, m1).

    On failure raises SimulationError carrying the partial path and the
    failing step index, so diagnostics can run on partial data.
    """
    pairs = [(as_vector(eps0, sys.bundle.total_dim).copy(),
              as_vector(m1, sys.bundle.base_dim).copy())]
    for k in range(n_steps):
        try:
            nxt = step(sys, pairs[-1][0], pairs[-1][1], cfg=cfg)
        except Exception as exc:  # noqa: BLE001 - rewrapped with context
            raise SimulationError(k, make_path(pairs), exc) from exc
        pairs.append(nxt)
    return make_path(pairs)


def from_dms(config_dim: int, lagrangian: SmoothMapHandle) -> DlpsSystem:
    """Embed a discrete mechanical system (Q, L_d) as the identity bundle.

    The chaining map is identically zero, so the equations of motion
    reduce to the usual two-term discrete Euler-Lagrange equation.
    """
    if lagrangian.in_dim != 2 * config_dim:
        raise ValueError("DMS Lagrangian must live on Q x Q")
    bundle = FiberBundleModel(total_dim=config_dim, base_dim=config_dim,
                              phi=identity_map(config_dim),
                              section=identity_map(config_dim))
    zero = np.zeros((config_dim, config_dim))
    return DlpsSystem(
        bundle=bundle, lagrangian=lagrangian,
        ivcm=lambda p0, p1, d: np.zeros(config_dim),
        ivcm_matrix=lambda p0, p1: zero)


def build_fixed_endpoint_variation(sys: DlpsSystem, path: DiscretePath,
                                   tilde_deltas: Sequence[np.ndarray]) -> Variation:
    """Assemble the fixed-endpoint variation generated by free vectors.

    ``tilde_deltas[k-1]`` is the free tangent at eps_k for k = 1..N-1.
    The last free vector is taken as is, earlier ones receive the chained
    contribution of their successor, the k = 0 slot is pure chaining, and
    base deltas follow d phi. The final base delta is zero.
    """
    n_pairs = len(path)
    if n_pairs < 2:
        raise ValueError("need a path with at least two pairs")
    if len(tilde_deltas) != n_pairs - 1:
        raise ValueError("need one free vector per interior index")
    tilde = [as_vector(d, sys.bundle.total_dim) for d in tilde_deltas]

    d_eps = [None] * n_pairs
    d_eps[n_pairs - 1] = tilde[-1].copy()
    for k in range(n_pairs - 2, 0, -1):
        chained = sys.ivcm(path[k], path[k + 1], tilde[k])
        d_eps[k] = tilde[k - 1] + as_vector(chained, sys.bundle.total_dim)
    d_eps[0] = as_vector(sys.ivcm(path[0], path[1], tilde[0]), sys.bundle.total_dim)

    deltas = []
    for k in range(n_pairs):
        if k + 1 <= n_pairs - 1:
            jphi = sys.bundle.phi.jacobian(path[k + 1][0])
            dm = jphi @ d_eps[k + 1]
        else:
            dm = np.zeros(sys.bundle.base_dim)
        deltas.append((d_eps[k], dm))
    return Variation(tuple(deltas))


def action_derivative(sys: DlpsSystem, path: DiscretePath, variation: Variation,
                      step_scale: float = DEFAULT_FD_STEP) -> float:
    """Directional derivative of the action along a variation, by FD."""
    if len(variation.deltas) != len(path):
        raise ValueError("variation and path lengths differ")

    def shifted(t):
        pairs = [(e + t * de, m + t * dm)
                 for (e, m), (de, dm) in zip(path.pairs, variation.deltas)]
        return action_sum(sys, make_path(pairs))

    scale = max(1.0, max(float(np.max(np.abs(de), initial=0.0))
                         for de, _ in variation.deltas))
    h = step_scale / scale
    return (shifted(h) - shifted(-h)) / (2.0 * h)


# --- small canonical systems ------------------------------------------------

def free_particle_dms(dim: int = 1, h: float = 1.0) -> DlpsSystem:
    """L_d(q0, q1) = |q1 - q0|^2 / (2h) on R^dim."""
    def L(x):
        d = x[dim:] - x[:dim]
        return np.array([float(d @ d) / (2.0 * h)])

    return from_dms(dim, SmoothMapHandle(2 * dim, 1, L))


def harmonic_oscillator_dms(h: float = 0.1, omega: float = 1.0,
                            dim: int = 1) -> DlpsSystem:
    """L_d(q0, q1) = |q1 - q0|^2 / (2h) - (h/2) omega^2 |q0|^2."""
    def L(x):
        q0, q1 = x[:dim], x[dim:]
        d = q1 - q0
        return np.array([float(d @ d) / (2.0 * h)
                         - 0.5 * h * omega ** 2 * float(q0 @ q0)])

    return from_dms(dim, SmoothMapHandle(2 * dim, 1, L))
