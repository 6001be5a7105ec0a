"""Tumbling parameter, Leslie coefficients, director dynamics and dissipation.

The adjoint-kernel functions of the linearised operator have the form
``psi = Theta . e_phi g0(theta)`` in the director frame, where ``g0`` solves a
second-order boundary-value problem driven by the equilibrium potential
``u0 = U h``.  From ``g0`` one gets the tumbling parameter

    lambda = 2 S2 / int h g0 du0/dtheta dm

and from ``(S2, S4, lambda)`` the six Leslie viscosities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .equilibria import (
    EquilibriumField,
    a_k_scaled,
    order_params,
)
from .sphere import (
    check_unit,
    director_frame,
    rot_matrices,
)
from .spectral import AInverse, _A_matrix, _grid_values, rotational_generators

# ---------------------------------------------------------------------------
# equilibrium potential and g0
# ---------------------------------------------------------------------------


def u0_profile(eta: float, alpha: float) -> Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """``theta -> (u0, du0/dtheta)`` for ``u0 = U h_eta`` as a function of the
    angle to the director."""
    S2, _ = order_params(eta)

    def profile(theta):
        c, s = np.cos(theta), np.sin(theta)
        return alpha * (1 - S2 * c * c - (1 - S2) / 3), 2 * alpha * S2 * s * c

    return profile


@dataclass(frozen=True, eq=False)
class G0Solution:
    theta_nodes: np.ndarray = field(repr=False)  # includes both poles
    g0: np.ndarray = field(repr=False)
    eta: float
    alpha: float
    residual: float

    @property
    def step(self) -> float:
        return float(self.theta_nodes[1] - self.theta_nodes[0])


def _g0_system(theta: np.ndarray, du0: np.ndarray):
    """Tridiagonal rows of ``g'' + (cot - u0') g' - g/sin^2 = -u0'`` at interior nodes."""
    d = theta[1] - theta[0]
    t = theta[1:-1]
    s = np.sin(t)
    b = np.cos(t) / s - du0[1:-1]
    lower = 1 / d**2 - b / (2 * d)
    diag = -2 / d**2 - 1 / s**2
    upper = 1 / d**2 + b / (2 * d)
    return lower, diag, upper, -du0[1:-1]


def solve_g0(eta: float, alpha: float, n_nodes: int = 2000) -> G0Solution:
    """Second-order finite differences on a uniform theta grid with
    ``g0 = 0`` at both poles (``n_nodes`` intervals)."""
    if n_nodes < 200:
        raise ValueError(f"n_nodes must be >= 200, got {n_nodes}")
    theta = np.linspace(0.0, np.pi, n_nodes + 1)
    _, du0 = u0_profile(eta, alpha)(theta)
    lower, diag, upper, rhs = _g0_system(theta, du0)
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        inner = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        dense = np.diag(diag) + np.diag(upper[:-1], 1) + np.diag(lower[1:], -1)
        raise np.linalg.LinAlgError(f"g0 system singular (condition ~ {np.linalg.cond(dense):.3e})") from exc
    g = np.concatenate([[0.0], inner, [0.0]])
    res = lower * g[:-2] + diag * g[1:-1] + upper * g[2:] - rhs
    return G0Solution(theta, g, float(eta), float(alpha), float(np.max(np.abs(res))))


def _h_of_theta(eta: float, theta: np.ndarray) -> np.ndarray:
    c = np.cos(theta)
    return np.exp(eta * c * c - max(eta, 0.0)) / (2 * np.pi * a_k_scaled(eta, 0))


def g0_pairing(sol: G0Solution) -> float:
    """``int h g0 du0/dtheta dm`` by the trapezoid rule in theta."""
    th = sol.theta_nodes
    _, du0 = u0_profile(sol.eta, sol.alpha)(th)
    integrand = _h_of_theta(sol.eta, th) * sol.g0 * du0 * np.sin(th)
    return float(2 * np.pi * np.trapezoid(integrand, th))


def lambda_of(eta: float, alpha: float, n_nodes: int = 2000, extrapolate: bool = True) -> float:
    """Tumbling parameter on the nematic branch.

    The pairing integral is second order in the grid step; with
    ``extrapolate`` the values at ``n_nodes`` and ``2 n_nodes`` are combined by
    one Richardson step.
    """
    if not eta > 0:
        raise ValueError(f"lambda is defined only on the nematic branch (eta > 0), got eta={eta}")
    S2, _ = order_params(eta)
    p = g0_pairing(solve_g0(eta, alpha, n_nodes))
    if extrapolate:
        p2 = g0_pairing(solve_g0(eta, alpha, 2 * n_nodes))
        p = (4 * p2 - p) / 3
    lam = 2 * S2 / p
    if not (np.isfinite(lam) and lam > 0):
        raise ArithmeticError(f"non-positive tumbling parameter {lam} at eta={eta}, alpha={alpha}")
    return float(lam)


# ---------------------------------------------------------------------------
# Leslie coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeslieSet:
    alpha: float
    eta: float
    S2: float
    S4: float
    lam: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    alpha6: float
    gamma1: float
    gamma2: float

    @property
    def parodi_residual(self) -> float:
        return abs(self.alpha2 + self.alpha3 - (self.alpha6 - self.alpha5))

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["lambda"] = d.pop("lam")
        return d


def coefficients_from(S2: float, S4: float, lam: float, alpha: float = np.nan, eta: float = np.nan) -> LeslieSet:
    a1 = -S4 / 2
    a2 = -0.5 * (1 + 1 / lam) * S2
    a3 = -0.5 * (1 - 1 / lam) * S2
    a4 = 4 / 15 - 5 * S2 / 21 - S4 / 35
    a5 = S4 / 7 + 6 * S2 / 7
    a6 = S4 / 7 - S2 / 7
    return LeslieSet(alpha, eta, S2, S4, lam, a1, a2, a3, a4, a5, a6, a3 - a2, a6 - a5)


def leslie_coeffs(eta: float, alpha: float, lam: float | None = None) -> LeslieSet:
    S2, S4 = order_params(eta)
    if lam is None:
        lam = lambda_of(eta, alpha)
    return coefficients_from(S2, S4, lam, float(alpha), float(eta))


def dissipation_form(ls: LeslieSet, D: np.ndarray, n: np.ndarray) -> float:
    """``(a1 + g2^2/g1)(D:nn)^2 + a4 D:D + (a5 + a6 - g2^2/g1)|D.n|^2``."""
    D = np.asarray(D, float)
    Dn = D @ n
    Dnn = float(n @ Dn)
    r = ls.gamma2**2 / ls.gamma1
    return (ls.alpha1 + r) * Dnn**2 + ls.alpha4 * float(np.sum(D * D)) + (ls.alpha5 + ls.alpha6 - r) * float(Dn @ Dn)


def L_projection_form(
    eta: float, alpha: float, D: np.ndarray, n: np.ndarray, lam: float | None = None, printed: bool = False
) -> float:
    """Closed form of ``<L(D), A^{-1} L(D)>`` for the out-of-kernel part ``L``.

    Writing ``m x Dm = R(m.Dm / 2)`` gives ``<S, A^{-1} S> = D^2:M2 - D:M4:D``
    for the full forcing ``S``, and removing the kernel part subtracts
    ``lambda S2 |n x Dn|^2``.  The D:D coefficient is therefore
    ``1/5 - S2/7 - 2 S4/35``; a trace of ``D`` adds two further terms.
    ``printed=True`` returns the variant whose D:D
    coefficient is ``-2 (S4/35 - 2 S2/21 + 1/15)``, which omits the ``D^2:M2``
    contribution and can be negative.
    """
    S2, S4 = order_params(eta)
    if lam is None:
        lam = lambda_of(eta, alpha)
    D = np.asarray(D, float)
    Dn = D @ n
    Dnn = float(n @ Dn)
    c3 = S4 / 35 - 2 * S2 / 21 + 1 / 15
    out = ((3 * S2 + 4 * S4) / 7 - lam * S2) * float(Dn @ Dn) + (lam * S2 - S4) * Dnn**2
    if printed:
        return out - 2 * c3 * float(np.sum(D * D))
    tr = float(np.trace(D))
    return out + (0.2 - S2 / 7 - 2 * S4 / 35) * float(np.sum(D * D)) - c3 * tr**2 - 2 * (S2 - S4) / 7 * tr * Dnn


def dissipation_remainder(ls: LeslieSet, D: np.ndarray, n: np.ndarray, printed: bool = False) -> float:
    """Nonnegative terms that complete ``<L, A^{-1} L>`` to the dissipation form.

    Pairs with :func:`L_projection_form` using the same ``printed`` flag.
    """
    D = np.asarray(D, float)
    Dn = D @ n
    Dnn = float(n @ Dn)
    S2, S4 = ls.S2, ls.S4
    dd = S4 / 35 - 3 * S2 / 7 + 0.4 if printed else S4 / 35 - 2 * S2 / 21 + 1 / 15
    return 2 * (S2 - S4) / 7 * float(Dn @ Dn) + S4 / 2 * Dnn**2 + dd * float(np.sum(D * D))


class KernelProjector:
    """Numerical split of the flow forcing ``R.(m x kappa m h)`` into its
    kernel part ``K`` (along ``span{R_i h}``) and out-of-kernel part ``L``.

    The projection is along the annihilator of the adjoint kernel, so
    ``<L(kappa), A^{-1} R_i h> = 0``.
    """

    def __init__(self, h: EquilibriumField, L: int):
        self.h = h
        self.L = L
        T, hv = _grid_values(h, L)
        self.T = T
        self.hv = hv
        self.Ainv = AInverse.build(_A_matrix(T, hv), L)
        frame = director_frame(h.director)
        self.gens = rotational_generators(h)
        self.psi = self.Ainv.solve(self.gens)
        self._gin = self.gens @ frame[:, :2]
        self._pin = self.psi @ frame[:, :2]
        self._gram = self._pin.T @ self._gin
        self._m = T.grid.points

    def forcing(self, kappa: np.ndarray) -> np.ndarray:
        """Real-basis vector of ``R.(m x (kappa m) h)``."""
        m = self._m
        km = np.einsum("ij,jab->iab", kappa, m)
        v = np.cross(m, km, axis=0) * self.hv[None]
        R = rot_matrices(self.L)
        comps = self.T.analyze(v)
        return np.einsum("kij,kj->i", R, comps)

    def split(self, kappa: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.forcing(np.asarray(kappa, float))
        c = np.linalg.solve(self._gram, self._pin.T @ g)
        K = self._gin @ c
        return K, g - K

    def K_closed_form(self, kappa: np.ndarray, lam: float) -> np.ndarray:
        kappa = np.asarray(kappa, float)
        D = 0.5 * (kappa + kappa.T)
        Om = 0.5 * (kappa.T - kappa)
        n = self.h.director
        theta = np.cross(n, lam * D @ n - Om @ n)
        return self.gens @ theta

    def L_form(self, D: np.ndarray) -> float:
        _, Lv = self.split(D)
        return float(Lv @ self.Ainv.solve(Lv))


# ---------------------------------------------------------------------------
# moment tensors
# ---------------------------------------------------------------------------


def moment_tensors(eta: float, n=(0.0, 0.0, 1.0)) -> tuple[np.ndarray, np.ndarray]:
    """``<mm>_h`` and ``<mmmm>_h`` for ``h = h_{eta,n}`` in closed form."""
    n = check_unit(np.asarray(n, float))
    S2, S4 = order_params(eta)
    I = np.eye(3)
    nn = np.outer(n, n)
    M2 = S2 * nn + (1 - S2) / 3 * I
    c1, c2, c3 = S4, (S2 - S4) / 7, S4 / 35 - 2 * S2 / 21 + 1 / 15
    nnnn = np.einsum("i,j,k,l->ijkl", n, n, n, n)
    sym_nnI = (
        np.einsum("ij,kl->ijkl", nn, I)
        + np.einsum("ik,jl->ijkl", nn, I)
        + np.einsum("il,jk->ijkl", nn, I)
        + np.einsum("jk,il->ijkl", nn, I)
        + np.einsum("jl,ik->ijkl", nn, I)
        + np.einsum("kl,ij->ijkl", nn, I)
    )
    sym_II = np.einsum("ij,kl->ijkl", I, I) + np.einsum("ik,jl->ijkl", I, I) + np.einsum("il,jk->ijkl", I, I)
    return M2, c1 * nnnn + c2 * sym_nnI + c3 * sym_II


def contract4(M4: np.ndarray, D: np.ndarray) -> np.ndarray:
    """``M4 : D`` over the last two indices."""
    return np.einsum("ijkl,kl->ij", M4, D)


def moment_quadrature(eta: float, n, n_theta: int = 96) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force sphere quadrature of ``<mm>`` and ``<mmmm>`` for ``h_{eta,n}``."""
    from .equilibria import density_on
    from .sphere import build_grid

    grid = build_grid(n_theta, 2 * n_theta)
    w = density_on(grid, eta, np.asarray(n, float)) * grid.weights
    m = grid.points.reshape(3, -1)
    w = w.ravel()
    M2 = np.einsum("ia,ja,a->ij", m, m, w)
    M4 = np.einsum("ia,ja,ka,la,a->ijkl", m, m, m, m, w)
    return M2, M4


# ---------------------------------------------------------------------------
# director dynamics and stress
# ---------------------------------------------------------------------------


def split_kappa(kappa: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(D, Omega) = ((k + k^T)/2, (k^T - k)/2)``, so ``kappa = D - Omega``."""
    kappa = np.asarray(kappa, float)
    return 0.5 * (kappa + kappa.T), 0.5 * (kappa.T - kappa)


def check_kappa(kappa, tol: float = 1e-12) -> np.ndarray:
    kappa = np.asarray(kappa, float).reshape(3, 3)
    if abs(np.trace(kappa)) > tol:
        raise ValueError(f"velocity gradient must be traceless (trace = {np.trace(kappa):.3e})")
    return kappa


@dataclass(frozen=True, eq=False)
class DirectorState:
    t: float
    n: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        check_unit(self.n)
        check_kappa(self.kappa)

    @property
    def D(self) -> np.ndarray:
        return split_kappa(self.kappa)[0]

    @property
    def Omega(self) -> np.ndarray:
        return split_kappa(self.kappa)[1]


def director_rate(n: np.ndarray, kappa: np.ndarray, lam: float) -> np.ndarray:
    """``dn/dt = -Omega n + lambda (I - nn) D n``."""
    D, Om = split_kappa(kappa)
    Dn = D @ n
    return -Om @ n + lam * (Dn - (n @ Dn) * n)


def director_step(state: DirectorState, lam: float, dt: float) -> DirectorState:
    """One RK4 step followed by renormalisation."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n, k = state.n, state.kappa
    k1 = director_rate(n, k, lam)
    k2 = director_rate(n + 0.5 * dt * k1, k, lam)
    k3 = director_rate(n + 0.5 * dt * k2, k, lam)
    k4 = director_rate(n + dt * k3, k, lam)
    n_new = n + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return DirectorState(state.t + dt, n_new / np.linalg.norm(n_new), k)


def director_solve(n0, kappa, lam: float, t_final: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Trajectory ``(t, n)`` on a uniform grid ending exactly at ``t_final``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    steps = max(1, int(np.ceil(t_final / dt - 1e-9)))
    h = t_final / steps
    state = DirectorState(0.0, check_unit(np.asarray(n0, float)), check_kappa(kappa))
    ts, ns = [0.0], [state.n]
    for _ in range(steps):
        state = director_step(state, lam, h)
        ts.append(state.t)
        ns.append(state.n)
    return np.array(ts), np.array(ns)


def leslie_stress(ls: LeslieSet, state: DirectorState, dn_dt: np.ndarray) -> np.ndarray:
    """Viscous Leslie stress with ``N = dn/dt + Omega n``."""
    n, D, Om = state.n, state.D, state.Omega
    N = np.asarray(dn_dt, float) + Om @ n
    nn = np.outer(n, n)
    return (
        ls.alpha1 * float(n @ D @ n) * nn
        + ls.alpha2 * np.outer(n, N)
        + ls.alpha3 * np.outer(N, n)
        + ls.alpha4 * D
        + ls.alpha5 * nn @ D
        + ls.alpha6 * D @ nn
    )
