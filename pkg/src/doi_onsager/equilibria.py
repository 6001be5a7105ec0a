"""Maier-Saupe equilibria, the eta(alpha) bifurcation diagram and order parameters.

Every critical point of the free energy is either the isotropic density or
``h(m) = exp(eta (m.n)^2) / Z``.  With ``A_k(eta) = int_{-1}^{1} z^k exp(eta z^2) dz``
the self-consistency condition reads ``A_0 = alpha (A_2 - A_4)``, so
``alpha(eta) = A_0 / (A_2 - A_4)`` is evaluated directly and inverted by
bracketing on each monotone side of its minimum ``(eta*, alpha*)``.

All moment integrals are computed with the factor ``exp(-max(eta, 0))`` pulled
out, which keeps them finite for ``|eta| <= 200``; ratios never see the scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .sphere import (
    FOUR_PI,
    HarmonicField,
    SphereGrid,
    build_grid,
    check_unit,
    degree_orders,
    n_coeffs,
    rot_matrices,
    transform_for,
)

ETA_MAX = 200.0
ISOTROPIC_BOUNDARY = 7.5  # alpha where the isotropic state loses stability
FOLD_ETA_TOL = 1e-6  # branches closer than this are reported as coincident

# ---------------------------------------------------------------------------
# moment integrals A_k
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def _panels(eta: float) -> np.ndarray:
    """Panel edges on [0, 1] graded geometrically toward the peak of exp(eta z^2)."""
    scale = 1.0 / max(abs(eta), 1.0)
    widths = [0.25 * scale]
    while sum(widths) < 1.0:
        widths.append(2.0 * widths[-1])
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    edges = np.minimum(edges, 1.0)
    edges = np.unique(edges)
    # for eta > 0 the mass sits near z = 1, so mirror the grading
    return 1.0 - edges[::-1] if eta > 0 else edges


@lru_cache(maxsize=256)
def _nodes(eta: float) -> tuple[np.ndarray, np.ndarray]:
    e = _panels(eta)
    a, b = e[:-1, None], e[1:, None]
    z = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X[None, :]
    w = 0.5 * (b - a) * _GL_W[None, :]
    return z.ravel(), w.ravel()


def a_k_scaled(eta: float, k: int) -> float:
    """``exp(-max(eta,0)) * A_k(eta)``; overflow-free for |eta| <= 200."""
    _check_k(k)
    eta = float(eta)
    if abs(eta) > ETA_MAX:
        raise ValueError(f"|eta| must be <= {ETA_MAX}, got {eta}")
    z, w = _nodes(eta)
    shift = max(eta, 0.0)
    return float(2.0 * np.sum(w * z**k * np.exp(eta * z * z - shift)))


def a_k(eta: float, k: int) -> float:
    """``A_k(eta) = int_{-1}^{1} z^k exp(eta z^2) dz`` for even ``k <= 12``."""
    return a_k_scaled(eta, k) * np.exp(max(float(eta), 0.0))


def _check_k(k: int) -> None:
    if k % 2 or k < 0 or k > 16:
        raise ValueError(f"k must be even with 0 <= k <= 16, got {k}")


def _moments(eta: float, kmax: int = 8) -> np.ndarray:
    return np.array([a_k_scaled(eta, k) for k in range(0, kmax + 1, 2)])


# ---------------------------------------------------------------------------
# alpha(eta) and the fold point
# ---------------------------------------------------------------------------


def _alpha_raw(eta: float) -> float:
    """alpha(eta) including the removable point eta = 0 (value 7.5)."""
    if eta == 0.0:
        return ISOTROPIC_BOUNDARY
    A0, A2, A4 = _moments(eta, 4)
    return A0 / (A2 - A4)


def alpha_of_eta(eta: float) -> float:
    """Interaction strength for which ``h_eta`` is a critical point."""
    if eta == 0:
        raise ValueError("alpha_of_eta is undefined at eta = 0 (the isotropic state exists for every alpha)")
    return _alpha_raw(float(eta))


def dalpha_deta(eta: float) -> float:
    """Analytic derivative using ``dA_k/deta = A_{k+2}``."""
    A0, A2, A4, A6 = _moments(eta, 6)
    return (A2 * (A2 - A4) - A0 * (A4 - A6)) / (A2 - A4) ** 2


def _fold_numerator(eta: float) -> tuple[float, float]:
    A0, A2, A4, A6, A8 = _moments(eta, 8)
    N = A2 * (A2 - A4) - A0 * (A4 - A6)
    dN = A4 * (A2 - A4) - A0 * (A6 - A8)
    return N, dN


@lru_cache(maxsize=1)
def alpha_star() -> tuple[float, float]:
    """``(alpha*, eta*)``: minimum of alpha(eta) over eta > 0 and its location."""
    res = minimize_scalar(_alpha_raw, bracket=(0.5, 2.0, 5.0), method="golden", tol=1e-10)
    eta = float(res.x)
    # Newton on the numerator of dalpha/deta
    for _ in range(50):
        N, dN = _fold_numerator(eta)
        step = N / dN
        eta -= step
        if abs(step) < 1e-15 * max(1.0, eta):
            break
    return _alpha_raw(eta), eta


# ---------------------------------------------------------------------------
# branches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquilibriumBranch:
    """One solution of the self-consistency equation.

    ``near_fold`` marks alpha within the fold tolerance of alpha*; ``oblate``
    marks eta < 0, which the lower branch reaches once alpha > 7.5.
    """

    alpha: float
    eta: float
    branch: str
    S2: float
    S4: float
    near_fold: bool = False
    oblate: bool = False

    def __post_init__(self):
        if self.branch not in ("isotropic", "eta1", "eta2"):
            raise ValueError(f"unknown branch tag {self.branch!r}")


def order_params(eta: float) -> tuple[float, float]:
    """``(S2, S4) = (<P2(m.n)>, <P4(m.n)>)`` of ``h_eta``."""
    if eta == 0:
        return 0.0, 0.0
    A0, A2, A4 = _moments(eta, 4)
    S2 = (3 * A2 - A0) / (2 * A0)
    S4 = (35 * A4 - 30 * A2 + 3 * A0) / (8 * A0)
    if eta > 1e-3:  # below this S4 ~ eta^2 is at rounding level
        assert S4 > 0 and S2 - S4 > 0 and S4 / 35 - 3 * S2 / 7 + 0.4 > 0, (eta, S2, S4)
    return float(S2), float(S4)


def make_branch(alpha: float, eta: float, tag: str, **flags) -> EquilibriumBranch:
    S2, S4 = order_params(eta)
    return EquilibriumBranch(float(alpha), float(eta), tag, S2, S4, **flags)


def solve_eta_branches(alpha: float, fold_tol: float = 1e-10) -> list[EquilibriumBranch]:
    """All critical points at ``alpha``: isotropic, then the upper and lower
    nematic branches when they exist.

    Within ``fold_tol`` (relative) of alpha*, or when the two roots are closer
    than 1e-6, a single ``eta1`` branch at eta* is returned with ``near_fold``.
    """
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    out = [EquilibriumBranch(alpha, 0.0, "isotropic", 0.0, 0.0)]
    a_star, e_star = alpha_star()
    if alpha < a_star * (1 - fold_tol):
        return out
    if alpha <= a_star * (1 + fold_tol):
        out.append(make_branch(alpha, e_star, "eta1", near_fold=True))
        return out

    g = lambda e: _alpha_raw(e) - alpha
    if g(e_star) >= 0.0:
        out.append(make_branch(alpha, e_star, "eta1", near_fold=True))
        return out
    eta1 = brentq(g, e_star, max(alpha, e_star + 1.0), xtol=1e-14, rtol=1e-15, maxiter=200)
    lo = 0.0 if alpha <= ISOTROPIC_BOUNDARY else -(2.0 * alpha + 10.0)
    if g(lo) == 0.0:
        eta2 = lo
    else:
        eta2 = brentq(g, lo, e_star, xtol=1e-14, rtol=1e-15, maxiter=200)
    if abs(eta1 - eta2) < FOLD_ETA_TOL:
        out.append(make_branch(alpha, e_star, "eta1", near_fold=True))
        return out
    for eta in (eta1, eta2):
        if eta != 0.0 and abs(_alpha_raw(eta) - alpha) > 1e-10 * alpha:
            raise RuntimeError(f"root at eta={eta} misses alpha={alpha}")
    out.append(make_branch(alpha, eta1, "eta1"))
    out.append(make_branch(alpha, eta2, "eta2", oblate=eta2 < 0))
    return out


def stable_branch(alpha: float) -> EquilibriumBranch:
    """The upper nematic branch at ``alpha`` (error if alpha < alpha*)."""
    for b in solve_eta_branches(alpha):
        if b.branch == "eta1":
            return b
    raise ValueError(f"no nematic branch at alpha={alpha} (alpha* = {alpha_star()[0]:.8f})")


@dataclass(frozen=True)
class Stability:
    status: str  # "stable" or "unstable"
    near_fold: bool = False
    boundary: bool = False

    def __str__(self) -> str:
        return self.status


def classify_stability(branch: EquilibriumBranch) -> Stability:
    """Rule-based verdict: isotropic stable iff alpha < 7.5; eta1 stable;
    eta2 unstable.  alpha = 7.5 exactly is unstable with ``boundary`` set."""
    if branch.branch == "isotropic":
        return Stability(
            "stable" if branch.alpha < ISOTROPIC_BOUNDARY else "unstable",
            boundary=branch.alpha == ISOTROPIC_BOUNDARY,
        )
    status = "stable" if branch.branch == "eta1" else "unstable"
    return Stability(status, near_fold=branch.near_fold)


# ---------------------------------------------------------------------------
# the Maier-Saupe potential
# ---------------------------------------------------------------------------


def u_diag(L: int, alpha: float) -> np.ndarray:
    """Eigenvalues of ``U f = alpha int |m x m'|^2 f(m') dm'`` per basis slot."""
    ls, _ = degree_orders(L)
    d = np.zeros(n_coeffs(L))
    d[ls == 0] = 8 * np.pi * alpha / 3
    d[ls == 2] = -8 * np.pi * alpha / 15
    return d


def apply_U(f: HarmonicField, alpha: float) -> HarmonicField:
    return HarmonicField.from_real(u_diag(f.l_max, alpha) * f.real, f.l_max)


# ---------------------------------------------------------------------------
# equilibrium fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EquilibriumField:
    branch: EquilibriumBranch
    director: np.ndarray
    field: HarmonicField = field(repr=False)
    Z: float


def fine_grid(L: int) -> SphereGrid:
    """Grid used to project non-band-limited functions onto degree ``L``."""
    n_theta = L + 48
    return build_grid(n_theta, 2 * n_theta)


def density_on(grid: SphereGrid, eta: float, n: np.ndarray) -> np.ndarray:
    """Grid values of ``h_{eta,n}`` (normalised)."""
    mn = np.tensordot(n, grid.points, axes=1)
    shift = max(eta, 0.0)
    return np.exp(eta * mn * mn - shift) / (2 * np.pi * a_k_scaled(eta, 0))


def equilibrium_field(branch: EquilibriumBranch, n, L: int) -> EquilibriumField:
    """Degree-``L`` projection of ``h_{eta,n}``; the mean mode is set exactly."""
    n = check_unit(np.asarray(n, dtype=float))
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    eta = branch.eta
    grid = fine_grid(L)
    a = transform_for(grid, L).analyze(density_on(grid, eta, n))
    a[0] = 1.0 / np.sqrt(FOUR_PI)
    Z = 2 * np.pi * a_k(eta, 0)
    return EquilibriumField(branch, n.copy(), HarmonicField.from_real(a, L), Z)


def stationarity_residual(f: HarmonicField, alpha: float) -> float:
    """``|| R.(R f + f R U f) ||_2`` for the truncated field, pseudo-spectrally."""
    return float(np.linalg.norm(flux_divergence(f, alpha).real))


def flux_divergence(f: HarmonicField, alpha: float) -> HarmonicField:
    """``R.(R f + f R U f)`` with the product formed on a dealiased grid."""
    L = f.l_max
    Rm = rot_matrices(L)
    grid = build_grid(L + 4, 2 * L + 8)
    T = transform_for(grid, L)
    u = u_diag(L, alpha) * f.real
    fg = T.synth(f.real)
    Ru = T.synth(np.einsum("kij,j->ki", Rm, u))
    prod = T.analyze(fg[None] * Ru)
    flux = np.einsum("kij,j->ki", Rm, f.real) + prod
    return HarmonicField.from_real(np.einsum("kij,kj->i", Rm, flux), L)


def free_energy(f: HarmonicField, grid: SphereGrid, alpha: float) -> float:
    """``int f ln f + 1/2 f U f`` with the log term by quadrature on ``grid``."""
    vals = transform_for(grid, f.l_max).synth(f.real)
    vmin = float(vals.min())
    if vmin <= 0:
        raise ValueError(f"density must be positive on the grid; minimum value {vmin:.3e}")
    entropy = float(np.sum(vals * np.log(vals) * grid.weights))
    a = f.real
    return entropy + 0.5 * float(a @ (u_diag(f.l_max, alpha) * a))


def bifurcation_table(alphas) -> list[tuple[EquilibriumBranch, Stability]]:
    rows = []
    for alpha in alphas:
        for b in solve_eta_branches(alpha):
            rows.append((b, classify_stability(b)))
    return rows
