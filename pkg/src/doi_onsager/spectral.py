"""Linearised Doi-Onsager operator and its factors on the truncated basis.

With ``A_h phi = -R.(h R phi)`` and ``H_h f = f/h + U f`` the linearisation at a
critical point factors as ``G_h = -A_h H_h``.  Both factors are symmetric and
``A_h`` is positive definite on mean-zero fields, so the spectrum of ``G_h`` on
that subspace is real and is computed from the symmetric matrix
``-C^T H C`` with ``A = C C^T`` (Cholesky).  The plain nonsymmetric
eigen-solve is kept as a cross-check.

Products with ``h`` and ``1/h`` are Galerkin projections computed by quadrature
on a grid much finer than the basis, using the grid values of the truncated
field ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from .equilibria import EquilibriumField, fine_grid, u_diag
from .sphere import HarmonicField, director_frame, n_coeffs, rot_matrices, transform_for

KERNEL_TOL = 1e-7  # relative to the spectral norm of G


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator in the real orthonormal harmonic basis.

    ``factors`` holds ``(A_h, H_h)`` matrices when the operator was built as
    ``-A_h H_h``; the spectrum routine then uses the symmetric route.
    """

    dim: int
    matrix: np.ndarray = field(repr=False)
    label: str
    meta: dict
    factors: tuple | None = field(default=None, repr=False)

    def apply(self, f: HarmonicField) -> HarmonicField:
        return HarmonicField.from_real(self.matrix @ f.real, f.l_max)


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    max_real: float
    kernel_dim: int
    kernel_basis: list
    kernel_tol: float
    crosscheck: float | None = None  # max gap to the nonsymmetric solve


def _meta(h: EquilibriumField | None, L: int, alpha: float) -> dict:
    meta = {"alpha": float(alpha), "L": int(L)}
    if h is not None:
        meta["eta"] = float(h.branch.eta)
        meta["branch"] = h.branch.branch
    return meta


def assemble_U(L: int, alpha: float) -> OperatorMatrix:
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    return OperatorMatrix(n_coeffs(L), np.diag(u_diag(L, alpha)), "U", _meta(None, L, alpha))


def _grid_values(h: EquilibriumField, L: int):
    if h.field.l_max != L:
        raise ValueError(f"field has degree {h.field.l_max}, operators requested at L={L}")
    grid = fine_grid(L)
    T = transform_for(grid, L)
    hv = T.synth(h.field.real)
    if hv.min() <= 1e-12:
        raise ValueError(f"h must be positive on the quadrature grid; minimum value {hv.min():.3e}")
    return T, hv


def multiplication_matrix(T, values: np.ndarray) -> np.ndarray:
    """Galerkin matrix of pointwise multiplication by grid ``values``."""
    n = n_coeffs(T.L)
    B = T.synth(np.eye(n))
    M = T.analyze(B * values[None]).T
    return 0.5 * (M + M.T)


def _A_matrix(T, hv) -> np.ndarray:
    Mh = multiplication_matrix(T, hv)
    R = rot_matrices(T.L)
    A = sum(R[k].T @ Mh @ R[k] for k in range(3))
    return 0.5 * (A + A.T)


def assemble_A_h(h: EquilibriumField, L: int) -> OperatorMatrix:
    """``A_h phi = -R.(h R phi)``: symmetric, PSD, kernel = constants."""
    T, hv = _grid_values(h, L)
    return OperatorMatrix(n_coeffs(L), _A_matrix(T, hv), "A_h", _meta(h, L, h.branch.alpha))


def _H_matrix(T, hv, alpha) -> np.ndarray:
    return multiplication_matrix(T, 1.0 / hv) + np.diag(u_diag(T.L, alpha))


def assemble_H_h(h: EquilibriumField, L: int) -> OperatorMatrix:
    """``H_h f = f/h + U f`` (second variation of the free energy)."""
    T, hv = _grid_values(h, L)
    return OperatorMatrix(n_coeffs(L), _H_matrix(T, hv, h.branch.alpha), "H_h", _meta(h, L, h.branch.alpha))


def assemble_G_h(h: EquilibriumField, L: int, form: str = "factored") -> OperatorMatrix:
    """Linearised operator ``G_h f = R.(R f + h R U f + f R U h)``.

    ``form="factored"`` (default) builds ``-A_h H_h`` from the two Galerkin
    factors.  ``form="direct"`` projects the defining expression term by term;
    the two agree up to truncation of ``h`` and the direct form is what the
    pseudo-spectral kinetic right-hand side linearises to.
    """
    T, hv = _grid_values(h, L)
    alpha = h.branch.alpha
    meta = _meta(h, L, alpha)
    if form == "factored":
        A = _A_matrix(T, hv)
        H = _H_matrix(T, hv, alpha)
        return OperatorMatrix(n_coeffs(L), -A @ H, "G_h", meta, factors=(A, H))
    if form != "direct":
        raise ValueError(f"form must be 'factored' or 'direct', got {form!r}")
    R = rot_matrices(L)
    U = np.diag(u_diag(L, alpha))
    u0 = u_diag(L, alpha) * h.field.real
    Mh = multiplication_matrix(T, hv)
    G = -sum(R[k].T @ R[k] for k in range(3))
    for k in range(3):
        Mk = multiplication_matrix(T, T.synth(R[k] @ u0))
        G = G + R[k] @ Mh @ R[k] @ U + R[k] @ Mk
    return OperatorMatrix(n_coeffs(L), G, "G_h", meta)


def assemble_G_h_star(h: EquilibriumField, L: int) -> OperatorMatrix:
    G = assemble_G_h(h, L)
    A, H = G.factors
    return OperatorMatrix(G.dim, G.matrix.T.copy(), "G_h_star", G.meta, factors=(A, H))


def _fields(vectors: np.ndarray, L: int) -> list[HarmonicField]:
    return [HarmonicField.from_real(v, L) for v in vectors.T]


def spectrum(op: OperatorMatrix, subspace: str = "mean_zero", crosscheck: bool = False) -> SpectrumReport:
    """Eigenvalues of ``op`` (ascending real parts) and its numerical kernel.

    The kernel is the span of eigenvectors with ``|lambda| < KERNEL_TOL * ||op||_2``.
    """
    if subspace not in ("mean_zero", "all"):
        raise ValueError(f"subspace must be 'mean_zero' or 'all', got {subspace!r}")
    if not np.all(np.isfinite(op.matrix)):
        raise ValueError("operator matrix has non-finite entries")
    L = op.meta["L"]
    s = slice(1, None) if subspace == "mean_zero" else slice(None)
    M = op.matrix[s, s]
    scale = np.linalg.norm(M, 2)
    tol = KERNEL_TOL * scale
    gap = None
    if op.factors is not None and op.label == "G_h" and subspace == "mean_zero":
        A, H = (F[s, s] for F in op.factors)
        C = np.linalg.cholesky(A)
        w, V = eigh(-(C.T @ H @ C))
        vals, vecs = w, C @ V
        if crosscheck:
            ev = np.sort(np.linalg.eigvals(M).real)
            gap = float(np.max(np.abs(ev - np.sort(w))))
    elif np.allclose(M, M.T, rtol=0, atol=1e-13 * max(scale, 1.0)):
        vals, vecs = eigh(0.5 * (M + M.T))
    else:
        w, V = np.linalg.eig(M)
        order = np.argsort(w.real)
        vals, vecs = w.real[order], V[:, order].real
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    ker = np.abs(vals) < tol
    K = vecs[:, ker]
    if K.size:
        K, _ = np.linalg.qr(K)
    if subspace == "mean_zero":
        K = np.vstack([np.zeros((1, K.shape[1])), K])
    return SpectrumReport(vals, float(vals.max()), int(ker.sum()), _fields(K, L), tol, gap)


def _require_stable(h: EquilibriumField, what: str) -> None:
    if h.branch.branch != "eta1":
        raise ValueError(
            f"{what} is only characterised on the stable nematic branch (eta1); got branch {h.branch.branch!r}"
        )


def rotational_generators(h: EquilibriumField) -> np.ndarray:
    """Real-basis vectors of ``R_1 h, R_2 h, R_3 h`` as columns."""
    R = rot_matrices(h.field.l_max)
    return np.column_stack([R[k] @ h.field.real for k in range(3)])


def kernel_basis(h: EquilibriumField, L: int) -> list[HarmonicField]:
    """Orthonormal basis of the numerical kernel of ``G_h`` on mean-zero fields."""
    _require_stable(h, "kernel_basis")
    return spectrum(assemble_G_h(h, L)).kernel_basis


@dataclass(frozen=True, eq=False)
class AInverse:
    """Solver for ``A_h psi = g`` on mean-zero fields (constant mode pinned)."""

    L: int
    chol: tuple = field(repr=False)

    @classmethod
    def build(cls, A: np.ndarray, L: int) -> "AInverse":
        return cls(L, cho_factor(A[1:, 1:]))

    def solve(self, g: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(g))
        out[1:] = cho_solve(self.chol, np.asarray(g)[1:])
        return out


def lower_bound_c0(h: EquilibriumField, L: int, constrained: bool = True) -> float:
    """Smallest eigenvalue of ``H_h`` on mean-zero fields orthogonal to
    ``A_h^{-1} R_i h`` (``constrained=False`` drops the orthogonality)."""
    _require_stable(h, "lower_bound_c0")
    T, hv = _grid_values(h, L)
    H = _H_matrix(T, hv, h.branch.alpha)[1:, 1:]
    if not constrained:
        return float(eigh(H, eigvals_only=True)[0])
    Ainv = AInverse.build(_A_matrix(T, hv), L)
    C = Ainv.solve(rotational_generators(h))[1:]
    # orthonormal complement of span(C)
    U, s, _ = np.linalg.svd(C, full_matrices=True)
    rank = int(np.sum(s > 1e-10 * s.max()))
    Q = U[:, rank:]
    return float(eigh(Q.T @ H @ Q, eigvals_only=True)[0])


def adjoint_kernel(h: EquilibriumField, L: int) -> list[HarmonicField]:
    """``A_h^{-1}(R_i h)`` for i = 1, 2, 3; these span the kernel of ``G_h^T``."""
    _require_stable(h, "adjoint_kernel")
    T, hv = _grid_values(h, L)
    Ainv = AInverse.build(_A_matrix(T, hv), L)
    return _fields(Ainv.solve(rotational_generators(h)), L)


def kernel_product(h: EquilibriumField, L: int, u, v) -> float:
    """``<u.R h, A_h^{-1}(v.R h)>`` computed spectrally."""
    gens = rotational_generators(h)
    psi = np.column_stack([p.real for p in adjoint_kernel(h, L)])
    return float((gens @ np.asarray(u, float)) @ (psi @ np.asarray(v, float)))


def in_plane_adjoint_kernel(h: EquilibriumField, L: int) -> list[HarmonicField]:
    """Adjoint-kernel functions for the two directions perpendicular to ``n``."""
    frame = director_frame(h.director)
    psi = np.column_stack([p.real for p in adjoint_kernel(h, L)])
    return _fields(psi @ frame[:, :2], L)
