"""Quadrature grids, spherical-harmonic transforms and the rotational gradient.

Fields on the unit sphere are expanded in complex orthonormal spherical
harmonics ``Y_{l,m}`` with the Condon-Shortley phase.  A real field satisfies
``c_{l,-m} = (-1)^m conj(c_{l,m})``; internally every numerical kernel works on
the equivalent *real* orthonormal basis

    Y^R_{l,0}  = Y_{l,0}
    Y^R_{l,m}  = sqrt(2) Re Y_{l,m}      (m > 0)
    Y^R_{l,-m} = sqrt(2) Im Y_{l,m}      (m > 0)

stored as a flat vector indexed by ``l*l + l + m``.  The map between the two
representations is exact, so the conjugation symmetry of complex coefficients
produced from real vectors holds bit-for-bit.

The rotational gradient is ``R = m x grad_m``, i.e. ``R = i L`` with ``L`` the
angular-momentum operator.  In particular ``R_3 = d/dphi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SQRT2 = np.sqrt(2.0)
FOUR_PI = 4.0 * np.pi


def n_coeffs(L: int) -> int:
    return (L + 1) ** 2


def lm_index(l: int, m: int) -> int:
    return l * l + l + m


@lru_cache(maxsize=None)
def degree_orders(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(ls, ms)`` giving degree and order of every basis slot."""
    ls = np.concatenate([np.full(2 * l + 1, l) for l in range(L + 1)])
    ms = np.concatenate([np.arange(-l, l + 1) for l in range(L + 1)])
    ls.setflags(write=False)
    ms.setflags(write=False)
    return ls, ms


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Gauss-Legendre nodes in ``z = cos(theta)`` times a uniform grid in ``phi``."""

    n_theta: int
    n_phi: int
    nodes_z: np.ndarray
    weights_z: np.ndarray
    phi_step: float

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @property
    def phi(self) -> np.ndarray:
        return self.phi_step * np.arange(self.n_phi)

    @property
    def theta(self) -> np.ndarray:
        return np.arccos(self.nodes_z)

    @property
    def points(self) -> np.ndarray:
        """Unit vectors ``m`` on the grid, shape ``(3, n_theta, n_phi)``."""
        z = self.nodes_z[:, None]
        s = np.sqrt(1.0 - z * z)
        phi = self.phi[None, :]
        return np.array(
            [s * np.cos(phi), s * np.sin(phi), np.broadcast_to(z, (self.n_theta, self.n_phi))]
        )

    @property
    def weights(self) -> np.ndarray:
        """Surface quadrature weights, shape ``(n_theta, n_phi)``."""
        return np.broadcast_to(self.weights_z[:, None] * self.phi_step, self.shape)

    def max_degree(self) -> int:
        """Largest degree ``L`` this grid can analyse exactly."""
        return min(self.n_theta - 1, (self.n_phi - 1) // 2)


def build_grid(n_theta: int, n_phi: int) -> SphereGrid:
    if n_theta < 2:
        raise ValueError(f"n_theta must be >= 2, got {n_theta}")
    if n_phi < 4 or n_phi % 2:
        raise ValueError(f"n_phi must be even and >= 4, got {n_phi}")
    z, w = np.polynomial.legendre.leggauss(n_theta)
    z.setflags(write=False)
    w.setflags(write=False)
    return SphereGrid(n_theta, n_phi, z, w, 2.0 * np.pi / n_phi)


@lru_cache(maxsize=64)
def product_grid(L: int, extra: int = 0) -> SphereGrid:
    """Grid that integrates products of two degree-``L`` fields (times a
    factor of effective degree ``extra``) without aliasing."""
    deg = 2 * L + extra
    n_theta = deg // 2 + 1
    n_phi = deg + 2
    n_phi += n_phi % 2
    return build_grid(max(n_theta, 2), max(n_phi, 4))


# ---------------------------------------------------------------------------
# associated Legendre functions
# ---------------------------------------------------------------------------


def legendre_table(L: int, z: np.ndarray) -> np.ndarray:
    """Normalised ``P_{l,m}(z)`` such that ``Y_{l,m} = P_{l,m}(z) e^{i m phi}``.

    Returns an array indexed ``[m, l, j]`` (zero for ``l < m``); the
    Condon-Shortley phase is included.
    """
    z = np.asarray(z, dtype=float)
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    P = np.zeros((L + 1, L + 1, z.size))
    pmm = np.full(z.size, 1.0 / np.sqrt(FOUR_PI))
    for m in range(L + 1):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2.0 * m)) * s * pmm
        P[m, m] = pmm
        if m + 1 <= L:
            P[m, m + 1] = np.sqrt(2 * m + 3.0) * z * pmm
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[m, l] = a * (z * P[m, l - 1] - b * P[m, l - 2])
    return P


# ---------------------------------------------------------------------------
# real <-> complex coefficient maps
# ---------------------------------------------------------------------------


def real_to_complex(a: np.ndarray, L: int) -> np.ndarray:
    """Real-basis vector(s) to conjugation-symmetric complex coefficients.

    ``a`` may carry extra trailing dimensions (e.g. matrix columns).
    """
    ls, ms = degree_orders(L)
    a = np.asarray(a)
    c = np.zeros(a.shape, dtype=complex)
    pos = np.nonzero(ms > 0)[0]
    neg = pos - 2 * ms[pos]  # slot of (l, -m)
    zero = np.nonzero(ms == 0)[0]
    c[zero] = a[zero]
    cp = (a[pos] - 1j * a[neg]) / SQRT2
    c[pos] = cp
    sign = np.where(ms[pos] % 2 == 0, 1.0, -1.0)
    sign = sign.reshape(sign.shape + (1,) * (a.ndim - 1))
    c[neg] = sign * np.conj(cp)
    return c


def complex_to_real(c: np.ndarray, L: int) -> np.ndarray:
    """Inverse of :func:`real_to_complex` (uses only ``m >= 0`` slots)."""
    ls, ms = degree_orders(L)
    c = np.asarray(c)
    a = np.zeros(c.shape, dtype=float)
    pos = np.nonzero(ms > 0)[0]
    neg = pos - 2 * ms[pos]
    zero = np.nonzero(ms == 0)[0]
    a[zero] = c[zero].real
    a[pos] = SQRT2 * c[pos].real
    a[neg] = -SQRT2 * c[pos].imag
    return a


@dataclass(frozen=True, eq=False)
class HarmonicField:
    """Real function on the sphere given by complex SH coefficients up to ``l_max``."""

    l_max: int
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def from_real(cls, a: np.ndarray, L: int | None = None) -> "HarmonicField":
        a = np.asarray(a, dtype=float)
        if L is None:
            L = int(round(np.sqrt(a.size))) - 1
        if a.size != n_coeffs(L):
            raise ValueError(f"expected {n_coeffs(L)} coefficients for L={L}, got {a.size}")
        c = real_to_complex(a, L)
        c.setflags(write=False)
        return cls(L, c)

    @classmethod
    def from_complex(cls, c: np.ndarray, L: int) -> "HarmonicField":
        """Symmetrise arbitrary complex coefficients onto a real field."""
        return cls.from_real(complex_to_real(np.asarray(c), L), L)

    @classmethod
    def zeros(cls, L: int) -> "HarmonicField":
        return cls.from_real(np.zeros(n_coeffs(L)), L)

    @classmethod
    def basis(cls, L: int, l: int, m: int) -> "HarmonicField":
        """Real basis function ``Y^R_{l,m}``."""
        a = np.zeros(n_coeffs(L))
        a[lm_index(l, m)] = 1.0
        return cls.from_real(a, L)

    @property
    def real(self) -> np.ndarray:
        return complex_to_real(self.coeffs, self.l_max)

    def coeff(self, l: int, m: int) -> complex:
        return complex(self.coeffs[lm_index(l, m)])

    def truncate(self, L: int) -> "HarmonicField":
        if L >= self.l_max:
            a = np.zeros(n_coeffs(L))
            a[: n_coeffs(self.l_max)] = self.real
            return HarmonicField.from_real(a, L)
        return HarmonicField.from_real(self.real[: n_coeffs(L)], L)

    def norm(self) -> float:
        return float(np.linalg.norm(self.real))

    def __add__(self, other: "HarmonicField") -> "HarmonicField":
        _check_same_degree(self, other)
        return HarmonicField.from_real(self.real + other.real, self.l_max)

    def __sub__(self, other: "HarmonicField") -> "HarmonicField":
        _check_same_degree(self, other)
        return HarmonicField.from_real(self.real - other.real, self.l_max)

    def __mul__(self, k: float) -> "HarmonicField":
        return HarmonicField.from_real(k * self.real, self.l_max)

    __rmul__ = __mul__

    def __neg__(self) -> "HarmonicField":
        return HarmonicField.from_real(-self.real, self.l_max)


def _check_same_degree(f: HarmonicField, g: HarmonicField) -> None:
    if f.l_max != g.l_max:
        raise ValueError(f"degree mismatch: {f.l_max} vs {g.l_max}")


@dataclass(frozen=True, eq=False)
class GridField:
    values: np.ndarray
    grid: SphereGrid

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


class Transform:
    """Cached analysis/synthesis between real-basis vectors and a grid.

    All methods accept stacks of fields along a leading axis.
    """

    def __init__(self, grid: SphereGrid, L: int):
        if grid.n_phi < 2 * L + 1 or grid.n_phi // 2 <= L:
            raise ValueError(f"n_phi={grid.n_phi} too small for degree {L}")
        if grid.n_theta < L + 1:
            raise ValueError(f"n_theta={grid.n_theta} too small for degree {L}")
        self.grid = grid
        self.L = L
        self.P = legendre_table(L, grid.nodes_z)  # [m, l, j]
        self.Pw = self.P * grid.weights_z[None, None, :] * grid.phi_step
        ls, ms = degree_orders(L)
        # scatter maps between flat real vectors and [m, l] complex arrays
        self._m_pos = []
        for m in range(L + 1):
            l = np.arange(m, L + 1)
            self._m_pos.append((l, l * l + l + m, l * l + l - m))

    def _to_mat(self, a: np.ndarray) -> np.ndarray:
        C = np.zeros(a.shape[:-1] + (self.L + 1, self.L + 1), dtype=complex)
        for m, (l, ip, ineg) in enumerate(self._m_pos):
            if m == 0:
                C[..., 0, l] = a[..., ip]
            else:
                C[..., m, l] = (a[..., ip] - 1j * a[..., ineg]) / SQRT2
        return C

    def _from_mat(self, C: np.ndarray) -> np.ndarray:
        a = np.zeros(C.shape[:-2] + (n_coeffs(self.L),))
        for m, (l, ip, ineg) in enumerate(self._m_pos):
            if m == 0:
                a[..., ip] = C[..., 0, l].real
            else:
                a[..., ip] = SQRT2 * C[..., m, l].real
                a[..., ineg] = -SQRT2 * C[..., m, l].imag
        return a

    def synth(self, a: np.ndarray) -> np.ndarray:
        """Real-basis coefficients ``(..., n)`` to grid values ``(..., n_theta, n_phi)``."""
        a = np.asarray(a, dtype=float)
        C = self._to_mat(a)
        F = np.einsum("mlj,...ml->...jm", self.P, C)  # (..., j, m)
        n = self.grid.n_phi
        X = np.zeros(F.shape[:-1] + (n // 2 + 1,), dtype=complex)
        X[..., : self.L + 1] = n * F
        X[..., 0] = X[..., 0].real
        return np.fft.irfft(X, n=n, axis=-1)

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Grid values to real-basis coefficients (quadrature projection)."""
        G = np.fft.rfft(np.asarray(values, dtype=float), axis=-1)[..., : self.L + 1]
        C = np.einsum("mlj,...jm->...ml", self.Pw, G)
        return self._from_mat(C)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.einsum("...jk,j->...", values, self.grid.weights_z) * self.grid.phi_step


@lru_cache(maxsize=64)
def _transform(n_theta: int, n_phi: int, L: int) -> Transform:
    return Transform(build_grid(n_theta, n_phi), L)


def transform_for(grid: SphereGrid, L: int) -> Transform:
    return _transform(grid.n_theta, grid.n_phi, L)


def sh_analyze(g: GridField | np.ndarray, grid: SphereGrid, L: int) -> HarmonicField:
    values = g.values if isinstance(g, GridField) else np.asarray(g)
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
    return HarmonicField.from_real(transform_for(grid, L).analyze(values), L)


def sh_synthesize(f: HarmonicField, grid: SphereGrid) -> GridField:
    return GridField(transform_for(grid, f.l_max).synth(f.real), grid)


# ---------------------------------------------------------------------------
# rotational gradient
# ---------------------------------------------------------------------------


def _ladder_complex(L: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense complex matrices of ``R_1, R_2, R_3`` acting on complex coefficients."""
    n = n_coeffs(L)
    ls, ms = degree_orders(L)
    Lp = np.zeros((n, n))
    Lm = np.zeros((n, n))
    for i in range(n):
        l, m = ls[i], ms[i]
        if m < l:
            Lp[lm_index(l, m + 1), i] = np.sqrt(l * (l + 1) - m * (m + 1))
        if m > -l:
            Lm[lm_index(l, m - 1), i] = np.sqrt(l * (l + 1) - m * (m - 1))
    R1 = 0.5j * (Lp + Lm)
    R2 = 0.5 * (Lp - Lm)
    R3 = np.diag(1j * ms.astype(float))
    return R1, R2, R3


@lru_cache(maxsize=None)
def rot_matrices(L: int) -> np.ndarray:
    """Real-basis matrices of ``R_1, R_2, R_3``; shape ``(3, n, n)``.

    Each matrix is real and antisymmetric and preserves the degree ``l``.
    """
    n = n_coeffs(L)
    eye = np.eye(n)
    C = real_to_complex(eye, L)  # columns: complex coeffs of each real basis fn
    out = np.empty((3, n, n))
    for k, Rk in enumerate(_ladder_complex(L)):
        out[k] = complex_to_real(Rk @ C, L)
    out[np.abs(out) < 1e-15] = 0.0
    out.setflags(write=False)
    return out


def laplacian_diag(L: int) -> np.ndarray:
    ls, _ = degree_orders(L)
    return -(ls * (ls + 1.0))


def apply_R(f: HarmonicField, axis: int) -> HarmonicField:
    """``R_axis f`` for ``axis`` in ``{1, 2, 3}`` (exact on the truncated basis)."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    return HarmonicField.from_real(rot_matrices(f.l_max)[axis - 1] @ f.real, f.l_max)


def apply_R_vec(f: HarmonicField) -> tuple[HarmonicField, HarmonicField, HarmonicField]:
    return tuple(apply_R(f, k) for k in (1, 2, 3))


def div_R(v: tuple[HarmonicField, HarmonicField, HarmonicField]) -> HarmonicField:
    """``R . v`` for a vector of fields."""
    L = v[0].l_max
    Rm = rot_matrices(L)
    return HarmonicField.from_real(sum(Rm[k] @ v[k].real for k in range(3)), L)


def laplacian(f: HarmonicField) -> HarmonicField:
    return HarmonicField.from_real(laplacian_diag(f.l_max) * f.real, f.l_max)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def integrate(f: HarmonicField | GridField) -> float:
    if isinstance(f, HarmonicField):
        return float(np.sqrt(FOUR_PI) * f.coeffs[0].real)
    w = f.grid.weights
    return float(np.sum(f.values * w))


def inner(f: HarmonicField | GridField, g: HarmonicField | GridField) -> float:
    """L2 inner product on the sphere."""
    if isinstance(f, HarmonicField) and isinstance(g, HarmonicField):
        _check_same_degree(f, g)
        return float(f.real @ g.real)
    if isinstance(f, GridField) and isinstance(g, GridField):
        if f.grid.shape != g.grid.shape:
            raise ValueError(f"grid mismatch: {f.grid.shape} vs {g.grid.shape}")
        return float(np.sum(f.values * g.values * f.grid.weights))
    raise TypeError("inner() needs two HarmonicFields or two GridFields")


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------


def director_frame(n: np.ndarray) -> np.ndarray:
    """Rotation matrix whose third column is ``n`` (right-handed)."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    k2 = np.cross(n, helper)
    k2 /= np.linalg.norm(k2)
    k1 = np.cross(k2, n)
    return np.column_stack([k1, k2, n])


def check_unit(n: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > tol:
        raise ValueError(f"director must be a unit 3-vector, got {n!r}")
    return n
