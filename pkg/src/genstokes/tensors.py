"""Pointwise algebra of symmetric 3x3 tensors.

Everything here is exact componentwise arithmetic on small immutable values:
principal invariants, eigenvalues, the Cayley-Hamilton inverse, the
symmetrization operator S(M), the product operator S(M)A + A S(M), and the
analytic first and second derivatives of the inverse of a unimodular tensor.

All functions are pure; values are frozen dataclasses, so concurrent use is
safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotUnimodular, SingularTensor

__all__ = [
    "SymTensor3",
    "Invariants3",
    "EigenTriple",
    "invariants",
    "eig_sym3",
    "ch_inverse",
    "symmetrize",
    "lop",
    "d_inverse",
    "d2_inverse",
    "eig_sym3_batch",
    "ch_inverse_batch",
    "d_inverse_batch",
]

# Tolerance below which the closed-form eigenvalue solve hands over to the
# Jacobi fallback (spectrum nearly degenerate).
_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class SymTensor3:
    """Symmetric 3x3 tensor stored by its six independent components."""

    a11: float
    a22: float
    a33: float
    a12: float
    a13: float
    a23: float

    @staticmethod
    def identity() -> "SymTensor3":
        return SymTensor3(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def zero() -> "SymTensor3":
        return SymTensor3(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    @staticmethod
    def diag(d1: float, d2: float, d3: float) -> "SymTensor3":
        return SymTensor3(float(d1), float(d2), float(d3), 0.0, 0.0, 0.0)

    @staticmethod
    def from_matrix(m) -> "SymTensor3":
        """Build from a full symmetric matrix (no symmetrization applied)."""
        m = np.asarray(m, dtype=float)
        return SymTensor3(
            float(m[0, 0]), float(m[1, 1]), float(m[2, 2]),
            float(m[0, 1]), float(m[0, 2]), float(m[1, 2]),
        )

    def to_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.a11, self.a12, self.a13],
                [self.a12, self.a22, self.a23],
                [self.a13, self.a23, self.a33],
            ]
        )

    # -- small arithmetic helpers -------------------------------------------------
    def __add__(self, other: "SymTensor3") -> "SymTensor3":
        return SymTensor3(
            self.a11 + other.a11,
            self.a22 + other.a22,
            self.a33 + other.a33,
            self.a12 + other.a12,
            self.a13 + other.a13,
            self.a23 + other.a23,
        )

    def __sub__(self, other: "SymTensor3") -> "SymTensor3":
        return self + other.scale(-1.0)

    def scale(self, c: float) -> "SymTensor3":
        return SymTensor3(
            c * self.a11, c * self.a22, c * self.a33,
            c * self.a12, c * self.a13, c * self.a23,
        )

    def ddot(self, other: "SymTensor3") -> float:
        """Frobenius inner product A : B."""
        return (
            self.a11 * other.a11
            + self.a22 * other.a22
            + self.a33 * other.a33
            + 2.0 * (self.a12 * other.a12 + self.a13 * other.a13 + self.a23 * other.a23)
        )

    def trace(self) -> float:
        return self.a11 + self.a22 + self.a33

    def frobenius(self) -> float:
        return math.sqrt(self.ddot(self))

    def max_abs(self) -> float:
        return max(
            abs(self.a11), abs(self.a22), abs(self.a33),
            abs(self.a12), abs(self.a13), abs(self.a23),
        )


@dataclass(frozen=True)
class Invariants3:
    """Principal invariants (trace, second invariant, determinant)."""

    i1: float
    i2: float
    i3: float


@dataclass(frozen=True)
class EigenTriple:
    """Eigenvalues in ascending order l1 <= l2 <= l3."""

    l1: float
    l2: float
    l3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.l1, self.l2, self.l3])


def invariants(b: SymTensor3) -> Invariants3:
    """Coefficients of the characteristic polynomial of ``b``.

    Returns (Tr B, ((Tr B)^2 - Tr(B^2))/2, det B) so that the characteristic
    polynomial is lam^3 - i1 lam^2 + i2 lam - i3.
    """
    i1 = b.trace()
    tr_b2 = (
        b.a11 * b.a11 + b.a22 * b.a22 + b.a33 * b.a33
        + 2.0 * (b.a12 * b.a12 + b.a13 * b.a13 + b.a23 * b.a23)
    )
    i2 = 0.5 * (i1 * i1 - tr_b2)
    i3 = (
        b.a11 * (b.a22 * b.a33 - b.a23 * b.a23)
        - b.a12 * (b.a12 * b.a33 - b.a23 * b.a13)
        + b.a13 * (b.a12 * b.a23 - b.a22 * b.a13)
    )
    return Invariants3(i1, i2, i3)


def _jacobi_eigvals(m: np.ndarray, sweeps: int = 30) -> np.ndarray:
    """Cyclic Jacobi rotations; returns ascending eigenvalues."""
    a = np.array(m, dtype=float)
    for _ in range(sweeps):
        off = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
        if off < 1e-300 or off <= 1e-32 * max(1.0, np.sum(np.diag(a) ** 2)):
            break
        for p in range(2):
            for q in range(p + 1, 3):
                if a[p, q] == 0.0:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(3)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def eig_sym3(b: SymTensor3) -> EigenTriple:
    """Eigenvalues of a symmetric 3x3 tensor, ascending.

    Closed-form trigonometric solve of the characteristic cubic.  When the
    spectrum is (nearly) degenerate the acos argument saturates and the
    closed form loses accuracy, so a Jacobi-rotation fallback takes over.
    """
    off2 = b.a12 * b.a12 + b.a13 * b.a13 + b.a23 * b.a23
    if off2 == 0.0:
        lams = sorted((b.a11, b.a22, b.a33))
        return EigenTriple(*lams)

    q = b.trace() / 3.0
    p2 = (
        (b.a11 - q) ** 2 + (b.a22 - q) ** 2 + (b.a33 - q) ** 2 + 2.0 * off2
    )
    p = math.sqrt(p2 / 6.0)
    scale = max(1.0, b.max_abs())
    if p <= _DEGENERATE_TOL * scale:
        # Spectrum is a triple point to machine precision.
        return EigenTriple(q, q, q)

    m = (b.to_matrix() - q * np.eye(3)) / p
    r = np.linalg.det(m) / 2.0
    if abs(r) >= 1.0 - _DEGENERATE_TOL:
        lams = _jacobi_eigvals(b.to_matrix())
        return EigenTriple(*lams)

    phi = math.acos(r) / 3.0
    l3 = q + 2.0 * p * math.cos(phi)
    l1 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    l2 = 3.0 * q - l1 - l3
    return EigenTriple(l1, l2, l3)


def eig_sym3_batch(mats: np.ndarray) -> np.ndarray:
    """Vectorized ascending eigenvalues for an (..., 3, 3) symmetric stack.

    Same closed form as :func:`eig_sym3`; rows flagged as nearly degenerate
    are redone through the scalar fallback path.
    """
    mats = np.asarray(mats, dtype=float)
    flat = mats.reshape(-1, 3, 3)
    q = np.trace(flat, axis1=1, axis2=2) / 3.0
    diff = flat - q[:, None, None] * np.eye(3)
    p2 = np.sum(diff * diff, axis=(1, 2))
    p = np.sqrt(np.maximum(p2 / 6.0, 0.0))
    out = np.empty((flat.shape[0], 3))

    # exactly diagonal rows bypass the trig solve (keeps them bit-exact)
    off2 = (flat[:, 0, 1] ** 2 + flat[:, 0, 2] ** 2 + flat[:, 1, 2] ** 2
            + flat[:, 1, 0] ** 2 + flat[:, 2, 0] ** 2 + flat[:, 2, 1] ** 2)
    diag_rows = off2 == 0.0
    if np.any(diag_rows):
        out[diag_rows] = np.sort(
            flat[diag_rows][:, (0, 1, 2), (0, 1, 2)], axis=1
        )

    tiny = (p <= _DEGENERATE_TOL * np.maximum(1.0, np.abs(flat).max(axis=(1, 2))))
    tiny &= ~diag_rows
    out[tiny] = q[tiny, None]

    rest = ~tiny & ~diag_rows
    if np.any(rest):
        m = diff[rest] / p[rest, None, None]
        r = np.linalg.det(m) / 2.0
        sat = np.abs(r) >= 1.0 - _DEGENERATE_TOL
        phi = np.arccos(np.clip(r, -1.0, 1.0)) / 3.0
        l3 = q[rest] + 2.0 * p[rest] * np.cos(phi)
        l1 = q[rest] + 2.0 * p[rest] * np.cos(phi + 2.0 * math.pi / 3.0)
        l2 = 3.0 * q[rest] - l1 - l3
        vals = np.stack([l1, l2, l3], axis=1)
        rest_idx = np.flatnonzero(rest)
        for pos in np.flatnonzero(sat):
            vals[pos] = eig_sym3(SymTensor3.from_matrix(flat[rest_idx[pos]])).as_array()
        out[rest] = vals
    return out.reshape(mats.shape[:-2] + (3,))


def ch_inverse(b: SymTensor3) -> SymTensor3:
    """Inverse via the Cayley-Hamilton representation.

    B^{-1} = (B^2 - (Tr B) B + II_B I) / det B, followed by one
    multiplicative refinement step X <- X (2I - B X); the quadratic term of
    the representation cancels strongly for ill-conditioned inputs and the
    polish restores the product accuracy.  Raises :class:`SingularTensor`
    when |det B| <= 1e-14 * ||B||_F^3.
    """
    inv = invariants(b)
    scale = b.frobenius()
    if abs(inv.i3) <= 1e-14 * max(scale**3, 1e-300):
        raise SingularTensor(f"determinant {inv.i3:.3e} below tolerance for inversion")
    m = b.to_matrix()
    eye = np.eye(3)
    binv = (m @ m - inv.i1 * m + inv.i2 * eye) / inv.i3
    binv = binv @ (2.0 * eye - m @ binv)
    return SymTensor3.from_matrix(0.5 * (binv + binv.T))


def ch_inverse_batch(mats: np.ndarray) -> np.ndarray:
    """Cayley-Hamilton inverse for an (..., 3, 3) symmetric stack.

    Same representation (and refinement step) as :func:`ch_inverse`,
    vectorized for field evaluation at many sample points.
    """
    mats = np.asarray(mats, dtype=float)
    i1 = np.trace(mats, axis1=-2, axis2=-1)
    tr_b2 = np.sum(mats * np.swapaxes(mats, -1, -2), axis=(-2, -1))
    i2 = 0.5 * (i1 * i1 - tr_b2)
    det = np.linalg.det(mats)
    scale = np.sqrt(np.sum(mats * mats, axis=(-2, -1)))
    bad = np.abs(det) <= 1e-14 * np.maximum(scale**3, 1e-300)
    if np.any(bad):
        raise SingularTensor(
            f"{int(np.count_nonzero(bad))} sample(s) with determinant below tolerance"
        )
    b2 = mats @ mats
    eye = np.eye(3)
    binv = (
        b2 - i1[..., None, None] * mats + i2[..., None, None] * eye
    ) / det[..., None, None]
    binv = binv @ (2.0 * eye - mats @ binv)
    return 0.5 * (binv + np.swapaxes(binv, -1, -2))


def d_inverse_batch(b: np.ndarray, db: np.ndarray) -> np.ndarray:
    """Vectorized derivative of B^{-1} for unimodular stacks.

    ``b``: (..., 3, 3) symmetric with det 1; ``db``: matching directional
    derivative stack.  No unimodularity check here; callers validate.
    """
    tr_db = np.trace(db, axis1=-2, axis2=-1)[..., None, None]
    tr_b = np.trace(b, axis1=-2, axis2=-1)[..., None, None]
    tr_bdb = np.sum(b * db, axis=(-2, -1))[..., None, None]
    eye = np.eye(3)
    return (
        db @ b + b @ db - tr_db * b - tr_b * db + (tr_b * tr_db - tr_bdb) * eye
    )


def symmetrize(m) -> SymTensor3:
    """S(M) = (M + M^t)/2 for a full 3x3 matrix."""
    m = np.asarray(m, dtype=float)
    s = 0.5 * (m + m.T)
    return SymTensor3.from_matrix(s)


def lop(a: SymTensor3, m) -> SymTensor3:
    """S(M) A + A S(M) for symmetric ``a`` and a full 3x3 matrix ``m``.

    Satisfies L(M):M >= 2 lam_min(a) S(M):S(M), and vanishes on
    antisymmetric M.
    """
    am = a.to_matrix()
    sm = symmetrize(m).to_matrix()
    return SymTensor3.from_matrix(sm @ am + am @ sm)


def _check_unimodular(b: SymTensor3, tol: float = 1e-8) -> None:
    det = invariants(b).i3
    if abs(det - 1.0) > tol:
        raise NotUnimodular(f"det B = {det:.12g}, not 1 within {tol:g}")


def d_inverse(b: SymTensor3, db: SymTensor3) -> SymTensor3:
    """Directional derivative of B^{-1} along ``db`` for unimodular B.

    Differentiating the Cayley-Hamilton representation with det B = 1 gives

        d(B^{-1}) = dB B + B dB - Tr(dB) B - Tr(B) dB
                    + (Tr(B) Tr(dB) - Tr(B dB)) I.

    ``db`` is expected to be tangent to the det = 1 manifold
    (Tr(B^{-1} dB) = 0) for the result to equal the true path derivative.
    """
    _check_unimodular(b)
    bm = b.to_matrix()
    dm = db.to_matrix()
    tr_db = db.trace()
    tr_b = b.trace()
    tr_bdb = float(np.tensordot(bm, dm))
    res = (
        dm @ bm + bm @ dm
        - tr_db * bm
        - tr_b * dm
        + (tr_b * tr_db - tr_bdb) * np.eye(3)
    )
    return SymTensor3.from_matrix(res)


def d2_inverse(
    b: SymTensor3, dbi: SymTensor3, dbj: SymTensor3, d2b: SymTensor3
) -> SymTensor3:
    """Second derivative of B^{-1} along a path on the det = 1 manifold.

    Differentiating the formula in :func:`d_inverse` once more:

        d2(B^{-1}) = dBj dBi + dBi dBj + B d2B + d2B B
                     - Tr(d2B) B - Tr(dBi) dBj - Tr(dBj) dBi - Tr(B) d2B
                     + (Tr(dBj) Tr(dBi) + Tr(B) Tr(d2B)
                        - Tr(dBj dBi) - Tr(B d2B)) I.

    Symmetric under swapping (dbi, dbj); first- and second-order path data
    must be consistent with det B(t) = 1.
    """
    _check_unimodular(b)
    bm = b.to_matrix()
    di = dbi.to_matrix()
    dj = dbj.to_matrix()
    d2 = d2b.to_matrix()
    res = (
        dj @ di + di @ dj
        + bm @ d2 + d2 @ bm
        - d2b.trace() * bm
        - dbi.trace() * dj
        - dbj.trace() * di
        - b.trace() * d2
        + (
            dbj.trace() * dbi.trace()
            + b.trace() * d2b.trace()
            - float(np.tensordot(dj, di))
            - float(np.tensordot(bm, d2))
        )
        * np.eye(3)
    )
    return SymTensor3.from_matrix(res)
