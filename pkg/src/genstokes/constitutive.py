"""Constitutive operator A(B) = mu1 I + mu2 B + mu3 B^{-1} and its norm audits.

The audits compare sampled sup-norms (max-abs-entry for tensors) against the
explicit constants of the constitutive regularity estimates; inequalities
whose universal constant is unspecified are reported ratio-only.  Sup norms
are approximated by maxima over the provided sample set, Lp norms by sample
means; both are sampling approximations of the essential versions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NonDifferentiableField
from .fields import ScalarField, TensorField
from .tensors import SymTensor3, ch_inverse_batch, d_inverse_batch

__all__ = [
    "MuTriple",
    "BoundAudit",
    "g_eval",
    "acal",
    "acal_values",
    "audit_bounds",
    "shipped_smooth_fields",
]


@dataclass(frozen=True)
class MuTriple:
    """Viscosity parameter triple (mu1, mu2, mu3)."""

    mu1: float
    mu2: float
    mu3: float

    @property
    def thermodynamically_admissible(self) -> bool:
        """mu1 + mu2 + mu3 > 0 (the no-deformation positivity condition)."""
        return self.mu1 + self.mu2 + self.mu3 > 0.0

    def as_tuple(self):
        return (self.mu1, self.mu2, self.mu3)


@dataclass
class BoundAudit:
    """One audited inequality.

    For fully specified constants, ``rhs`` is the complete right-hand side
    and ``satisfied`` is set.  For inequalities with an unspecified universal
    constant, ``rhs`` is the right-hand side with the constant dropped and
    only ``ratio`` = lhs/rhs is reported.
    """

    id: str
    lhs: float
    rhs: float
    satisfied: Optional[bool] = None
    ratio: Optional[float] = None
    worst_point: Optional[tuple] = None

    def as_dict(self) -> dict:
        d = {"id": self.id, "lhs": self.lhs, "rhs": self.rhs}
        if self.satisfied is not None:
            d["satisfied"] = bool(self.satisfied)
        if self.ratio is not None:
            d["ratio"] = self.ratio
        if self.worst_point is not None:
            d["worst_point"] = list(self.worst_point)
        return d


def g_eval(mu: MuTriple, lam: float) -> float:
    """g(lambda) = mu1 + mu2*lambda + mu3/lambda for lambda > 0."""
    if lam <= 0.0:
        raise DomainError(f"g is defined for positive arguments, got {lam}")
    return mu.mu1 + mu.mu2 * lam + mu.mu3 / lam


def _mu_fields(mu) -> tuple:
    """Normalize a mu specification to three ScalarFields."""
    if isinstance(mu, MuTriple):
        return tuple(ScalarField.constant(v) for v in mu.as_tuple())
    fields = []
    for item in mu:
        if isinstance(item, ScalarField):
            fields.append(item)
        else:
            fields.append(ScalarField.constant(float(item)))
    if len(fields) != 3:
        raise ValueError("mu must provide exactly three components")
    return tuple(fields)


def acal_values(mu, b: TensorField, pts) -> np.ndarray:
    """A(B) = mu1 I + mu2 B + mu3 B^{-1} at each sample point, (N, 3, 3)."""
    m1, m2, m3 = _mu_fields(mu)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    bvals = b.eval(pts)
    binv = ch_inverse_batch(bvals)
    eye = np.eye(3)
    return (
        m1.eval(pts)[:, None, None] * eye
        + m2.eval(pts)[:, None, None] * bvals
        + m3.eval(pts)[:, None, None] * binv
    )


def acal(mu, b: TensorField, x) -> SymTensor3:
    """Pointwise constitutive tensor at position ``x``."""
    a = acal_values(mu, b, np.asarray(x, dtype=float).reshape(1, 3))[0]
    return SymTensor3.from_matrix(a)


# ---------------------------------------------------------------------------
# norm machinery


def _sup_entry(stack: np.ndarray) -> tuple:
    """Max abs entry over samples; returns (value, sample index)."""
    per_sample = np.max(np.abs(stack.reshape(stack.shape[0], -1)), axis=1)
    idx = int(np.argmax(per_sample))
    return float(per_sample[idx]), idx


def _lp_norm(stack: np.ndarray, p: float, volume: float) -> float:
    """Sampled Lp norm; components of tensors are summed per convention."""
    flat = np.abs(stack.reshape(stack.shape[0], -1)) ** p
    return float((np.sum(np.mean(flat, axis=0)) * volume) ** (1.0 / p))


def _d_acal(mu_fields, pts, bvals, binv, dbvals, dbinv) -> np.ndarray:
    """dA = dmu1 I + dmu2 B + mu2 dB + dmu3 B^{-1} + mu3 d(B^{-1}), (N,3,3,3)."""
    m1, m2, m3 = mu_fields
    eye = np.eye(3)
    g1 = m1.grad(pts)[:, :, None, None]
    g2 = m2.grad(pts)[:, :, None, None]
    g3 = m3.grad(pts)[:, :, None, None]
    v2 = m2.eval(pts)[:, None, None, None]
    v3 = m3.eval(pts)[:, None, None, None]
    return (
        g1 * eye
        + g2 * bvals[:, None, :, :]
        + v2 * dbvals
        + g3 * binv[:, None, :, :]
        + v3 * dbinv
    )


def audit_bounds(mu, b: TensorField, pts, volume: float = 1.0,
                 derivatives: str = "auto") -> list:
    """Audit the explicit constitutive norm bounds over a sample set.

    Assertable audits (fully specified constants):

    * ``binv_linf``:   ||B^{-1}|| <= 15 ||(det B)^{-1}|| ||B||^2
    * ``acal_linf``:   ||A|| <= ||mu1|| + ||mu2|| ||B|| + 15 ||mu3|| ||det^{-1}|| ||B||^2
    * ``d_binv_linf``: ||D(B^{-1})|| <= 20 ||B|| ||DB||          (det B = 1)
    * ``d_acal_linf``: ||DA|| <= ||Dmu1|| + ||Dmu2|| ||B|| + ||mu2|| ||DB||
                        + 9 ||Dmu3|| ||B||^2 + 20 ||mu3|| ||B|| ||DB||

    Ratio-only audits (universal constant unspecified), reported as
    lhs / (rhs without the constant):

    * ``binv_l3``:    ||B^{-1}||_L3 vs ||B||_L6^2
    * ``d_binv_l3``:  ||D(B^{-1})||_L3 vs ||B||_L6 ||DB||_L6
    * ``d2_binv_l3``: ||D2(B^{-1})||_L3 vs ||DB||_L6^2 + ||B|| ||D2B||_L3
    * ``d2_acal_l3``: ||D2 A||_L3 vs the analogous term combination
    * ``binv_l2``:    ||B^{-1}||_L2 vs ||B||_L4^2

    ``derivatives``: "auto" includes derivative audits, with exactly zero
    derivatives for constant representations; "require" raises
    NonDifferentiableField when every field is constant (nothing to
    measure); "skip" emits only the order-zero audits.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    mu_f = _mu_fields(mu)
    audits = []

    bvals = b.eval(pts)
    binv = ch_inverse_batch(bvals)
    dets = np.linalg.det(bvals)
    sup_b, _ = _sup_entry(bvals)
    sup_binv, idx_binv = _sup_entry(binv)
    sup_detinv = float(np.max(1.0 / np.abs(dets)))

    lhs = sup_binv
    rhs = 15.0 * sup_detinv * sup_b**2
    audits.append(BoundAudit(
        "binv_linf", lhs, rhs, satisfied=lhs <= rhs * (1 + 1e-12),
        worst_point=tuple(pts[idx_binv]),
    ))

    avals = acal_values(mu_f, b, pts)
    sup_a, idx_a = _sup_entry(avals)
    sup_mu = [float(np.max(np.abs(f.eval(pts)))) for f in mu_f]
    rhs = sup_mu[0] + sup_mu[1] * sup_b + 15.0 * sup_mu[2] * sup_detinv * sup_b**2
    audits.append(BoundAudit(
        "acal_linf", sup_a, rhs, satisfied=sup_a <= rhs * (1 + 1e-12),
        worst_point=tuple(pts[idx_a]),
    ))

    if derivatives == "skip":
        return audits
    all_constant = b.kind == "constant" and all(f.kind == "constant" for f in mu_f)
    if derivatives == "require" and all_constant:
        raise NonDifferentiableField(
            "derivative audits requested on constant-only data"
        )

    unimodular = bool(np.max(np.abs(dets - 1.0)) <= 1e-8)
    dbvals = b.grad(pts)  # (N, k, 3, 3)
    sup_db = float(np.max(np.abs(dbvals))) if dbvals.size else 0.0

    if unimodular:
        dbinv = d_inverse_batch(bvals[:, None, :, :], dbvals)
        sup_dbinv, idx_dbinv = _sup_entry(dbinv)
        rhs = 20.0 * sup_b * sup_db
        audits.append(BoundAudit(
            "d_binv_linf", sup_dbinv, rhs,
            satisfied=sup_dbinv <= rhs * (1 + 1e-12),
            worst_point=tuple(pts[idx_dbinv]),
        ))

        davals = _d_acal(mu_f, pts, bvals, binv, dbvals, dbinv)
        sup_da, idx_da = _sup_entry(davals)
        sup_dmu = [float(np.max(np.abs(f.grad(pts)))) for f in mu_f]
        rhs = (
            sup_dmu[0]
            + sup_dmu[1] * sup_b
            + sup_mu[1] * sup_db
            + 9.0 * sup_dmu[2] * sup_b**2
            + 20.0 * sup_mu[2] * sup_b * sup_db
        )
        audits.append(BoundAudit(
            "d_acal_linf", sup_da, rhs,
            satisfied=sup_da <= rhs * (1 + 1e-12),
            worst_point=tuple(pts[idx_da]),
        ))

        # ratio-only family
        b_l6 = _lp_norm(bvals, 6.0, volume)
        b_l4 = _lp_norm(bvals, 4.0, volume)
        db_l6 = _lp_norm(dbvals, 6.0, volume)
        db_l3 = _lp_norm(dbvals, 3.0, volume)
        d2b = b.hess(pts)  # (N, k, l, 3, 3)
        d2b_l3 = _lp_norm(d2b, 3.0, volume)
        d2binv = _second_derivative_binv(bvals, dbvals, d2b)
        audits.append(_ratio_audit("binv_l3", _lp_norm(binv, 3.0, volume), b_l6**2))
        audits.append(_ratio_audit(
            "d_binv_l3", _lp_norm(dbinv, 3.0, volume), b_l6 * db_l6
        ))
        audits.append(_ratio_audit(
            "d2_binv_l3", _lp_norm(d2binv, 3.0, volume),
            db_l6**2 + sup_b * d2b_l3,
        ))
        d2a = _second_derivative_acal(mu_f, pts, bvals, binv, dbvals, dbinv, d2b, d2binv)
        sup_dmu = [float(np.max(np.abs(f.grad(pts)))) for f in mu_f]
        d2mu_l3 = [_lp_norm(f.hess(pts), 3.0, volume) for f in mu_f]
        rhs_no_c = (
            d2mu_l3[0]
            + d2mu_l3[1] * sup_b
            + sup_dmu[1] * db_l3
            + sup_mu[1] * db_l3
            + d2mu_l3[2] * sup_binv
            + sup_dmu[2] * _lp_norm(dbinv, 3.0, volume)
            + sup_mu[2] * _lp_norm(d2binv, 3.0, volume)
        )
        audits.append(_ratio_audit("d2_acal_l3", _lp_norm(d2a, 3.0, volume), rhs_no_c))
        audits.append(_ratio_audit("binv_l2", _lp_norm(binv, 2.0, volume), b_l4**2))
    return audits


def _ratio_audit(name: str, lhs: float, rhs: float) -> BoundAudit:
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0.0 else float("inf"))
    return BoundAudit(name, lhs, rhs, ratio=ratio)


def _second_derivative_binv(bvals, dbvals, d2b) -> np.ndarray:
    """d2(B^{-1}) over samples, (N, k, l, 3, 3), for unimodular fields."""
    b = bvals[:, None, None, :, :]
    di = dbvals[:, :, None, :, :]
    dj = dbvals[:, None, :, :, :]
    d2 = d2b
    tr = lambda m: np.trace(m, axis1=-2, axis2=-1)[..., None, None]
    ddot = lambda a, c: np.sum(a * c, axis=(-2, -1))[..., None, None]
    eye = np.eye(3)
    return (
        dj @ di + di @ dj
        + b @ d2 + d2 @ b
        - tr(d2) * b
        - tr(di) * dj
        - tr(dj) * di
        - tr(b) * d2
        + (tr(dj) * tr(di) + tr(b) * tr(d2) - ddot(dj, di) - ddot(b, d2)) * eye
    )


def _second_derivative_acal(mu_f, pts, bvals, binv, dbvals, dbinv, d2b, d2binv):
    """d2 A over samples, (N, k, l, 3, 3)."""
    m1, m2, m3 = mu_f
    eye = np.eye(3)
    h1 = m1.hess(pts)[:, :, :, None, None]
    h2 = m2.hess(pts)[:, :, :, None, None]
    h3 = m3.hess(pts)[:, :, :, None, None]
    g2 = m2.grad(pts)
    g3 = m3.grad(pts)
    v2 = m2.eval(pts)[:, None, None, None, None]
    v3 = m3.eval(pts)[:, None, None, None, None]
    cross2 = (
        g2[:, :, None, None, None] * dbvals[:, None, :, :, :]
        + g2[:, None, :, None, None] * dbvals[:, :, None, :, :]
    )
    cross3 = (
        g3[:, :, None, None, None] * dbinv[:, None, :, :, :]
        + g3[:, None, :, None, None] * dbinv[:, :, None, :, :]
    )
    return (
        h1 * eye
        + h2 * bvals[:, None, None, :, :]
        + cross2
        + v2 * d2b
        + h3 * binv[:, None, None, :, :]
        + cross3
        + v3 * d2binv
    )


def shipped_smooth_fields() -> dict:
    """Five smooth unimodular SPD tensor fields used by the bound audits.

    All are left Cauchy-Green tensors of volume-preserving deformations
    (shears and isochoric stretches), so det B = 1 identically.
    """
    fields = {}
    s = "0.4*sin(pi*x)*sin(pi*y)*sin(pi*z)"
    fields["shear_xy"] = TensorField.expression({
        "a11": f"1 + ({s})**2", "a22": "1", "a33": "1", "a12": s,
    })
    t = "0.3*cos(pi*x)*sin(pi*y)*sin(2*pi*z)"
    fields["shear_xz"] = TensorField.expression({
        "a11": f"1 + ({t})**2", "a22": "1", "a33": "1", "a13": t,
    })
    a = "0.25*sin(pi*x)*cos(pi*y)"
    fields["stretch_xy"] = TensorField.expression({
        "a11": f"exp({a})", "a22": f"exp(-({a}))", "a33": "1",
    })
    a2 = "0.2*sin(pi*x)*sin(pi*z)"
    b2 = "0.2*cos(pi*y)*sin(pi*x)"
    fields["stretch_xyz"] = TensorField.expression({
        "a11": f"exp({a2})", "a22": f"exp({b2})", "a33": f"exp(-({a2})-({b2}))",
    })
    # two composed shears: B = F F^t with unit upper-triangular F
    u = "0.3*sin(pi*x)*sin(pi*y)*sin(pi*z)"
    w = "0.2*sin(2*pi*x)*sin(pi*y)*sin(pi*z)"
    fields["double_shear"] = TensorField.expression({
        "a11": f"1 + ({u})**2", "a12": u, "a13": "0",
        "a22": f"1 + ({w})**2", "a23": w, "a33": "1",
    })
    return fields
