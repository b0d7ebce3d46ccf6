"""Manufactured solutions, dimensional norms, and estimate diagnostics.

Manufactured velocities are built divergence-free with zero wall trace; the
forcing is derived symbolically from the strong form

    f = -div(D(v) A + A D(v)) + grad p,      A = mu1 I + mu2 B + mu3 B^{-1}.

Error norms against exact solutions are integrated with quadrature one
degree above the assembly rule.  Estimates carrying unspecified shape
constants are emitted as ratio diagnostics (LHS over the RHS with the
constant dropped); the only asserted bound is the constant-free velocity
estimate ||grad v_h|| <= lambda1^{-1/2} ||f|| / alpha, which substitutes
the dual norm of f by its Poincare surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy as sp

from .assembly import SaddleSystem, assemble, discrete_gradients
from .constitutive import BoundAudit, MuTriple, _mu_fields
from .errors import MissingNormInput, NonDifferentiableExpression
from .fem import ElementGeometry, TaylorHoodSpace, build_mesh, _DL
from .fields import ScalarField, TensorField, VectorField
from .solver import SolveResult, solve, uzawa_solve
from .tensors import d_inverse_batch

__all__ = [
    "MMSCase",
    "ConvergenceTable",
    "DimNorm",
    "lambda1_box",
    "mms_forcing",
    "make_classical_case",
    "make_anisotropic_case",
    "errors_against_exact",
    "run_convergence",
    "audit_estimates",
    "dim_norm",
    "rk_evaluate",
    "rk_bracket",
]

_X, _Y, _Z = sp.symbols("x y z")
_SYMS = (_X, _Y, _Z)


def lambda1_box(lx: float, ly: float, lz: float) -> float:
    """First Dirichlet Laplacian eigenvalue of the box."""
    return math.pi**2 * (1.0 / lx**2 + 1.0 / ly**2 + 1.0 / lz**2)


# ---------------------------------------------------------------------------
# manufactured cases


@dataclass
class MMSCase:
    """Exact solution pair with derived forcing and coefficient fields."""

    name: str
    v_exprs: tuple
    p_expr: sp.Expr
    mu: MuTriple
    b_exprs: Optional[sp.Matrix]  # None means B = I
    b_field: TensorField = field(init=False)
    f_exprs: tuple = field(init=False)
    f_field: VectorField = field(init=False)

    def __post_init__(self):
        if self.b_exprs is None:
            self.b_field = TensorField.identity()
        else:
            names = {(0, 0): "a11", (1, 1): "a22", (2, 2): "a33",
                     (0, 1): "a12", (0, 2): "a13", (1, 2): "a23"}
            comps = {}
            for (i, j), nm in names.items():
                comps[nm] = ScalarField.expression(self.b_exprs[i, j])
            self.b_field = TensorField("expression", comps)
        self.f_exprs = mms_forcing(self.v_exprs, self.p_expr, self.mu, self.b_exprs)
        self.f_field = VectorField.expression(self.f_exprs)

    @property
    def v_field(self) -> VectorField:
        return VectorField.expression(self.v_exprs)

    @property
    def a_exprs(self) -> sp.Matrix:
        return acal_matrix(self.mu, self.b_exprs)


def acal_matrix(mu: MuTriple, b_exprs: Optional[sp.Matrix]) -> sp.Matrix:
    """Symbolic coefficient tensor mu1 I + mu2 B + mu3 B^{-1}."""
    eye = sp.eye(3)
    if b_exprs is None:
        return (mu.mu1 + mu.mu2 + mu.mu3) * eye
    det = sp.expand(b_exprs.det())
    binv = b_exprs.adjugate().applyfunc(sp.expand) / det
    return mu.mu1 * eye + mu.mu2 * b_exprs + mu.mu3 * binv


def mms_forcing(v_exprs, p_expr, mu: MuTriple, b_exprs=None) -> tuple:
    """Forcing of the strong form for a given exact (v, p) and coefficients."""
    try:
        a = acal_matrix(mu, b_exprs)
        gradv = sp.Matrix(3, 3, lambda i, j: sp.diff(v_exprs[i], _SYMS[j]))
        d = (gradv + gradv.T) / 2
        t = d * a + a * d
        f = []
        for i in range(3):
            div_i = sum(sp.diff(t[i, j], _SYMS[j]) for j in range(3))
            f.append(sp.diff(p_expr, _SYMS[i]) - div_i)
    except Exception as exc:  # sympy failures surface as non-differentiability
        raise NonDifferentiableExpression(str(exc)) from exc
    return tuple(f)


def divergence_expr(v_exprs) -> sp.Expr:
    return sp.expand(sum(sp.diff(v_exprs[i], _SYMS[i]) for i in range(3)))


def boundary_trace_max(v_field: VectorField, box, n: int = 13) -> float:
    """Max |v| over a dense sampling of the six box faces."""
    lx, ly, lz = box
    lin = [np.linspace(0, L, n) for L in box]
    worst = 0.0
    for axis, L in enumerate(box):
        for val in (0.0, L):
            axes = [lin[a] for a in range(3)]
            axes[axis] = np.array([val])
            g = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([gi.ravel() for gi in g], axis=-1)
            worst = max(worst, float(np.max(np.abs(v_field.eval(pts)))))
    return worst


def _bubble_potential() -> sp.Expr:
    b = _X * (1 - _X) * _Y * (1 - _Y) * _Z * (1 - _Z)
    return b * b


def make_classical_case() -> MMSCase:
    """Newtonian reduction (A = I): curl of a squared-bubble potential."""
    psi = _bubble_potential()
    v = (sp.diff(psi, _Y), -sp.diff(psi, _X), sp.Integer(0))
    p = sp.cos(sp.pi * _X)
    return MMSCase("classical", v, p, MuTriple(1.0, 0.0, 0.0), None)


def make_anisotropic_case() -> MMSCase:
    """Spatially varying unimodular shear B with a full coefficient triple."""
    psi = _bubble_potential()
    v = (sp.diff(psi, _Y), -sp.diff(psi, _X), sp.Integer(0))
    p = sp.cos(sp.pi * _X)
    s = sp.Rational(2, 5) * sp.sin(sp.pi * _X) * sp.sin(sp.pi * _Y) * sp.sin(sp.pi * _Z)
    b = sp.Matrix([[1 + s**2, s, 0], [s, 1, 0], [0, 0, 1]])
    return MMSCase("anisotropic", v, p, MuTriple(1.0, 1.0, 0.5), b)


SHIPPED_CASES = {
    "classical": make_classical_case,
    "anisotropic": make_anisotropic_case,
}


# ---------------------------------------------------------------------------
# errors and convergence studies


def errors_against_exact(system: SaddleSystem, result: SolveResult,
                         case: MMSCase, quad_n: Optional[int] = None):
    """(velocity H1 seminorm, velocity L2, pressure L2/R) errors.

    Integrated with quadrature one degree above assembly unless overridden.
    """
    space = system.space
    geom = ElementGeometry(system.mesh, space, quad_n or system.quad_n + 1)
    pts = geom.flat_points
    ne, nq = geom.wdet.shape

    v_exact = case.v_field.eval(pts).reshape(ne, nq, 3)
    gv_exact = case.v_field.grad(pts).reshape(ne, nq, 3, 3)
    uloc = result.velocity.reshape(-1, 3)[space.tet_nodes]
    v_h = np.einsum("qi,eia->eqa", geom.n2_vals, uloc)
    gv_h = discrete_gradients(geom, space, result.velocity)

    dv = v_h - v_exact
    dg = gv_h - gv_exact
    e_l2 = math.sqrt(float(np.einsum("eq,eqa,eqa->", geom.wdet, dv, dv)))
    e_h1 = math.sqrt(float(np.einsum("eq,eqac,eqac->", geom.wdet, dg, dg)))

    p_exact = ScalarField.expression(case.p_expr).eval(pts).reshape(ne, nq)
    p_h = np.einsum("qj,ej->eq", geom.p1_vals, result.pressure[system.mesh.tets])
    vol = float(np.sum(geom.wdet))
    diff = (p_h - np.sum(geom.wdet * p_h) / vol) - (
        p_exact - np.sum(geom.wdet * p_exact) / vol
    )
    e_p = math.sqrt(float(np.sum(geom.wdet * diff * diff)))
    return e_h1, e_l2, e_p


@dataclass
class ConvergenceTable:
    """Errors and observed rates over a mesh refinement sequence."""

    case: str
    divisions: list
    h: list
    e_h1: list
    e_l2: list
    e_p: list
    audits: list = field(default_factory=list)

    def rates(self) -> dict:
        def seq(errors):
            out = []
            for a, b, h0, h1 in zip(errors[:-1], errors[1:], self.h[:-1], self.h[1:]):
                out.append(math.log(a / b) / math.log(h0 / h1))
            return out

        return {"h1_v": seq(self.e_h1), "l2_v": seq(self.e_l2), "l2_p": seq(self.e_p)}

    def last_rates(self) -> Optional[dict]:
        r = self.rates()
        if not r["h1_v"]:
            return None
        return {k: v[-1] for k, v in r.items()}

    def to_csv(self, path) -> None:
        r = self.rates()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n,h,err_h1_v,err_l2_v,err_l2_p,rate_h1_v,rate_l2_v,rate_l2_p\n")
            for i, n in enumerate(self.divisions):
                cols = [str(n), f"{self.h[i]:.12g}", f"{self.e_h1[i]:.12g}",
                        f"{self.e_l2[i]:.12g}", f"{self.e_p[i]:.12g}"]
                for key in ("h1_v", "l2_v", "l2_p"):
                    cols.append(f"{r[key][i - 1]:.6g}" if i > 0 else "")
                fh.write(",".join(cols) + "\n")


def run_convergence(case: MMSCase, divisions, quad_n: int = 3,
                    threads: int = 1, method: str = "direct",
                    box=(1.0, 1.0, 1.0), with_audits: bool = True) -> ConvergenceTable:
    """Solve the case on a mesh sequence and tabulate errors and rates."""
    table = ConvergenceTable(case.name, list(divisions), [], [], [], [])
    case_norms = case_norm_suite(case, lambda1_box(*box), box) if with_audits else None
    for n in divisions:
        mesh = build_mesh(n, n, n, *box)
        space = TaylorHoodSpace(mesh)
        system = assemble(mesh, space, case.mu, case.b_field, case.f_field,
                          quad_n=quad_n, threads=threads)
        result = solve(system) if method == "direct" else uzawa_solve(system)
        e_h1, e_l2, e_p = errors_against_exact(system, result, case)
        table.h.append(max(box) / n)
        table.e_h1.append(e_h1)
        table.e_l2.append(e_l2)
        table.e_p.append(e_p)
        if with_audits:
            table.audits.append(
                audit_estimates(system, result, case.mu, case.b_field,
                                case_norms=case_norms)
            )
    return table


# ---------------------------------------------------------------------------
# broken seminorms of discrete fields


def broken_h2_velocity(space: TaylorHoodSpace, u_full: np.ndarray) -> float:
    """Elementwise ||D^2 v_h||_{L^2}; second derivatives of quadratics are
    constant per element."""
    mesh = space.mesh
    v = mesh.vertices[mesh.tets]
    jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0], v[:, 3] - v[:, 0]], axis=-1)
    jinv = np.linalg.inv(jac)
    vols = np.abs(np.linalg.det(jac)) / 6.0
    dl = np.einsum("id,edc->eic", _DL, jinv)  # (ne, 4, 3) physical grad L
    ne = mesh.n_tets
    hess = np.zeros((ne, 10, 3, 3))
    for i in range(4):
        hess[:, i] = 4.0 * np.einsum("ec,ed->ecd", dl[:, i], dl[:, i])
    from .fem import LOCAL_EDGES

    for k, (a, b) in enumerate(LOCAL_EDGES):
        hess[:, 4 + k] = 4.0 * (
            np.einsum("ec,ed->ecd", dl[:, a], dl[:, b])
            + np.einsum("ec,ed->ecd", dl[:, b], dl[:, a])
        )
    uloc = u_full.reshape(-1, 3)[space.tet_nodes]  # (ne, 10, 3)
    hv = np.einsum("eia,eicd->eacd", uloc, hess)  # (ne, 3, 3, 3)
    # multi-index convention: each distinct second derivative counted once
    w = np.array([[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]])
    per_elem = np.einsum("eacd,cd->e", hv * hv, w)
    return math.sqrt(float(np.sum(vols * per_elem)))


def broken_h1_pressure(mesh, p_coeffs: np.ndarray) -> float:
    """Elementwise ||grad p_h||_{L^2} for the piecewise-linear pressure."""
    v = mesh.vertices[mesh.tets]
    jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0], v[:, 3] - v[:, 0]], axis=-1)
    jinv = np.linalg.inv(jac)
    vols = np.abs(np.linalg.det(jac)) / 6.0
    dl = np.einsum("id,edc->eic", _DL, jinv)
    g = np.einsum("ei,eic->ec", p_coeffs[mesh.tets], dl)
    return math.sqrt(float(np.sum(vols * np.sum(g * g, axis=1))))


# ---------------------------------------------------------------------------
# dimensional norms


@dataclass(frozen=True)
class DimNorm:
    """Value of a lambda-scaled Sobolev norm sum."""

    k: int
    p: float
    lam: float
    value: float


def _gauss_box(box, n_axis: int):
    from scipy.special import roots_legendre

    x, w = roots_legendre(n_axis)
    pts1 = [(0.5 * (x + 1.0) * L) for L in box]
    wts1 = [0.5 * L * w for L in box]
    g = np.meshgrid(*pts1, indexing="ij")
    pts = np.stack([gi.ravel() for gi in g], axis=-1)
    wts = (
        wts1[0][:, None, None] * wts1[1][None, :, None] * wts1[2][None, None, :]
    ).ravel()
    return pts, wts


def _field_components(field_like):
    """(scalar components, multiplicities) covering the full object."""
    if isinstance(field_like, ScalarField):
        return [field_like], [1.0]
    if isinstance(field_like, VectorField):
        return list(field_like.components), [1.0] * 3
    if isinstance(field_like, TensorField):
        if field_like.kind == "constant":
            comps = [ScalarField.constant(v) for v in (
                field_like.components.a11, field_like.components.a22,
                field_like.components.a33, field_like.components.a12,
                field_like.components.a13, field_like.components.a23)]
        else:
            from .fields import COMPONENT_ORDER

            comps = [field_like.components[n] for n in COMPONENT_ORDER]
        return comps, [1.0, 1.0, 1.0, 2.0, 2.0, 2.0]
    raise TypeError(f"unsupported field object {type(field_like)!r}")


def derivative_lp(field_like, order: int, p: float, box,
                  n_axis: int = 16) -> float:
    """Sampled L^p norm of the order-th derivative tensor of a field."""
    comps, mult = _field_components(field_like)
    pts, wts = _gauss_box(box, n_axis)
    if math.isinf(p):
        worst = 0.0
        for c in comps:
            worst = max(worst, float(np.max(np.abs(c.derivative_stack(pts, order)))))
        return worst
    acc = 0.0
    for c, m in zip(comps, mult):
        stack = np.abs(c.derivative_stack(pts, order)) ** p
        acc += m * float(wts @ np.sum(stack, axis=1))
    return acc ** (1.0 / p)


def dim_norm(field_like, k: int, p: float, lam: float, box,
             n_axis: int = 16) -> DimNorm:
    """Sum_{j<=k} lam^{(k-j)/2} ||D^j field||_{L^p} over the box."""
    total = 0.0
    for j in range(k + 1):
        total += lam ** ((k - j) / 2.0) * derivative_lp(field_like, j, p, box, n_axis)
    return DimNorm(k=k, p=p, lam=lam, value=total)


# ---------------------------------------------------------------------------
# the higher-order diagnostic scalar


def rk_bracket(alpha: float, a_norms: dict, f_norms: dict) -> float:
    """Inner first-order bracket shared by the diagnostic family.

    ||f||_{H^1_l} + (1/a)(||A||_{W^{1,inf}_l} + ||D^2 A||_{L^3})
                    (||f||_{L^2} + (1/a) ||A||_{W^{1,inf}_l} ||f||_{H^{-1}}).
    """
    need_a = ("w1inf", "d2_l3")
    for key in need_a:
        if key not in a_norms:
            raise MissingNormInput(f"coefficient norm {key!r} missing")
    for key in ("h0", "h1"):
        if key not in f_norms:
            raise MissingNormInput(f"forcing norm {key!r} missing")
    fm1 = f_norms.get("hm1")
    if fm1 is None:
        raise MissingNormInput("forcing norm 'hm1' missing (dual surrogate)")
    return f_norms["h1"] + (1.0 / alpha) * (
        a_norms["w1inf"] + a_norms["d2_l3"]
    ) * (f_norms["h0"] + (1.0 / alpha) * a_norms["w1inf"] * fm1)


def rk_evaluate(alpha: float, lambda1: float, a_norms: dict, f_norms: dict,
                k: int) -> float:
    """Diagnostic scalar controlling the order-(k+2) velocity seminorm.

    Assembled term by term:

        R_k = ||f||_{H^k_l}
              + sum_{j=2}^{k-1} ( sum_{i=1}^{k-j} a^{-(k-j)/i} l^{-(k-j)/4i}
                                  ||A||_{H^{i+2}_l}^{(k-j)/i} ) ||f||_{H^j_l}
              + ( sum_{i=1}^{k-1} a^{-(k-1)/i} l^{-(k-1)/4i}
                                  ||A||_{H^{i+2}_l}^{(k-1)/i} ) * bracket,

    with the first-order bracket of :func:`rk_bracket`.  All inputs are
    plain numbers; ``a_norms`` uses keys ``h3``, ``h4``, ... for the
    lambda-scaled Sobolev norms plus ``w1inf`` and ``d2_l3``; ``f_norms``
    uses ``h0`` ... ``hk`` and ``hm1``.
    """
    if k < 2:
        raise MissingNormInput("the diagnostic is defined for k >= 2")

    def a_sum(power: int) -> float:
        total = 0.0
        for i in range(1, power + 1):
            key = f"h{i + 2}"
            if key not in a_norms:
                raise MissingNormInput(f"coefficient norm {key!r} missing")
            expo = power / i
            total += (
                alpha ** (-expo) * lambda1 ** (-expo / 4.0) * a_norms[key] ** expo
            )
        return total

    if f"h{k}" not in f_norms:
        raise MissingNormInput(f"forcing norm 'h{k}' missing")
    value = f_norms[f"h{k}"]
    for j in range(2, k):
        if f"h{j}" not in f_norms:
            raise MissingNormInput(f"forcing norm 'h{j}' missing")
        value += a_sum(k - j) * f_norms[f"h{j}"]
    value += a_sum(k - 1) * rk_bracket(alpha, a_norms, f_norms)
    return value


# ---------------------------------------------------------------------------
# per-solve audits


def _sup_da(mu, b_field: TensorField, pts) -> Optional[float]:
    """Sampled sup-norm of the coefficient derivative, when computable."""
    mu_f = _mu_fields(mu)
    bvals = b_field.eval(pts)
    from .tensors import ch_inverse_batch

    binv = ch_inverse_batch(bvals)
    if b_field.kind == "constant":
        dbvals = np.zeros((pts.shape[0], 3, 3, 3))
        dbinv = np.zeros_like(dbvals)
    else:
        dets = np.linalg.det(bvals)
        if np.max(np.abs(dets - 1.0)) > 1e-8:
            return None
        dbvals = b_field.grad(pts)
        dbinv = d_inverse_batch(bvals[:, None], dbvals)
    from .constitutive import _d_acal

    da = _d_acal(mu_f, pts, bvals, binv, dbvals, dbinv)
    return float(np.max(np.abs(da)))


def case_norm_suite(case: MMSCase, lambda1: float, box,
                    n_axis: int = 12) -> dict:
    """Coefficient and forcing norms reused across mesh levels of one case."""
    if case.b_exprs is not None:
        a = case.a_exprs
        a_field = TensorField.expression({
            "a11": a[0, 0], "a22": a[1, 1], "a33": a[2, 2],
            "a12": a[0, 1], "a13": a[0, 2], "a23": a[1, 2],
        })
    else:
        a_field = TensorField.constant(
            np.eye(3) * (case.mu.mu1 + case.mu.mu2 + case.mu.mu3)
        )
    f_field = case.f_field
    a_norms = {
        "w1inf": dim_norm(a_field, 1, math.inf, lambda1, box, n_axis).value,
        "d2_l3": derivative_lp(a_field, 2, 3.0, box, n_axis),
        "h3": dim_norm(a_field, 3, 2.0, lambda1, box, n_axis).value,
    }
    f_norms = {
        "h0": derivative_lp(f_field, 0, 2.0, box, n_axis),
        "h1": dim_norm(f_field, 1, 2.0, lambda1, box, n_axis).value,
        "h2": dim_norm(f_field, 2, 2.0, lambda1, box, n_axis).value,
    }
    f_norms["hm1"] = f_norms["h0"] / math.sqrt(lambda1)
    exact = {
        "d3v_l2": derivative_lp(case.v_field, 3, 2.0, box, n_axis),
        "d2p_l2": derivative_lp(ScalarField.expression(case.p_expr), 2, 2.0,
                                box, n_axis),
    }
    return {"a": a_norms, "f": f_norms, "exact": exact}


def audit_estimates(system: SaddleSystem, result: SolveResult, mu,
                    b_field: TensorField, case_norms: Optional[dict] = None) -> dict:
    """Estimate audits for one solve.

    Asserts the constant-free velocity bound; everything carrying a shape
    constant is reported as a ratio against the RHS with the constant
    dropped.
    """
    mesh = system.mesh
    lam1 = lambda1_box(*mesh.box)
    alpha = system.alpha
    anorm = system.anorm_inf
    geom = ElementGeometry(mesh, system.space, system.quad_n)
    gv = discrete_gradients(geom, system.space, result.velocity)
    grad_v = math.sqrt(float(np.einsum("eq,eqac,eqac->", geom.wdet, gv, gv)))

    p_h = np.einsum("qj,ej->eq", geom.p1_vals, result.pressure[mesh.tets])
    vol = float(np.sum(geom.wdet))
    p_centered = p_h - float(np.sum(geom.wdet * p_h)) / vol
    p_l2 = math.sqrt(float(np.sum(geom.wdet * p_centered**2)))

    f_l2 = system.f_l2
    f_dual = f_l2 / math.sqrt(lam1)

    bounds = []
    rhs = f_dual / alpha
    bounds.append(BoundAudit(
        "velocity_gradient_apriori", grad_v, rhs,
        satisfied=grad_v <= rhs * (1 + 1e-12),
    ))
    bounds.append(_ratio("pressure_l2", p_l2, (anorm / alpha) * f_dual))

    sup_da = _sup_da(mu, b_field, geom.flat_points)
    if sup_da is not None:
        a_w1inf = math.sqrt(lam1) * anorm + sup_da
        d2v = broken_h2_velocity(system.space, result.velocity)
        rhs_d2v = (1.0 / alpha) * (f_l2 + (1.0 / alpha) * a_w1inf * f_dual)
        bounds.append(_ratio("d2v_broken", d2v, rhs_d2v))
        gp = broken_h1_pressure(mesh, result.pressure)
        bounds.append(_ratio("grad_p_broken", gp, anorm * rhs_d2v))

    norms = {
        "grad_v_l2": grad_v,
        "pressure_l2": p_l2,
        "f_l2": f_l2,
        "f_dual_surrogate": f_dual,
    }
    if case_norms is not None:
        a_n = dict(case_norms["a"])
        f_n = dict(case_norms["f"])
        bracket = rk_bracket(alpha, a_n, f_n)
        bounds.append(_ratio(
            "d3v_exact", case_norms["exact"]["d3v_l2"], bracket / alpha
        ))
        bounds.append(_ratio(
            "d2p_exact", case_norms["exact"]["d2p_l2"], anorm * bracket / alpha
        ))
        norms["rk_k2"] = rk_evaluate(alpha, lam1, a_n, f_n, 2)

    return {
        "alpha": alpha,
        "anorm_inf": anorm,
        "lambda1": lam1,
        "norms": norms,
        "bounds": [b.as_dict() for b in bounds],
        "solver": dict(result.stats, residual=result.residual),
    }


def _ratio(name, lhs, rhs_no_c) -> BoundAudit:
    ratio = lhs / rhs_no_c if rhs_no_c > 0 else (0.0 if lhs == 0.0 else math.inf)
    return BoundAudit(name, lhs, rhs_no_c, ratio=ratio)


def ratio_blowup_guard(audit_seq, factor: float = 10.0):
    """Check that no ratio diagnostic grows by more than ``factor`` between
    consecutive refinement levels.  Returns a list of offending ids."""
    offenders = []
    for prev, cur in zip(audit_seq[:-1], audit_seq[1:]):
        prev_map = {b["id"]: b for b in prev["bounds"] if "ratio" in b}
        for b in cur["bounds"]:
            if "ratio" not in b or b["id"] not in prev_map:
                continue
            r0 = prev_map[b["id"]]["ratio"]
            if r0 > 0 and b["ratio"] > factor * r0:
                offenders.append(b["id"])
    return offenders
