"""Spatial scalar and tensor fields over a box domain.

Three representations share one evaluation interface:

* ``constant`` -- a single value everywhere,
* ``expression`` -- a closed-form expression in x, y, z built from
  arithmetic, sin/cos/exp and numeric constants (sympy-backed, so spatial
  derivatives are analytic),
* ``grid`` -- values sampled on a regular lattice over [0,Lx]x[0,Ly]x[0,Lz],
  evaluated by trilinear interpolation, with second-order finite-difference
  derivatives (one-sided at the faces).

Grid file format (plain text): a header line ``nx ny nz Lx Ly Lz`` with the
node counts per axis, then ``nx*ny*nz`` whitespace-separated records in
C order over (ix, iy, iz) -- z index fastest.  One number per record for a
scalar field, six (``a11 a22 a33 a12 a13 a23``) for a symmetric tensor.

Fields are read-only after construction; concurrent evaluation is safe.
"""

from __future__ import annotations

import itertools

import numpy as np
import sympy as sp
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigError, NonDifferentiableField
from .tensors import SymTensor3

__all__ = [
    "ScalarField",
    "TensorField",
    "VectorField",
    "parse_expression",
    "COMPONENT_ORDER",
]

_X, _Y, _Z = sp.symbols("x y z")
_ALLOWED_FUNCS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp}

# Storage/file order of the six independent components of a symmetric tensor.
COMPONENT_ORDER = ("a11", "a22", "a33", "a12", "a13", "a23")
_COMP_INDEX = {
    "a11": (0, 0), "a22": (1, 1), "a33": (2, 2),
    "a12": (0, 1), "a13": (0, 2), "a23": (1, 2),
}


def parse_expression(text: str) -> sp.Expr:
    """Parse an expression restricted to x, y, z, arithmetic, sin/cos/exp, pi."""
    local = {"x": _X, "y": _Y, "z": _Z, "pi": sp.pi}
    local.update(_ALLOWED_FUNCS)
    try:
        expr = sp.parse_expr(str(text), local_dict=local)
    except Exception as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc}") from exc
    extra = expr.free_symbols - {_X, _Y, _Z}
    if extra:
        raise ConfigError(f"expression {text!r} uses unknown symbols {extra}")
    for f in expr.atoms(sp.Function):
        if f.func not in (sp.sin, sp.cos, sp.exp):
            raise ConfigError(f"expression {text!r} uses unsupported function {f.func}")
    return expr


def _lambdify(expr: sp.Expr):
    fn = sp.lambdify((_X, _Y, _Z), expr, modules="numpy")

    def wrapped(pts):
        pts = np.asarray(pts, dtype=float)
        out = fn(pts[..., 0], pts[..., 1], pts[..., 2])
        return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]).copy()

    return wrapped


class ScalarField:
    """Scalar field with constant, expression or grid representation."""

    def __init__(self, kind, payload, box=None):
        self.kind = kind
        self._payload = payload
        self.box = box  # (Lx, Ly, Lz) for grid fields
        if kind == "expression":
            self._fn = _lambdify(payload)
            self._grad_fns = None
            self._hess_fns = None
        elif kind == "grid":
            self._build_grid_interpolants()

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value: float) -> "ScalarField":
        return cls("constant", float(value))

    @classmethod
    def expression(cls, text) -> "ScalarField":
        expr = text if isinstance(text, sp.Expr) else parse_expression(text)
        return cls("expression", expr)

    @classmethod
    def grid(cls, values: np.ndarray, box) -> "ScalarField":
        values = np.asarray(values, dtype=float)
        if values.ndim != 3 or min(values.shape) < 2:
            raise ConfigError("grid fields need a 3-d array with >= 2 nodes per axis")
        return cls("grid", values, box=tuple(float(b) for b in box))

    @classmethod
    def from_file(cls, path) -> "ScalarField":
        values, box = _read_grid_file(path, ncomp=1)
        return cls.grid(values[..., 0], box)

    # -- helpers ------------------------------------------------------------
    @property
    def expr(self) -> sp.Expr:
        if self.kind == "expression":
            return self._payload
        if self.kind == "constant":
            return sp.Float(self._payload)
        raise NonDifferentiableField("grid fields have no closed form")

    def _axes(self):
        nx, ny, nz = self._payload.shape
        lx, ly, lz = self.box
        return (
            np.linspace(0.0, lx, nx),
            np.linspace(0.0, ly, ny),
            np.linspace(0.0, lz, nz),
        )

    def _build_grid_interpolants(self):
        axes = self._axes()

        def grad_arrays(data):
            # second-order central differences, one-sided at the faces;
            # two-node axes can only support first-order edges.
            out = []
            for k in range(3):
                order = 2 if data.shape[k] >= 3 else 1
                out.append(np.gradient(data, axes[k], axis=k, edge_order=order))
            return out

        self._interp = RegularGridInterpolator(axes, self._payload, method="linear")
        grads = grad_arrays(self._payload)
        self._grad_interp = [
            RegularGridInterpolator(axes, g, method="linear") for g in grads
        ]
        self._hess_interp = []
        for g in grads:
            self._hess_interp.append(
                [RegularGridInterpolator(axes, h, method="linear")
                 for h in grad_arrays(g)]
            )

    def _clip(self, pts):
        pts = np.asarray(pts, dtype=float)
        lx, ly, lz = self.box
        return np.clip(pts, [0.0, 0.0, 0.0], [lx, ly, lz])

    # -- evaluation ---------------------------------------------------------
    def eval(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "constant":
            return np.full(pts.shape[0], self._payload)
        if self.kind == "expression":
            return self._fn(pts)
        return self._interp(self._clip(pts))

    def grad(self, pts) -> np.ndarray:
        """First derivatives, shape (N, 3)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "constant":
            return np.zeros((pts.shape[0], 3))
        if self.kind == "expression":
            if self._grad_fns is None:
                self._grad_fns = [
                    _lambdify(sp.diff(self._payload, s)) for s in (_X, _Y, _Z)
                ]
            return np.stack([f(pts) for f in self._grad_fns], axis=-1)
        c = self._clip(pts)
        return np.stack([g(c) for g in self._grad_interp], axis=-1)

    def hess(self, pts) -> np.ndarray:
        """Second derivatives, shape (N, 3, 3)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "constant":
            return np.zeros((pts.shape[0], 3, 3))
        if self.kind == "expression":
            if self._hess_fns is None:
                self._hess_fns = [
                    [
                        _lambdify(sp.diff(self._payload, s, t))
                        for t in (_X, _Y, _Z)
                    ]
                    for s in (_X, _Y, _Z)
                ]
            return np.stack(
                [np.stack([f(pts) for f in row], axis=-1) for row in self._hess_fns],
                axis=-2,
            )
        c = self._clip(pts)
        return np.stack(
            [np.stack([h(c) for h in row], axis=-1) for row in self._hess_interp],
            axis=-2,
        )

    def derivative_stack(self, pts, order: int) -> np.ndarray:
        """All distinct derivatives of the given order, shape (N, n_multi).

        Multi-indices are enumerated once each (no repetition), matching the
        derivative-tensor convention used by the dimensional norms.  Grid
        fields support order <= 2; expressions any order.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        combos = list(itertools.combinations_with_replacement(range(3), order))
        if order == 0:
            return self.eval(pts)[:, None]
        if self.kind == "constant":
            return np.zeros((pts.shape[0], len(combos)))
        if self.kind == "grid":
            if order == 1:
                return self.grad(pts)
            if order == 2:
                h = self.hess(pts)
                return np.stack([h[:, i, j] for i, j in combos], axis=-1)
            raise NonDifferentiableField(
                f"grid fields provide derivatives up to order 2, not {order}"
            )
        if not hasattr(self, "_stack_fns"):
            self._stack_fns = {}
        if order not in self._stack_fns:
            syms = (_X, _Y, _Z)
            self._stack_fns[order] = [
                _lambdify(sp.diff(self._payload, *(syms[i] for i in combo)))
                for combo in combos
            ]
        return np.stack([f(pts) for f in self._stack_fns[order]], axis=-1)


class TensorField:
    """Symmetric 3x3 tensor field over the box.

    Evaluation returns full (N, 3, 3) symmetric stacks; derivative layouts
    are ``grad -> (N, 3, 3, 3)`` indexed [n, k, i, j] = d_k B_ij and
    ``hess -> (N, 3, 3, 3, 3)`` indexed [n, k, l, i, j].
    """

    def __init__(self, kind, components, box=None):
        self.kind = kind
        self.components = components  # dict name -> ScalarField, or SymTensor3
        self.box = box

    @classmethod
    def constant(cls, value) -> "TensorField":
        if not isinstance(value, SymTensor3):
            value = SymTensor3.from_matrix(np.asarray(value, dtype=float))
        return cls("constant", value)

    @classmethod
    def identity(cls) -> "TensorField":
        return cls.constant(SymTensor3.identity())

    @classmethod
    def expression(cls, comps) -> "TensorField":
        """Build from a mapping of component names to expression strings.

        Missing components default to zero; names follow COMPONENT_ORDER.
        """
        fields = {}
        for name in COMPONENT_ORDER:
            text = comps.get(name, "0")
            fields[name] = ScalarField.expression(text)
        return cls("expression", fields)

    @classmethod
    def from_file(cls, path) -> "TensorField":
        values, box = _read_grid_file(path, ncomp=6)
        fields = {
            name: ScalarField.grid(values[..., i], box)
            for i, name in enumerate(COMPONENT_ORDER)
        }
        return cls("grid", fields, box=box)

    def eval(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = pts.shape[0]
        if self.kind == "constant":
            return np.broadcast_to(self.components.to_matrix(), (n, 3, 3)).copy()
        out = np.zeros((n, 3, 3))
        for name, fld in self.components.items():
            i, j = _COMP_INDEX[name]
            vals = fld.eval(pts)
            out[:, i, j] = vals
            if i != j:
                out[:, j, i] = vals
        return out

    def grad(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = pts.shape[0]
        if self.kind == "constant":
            return np.zeros((n, 3, 3, 3))
        out = np.zeros((n, 3, 3, 3))
        for name, fld in self.components.items():
            i, j = _COMP_INDEX[name]
            g = fld.grad(pts)  # (n, 3)
            out[:, :, i, j] = g
            if i != j:
                out[:, :, j, i] = g
        return out

    def hess(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = pts.shape[0]
        if self.kind == "constant":
            return np.zeros((n, 3, 3, 3, 3))
        out = np.zeros((n, 3, 3, 3, 3))
        for name, fld in self.components.items():
            i, j = _COMP_INDEX[name]
            h = fld.hess(pts)  # (n, 3, 3)
            out[:, :, :, i, j] = h
            if i != j:
                out[:, :, :, j, i] = h
        return out

    def check_unimodular(self, pts, tol: float = 1e-8) -> None:
        """Require |det B - 1| <= tol at every sample point."""
        dets = np.linalg.det(self.eval(pts))
        worst = np.argmax(np.abs(dets - 1.0))
        if abs(dets[worst] - 1.0) > tol:
            pts = np.atleast_2d(pts)
            raise ConfigError(
                f"tensor field not unimodular: det = {dets[worst]:.9g} at {pts[worst]}"
            )


class VectorField:
    """Three-component vector field built from scalar fields."""

    def __init__(self, components):
        self.components = tuple(components)
        if len(self.components) != 3:
            raise ConfigError("vector fields need exactly three components")

    @classmethod
    def constant(cls, vx: float, vy: float, vz: float) -> "VectorField":
        return cls([ScalarField.constant(v) for v in (vx, vy, vz)])

    @classmethod
    def zero(cls) -> "VectorField":
        return cls.constant(0.0, 0.0, 0.0)

    @classmethod
    def expression(cls, texts) -> "VectorField":
        return cls([ScalarField.expression(t) for t in texts])

    def eval(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.stack([c.eval(pts) for c in self.components], axis=-1)

    def grad(self, pts) -> np.ndarray:
        """Velocity-gradient layout (N, i, c) = d_c v_i."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.stack([c.grad(pts) for c in self.components], axis=-2)

    @property
    def exprs(self):
        return tuple(c.expr for c in self.components)


def _read_grid_file(path, ncomp: int):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 6:
            raise ConfigError(f"{path}: header must be 'nx ny nz Lx Ly Lz'")
        nx, ny, nz = (int(v) for v in header[:3])
        box = tuple(float(v) for v in header[3:])
        data = np.loadtxt(fh, dtype=float)
    data = np.atleast_2d(data)
    if ncomp == 1 and data.shape[1] != 1:
        data = data.reshape(-1, 1)
    if data.shape != (nx * ny * nz, ncomp):
        raise ConfigError(
            f"{path}: expected {nx * ny * nz} records of {ncomp} values, "
            f"got shape {data.shape}"
        )
    if min(nx, ny, nz) < 2:
        raise ConfigError(f"{path}: need >= 2 nodes per axis")
    if min(box) <= 0:
        raise ConfigError(f"{path}: box edge lengths must be positive")
    return data.reshape(nx, ny, nz, ncomp), box


def write_grid_file(path, values: np.ndarray, box) -> None:
    """Write a grid field file; ``values`` is (nx, ny, nz) or (nx, ny, nz, 6)."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 3:
        values = values[..., None]
    nx, ny, nz, ncomp = values.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{nx} {ny} {nz} {box[0]:.17g} {box[1]:.17g} {box[2]:.17g}\n")
        flat = values.reshape(-1, ncomp)
        for row in flat:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
