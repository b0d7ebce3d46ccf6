"""Assembly of the mixed system against independent dense oracles."""

import numpy as np
import pytest
from scipy.special import roots_legendre

from genstokes.assembly import assemble, korn_terms
from genstokes.constitutive import MuTriple
from genstokes.errors import BCViolation, NotElliptic
from genstokes.fem import LOCAL_EDGES, TaylorHoodSpace, build_mesh
from genstokes.fields import TensorField, VectorField
from genstokes.tensors import SymTensor3


# ---------------------------------------------------------------------------
# dense element oracle (independent quadrature and geometry path)


def duffy_rule(n=4):
    """Tensor Gauss rule on the unit tetrahedron via the collapsed cube."""
    x, w = roots_legendre(n)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    pts, wts = [], []
    for a, wa in zip(u, wu):
        for b, wb in zip(u, wu):
            for c, wc in zip(u, wu):
                pts.append((a, b * (1 - a), c * (1 - a) * (1 - b)))
                wts.append(wa * wb * wc * (1 - a) ** 2 * (1 - b))
    return np.array(pts), np.array(wts)


def barycentric_system(verts):
    """Coefficients making lam_k(x) affine with lam_k(v_j) = delta_kj."""
    mat = np.vstack([np.ones(4), verts.T])  # (4, 4)
    return np.linalg.inv(mat)  # rows: [const, cx, cy, cz] per lam_k


def p2_eval(lam, dlam):
    """Values (10,) and gradients (10, 3) from barycentric data."""
    vals = np.empty(10)
    grads = np.empty((10, 3))
    for k in range(4):
        vals[k] = lam[k] * (2 * lam[k] - 1)
        grads[k] = (4 * lam[k] - 1) * dlam[k]
    for e, (a, b) in enumerate(LOCAL_EDGES):
        vals[4 + e] = 4 * lam[a] * lam[b]
        grads[4 + e] = 4 * (lam[a] * dlam[b] + lam[b] * dlam[a])
    return vals, grads


def dense_velocity_block(mesh, space, a_mat):
    """Brute-force K for a constant coefficient tensor."""
    n = space.n_velocity
    K = np.zeros((n, n))
    ref_pts, ref_wts = duffy_rule()
    for e in range(mesh.n_tets):
        verts = mesh.vertices[mesh.tets[e]]
        coef = barycentric_system(verts)
        const, grad_l = coef[:, 0], coef[:, 1:]
        jac = np.abs(np.linalg.det(np.vstack([np.ones(4), verts.T]))) / 1.0
        # physical volume of the tet = |det|/6 of the edge matrix; recompute
        edge = (verts[1:] - verts[0]).T
        vol = abs(np.linalg.det(edge)) / 6.0
        nodes = space.tet_nodes[e]
        # quadrature points in physical coordinates
        phys = verts[0] + ref_pts @ edge.T
        for q, (xq, wq) in enumerate(zip(phys, ref_wts)):
            lam = const + grad_l @ xq
            vals, grads = p2_eval(lam, grad_l)
            weight = wq * 6.0 * vol  # duffy weights sum to 1/6 on the ref tet
            for i in range(10):
                for a in range(3):
                    gw = np.zeros((3, 3))
                    gw[a, :] = grads[i]
                    row = 3 * nodes[i] + a
                    for j in range(10):
                        for b in range(3):
                            gv = np.zeros((3, 3))
                            gv[b, :] = grads[j]
                            d = 0.5 * (gv + gv.T)
                            val = np.tensordot(d @ a_mat + a_mat @ d, gw)
                            K[row, 3 * nodes[j] + b] += weight * val
    return K


def test_single_cell_dense_oracle_constant_diagonal():
    mesh = build_mesh(1, 1, 1, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    a_mat = np.diag([2.0, 0.5, 1.25])
    b = TensorField.constant(SymTensor3.from_matrix(a_mat - np.eye(3) * 0.0))
    # build A = B by choosing mu = (0, 1, 0)
    system = assemble(mesh, space, MuTriple(0.0, 1.0, 0.0), b)
    K_dense = dense_velocity_block(mesh, space, a_mat)
    got = system.K_full.toarray()
    assert np.max(np.abs(got - K_dense)) < 1e-12


def test_newtonian_reduction_matches_double_strain_form():
    # with A = I the block equals the assembled form of 2 int D(phi_i):D(phi_j)
    mesh = build_mesh(1, 1, 1, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    system = assemble(mesh, space, MuTriple(1.0, 0.0, 0.0), TensorField.identity())
    n = space.n_velocity
    K_dense = np.zeros((n, n))
    ref_pts, ref_wts = duffy_rule()
    for e in range(mesh.n_tets):
        verts = mesh.vertices[mesh.tets[e]]
        coef = barycentric_system(verts)
        const, grad_l = coef[:, 0], coef[:, 1:]
        edge = (verts[1:] - verts[0]).T
        vol = abs(np.linalg.det(edge)) / 6.0
        nodes = space.tet_nodes[e]
        phys = verts[0] + ref_pts @ edge.T
        for xq, wq in zip(phys, ref_wts):
            lam = const + grad_l @ xq
            _, grads = p2_eval(lam, grad_l)
            weight = wq * 6.0 * vol
            for i in range(10):
                for a in range(3):
                    gw = np.zeros((3, 3))
                    gw[a, :] = grads[i]
                    dw = 0.5 * (gw + gw.T)
                    for j in range(10):
                        for b in range(3):
                            gv = np.zeros((3, 3))
                            gv[b, :] = grads[j]
                            dv = 0.5 * (gv + gv.T)
                            K_dense[3 * nodes[i] + a, 3 * nodes[j] + b] += (
                                weight * 2.0 * np.tensordot(dv, dw)
                            )
    assert np.max(np.abs(system.K_full.toarray() - K_dense)) < 1e-12


def test_energy_equals_korn_combination():
    # u^t K u = 2 ||D(v)||^2 = ||grad v||^2 + ||div v||^2 for constrained u
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    system = assemble(mesh, space, MuTriple(1.0, 0.0, 0.0), TensorField.identity())
    rng = np.random.default_rng(5)
    for _ in range(10):
        ui = rng.standard_normal(system.n_interior)
        u = system.expand_velocity(ui)
        dd, gg, div2 = korn_terms(space, u)
        energy = float(ui @ (system.K @ ui))
        assert energy == pytest.approx(2.0 * dd, rel=1e-12)
        assert energy == pytest.approx(gg + div2, rel=1e-10)


def test_korn_identity_on_200_random_fields():
    mesh = build_mesh(3, 3, 3, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    rng = np.random.default_rng(7)
    idx = space.interior_idx
    for _ in range(200):
        u = np.zeros(space.n_velocity)
        u[idx] = rng.standard_normal(idx.size)
        dd, gg, div2 = korn_terms(space, u)
        assert abs(dd - 0.5 * gg - 0.5 * div2) <= 1e-10 * dd


def test_korn_terms_zero_field():
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    assert korn_terms(space, np.zeros(space.n_velocity)) == (0.0, 0.0, 0.0)


def test_korn_terms_rejects_bc_violation():
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    u = np.ones(space.n_velocity)
    with pytest.raises(BCViolation):
        korn_terms(space, u)


def test_assembled_block_symmetry():
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    from genstokes.verification import make_anisotropic_case

    case = make_anisotropic_case()
    system = assemble(mesh, space, case.mu, case.b_field)
    diff = system.K - system.K.T
    assert np.max(np.abs(diff.toarray())) == 0.0


def test_load_vector_partition_of_unity():
    # integrating a constant vector against F reproduces int f exactly for
    # polynomial f within the quadrature degree
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    f = VectorField.expression(["x**2*y", "z**3", "x*y*z"])
    system = assemble(mesh, space, MuTriple(1.0, 0.0, 0.0),
                      TensorField.identity(), f)
    exact = np.array([1.0 / 6.0, 1.0 / 4.0, 1.0 / 8.0])  # integrals over unit cube
    for a in range(3):
        ones = np.zeros(space.n_velocity)
        ones[a::3] = 1.0
        assert float(ones @ system.F_full) == pytest.approx(exact[a], rel=1e-13)


def test_zero_forcing_zero_load():
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    system = assemble(mesh, space, MuTriple(1.0, 0.0, 0.0), TensorField.identity())
    assert np.all(system.F == 0.0)
    assert system.f_l2 == 0.0


def test_assemble_rejects_non_elliptic():
    mesh = build_mesh(1, 1, 1, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    b = TensorField.constant(SymTensor3.diag(2.0, 0.5, 1.0))
    with pytest.raises(NotElliptic) as err:
        assemble(mesh, space, MuTriple(-2.5, 4.0, 0.25), b)
    assert err.value.alpha is not None and err.value.alpha <= 0.0


def test_thread_count_does_not_change_entries():
    mesh = build_mesh(2, 2, 2, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    from genstokes.verification import make_anisotropic_case

    case = make_anisotropic_case()
    s1 = assemble(mesh, space, case.mu, case.b_field, case.f_field, threads=1)
    s4 = assemble(mesh, space, case.mu, case.b_field, case.f_field, threads=4)
    diff = (s1.K - s4.K)
    denom = np.max(np.abs(s1.K.toarray()))
    assert np.max(np.abs(diff.toarray())) <= 1e-14 * denom
    assert np.allclose(s1.F, s4.F, rtol=1e-14, atol=0.0)


def test_coercivity_sandwich_three_coefficients():
    mesh = build_mesh(3, 3, 3, 1.0, 1.0, 1.0)
    space = TaylorHoodSpace(mesh)
    from genstokes.verification import make_anisotropic_case

    coefficients = [
        (MuTriple(1.0, 0.0, 0.0), TensorField.identity()),
        (MuTriple(1.0, 1.0, 1.0),
         TensorField.constant(SymTensor3.diag(2.0, 0.5, 1.0))),
        (MuTriple(1.0, 1.0, 1.0), make_anisotropic_case().b_field),
    ]
    rng = np.random.default_rng(11)
    for mu, b in coefficients:
        system = assemble(mesh, space, mu, b)
        for _ in range(50):
            ui = rng.standard_normal(system.n_interior)
            u = system.expand_velocity(ui)
            _, gg, _ = korn_terms(space, u)
            energy = float(ui @ (system.K @ ui))
            assert energy >= system.alpha * gg * (1 - 1e-12)
            assert energy <= 2.0 * system.anorm_inf * gg * (1 + 1e-12)
