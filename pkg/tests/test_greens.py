import numpy as np
import pytest

from fluctem.greens import (
    EffectiveSolver,
    GreensError,
    assemble_ls_system,
    greens_identity_report,
    greens_identity_residual,
    self_term_coupling,
    solve_effective_green,
    surface_functional,
    vacuum_green,
    vacuum_green_block,
    vacuum_imag_coincidence,
)
from fluctem.scene import Scene, Shell, build_scene, sphere_quadrature

from conftest import LAM, FixedEps, one_voxel_scene


def vacuum_scene(box=400.0):
    return build_scene({"box_side": box, "voxel_pitch": 0.1, "voxels": []})


def test_far_field_transversality():
    # longitudinal part decays as 1/r^2: at k r = 1e3 the projection is tiny
    x = np.array([0.0, 0.0, 1e3])
    G = vacuum_green(1.0, x, np.zeros(3))
    rhat = x / np.linalg.norm(x)
    assert abs(rhat @ G @ rhat) / np.linalg.norm(G) < 1e-2


def test_imag_coincidence_limit():
    # brute-force extrapolation of Imag G along several directions
    target = vacuum_imag_coincidence(1.3)
    for direction in (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                      np.array([1.0, 1.0, 1.0]) / np.sqrt(3)):
        vals = [np.imag(vacuum_green(1.3, r * direction, np.zeros(3)))
                for r in (1e-2, 5e-3)]
        extrap = vals[1] + (vals[1] - vals[0]) / 3  # h^2 Richardson
        assert np.allclose(extrap, target, atol=1e-8)


def test_closed_form_reciprocity(rng):
    for _ in range(10):
        x, y = rng.uniform(-3, 3, (2, 3))
        G1 = vacuum_green(0.9, x, y)
        G2 = vacuum_green(0.9, y, x)
        assert np.max(np.abs(G1 - G2.T)) < 1e-13 * np.max(np.abs(G1))


def test_coincident_points_error():
    with pytest.raises(GreensError):
        vacuum_green(1.0, np.zeros(3), np.zeros(3))


def test_all_vacuum_voxels_give_identity_matrix():
    sc = Scene(box_side=10.0, voxel_pitch=0.3,
               scatterer_voxels=(((0.0, 0.0, 0.0), FixedEps(1.0)),
                                 ((0.9, 0.0, 0.0), FixedEps(1.0))))
    sys = assemble_ls_system(sc, 1.0)
    assert np.array_equal(sys.matrix, np.eye(6))


def test_single_voxel_matches_hand_solution():
    # one voxel: A is 3x3 diagonal, solvable by hand
    sc = one_voxel_scene(eps=2 + 0.5j, pitch=0.3)
    chi = 1 + 0.5j
    dv = 0.3**3
    denom = 1 + chi / 3 - 1j * chi * dv / (6 * np.pi)  # k = 1
    s = np.array([[0.0, 0.0, 1.4]])
    t = np.array([[1.0, 0.6, -0.8]])
    block = solve_effective_green(sc, 1.0, s, t)
    gv_ts = vacuum_green(1.0, t[0], s[0])
    expected = gv_ts + dv * vacuum_green(1.0, t[0], np.zeros(3)) @ (
        (chi / denom) * vacuum_green(1.0, np.zeros(3), s[0])
    )
    assert np.allclose(block.values[0, 0], expected, rtol=1e-12)
    assert block.metadata["self_term_rule"] == "spherical_pv_radiative"


def test_self_term_rules_agree_to_leading_order():
    a = self_term_coupling(1.0, 1e-6, "spherical_pv_radiative")
    b = self_term_coupling(1.0, 1e-6, "spherical_exact")
    assert abs(a - b) < 1e-4 * abs(a)
    with pytest.raises(GreensError):
        self_term_coupling(1.0, 1e-6, "cubic-nonsense")


def test_pitch_doubling_scales_couplings_by_eight():
    pos = (((0.0, 0.0, 0.0), FixedEps(1.5)), ((0.0, 0.0, 2.0), FixedEps(1.5)))
    s1 = assemble_ls_system(Scene(20.0, 0.25, pos), 1.0)
    s2 = assemble_ls_system(Scene(20.0, 0.50, pos), 1.0)
    off1 = s1.matrix[0:3, 3:6] - np.eye(3) * 0
    off2 = s2.matrix[0:3, 3:6]
    assert np.allclose(off2, 8 * off1, rtol=1e-13)


def test_empty_scene_effective_equals_vacuum_bitwise():
    sc = vacuum_scene()
    s = np.array([[0.0, 0.0, 1.0]])
    t = np.array([[1.0, 0.0, 0.0]])
    block = solve_effective_green(sc, 1.0, s, t)
    assert np.array_equal(block.values, vacuum_green_block(1.0, t, s))


def test_weak_voxel_first_born(rng):
    # Born oracle computed inline: dV k^2 Gv(t,u) chi Gv(u,s)
    t = np.array([0.0, 0.0, 1.5])
    s = np.array([1.2, 0.4, -0.9])
    u = np.zeros(3)
    gaps = {}
    for chi_mag in (1e-3, 2e-3):
        sc = one_voxel_scene(eps=1 + chi_mag, pitch=0.3)
        dv = 0.3**3
        full = solve_effective_green(sc, 1.0, s[None], t[None]).values[0, 0]
        born = dv * chi_mag * vacuum_green(1.0, t, u) @ vacuum_green(1.0, u, s)
        scattered = full - vacuum_green(1.0, t, s)
        gaps[chi_mag] = np.linalg.norm(scattered - born)
        assert gaps[chi_mag] < 1e-3 * np.linalg.norm(scattered)
    ratio = gaps[2e-3] / gaps[1e-3]
    assert ratio == pytest.approx(4.0, rel=0.2)


def test_solved_reciprocity(rng):
    sc = build_scene({
        "box_side": 40.0, "voxel_pitch": LAM / 10,
        "primitives": [{"shape": "box", "half_size": [LAM / 8] * 3,
                        "material": {"type": "drude_lorentz", "omega_p": 1.2,
                                      "omega_0": 0.9, "gamma": 0.2}}],
    })
    solver = EffectiveSolver(sc, 1.0)
    pts = rng.uniform(-4, 4, (20, 3))
    pts = pts[np.linalg.norm(pts, axis=1) > 2.2][:8]
    A, B = pts[:4], pts[4:8]
    G1 = solver.green(A, B, warn_near=False)
    G2 = solver.green(B, A, warn_near=False)
    err = np.max(np.abs(G1 - np.transpose(G2, (1, 0, 3, 2))))
    assert err <= 1e-8 * np.max(np.abs(G1))


def test_near_field_guard_warns():
    sc = one_voxel_scene(pitch=0.4)
    solver = EffectiveSolver(sc, 1.0)
    with pytest.warns(UserWarning, match="one pitch"):
        solver.green(np.array([[0.0, 0.0, 0.35]]), np.array([[0.0, 0.0, 2.0]]))


def test_memory_cap_error_reports_estimate():
    voxels = tuple(((0.0, 0.0, 0.4 * i), FixedEps(2.0)) for i in range(40))
    sc = Scene(box_side=100.0, voxel_pitch=0.35, scatterer_voxels=voxels)
    with pytest.raises(MemoryError, match="GB"):
        assemble_ls_system(sc, 1.0, memory_cap=1000)


def test_system_reassembly_bit_exact():
    sc = one_voxel_scene(pitch=0.3)
    m1 = assemble_ls_system(sc, 1.0).matrix
    m2 = assemble_ls_system(sc, 1.0).matrix
    assert np.array_equal(m1, m2)


# -- surface functional and the dissipation identity ------------------------


def test_surface_functional_vacuum_coincidence():
    sc = vacuum_scene()
    a = np.array([0.0, 0.0, 0.2])
    q = sphere_quadrature(3000.0, 24)
    F = surface_functional(sc, 1.0, a, a, q)
    target = vacuum_imag_coincidence(1.0)
    assert np.linalg.norm(F - target) < 1e-6 * np.linalg.norm(target)


def test_surface_functional_radius_independent():
    sc = vacuum_scene(box=40000.0)
    a = np.array([0.0, 0.0, 1.6])
    b = np.array([1.9, 0.8, -1.2])
    q1 = sphere_quadrature(3000.0, 24)
    q2 = sphere_quadrature(6000.0, 24)
    F1 = surface_functional(sc, 1.0, a, b, q1)
    F2 = surface_functional(sc, 1.0, a, b, q2)
    assert np.linalg.norm(F1 - F2) < 1e-6 * np.linalg.norm(F1)


def test_surface_must_enclose_points():
    sc = vacuum_scene()
    q = sphere_quadrature(1.0, 12)
    with pytest.raises(Exception, match="enclose"):
        surface_functional(sc, 1.0, np.array([0, 0, 2.0]), np.array([0, 0, 2.0]), q)


def test_thick_shell_kills_surface_term():
    # five amplitude e-foldings of absorber: outgoing propagation is gone
    eta = 0.1
    ell = 1.0 / np.imag(np.sqrt(1 + 1j * eta))
    sc = Scene(box_side=4 * (2.0 + 5 * ell), voxel_pitch=0.2,
               scatterer_voxels=(((0.0, 0.0, 0.0), FixedEps(2 + 0.5j)),),
               shell=Shell(2.0, 2.0 + 5 * ell, FixedEps(1 + 1j * eta)),
               shell_enabled=True)
    a = np.array([0.0, 0.0, 1.0])
    b = np.array([0.8, 0.3, -0.6])
    solver = EffectiveSolver(sc, 1.0)
    q = sphere_quadrature(1.2 * sc.shell.outer_radius, 24)
    F = surface_functional(sc, 1.0, a, b, q, solver=solver)
    img = np.imag(solver.green(a[None], b[None], warn_near=False)[0, 0])
    assert np.linalg.norm(F) < 1e-4 * np.linalg.norm(img)


def test_identity_vacuum():
    sc = vacuum_scene()
    res = greens_identity_residual(sc, 1.0, np.array([0, 0, 0.3]),
                                   np.array([0.4, 0.1, -0.2]))
    assert res < 1e-6


@pytest.mark.slow
def test_identity_single_voxel_converges_with_pitch():
    a = np.array([0.0, 0.0, 1.0])
    b = np.array([0.7, 0.3, -0.6])
    resid = [greens_identity_residual(one_voxel_scene(pitch=p), 1.0, a, b)
             for p in (LAM / 10, LAM / 20, LAM / 40)]
    assert resid[1] < 1e-2  # the lam/20 level
    assert resid[0] > resid[1] > resid[2]
    order = np.log2(resid[0] / resid[1])
    assert order >= 1.0


def test_identity_report_parts_vacuum():
    sc = vacuum_scene()
    rep = greens_identity_report(sc, 1.0, np.array([0, 0, 0.3]),
                                 np.array([0.4, 0.1, -0.2]))
    assert np.allclose(rep.volume_term, 0.0)
    assert np.linalg.norm(rep.surface_term - rep.imag_green) < 1e-6


def test_passivity_of_coincidence_imag(rng):
    sc = one_voxel_scene(eps=3 + 1j, pitch=0.4)
    solver = EffectiveSolver(sc, 1.0)
    pts = rng.uniform(-2, 2, (6, 3))
    pts = pts[np.linalg.norm(pts, axis=1) > 0.8]
    vac = vacuum_imag_coincidence(1.0)
    for p in pts:
        gs = solver.green_coincident_scattered(p[None])[0]
        total = vac + np.imag(gs)
        eigs = np.linalg.eigvalsh((total + total.T) / 2)
        assert np.all(eigs > -1e-10)


def test_dyadic_block_export(tmp_path):
    from fluctem.reports import write_dyadic_block_csv

    sc = one_voxel_scene(pitch=0.3)
    block = solve_effective_green(sc, 1.0, np.array([[0, 0, 1.4]]),
                                  np.array([[1.0, 0.4, -0.7]]))
    path = write_dyadic_block_csv(block, tmp_path / "block.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "target,source,row,col,re,im"
    assert len(lines) == 1 + 9
    sidecar = (tmp_path / "block.json").read_text()
    assert "self_term_rule" in sidecar and "omega" in sidecar
