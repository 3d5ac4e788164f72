"""Vacuum and effective dyadic Green tensors on voxelized scenes.

The effective tensor solves the volume integral equation

    G(x, x') = Gv(x, x') + (w^2/c^2) int du Gv(x, u) (eps(u) - 1) G(u, x')

by collocation on the voxel centers with a regularized self term (static
depolarization of an equal-volume sphere plus the radiative correction).
One dense factorization per frequency serves every source and target.

An absorbing far shell, when enabled, is not discretized into the matrix:
its effect on propagation is the accumulated complex path factor
exp(i (w/c) (sqrt(eps_shell) - 1) * path-length-in-shell), the leading
behaviour of a weak quasi-homogeneous absorber.  Tiny shells can instead be
voxelized explicitly (see tests) to bound the error of this treatment.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .constants import DEFAULT, Constants
from .material import eval_permittivity
from .scene import Scene, SceneError, shell_voxelization, sphere_quadrature

SELF_TERM_RULES = ("spherical_pv_radiative", "spherical_exact")

_EYE = np.eye(3)


class GreensError(RuntimeError):
    pass


def vacuum_green(omega, x, xp, c=1.0):
    """Outgoing-wave free-space dyadic at a single point pair.

    (I + (c^2/w^2) grad grad) exp(i w r / c) / (4 pi r), r = |x - xp|.
    Coincident points are an error; coincidence limits have dedicated
    handling where they are finite (the imaginary part).
    """
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if np.allclose(x, xp):
        raise GreensError("vacuum_green is singular at coincident points")
    return vacuum_green_block(omega, x[None, :], xp[None, :], c=c)[0, 0]


def vacuum_green_block(omega, targets, sources, c=1.0):
    """Vacuum dyadics for all target/source pairs, shape (T, S, 3, 3)."""
    T = np.atleast_2d(np.asarray(targets, dtype=float))
    S = np.atleast_2d(np.asarray(sources, dtype=float))
    k = omega / c
    d = T[:, None, :] - S[None, :, :]
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise GreensError("vacuum_green_block hit a coincident target/source pair")
    rh = d / r[..., None]
    u = k * r
    g = np.exp(1j * u) / (4 * np.pi * r)
    ci = 1 + 1j / u - 1 / u**2
    crr = -1 - 3j / u + 3 / u**2
    out = g[..., None, None] * (
        ci[..., None, None] * _EYE + crr[..., None, None] * (rh[..., :, None] * rh[..., None, :])
    )
    return out


def vacuum_imag_coincidence(omega, c=1.0):
    """lim_{x'->x} Imag[Gv(x, x')] = (w / 6 pi c) I, the finite part."""
    return (omega / (6 * np.pi * c)) * _EYE


def self_term_coupling(omega, voxel_volume, rule="spherical_pv_radiative", c=1.0):
    """Diagonal coupling constant C_self so that C_self * chi enters A's diagonal.

    spherical_pv_radiative: -1/3 (static depolarization of an equal-volume
    spherical cell) + i k^3 dV / (6 pi) (radiative reaction).
    spherical_exact: closed-form cell integral (2 (1 - i k a) e^{i k a} - 3)/3
    with a the equal-volume sphere radius; same leading terms.
    """
    k = omega / c
    dv = voxel_volume
    if rule == "spherical_pv_radiative":
        return -1.0 / 3.0 + 1j * k**3 * dv / (6 * np.pi)
    if rule == "spherical_exact":
        a = (3 * dv / (4 * np.pi)) ** (1.0 / 3.0)
        return (2 * (1 - 1j * k * a) * np.exp(1j * k * a) - 3) / 3.0
    raise GreensError(f"unknown self-term rule {rule!r}; choose from {SELF_TERM_RULES}")


@dataclass
class LSSystem:
    scene: Scene
    omega: float
    matrix: np.ndarray  # (3N, 3N)
    self_term_rule: str
    solver: str  # 'dense-lu' or 'gmres'
    memory_bytes: int
    _lu: tuple = field(default=None, repr=False)


def assemble_ls_system(
    scene: Scene,
    omega,
    rule="spherical_pv_radiative",
    memory_cap=2 * 1024**3,
    dense_limit=3000,
    const: Constants = DEFAULT,
) -> LSSystem:
    """Dense interaction matrix A = I - K over the scatterer voxels.

    K couples voxel v to voxel u through dV (w/c)^2 Gv(v, u) (eps(u) - 1),
    the diagonal block following the declared self-term rule.  Bit-exact
    reproducible from (scene, omega, rule).
    """
    n = scene.n_voxels
    if n == 0 and not scene.shell_enabled:
        raise SceneError("scene has no polarizable voxels and no shell")
    mem = (3 * n) ** 2 * 16
    if mem > memory_cap:
        raise MemoryError(
            f"interaction matrix would need {mem/1e9:.2f} GB "
            f"(cap {memory_cap/1e9:.2f} GB) for {n} voxels"
        )
    if n == 0:
        return LSSystem(scene, float(omega), np.zeros((0, 0), complex), rule, "dense-lu", 0)

    c = const.c
    k = omega / c
    pos = scene.positions()
    chi = scene.chi_at(omega)
    dv = scene.voxel_volume

    A = np.zeros((3 * n, 3 * n), dtype=complex)
    if n > 1:
        G = vacuum_green_block_offdiag(omega, pos, c=c)
        K = dv * k**2 * G * chi[None, :, None, None]
        A -= K.transpose(0, 2, 1, 3).reshape(3 * n, 3 * n)
    cs = self_term_coupling(omega, dv, rule, c=c)
    for u in range(n):
        A[3 * u : 3 * u + 3, 3 * u : 3 * u + 3] -= cs * chi[u] * _EYE
    A += np.eye(3 * n)
    solver = "dense-lu" if n <= dense_limit else "gmres"
    return LSSystem(scene, float(omega), A, rule, solver, mem)


def _vacuum_green_pairs(omega, X, Y, c=1.0):
    """Vacuum dyadics for matched point pairs X[i] <- Y[i], shape (P, 3, 3)."""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    k = omega / c
    d = X - Y
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise GreensError("coincident pair in _vacuum_green_pairs")
    rh = d / r[:, None]
    u = k * r
    g = np.exp(1j * u) / (4 * np.pi * r)
    ci = 1 + 1j / u - 1 / u**2
    crr = -1 - 3j / u + 3 / u**2
    return g[:, None, None] * (
        ci[:, None, None] * _EYE + crr[:, None, None] * (rh[:, :, None] * rh[:, None, :])
    )


def vacuum_green_block_offdiag(omega, pts, c=1.0):
    """(N, N, 3, 3) vacuum block over one point set, zeros on the diagonal."""
    n = len(pts)
    out = np.zeros((n, n, 3, 3), dtype=complex)
    if n < 2:
        return out
    iu, ju = np.triu_indices(n, 1)
    vals = _vacuum_green_pairs(omega, pts[iu], pts[ju], c=c)
    out[iu, ju] = vals
    out[ju, iu] = vals.transpose(0, 2, 1)
    return out


class EffectiveSolver:
    """Factorized Lippmann-Schwinger solve bound to one (scene, omega).

    Immutable once factorized; share freely across threads.  All spatial
    evaluations accept arbitrary points, handling points inside voxels
    through the cell-averaged (regularized) kernel.
    """

    def __init__(self, scene: Scene, omega, rule="spherical_pv_radiative",
                 const: Constants = DEFAULT, memory_cap=2 * 1024**3, gmres_tol=1e-8):
        self.scene = scene
        self.omega = float(omega)
        self.const = const
        if scene.n_voxels == 0:
            self.system = LSSystem(scene, float(omega), np.zeros((0, 0), complex),
                                   rule, "dense-lu", 0)
        else:
            self.system = assemble_ls_system(scene, omega, rule=rule,
                                             memory_cap=memory_cap, const=const)
        self.k = omega / const.c
        self.pos = scene.positions()
        self.chi = scene.chi_at(omega) if scene.n_voxels else np.zeros(0, complex)
        self.dv = scene.voxel_volume
        self.cself = self_term_coupling(omega, self.dv, rule, c=const.c)
        self.gmres_tol = gmres_tol
        self._fact = None

    # -- linear algebra -------------------------------------------------

    def _solve(self, rhs):
        """A^-1 rhs for rhs of shape (3N, m)."""
        n = self.scene.n_voxels
        if n == 0:
            return rhs
        A = self.system.matrix
        if self.system.solver == "dense-lu":
            if self._fact is None:
                try:
                    self._fact = sla.lu_factor(A)
                except sla.LinAlgError as exc:
                    raise GreensError(
                        f"LS factorization failed (cond ~ {np.linalg.cond(A):.3e})"
                    ) from exc
            return sla.lu_solve(self._fact, rhs)
        from scipy.sparse.linalg import gmres

        out = np.empty_like(rhs)
        for j in range(rhs.shape[1]):
            sol, info = gmres(A, rhs[:, j], rtol=self.gmres_tol, maxiter=2000)
            if info != 0:
                raise GreensError(f"gmres failed to reach {self.gmres_tol} (info={info})")
            out[:, j] = sol
        return out

    # -- rhs / kernel helpers -------------------------------------------

    def _owner(self, pts):
        """Voxel index containing each point, -1 when outside all voxels."""
        pts = np.atleast_2d(pts)
        if self.scene.n_voxels == 0:
            return np.full(len(pts), -1)
        h = self.scene.voxel_pitch / 2.0
        cheb = np.max(np.abs(pts[:, None, :] - self.pos[None, :, :]), axis=-1)
        inside = cheb <= h + 1e-12
        owner = np.where(inside.any(axis=1), inside.argmax(axis=1), -1)
        return owner

    def _coupling_rows(self, pts, owner=None):
        """(P, N, 3, 3) couplings dV k^2 Gv(p, u), cell-averaged for p in u."""
        pts = np.atleast_2d(pts)
        n = self.scene.n_voxels
        if n == 0:
            return np.zeros((len(pts), 0, 3, 3), complex)
        if owner is None:
            owner = self._owner(pts)
        d = pts[:, None, :] - self.pos[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        r_safe = np.where(r > 0, r, 1.0)  # r = 0 only inside the owner voxel
        rh = d / r_safe[..., None]
        u = self.k * r_safe
        g = np.exp(1j * u) / (4 * np.pi * r_safe)
        ci = 1 + 1j / u - 1 / u**2
        crr = -1 - 3j / u + 3 / u**2
        rows = (self.dv * self.k**2) * g[..., None, None] * (
            ci[..., None, None] * _EYE
            + crr[..., None, None] * (rh[..., :, None] * rh[..., None, :])
        )
        inside = np.nonzero(owner >= 0)[0]
        if inside.size:
            rows[inside, owner[inside]] = self.cself * _EYE
        return rows

    def interior_solution(self, sources):
        """X(u, s) = [A^-1 rhs](u) with rhs the couplings from each source.

        X is the effective tensor evaluated at the voxel centers: the
        self-consistent interior response to a point source at s.
        Shape (N, S, 3, 3).
        """
        sources = np.atleast_2d(sources)
        n = self.scene.n_voxels
        if n == 0:
            return np.zeros((0, len(sources), 3, 3), complex)
        rows = self._coupling_rows(sources)  # (S, N, 3, 3) couplings FROM voxels
        # rhs(w, s) = cell-consistent Gv(w, s): reuse symmetry Gv(w,s) = Gv(s,w)^T
        rhs = rows.transpose(1, 0, 3, 2) / (self.dv * self.k**2)
        own = self._owner(sources)
        for j, o in enumerate(own):
            if o >= 0:
                rhs[o, j] = (self.cself / (self.dv * self.k**2)) * _EYE
        m = rhs.transpose(0, 2, 1, 3).reshape(3 * n, -1)
        X = self._solve(m)
        return X.reshape(n, 3, len(sources), 3).transpose(0, 2, 1, 3)

    def interior_field(self, evals_at_voxels):
        """Solve A E = Ev for incident fields sampled at the voxel centers.

        evals_at_voxels: (N, 3) or (N, M, 3) for M incident fields at once.
        """
        n = self.scene.n_voxels
        ev = np.asarray(evals_at_voxels, dtype=complex)
        single = ev.ndim == 2
        if single:
            ev = ev[:, None, :]
        rhs = ev.transpose(0, 2, 1).reshape(3 * n, -1)
        sol = self._solve(rhs).reshape(n, 3, -1).transpose(0, 2, 1)
        return sol[:, 0, :] if single else sol

    # -- field evaluation ------------------------------------------------

    def green(self, targets, sources, scattered_only=False, warn_near=True):
        """Effective dyadics (T, S, 3, 3); vacuum part skipped if scattered_only.

        Targets or sources inside voxels use the regularized kernel, so the
        scattered part stays finite there; the vacuum part still requires
        non-coincident pairs.
        """
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        n = self.scene.n_voxels
        if warn_near and n:
            self._near_field_guard(np.vstack([targets, sources]))
        if n == 0:
            if scattered_only:
                return np.zeros((len(targets), len(sources), 3, 3), complex)
            return vacuum_green_block(self.omega, targets, sources, c=self.const.c)
        X = self.interior_solution(sources)  # (N, S, 3, 3)
        rows = self._coupling_rows(targets)  # (T, N, 3, 3)
        chiX = self.chi[:, None, None, None] * X
        scat = np.einsum("tnik,nskj->tsij", rows, chiX)
        if scattered_only:
            return scat
        return vacuum_green_block(self.omega, targets, sources, c=self.const.c) + scat

    def green_coincident_scattered(self, pts):
        """Scattered part at coincidence, shape (P, 3, 3); finite everywhere."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.scene.n_voxels == 0:
            return np.zeros((len(pts), 3, 3), complex)
        X = self.interior_solution(pts)  # (N, P, 3, 3)
        rows = self._coupling_rows(pts)  # (P, N, 3, 3)
        chiX = self.chi[:, None, None, None] * X
        return np.einsum("pnik,npkj->pij", rows, chiX)

    def _near_field_guard(self, pts):
        owner = self._owner(pts)
        if np.all(owner == -1):
            d = np.linalg.norm(pts[:, None, :] - self.pos[None, :, :], axis=-1)
            close = d.min(initial=np.inf) < self.scene.voxel_pitch
            if close:
                warnings.warn(
                    "evaluation point within one pitch of a scatterer voxel; "
                    "near-field accuracy is reduced"
                )


@dataclass(frozen=True)
class DyadicBlock:
    """Dense 3x3 dyadics over (target, source) pairs at one frequency."""

    source_points: np.ndarray
    target_points: np.ndarray
    omega: float
    values: np.ndarray  # (T, S, 3, 3)
    metadata: dict = field(default_factory=dict, compare=False)


def solve_effective_green(scene: Scene, omega, sources, targets,
                          rule="spherical_pv_radiative", const: Constants = DEFAULT,
                          solver: EffectiveSolver = None) -> DyadicBlock:
    """Effective Green block target <- source through the scatterer voxels."""
    if solver is None:
        solver = EffectiveSolver(scene, omega, rule=rule, const=const)
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    vals = solver.green(targets, sources)
    return DyadicBlock(
        source_points=sources,
        target_points=targets,
        omega=float(omega),
        values=vals,
        metadata={
            "scene": scene.digest(),
            "self_term_rule": solver.system.self_term_rule,
            "solver": solver.system.solver,
            "solver_tolerance": solver.gmres_tol if solver.system.solver == "gmres" else 0.0,
        },
    )


# -- absorbing-shell propagation ------------------------------------------


def _segment_ball_length(y, pts, radius):
    """Length of each segment y -> pts[i] inside the ball |x| <= radius."""
    pts = np.atleast_2d(pts)
    d = pts - y[None, :]
    L = np.linalg.norm(d, axis=1)
    safe = np.where(L > 0, L, 1.0)
    dh = d / safe[:, None]
    ydh = dh @ y
    disc = ydh**2 - (y @ y - radius**2)
    s = np.sqrt(np.maximum(disc, 0.0))
    t1 = np.clip(-ydh - s, 0.0, L)
    t2 = np.clip(-ydh + s, 0.0, L)
    return np.where(disc > 0, t2 - t1, 0.0)


def shell_path_factors(scene: Scene, omega, endpoint, pts, const: Constants = DEFAULT):
    """Complex in-shell propagation factor between endpoint and each point.

    exp(i (w/c) (sqrt(eps_shell) - 1) * path-in-shell); identically one when
    the shell is disabled or the path never crosses it.
    """
    pts = np.atleast_2d(pts)
    if not scene.shell_enabled or scene.shell is None:
        return np.ones(len(pts), complex)
    y = np.asarray(endpoint, dtype=float)
    eps1 = eval_permittivity(scene.shell.material, omega)
    k = omega / const.c
    path = _segment_ball_length(y, pts, scene.shell.outer_radius) - _segment_ball_length(
        y, pts, scene.shell.inner_radius
    )
    return np.exp(1j * k * (np.sqrt(eps1) - 1.0) * path)


# -- surface functional and the dissipation identity -----------------------


def surface_functional(scene: Scene, omega, a, b, quad, const: Constants = DEFAULT,
                       solver: EffectiveSolver = None):
    """Far-boundary term of the dissipation identity, a 3x3 dyadic.

    (w sqrt(eps_at_R) / c) * sum_i w_i G^T(x_i, a) (I - R R) conj(G(x_i, b)),
    the transverse projector being the outgoing-wave (Sommerfeld) reduction
    of the exact boundary integrand on a large sphere.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    R = quad.radius
    if R <= max(np.linalg.norm(a), np.linalg.norm(b)):
        raise SceneError("quadrature sphere must enclose both evaluation points")
    if scene.n_voxels:
        rmax = np.max(np.linalg.norm(scene.positions(), axis=1))
        if R <= rmax + scene.voxel_pitch:
            raise SceneError("quadrature sphere intersects or touches a scatterer voxel")
    if solver is None:
        solver = EffectiveSolver(scene, omega, const=const)
    eps_bulk = 1.0 + 0.0j
    if scene.shell_enabled and scene.shell is not None:
        if scene.shell.inner_radius <= R <= scene.shell.outer_radius:
            eps_bulk = eval_permittivity(scene.shell.material, omega)
    Ga = solver.green(quad.nodes, a[None, :], warn_near=False)[:, 0]
    Gb = solver.green(quad.nodes, b[None, :], warn_near=False)[:, 0]
    Ga = Ga * shell_path_factors(scene, omega, a, quad.nodes, const)[:, None, None]
    Gb = Gb * shell_path_factors(scene, omega, b, quad.nodes, const)[:, None, None]
    proj = _EYE[None, :, :] - quad.normals[:, :, None] * quad.normals[:, None, :]
    pref = omega * np.sqrt(eps_bulk) / const.c
    return pref * np.einsum("n,nki,nkl,nlj->ij", quad.weights, Ga, proj, np.conj(Gb))


def _gauss_subnodes(pitch, nsub):
    xg, wg = np.polynomial.legendre.leggauss(nsub)
    pts = np.array([[x, y, z] for x in xg for y in xg for z in xg]) * (pitch / 2.0)
    w = np.array([wx * wy * wz for wx in wg for wy in wg for wz in wg]) * (pitch / 2.0) ** 3
    return pts, w


def noise_volume_integral_scatterer(scene, omega, a, b, solver=None, nsub=2,
                                    const: Constants = DEFAULT):
    """(w/c)^2 int_{scatterer} eps'' G(a, x) . conj(G(x, b)) dV, bare.

    Per-voxel tensor-product Gauss quadrature of the continuous integrand;
    the own-voxel kernel is the cell-averaged constant, so the rule degrades
    gracefully at coarse pitch and converges under refinement.
    """
    if solver is None:
        solver = EffectiveSolver(scene, omega, const=const)
    n = scene.n_voxels
    out = np.zeros((3, 3), complex)
    if n == 0:
        return out
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k2 = (omega / const.c) ** 2
    sub, wsub = _gauss_subnodes(scene.voxel_pitch, nsub)
    epsim = np.array([eval_permittivity(m, omega).imag for _, m in scene.scatterer_voxels])
    pts = (scene.positions()[:, None, :] + sub[None, :, :]).reshape(-1, 3)
    Ba = solver.green(pts, a[None, :], warn_near=False)[:, 0]  # G(x_s, a)
    Bb = solver.green(pts, b[None, :], warn_near=False)[:, 0]  # G(x_s, b)
    w = (epsim[:, None] * wsub[None, :]).reshape(-1)
    # G(a, x) = G(x, a)^T by reciprocity of the discrete model
    out = k2 * np.einsum("n,nki,nkj->ij", w, Ba, np.conj(Bb))
    return out


def noise_volume_integral_shell(scene, omega, a, b, solver=None, shell_pitch=None,
                                n_theta=24, const: Constants = DEFAULT):
    """(w/c)^2 int_{shell} eps'' G(a, x) . conj(G(x, b)) dV, bare.

    Shell propagation uses the in-shell path factor on top of the
    scatterer-only effective tensor.
    """
    if not scene.shell_enabled or scene.shell is None:
        return np.zeros((3, 3), complex)
    if solver is None:
        solver = EffectiveSolver(scene, omega, const=const)
    if shell_pitch is None:
        shell_pitch = scene.shell.attenuation_length(omega, c=const.c) / 6.0
        shell_pitch = min(shell_pitch, (scene.shell.outer_radius - scene.shell.inner_radius) / 24.0)
    nodes = shell_voxelization(scene, shell_pitch, omega=omega, n_theta=n_theta, c=const.c)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    eps1 = eval_permittivity(scene.shell.material, omega)
    k2 = (omega / const.c) ** 2
    Ba = solver.green(nodes.positions, a[None, :], warn_near=False)[:, 0]
    Bb = solver.green(nodes.positions, b[None, :], warn_near=False)[:, 0]
    Ba = Ba * shell_path_factors(scene, omega, a, nodes.positions, const)[:, None, None]
    Bb = Bb * shell_path_factors(scene, omega, b, nodes.positions, const)[:, None, None]
    return k2 * eps1.imag * np.einsum("n,nki,nkj->ij", nodes.weights, Ba, np.conj(Bb))


@dataclass(frozen=True)
class IdentityReport:
    residual: float
    imag_green: np.ndarray
    surface_term: np.ndarray
    volume_term: np.ndarray
    volume_scatterer: np.ndarray
    volume_shell: np.ndarray


def greens_identity_report(scene: Scene, omega, a, b, quad=None, nsub=2,
                           shell_pitch=None, n_theta_shell=24,
                           const: Constants = DEFAULT,
                           solver: EffectiveSolver = None) -> IdentityReport:
    """All terms of Imag G = surface + volume, with the relative residual."""
    if solver is None:
        solver = EffectiveSolver(scene, omega, const=const)
    if quad is None:
        radius = 3000.0 * const.c / omega
        if scene.shell_enabled and scene.shell is not None:
            radius = max(radius, 1.5 * scene.shell.outer_radius)
        quad = sphere_quadrature(radius, 24)
    if scene.shell_enabled and scene.shell is not None:
        if quad.radius < scene.shell.outer_radius:
            raise SceneError("identity quadrature sphere must enclose the shell")
        from .scene import warn_if_thin_shell

        warn_if_thin_shell(scene, omega, c=const.c)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    img = np.imag(solver.green(a[None, :], b[None, :], warn_near=False)[0, 0])
    F = surface_functional(scene, omega, a, b, quad, const=const, solver=solver)
    nv = noise_volume_integral_scatterer(scene, omega, a, b, solver=solver, nsub=nsub, const=const)
    ns = noise_volume_integral_shell(scene, omega, a, b, solver=solver,
                                     shell_pitch=shell_pitch, n_theta=n_theta_shell, const=const)
    vol = nv + ns
    resid = np.linalg.norm(img - F - vol) / np.linalg.norm(img)
    return IdentityReport(
        residual=float(resid),
        imag_green=img,
        surface_term=F,
        volume_term=vol,
        volume_scatterer=nv,
        volume_shell=ns,
    )


def greens_identity_residual(scene, omega, a, b, quad=None, **kw) -> float:
    """Relative defect of Imag G(a,b) = surface term + absorption volume term."""
    return greens_identity_report(scene, omega, a, b, quad=quad, **kw).residual
