"""Periodic-box plane-wave basis, scattered mode fields and mode-sum densities.

The quantization box of side L only enters through the discrete wave vectors
k = 2 pi n / L; every propagation problem stays open-space with the
outgoing-wave vacuum tensor.  Mode amplitudes carry the normalization
|A|^2 V = hbar w / 2, so summing E (x) E*(y) over a frequency bin and
dividing by the bin width estimates the same spectral density as
(hbar/pi) (w/c)^2 Imag G(x, y), which is the box-to-continuum bridge the
tests exercise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import DEFAULT, Constants
from .greens import EffectiveSolver, vacuum_imag_coincidence
from .scene import Scene


class ModeError(ValueError):
    pass


@dataclass(frozen=True)
class ModeBasis:
    box_side: float
    n_index: np.ndarray  # (M, 3) integer triples
    k: np.ndarray  # (M, 3)
    pol_index: np.ndarray  # (M,) 1 or 2
    pol: np.ndarray  # (M, 3) unit polarization vectors
    omega_alpha: np.ndarray  # (M,)
    amplitude: np.ndarray  # (M,) real, |A|^2 V = hbar w / 2
    metadata: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.omega_alpha)


def _polarization_pair(khat):
    """Deterministic transverse dyad: e1 = z x khat (x if k || z), e2 = khat x e1."""
    z = np.array([0.0, 0.0, 1.0])
    e1 = np.cross(z, khat)
    n1 = np.linalg.norm(e1, axis=-1)
    degenerate = n1 < 1e-12
    e1[degenerate] = np.array([1.0, 0.0, 0.0])
    n1 = np.where(degenerate, 1.0, n1)
    e1 = e1 / n1[..., None]
    e2 = np.cross(khat, e1)
    return e1, e2


def enumerate_modes(L, omega_max, const: Constants = DEFAULT, max_modes=4_000_000) -> ModeBasis:
    """All box modes with c |2 pi n / L| <= omega_max, two polarizations each.

    Deterministic ordering: by (|n|^2, n lexicographic, polarization).
    """
    L = float(L)
    c = const.c
    if L <= 0:
        raise ModeError("box side must be positive")
    if omega_max <= 2 * np.pi * c / L:
        raise ModeError(
            f"omega_max {omega_max} is below the first mode shell {2*np.pi*c/L:.6g}"
        )
    nmax = int(np.floor(L * omega_max / (2 * np.pi * c)))
    predicted = 2 * (4.0 / 3.0) * np.pi * (L * omega_max / (2 * np.pi * c)) ** 3
    if predicted > 1.2 * max_modes + 64:
        raise ModeError(
            f"mode count ~{predicted:.3g} exceeds cap {max_modes}; "
            "shrink the box or omega_max"
        )
    rng = np.arange(-nmax, nmax + 1)
    n3 = np.array(np.meshgrid(rng, rng, rng, indexing="ij")).reshape(3, -1).T
    n2 = np.sum(n3 * n3, axis=1)
    keep = (n2 > 0) & (n2 <= (L * omega_max / (2 * np.pi * c)) ** 2)
    n3 = n3[keep]
    n2 = n2[keep]
    order = np.lexsort((n3[:, 2], n3[:, 1], n3[:, 0], n2))
    n3 = n3[order]
    if 2 * len(n3) > max_modes:
        raise ModeError(f"mode count {2*len(n3)} exceeds cap {max_modes}")
    k = (2 * np.pi / L) * n3.astype(float)
    knorm = np.linalg.norm(k, axis=1)
    khat = k / knorm[:, None]
    e1, e2 = _polarization_pair(khat.copy())
    om = c * knorm
    amp = np.sqrt(const.hbar * om / (2 * L**3))
    n_index = np.repeat(n3, 2, axis=0)
    kk = np.repeat(k, 2, axis=0)
    oo = np.repeat(om, 2)
    aa = np.repeat(amp, 2)
    pol = np.empty((2 * len(n3), 3))
    pol[0::2] = e1
    pol[1::2] = e2
    jidx = np.empty(2 * len(n3), dtype=int)
    jidx[0::2] = 1
    jidx[1::2] = 2
    return ModeBasis(
        box_side=L,
        n_index=n_index,
        k=kk,
        pol_index=jidx,
        pol=pol,
        omega_alpha=oo,
        amplitude=aa,
        metadata={"omega_max": float(omega_max), "n_max": nmax},
    )


def mode_field_vacuum(basis: ModeBasis, sel, pts):
    """Plane-wave fields A e exp(i k . x) for selected modes at points.

    Returns (M_sel, P, 3) complex.
    """
    pts = np.atleast_2d(pts)
    ph = np.exp(1j * (basis.k[sel] @ pts.T))  # (M, P)
    return basis.amplitude[sel, None, None] * basis.pol[sel, None, :] * ph[:, :, None]


def scattered_mode_field(scene: Scene, basis: ModeBasis, mode_index, x,
                         const: Constants = DEFAULT, solver: EffectiveSolver = None,
                         form="interior"):
    """Self-consistent mode field at x for one basis mode.

    form='interior' solves for the interior field and radiates it with the
    vacuum kernel; form='green' uses the effective tensor acting on the
    incident field.  The two agree to solver tolerance.
    """
    sel = np.array([mode_index])
    x = np.atleast_2d(np.asarray(x, dtype=float))
    ev_x = mode_field_vacuum(basis, sel, x)[0]  # (P, 3)
    if scene.n_voxels == 0:
        return ev_x[0] if len(x) == 1 else ev_x
    om = float(basis.omega_alpha[mode_index])
    if solver is None or abs(solver.omega - om) > 1e-12 * om:
        solver = EffectiveSolver(scene, om, const=const)
    ev_vox = mode_field_vacuum(basis, sel, scene.positions())[0]  # (N, 3)
    if form == "interior":
        eint = solver.interior_field(ev_vox)
        rows = solver._coupling_rows(x)  # (P, N, 3, 3) = dV k^2 Gv(x, u)
        scat = np.einsum("pnij,nj->pi", rows, solver.chi[:, None] * eint)
    elif form == "green":
        geff = solver.green(x, scene.positions(), warn_near=False)  # (P, N, 3, 3)
        scat = solver.dv * solver.k**2 * np.einsum(
            "pnij,nj->pi", geff, solver.chi[:, None] * ev_vox
        )
    else:
        raise ModeError(f"unknown form {form!r}")
    out = ev_x + scat
    return out[0] if len(x) == 1 else out


@dataclass(frozen=True)
class SpectralDensity:
    omega: float
    delta_omega: float
    value: np.ndarray  # (3, 3) per unit frequency
    mode_count: int
    window: str
    box_side: float
    metadata: dict = field(default_factory=dict, compare=False)


def default_bin_width(L, omega, const: Constants = DEFAULT):
    """Recorded per run; keeps well over 20 modes per bin for any L > sqrt(pi)."""
    c = const.c
    return 10.0 * (2 * np.pi * c / L) * (c / omega) ** 2


def mode_sum_spectral_density(scene, a, b, omega_center, delta_omega, basis: ModeBasis,
                              window="boxcar", const: Constants = DEFAULT,
                              min_modes=20, chunk=4096) -> SpectralDensity:
    """Binned mode sum E(a) (x) E*(b) / (bin measure) around omega_center.

    scene=None sums the bare plane waves; with a scene the scattered mode
    fields enter.  window='boxcar' is the sharp bin; 'hann' tapers the bin
    edges (smoother box-size convergence, same normalization).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if delta_omega is None:
        delta_omega = default_bin_width(basis.box_side, omega_center, const)
    lo, hi = omega_center - delta_omega / 2, omega_center + delta_omega / 2
    sel = np.nonzero((basis.omega_alpha >= lo) & (basis.omega_alpha <= hi))[0]
    if sel.size == 0:
        raise ModeError(
            f"no modes in [{lo:.6g}, {hi:.6g}]; enlarge the box or the bin"
        )
    if sel.size < min_modes:
        warnings.warn(f"only {sel.size} modes in the bin (guard is {min_modes})")
    x = (basis.omega_alpha[sel] - omega_center) / (delta_omega / 2)
    if window == "boxcar":
        wts = np.ones_like(x)
        norm = delta_omega
    elif window == "hann":
        wts = np.cos(np.pi * x / 2) ** 2
        norm = delta_omega / 2
    else:
        raise ModeError(f"unknown window {window!r}")

    acc = np.zeros((3, 3), complex)
    use_scene = scene is not None and scene.n_voxels > 0
    pts = np.vstack([a, b])
    if not use_scene:
        for start in range(0, sel.size, chunk):
            ss = sel[start : start + chunk]
            ww = wts[start : start + chunk]
            F = mode_field_vacuum(basis, ss, pts)  # (m, 2, 3)
            acc += np.einsum("m,mi,mj->ij", ww, F[:, 0], np.conj(F[:, 1]))
    else:
        vox = scene.positions()
        # group by identical mode frequency so one factorization serves a group
        omsel = basis.omega_alpha[sel]
        order = np.argsort(omsel, kind="stable")
        sel = sel[order]
        wts = wts[order]
        omsel = omsel[order]
        bounds = np.nonzero(np.diff(omsel) > 1e-12 * omega_center)[0] + 1
        groups = np.split(np.arange(sel.size), bounds)
        for g in groups:
            om = float(omsel[g[0]])
            solver = EffectiveSolver(scene, om, const=const)
            rows = solver._coupling_rows(pts)  # (2, N, 3, 3)
            for start in range(0, g.size, chunk):
                gg = g[start : start + chunk]
                ss = sel[gg]
                ww = wts[gg]
                F = mode_field_vacuum(basis, ss, pts)  # (m, 2, 3)
                ev_vox = mode_field_vacuum(basis, ss, vox)  # (m, N, 3)
                eint = solver.interior_field(ev_vox.transpose(1, 0, 2))  # (N, m, 3)
                chie = solver.chi[:, None, None] * eint
                scat = np.einsum("pnij,nmj->mpi", rows, chie)
                F = F + scat
                acc += np.einsum("m,mi,mj->ij", ww, F[:, 0], np.conj(F[:, 1]))
    return SpectralDensity(
        omega=float(omega_center),
        delta_omega=float(delta_omega),
        value=acc / norm,
        mode_count=int(sel.size),
        window=window,
        box_side=basis.box_side,
        metadata={"scene": None if scene is None else scene.digest()},
    )


def commutator_integral_density(scene, a, b, omega, const: Constants = DEFAULT,
                                solver: EffectiveSolver = None):
    """(hbar/pi) (w/c)^2 Imag G(a, b): the closed-form commutator density.

    At coincidence the vacuum part is the analytic constant (w / 6 pi c) I
    and only the scattered part is evaluated numerically.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if scene is not None and (solver is None):
        solver = EffectiveSolver(scene, omega, const=const)
    pref = (const.hbar / np.pi) * (omega / const.c) ** 2
    if np.allclose(a, b):
        img = vacuum_imag_coincidence(omega, const.c).copy()
        if solver is not None and scene.n_voxels:
            img = img + np.imag(solver.green_coincident_scattered(a[None, :])[0])
    else:
        if solver is None:
            from .greens import vacuum_green

            img = np.imag(vacuum_green(omega, a, b, c=const.c))
        else:
            img = np.imag(solver.green(a[None, :], b[None, :], warn_near=False)[0, 0])
    return pref * img
