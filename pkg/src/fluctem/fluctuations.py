"""Noise-current correlator densities and their thermal dressing.

Every density carries the full prefactor (hbar/pi) (w/c)^2, so the three
routes to the same two-point spectral density are directly comparable:

* 'noise-volume' integrates (w/c)^2 eps'' G . G* over a material region,
* 'mode-sum' bins the box modes (module ``modes``),
* 'imag-green' is the closed form Imag G.

The equivalence experiment at the bottom runs all three on a reference
scene and reports the pairwise disagreements on a ladder of refinement
levels; the downward trend is the verification target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import DEFAULT, Constants
from .greens import (
    EffectiveSolver,
    noise_volume_integral_scatterer,
    noise_volume_integral_shell,
)
from .modes import commutator_integral_density, enumerate_modes, mode_sum_spectral_density
from .scene import Scene, Shell


class FluctuationError(ValueError):
    pass


REGIONS = ("scatterer", "shell", "all")
ORDERINGS = ("minus-plus", "plus-minus", "symmetrized")

# read-mostly density cache, keyed by (scene digest, omega, a, b, region);
# single-writer insertion, bounded so sweeps cannot grow it without limit
_DENSITY_CACHE = {}
_DENSITY_CACHE_MAX = 512


def _cache_key(scene, omega, a, b, tag):
    return (scene.digest(), float(omega), tuple(np.asarray(a, float)),
            tuple(np.asarray(b, float)), tag)


def _cache_get(key):
    return _DENSITY_CACHE.get(key)


def _cache_put(key, value):
    if len(_DENSITY_CACHE) >= _DENSITY_CACHE_MAX:
        _DENSITY_CACHE.pop(next(iter(_DENSITY_CACHE)))
    _DENSITY_CACHE[key] = value


@dataclass(frozen=True)
class CorrelatorDensity:
    a: np.ndarray
    b: np.ndarray
    omega: float
    value: np.ndarray  # (3, 3) complex, per unit frequency
    provenance: str  # 'noise-volume:<region>' | 'mode-sum' | 'imag-green'
    metadata: dict = field(default_factory=dict, compare=False)


def planck_factor(omega, T, kind="minus-plus", const: Constants = DEFAULT):
    """Thermal occupation weights, stable from x ~ 1e-300 up to overflow.

    minus-plus: 1/(e^x - 1); plus-minus: 1/(1 - e^-x); symmetrized:
    coth(x/2); with x = hbar w / k_B T.  At T = 0 these limit to 0, 1, 1.
    """
    if omega <= 0:
        raise FluctuationError("omega must be > 0")
    if T < 0:
        raise FluctuationError("temperature must be >= 0")
    if T == 0:
        return {"minus-plus": 0.0, "plus-minus": 1.0, "symmetrized": 1.0}[kind]
    x = const.hbar * omega / (const.k_B * T)
    if kind == "minus-plus":
        return float(np.exp(-x) / (1.0 - np.exp(-x))) if x > 50 else float(1.0 / np.expm1(x))
    if kind == "plus-minus":
        return float(1.0 / (1.0 - np.exp(-x))) if x > 50 else float(-1.0 / np.expm1(-x))
    if kind == "symmetrized":
        return float(1.0 / np.tanh(x / 2))
    raise FluctuationError(f"unknown kind {kind!r}; choose from {ORDERINGS}")


def noise_correlator_density(scene: Scene, region, omega, a, b,
                             const: Constants = DEFAULT, solver: EffectiveSolver = None,
                             nsub=2, shell_pitch=None, n_theta_shell=24,
                             cache=False) -> CorrelatorDensity:
    """Fluctuating-current density over a region of the composed medium.

    (hbar/pi) (w/c)^2 int_region (w/c)^2 eps''(x) G(a,x) . conj(G(x,b)) dV.
    Region 'all' is computed as scatterer + shell on identical nodes, so
    the additivity of disjoint regions is exact up to float summation.
    cache=True memoizes on (scene digest, omega, a, b, region).
    """
    if region not in REGIONS:
        raise FluctuationError(f"region must be one of {REGIONS}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    key = None
    if cache:
        key = _cache_key(scene, omega, a, b, (region, nsub, const))
        hit = _cache_get(key)
        if hit is not None:
            return hit
    if solver is None:
        solver = EffectiveSolver(scene, omega, const=const)
    pref = (const.hbar / np.pi) * (omega / const.c) ** 2
    parts = {}
    if region in ("scatterer", "all"):
        parts["scatterer"] = pref * noise_volume_integral_scatterer(
            scene, omega, a, b, solver=solver, nsub=nsub, const=const
        )
    if region in ("shell", "all"):
        parts["shell"] = pref * noise_volume_integral_shell(
            scene, omega, a, b, solver=solver, shell_pitch=shell_pitch,
            n_theta=n_theta_shell, const=const
        )
    total = sum(parts.values(), np.zeros((3, 3), complex))
    out = CorrelatorDensity(
        a=a, b=b, omega=float(omega), value=total,
        provenance=f"noise-volume:{region}",
        metadata={"scene": scene.digest(), "nsub": nsub},
    )
    if key is not None:
        _cache_put(key, out)
    return out


def commutator_density(scene: Scene, omega, a, b, const: Constants = DEFAULT,
                       solver: EffectiveSolver = None) -> CorrelatorDensity:
    """Closed-form commutator density (hbar/pi) (w/c)^2 Imag G(a, b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    meta = {"scene": scene.digest()}
    for name, p in (("a", a), ("b", b)):
        margin = scene.compliance_margin(p)
        if margin < scene.voxel_pitch:
            meta[f"compliance_warning_{name}"] = (
                f"point {name} within {margin:.3g} of a region boundary"
            )
    val = commutator_integral_density(scene, a, b, omega, const=const, solver=solver)
    return CorrelatorDensity(a=a, b=b, omega=float(omega), value=val,
                             provenance="imag-green", metadata=meta)


def thermal_correlator_density(scene: Scene, omega, a, b, T, ordering="symmetrized",
                               const: Constants = DEFAULT,
                               solver: EffectiveSolver = None) -> CorrelatorDensity:
    """Commutator density dressed with the Planck weight of the ordering."""
    base = commutator_density(scene, omega, a, b, const=const, solver=solver)
    f = planck_factor(omega, T, kind=ordering, const=const)
    meta = dict(base.metadata)
    meta.update({"T": float(T), "ordering": ordering, "planck_factor": f})
    return CorrelatorDensity(a=base.a, b=base.b, omega=base.omega,
                             value=f * base.value,
                             provenance=f"thermal:{ordering}", metadata=meta)


def time_domain_correlator(densities, omegas, tau):
    """Direct quadrature of int dw density(w) e^{-i w tau} on a given grid."""
    omegas = np.asarray(omegas, dtype=float)
    vals = np.asarray(densities, dtype=complex)
    phase = np.exp(-1j * omegas * tau)
    return np.trapezoid(vals * phase[:, None, None], omegas, axis=0)


# -- the three-route equivalence experiment ---------------------------------


@dataclass(frozen=True)
class EquivalenceLevel:
    label: str
    box_side: float
    shell_eps_imag: float
    shell_lengths: float
    pitch: float
    densities: dict
    disagreements: dict  # pair -> relative Frobenius difference
    mode_count: int


def _pairwise(dens):
    keys = list(dens)
    scale = max(np.linalg.norm(dens[k]) for k in keys)
    out = {}
    for i, ki in enumerate(keys):
        for kj in keys[i + 1 :]:
            out[f"{ki}|{kj}"] = float(np.linalg.norm(dens[ki] - dens[kj]) / scale)
    return out


def equivalence_densities(scatterer_material, omega, a, b, box_side, shell_eps_imag,
                          shell_lengths, pitch, inner_radius=2.0,
                          delta_omega=0.05, window="hann", nsub=2,
                          const: Constants = DEFAULT):
    """The three spectral densities on the reference one-voxel scene.

    Returns (dict of 3x3 arrays, mode_count).  Routes:
      mode-sum         binned scattered-mode fields of the vacuum-bounded scene
      shell-noise      far-shell fluctuating currents of the composed scene
      imag-minus-scat  Imag G density minus the scatterer-region noise density
    """
    ei = float(shell_eps_imag)
    # a flat absorber: Re eps = 1 exactly, Im eps = ei across the band
    shell_mat = _FlatAbsorber(ei)
    ell = 1.0 / (omega * np.imag(np.sqrt(1 + 1j * ei)) / const.c)
    scene = Scene(
        box_side=box_side,
        voxel_pitch=pitch,
        scatterer_voxels=(((0.0, 0.0, 0.0), scatterer_material),),
        shell=Shell(inner_radius, inner_radius + shell_lengths * ell, shell_mat),
        shell_enabled=True,
    )
    scene3 = scene.without_shell()
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    basis = enumerate_modes(box_side, omega + delta_omega, const=const)
    smode = mode_sum_spectral_density(scene3, a, b, omega, delta_omega, basis,
                                      window=window, const=const)

    solver12 = EffectiveSolver(scene, omega, const=const)
    shell_noise = noise_correlator_density(scene, "shell", omega, a, b,
                                           const=const, solver=solver12, nsub=nsub)

    solver3 = EffectiveSolver(scene3, omega, const=const)
    imag_density = commutator_density(scene3, omega, a, b, const=const, solver=solver3)
    scat_noise = noise_correlator_density(scene3, "scatterer", omega, a, b,
                                          const=const, solver=solver3, nsub=nsub)
    dens = {
        "mode-sum": smode.value,
        "shell-noise": shell_noise.value,
        "imag-minus-scat": imag_density.value - scat_noise.value,
    }
    return dens, smode.mode_count


class _FlatAbsorber:
    """eps = 1 + i eta at every frequency: the idealized far absorber."""

    def __init__(self, eta):
        self.eta = float(eta)

    def eval(self, omega):
        return 1.0 + 1j * self.eta


def equivalence_fan(scatterer_material, omega, a, b, levels,
                    const: Constants = DEFAULT, **kw):
    """Run the three-route comparison on a ladder of refinement levels.

    levels: sequence of dicts with keys box_side, shell_eps_imag,
    shell_lengths, pitch (refining simultaneously).  Returns a list of
    EquivalenceLevel; the pairwise disagreements are expected to decrease
    down the ladder.
    """
    out = []
    for i, lv in enumerate(levels):
        dens, nmodes = equivalence_densities(
            scatterer_material, omega, a, b,
            box_side=lv["box_side"], shell_eps_imag=lv["shell_eps_imag"],
            shell_lengths=lv["shell_lengths"], pitch=lv["pitch"], const=const, **kw
        )
        out.append(EquivalenceLevel(
            label=lv.get("label", f"level-{i}"),
            box_side=lv["box_side"], shell_eps_imag=lv["shell_eps_imag"],
            shell_lengths=lv["shell_lengths"], pitch=lv["pitch"],
            densities=dens, disagreements=_pairwise(dens), mode_count=nmodes,
        ))
    return out
