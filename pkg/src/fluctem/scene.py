"""Geometry: voxelized scatterer, absorbing far shell, sphere quadratures.

The scatterer lives as cubic voxels (material constant per voxel) strictly
inside the inner radius R2 of an optional spherically symmetric absorbing
shell R2 <= r <= R1.  Scenes are immutable after construction and every
query is pure, so frequency sweeps can share one Scene across workers.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .material import (
    VACUUM,
    DrudeLorentzModel,
    TabulatedPermittivity,
    Vacuum,
    eval_permittivity,
)


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class Shell:
    inner_radius: float
    outer_radius: float
    material: object

    def attenuation_length(self, omega, c=1.0):
        """1 / Imag[omega sqrt(eps) / c]: the amplitude e-folding distance."""
        eps = eval_permittivity(self.material, omega)
        im = np.imag(np.sqrt(eps)) * omega / c
        return float(1.0 / im) if im > 0 else np.inf


@dataclass(frozen=True)
class Scene:
    box_side: float
    voxel_pitch: float
    scatterer_voxels: tuple  # ((x, y, z), material) sorted lexicographically
    shell: Shell | None = None
    shell_enabled: bool = False
    report: dict = field(default_factory=dict, compare=False)

    @property
    def n_voxels(self):
        return len(self.scatterer_voxels)

    @property
    def voxel_volume(self):
        return self.voxel_pitch**3

    def positions(self):
        if not self.scatterer_voxels:
            return np.zeros((0, 3))
        return np.array([p for p, _ in self.scatterer_voxels], dtype=float)

    def chi_at(self, omega):
        """eps - 1 per scatterer voxel at omega."""
        return np.array(
            [eval_permittivity(m, omega) - 1.0 for _, m in self.scatterer_voxels],
            dtype=complex,
        )

    def voxel_containing(self, x):
        """Index of the scatterer voxel whose cube contains x, else None."""
        x = np.asarray(x, dtype=float)
        h = self.voxel_pitch / 2.0
        for i, (p, _) in enumerate(self.scatterer_voxels):
            if np.all(np.abs(x - np.asarray(p)) <= h):
                return i
        return None

    def digest(self):
        """Stable content hash used to key caches and artifact metadata."""
        payload = {
            "box_side": self.box_side,
            "voxel_pitch": self.voxel_pitch,
            "voxels": [[list(p), _material_tag(m)] for p, m in self.scatterer_voxels],
            "shell": None
            if self.shell is None
            else [self.shell.inner_radius, self.shell.outer_radius, _material_tag(self.shell.material)],
            "shell_enabled": self.shell_enabled,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]

    def without_shell(self):
        return Scene(
            box_side=self.box_side,
            voxel_pitch=self.voxel_pitch,
            scatterer_voxels=self.scatterer_voxels,
            shell=self.shell,
            shell_enabled=False,
        )

    def compliance_margin(self, x):
        """Distance from x to the nearest region boundary it must stay clear of.

        Positive means x sits in the vacuum void between the scatterer and
        the shell inner surface; used only to annotate correlator metadata.
        """
        x = np.asarray(x, dtype=float)
        margins = []
        if self.shell_enabled and self.shell is not None:
            margins.append(self.shell.inner_radius - float(np.linalg.norm(x)))
        for p, _ in self.scatterer_voxels:
            margins.append(float(np.linalg.norm(x - np.asarray(p))) - self.voxel_pitch)
        return min(margins) if margins else np.inf


def _material_tag(m):
    if isinstance(m, Vacuum):
        return "vacuum"
    if isinstance(m, DrudeLorentzModel):
        return ["drude_lorentz", m.omega_p, m.omega_0, m.gamma]
    if isinstance(m, TabulatedPermittivity):
        return ["table", list(m.omegas), [[v.real, v.imag] for v in m.values]]
    if hasattr(m, "eval"):  # custom material objects: digest by type and state
        state = getattr(m, "__dict__", {})
        return ["custom", type(m).__name__, sorted((k, repr(v)) for k, v in state.items())]
    raise SceneError(f"unknown material {m!r}")


def build_scene(config: dict) -> Scene:
    """Materialize a Scene from a parsed configuration mapping.

    Recognized keys: box_side, voxel_pitch, voxels (explicit list of
    {position, material}), primitives (list of sphere/box entries filling
    the pitch lattice), shell {inner_radius, outer_radius, material,
    enabled}.  Materials are either material objects already or mappings
    with a 'type' key.
    """
    box_side = float(config.get("box_side", 0.0))
    pitch = float(config.get("voxel_pitch", 0.0))
    if pitch <= 0:
        raise SceneError("voxel_pitch must be > 0")
    if box_side <= 0:
        raise SceneError("box_side must be > 0")

    voxels = []
    for entry in config.get("voxels", []):
        pos = tuple(float(v) for v in entry["position"])
        voxels.append((pos, _coerce_material(entry["material"])))
    for prim in config.get("primitives", []):
        voxels.extend(_voxelize_primitive(prim, pitch))

    voxels.sort(key=lambda pm: pm[0])
    pos = np.array([p for p, _ in voxels]) if voxels else np.zeros((0, 3))
    if len(voxels) > 1:
        d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=-1)
        iu = np.triu_indices(len(voxels), 1)
        if np.any(d2[iu] < (pitch * (1 - 1e-9)) ** 2):
            raise SceneError("overlapping scatterer voxels (centers closer than one pitch)")

    shell = None
    shell_enabled = False
    shell_cfg = config.get("shell")
    if shell_cfg:
        r2 = float(shell_cfg["inner_radius"])
        r1 = float(shell_cfg["outer_radius"])
        if not (0 <= r2 < r1):
            raise SceneError(f"need inner_radius < outer_radius, got R2={r2}, R1={r1}")
        if r1 > box_side / 2:
            raise SceneError(f"outer_radius {r1} exceeds box_side/2 = {box_side/2}")
        shell = Shell(r2, r1, _coerce_material(shell_cfg["material"]))
        shell_enabled = bool(shell_cfg.get("enabled", True))
        if voxels:
            rmax = float(np.max(np.linalg.norm(pos, axis=1)))
            if rmax >= r2:
                raise SceneError(
                    f"scatterer voxel at radius {rmax:.4g} not strictly inside R2={r2}"
                )

    n = len(voxels)
    scene = Scene(
        box_side=box_side,
        voxel_pitch=pitch,
        scatterer_voxels=tuple(voxels),
        shell=shell,
        shell_enabled=shell_enabled,
        report={
            "voxel_count": n,
            "interaction_matrix_bytes": (3 * n) ** 2 * 16,
        },
    )
    return scene


def _coerce_material(m):
    if isinstance(m, (Vacuum, DrudeLorentzModel, TabulatedPermittivity)):
        return m
    if isinstance(m, str):
        if m == "vacuum":
            return VACUUM
        raise SceneError(f"unknown material name {m!r}")
    if isinstance(m, dict):
        kind = m.get("type")
        if kind == "vacuum":
            return VACUUM
        if kind == "drude_lorentz":
            return DrudeLorentzModel(float(m["omega_p"]), float(m["omega_0"]), float(m["gamma"]))
        if kind == "table":
            om = [float(x) for x in m["omegas"]]
            vals = [complex(re, im) for re, im in m["values"]]
            return TabulatedPermittivity(tuple(om), tuple(vals))
        raise SceneError(f"unknown material type {kind!r}")
    raise SceneError(f"cannot interpret material {m!r}")


def _voxelize_primitive(prim, pitch):
    mat = _coerce_material(prim["material"])
    center = np.asarray(prim.get("center", (0.0, 0.0, 0.0)), dtype=float)
    kind = prim["shape"]
    out = []
    if kind == "sphere":
        radius = float(prim["radius"])
        nmax = int(np.ceil(radius / pitch)) + 1
        rng = np.arange(-nmax, nmax + 1)
        for ix in rng:
            for iy in rng:
                for iz in rng:
                    p = center + pitch * np.array([ix, iy, iz], dtype=float)
                    if np.linalg.norm(p - center) <= radius - pitch / 2 + 1e-12:
                        out.append((tuple(p), mat))
    elif kind == "box":
        half = np.asarray(prim["half_size"], dtype=float)
        nmax = np.ceil(half / pitch).astype(int) + 1
        for ix in range(-nmax[0], nmax[0] + 1):
            for iy in range(-nmax[1], nmax[1] + 1):
                for iz in range(-nmax[2], nmax[2] + 1):
                    p = center + pitch * np.array([ix, iy, iz], dtype=float)
                    if np.all(np.abs(p - center) <= half - pitch / 2 + 1e-12):
                        out.append((tuple(p), mat))
    else:
        raise SceneError(f"unknown primitive shape {kind!r}")
    return out


@dataclass(frozen=True)
class SurfaceQuadrature:
    """Nodes, outward normals and weights partitioning a sphere of radius R.

    Product rule: Gauss-Legendre in cos(theta) times a uniform azimuth grid,
    exact for spherical harmonics up to degree ``exactness_degree``.
    """

    radius: float
    nodes: np.ndarray  # (N, 3)
    normals: np.ndarray  # (N, 3)
    weights: np.ndarray  # (N,)
    exactness_degree: int

    def integrate(self, values):
        """Sum_i w_i values_i along the first axis."""
        v = np.asarray(values)
        return np.tensordot(self.weights, v, axes=(0, 0))


def sphere_quadrature(radius, order) -> SurfaceQuadrature:
    """Product Gauss-Legendre x uniform-azimuth rule on a sphere.

    order >= 6 sets the number of polar nodes; 2*order azimuthal nodes.
    Weights sum to the sphere area 4 pi R^2 to machine precision.
    """
    order = int(order)
    if order < 6:
        raise SceneError("sphere_quadrature needs order >= 6")
    if radius <= 0:
        raise SceneError("radius must be > 0")
    ct, wt = np.polynomial.legendre.leggauss(order)
    nphi = 2 * order
    phi = 2 * np.pi * np.arange(nphi) / nphi
    st = np.sqrt(1 - ct**2)
    dirs = np.empty((order * nphi, 3))
    w = np.empty(order * nphi)
    idx = 0
    for i in range(order):
        dirs[idx : idx + nphi, 0] = st[i] * np.cos(phi)
        dirs[idx : idx + nphi, 1] = st[i] * np.sin(phi)
        dirs[idx : idx + nphi, 2] = ct[i]
        w[idx : idx + nphi] = wt[i] * (2 * np.pi / nphi) * radius**2
        idx += nphi
    return SurfaceQuadrature(
        radius=float(radius),
        nodes=radius * dirs,
        normals=dirs,
        weights=w,
        exactness_degree=2 * order - 1,
    )


@dataclass(frozen=True)
class ShellNodes:
    """Volume quadrature covering the shell annulus R2 <= |x| <= R1."""

    positions: np.ndarray  # (N, 3)
    weights: np.ndarray  # (N,)

    def __iter__(self):
        return iter(zip(self.positions, self.weights))

    def __len__(self):
        return len(self.weights)


def shell_voxelization(scene: Scene, shell_pitch, omega=None, n_theta=24, c=1.0) -> ShellNodes:
    """Quadrature nodes with volume weights covering V1 - V2.

    Radial Gauss-Legendre nodes (mean spacing <= shell_pitch) times the
    sphere product rule; weights sum to the exact annulus volume.  When
    omega is given, shell_pitch must resolve the shell skin depth
    (attenuation length / 4), otherwise the call errors naming the
    frequency.
    """
    if not scene.shell_enabled or scene.shell is None:
        return ShellNodes(np.zeros((0, 3)), np.zeros(0))
    r2, r1 = scene.shell.inner_radius, scene.shell.outer_radius
    if r1 <= r2:
        return ShellNodes(np.zeros((0, 3)), np.zeros(0))
    if shell_pitch <= 0:
        raise SceneError("shell_pitch must be > 0")
    if omega is not None:
        skin = scene.shell.attenuation_length(omega, c=c)
        if shell_pitch > skin / 4:
            raise SceneError(
                f"shell_pitch {shell_pitch:.4g} too coarse at omega={omega:.6g}: "
                f"skin depth {skin:.4g} requires pitch <= {skin/4:.4g}"
            )
    n_r = max(8, int(np.ceil((r1 - r2) / shell_pitch)))
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    rr = 0.5 * (xr + 1) * (r1 - r2) + r2
    wrr = 0.5 * (r1 - r2) * wr
    ang = sphere_quadrature(1.0, n_theta)
    pts = (rr[:, None, None] * ang.nodes[None, :, :]).reshape(-1, 3)
    w = (wrr[:, None] * (rr**2)[:, None] * ang.weights[None, :]).reshape(-1)
    return ShellNodes(pts, w)


def warn_if_thin_shell(scene: Scene, omega, n_lengths=3.0, c=1.0):
    """Warn when the shell is thinner than n_lengths attenuation lengths."""
    if not scene.shell_enabled or scene.shell is None:
        return
    ell = scene.shell.attenuation_length(omega, c=c)
    thick = scene.shell.outer_radius - scene.shell.inner_radius
    if thick < n_lengths * ell:
        warnings.warn(
            f"shell thickness {thick:.3g} is below {n_lengths} attenuation lengths "
            f"({n_lengths * ell:.3g}) at omega={omega:.6g}; residual incoming field "
            f"of order exp(-{thick/ell:.2f}) remains"
        )
