"""Ground-truth scenes, illumination, and the Lambertian return model.

A scene is a per-pixel depth map (meters, 0 = empty) with a matching
reflectivity map in [0, 1] and optional integer object labels.  Scenes are
imaged pixel-for-pixel onto the projection device, and each non-empty pixel
contributes one return whose power follows a Lambertian capture model:

    P = illumination * reflectivity * aperture_area / (2 pi d^2)

with the field amplitude sqrt(2 P / (eps0 c)) so amplitude products carry
detected power.  Any fixed monotone radiometry would do - depth extraction
is an amplitude ratio - but this one keeps the per-pixel powers at the
nanowatt scale a desk experiment would see.

Scene files are plain text (header ``width height depth_scale`` followed by
the depth and reflectivity arrays, row-major) or JSON carrying the same
arrays plus labels; see README for the grammar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chirp import ChirpConfig


class SceneError(ValueError):
    """Malformed scene file or inconsistent scene arrays."""


@dataclass
class Scene:
    depth: np.ndarray          # (h, w) meters, 0 marks empty pixels
    reflectivity: np.ndarray   # (h, w) in [0, 1], 0 on empty pixels
    labels: np.ndarray | None = None    # (h, w) int object ids, 0 = none
    label_names: dict = field(default_factory=dict)   # name -> id

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=float)
        self.reflectivity = np.asarray(self.reflectivity, dtype=float)
        if self.depth.ndim != 2 or self.depth.shape != self.reflectivity.shape:
            raise SceneError("depth and reflectivity must be matching 2D arrays")
        if not np.all(np.isfinite(self.depth)) or np.any(self.depth < 0):
            raise SceneError("depths must be finite and >= 0")
        if np.any(self.reflectivity < 0) or np.any(self.reflectivity > 1):
            raise SceneError("reflectivity must lie in [0, 1]")
        empty = self.depth == 0
        if np.any(self.reflectivity[empty] != 0):
            raise SceneError("empty pixels (depth 0) must have reflectivity 0")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != self.depth.shape:
                raise SceneError("labels shape must match depth")

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def num_pixels(self) -> int:
        return self.depth.size

    def label_mask(self, name: str) -> np.ndarray:
        if self.labels is None or name not in self.label_names:
            raise SceneError(f"scene has no object labeled {name!r}")
        return self.labels == self.label_names[name]


@dataclass(frozen=True)
class CollectionGeometry:
    aperture_diameter: float = 0.0508   # 2 inch collection optic
    lo_power: float = 100e-6            # local-oscillator power, W

    def __post_init__(self):
        if self.aperture_diameter <= 0 or self.lo_power <= 0:
            raise ValueError("aperture diameter and LO power must be positive")

    @property
    def aperture_area(self) -> float:
        return np.pi * (self.aperture_diameter / 2.0) ** 2

    @property
    def lo_amplitude(self) -> float:
        from .chirp import EPS0_C
        return float(np.sqrt(2.0 * self.lo_power / EPS0_C))


@dataclass
class ReturnField:
    """Per-pixel return amplitudes and round-trip delays (0 where empty)."""

    amplitude: np.ndarray
    delay: np.ndarray

    @property
    def active(self) -> np.ndarray:
        return self.amplitude > 0


def gaussian_illumination(height: int, width: int, total_power: float = 1.0,
                          sigma_frac: float = 0.285) -> np.ndarray:
    """Centered 2D Gaussian beam profile normalized to ``total_power`` watts.

    sigma_frac is the Gaussian sigma as a fraction of the image width; the
    default puts ~119 uW in the brightest pixel of a 1 W, 128x128 profile.
    """
    if total_power <= 0 or sigma_frac <= 0:
        raise ValueError("total_power and sigma_frac must be positive")
    ys = np.arange(height) - (height - 1) / 2.0
    xs = np.arange(width) - (width - 1) / 2.0
    sigma = sigma_frac * width
    profile = np.exp(-(ys[:, None] ** 2 + xs[None, :] ** 2) / (2.0 * sigma**2))
    return profile * (total_power / profile.sum())


def returns_from_scene(scene: Scene, illumination: np.ndarray,
                       geometry: CollectionGeometry, cfg: ChirpConfig) -> ReturnField:
    """Lambertian per-pixel returns for a scene under a given illumination."""
    illumination = np.asarray(illumination, dtype=float)
    if illumination.shape != scene.depth.shape:
        raise SceneError("illumination shape must match the scene")
    if np.any(illumination < 0):
        raise SceneError("illumination must be nonnegative")
    active = scene.depth > 0
    if np.any(scene.depth[active] >= cfg.max_depth):
        worst = scene.depth[active].max()
        raise SceneError(
            f"scene depth {worst:.3f} m is outside the unambiguous range "
            f"{cfg.max_depth:.3f} m; rescale the scene or the sweep")
    amplitude = np.zeros_like(scene.depth)
    delay = np.zeros_like(scene.depth)
    d = scene.depth[active]
    power = (illumination[active] * scene.reflectivity[active]
             * geometry.aperture_area / (2.0 * np.pi * d**2))
    amplitude[active] = np.sqrt(2.0 * power / cfg.eps0_c)
    delay[active] = 2.0 * d / cfg.c
    return ReturnField(amplitude=amplitude, delay=delay)


def received_power(field: ReturnField, cfg: ChirpConfig) -> np.ndarray:
    """Per-pixel received power (W) implied by a return field."""
    return 0.5 * cfg.eps0_c * field.amplitude**2


# ---------------------------------------------------------------------------
# Procedural scenes
# ---------------------------------------------------------------------------

def _grid(height, width):
    """Pixel-center coordinates in [0, 1]^2 (x right, y down)."""
    ys = (np.arange(height) + 0.5) / height
    xs = (np.arange(width) + 0.5) / width
    return np.meshgrid(xs, ys)


def make_demo_scene(height: int = 128, width: int = 128) -> Scene:
    """Five flat Lambertian objects between 6 m and 22 m, torus included.

    Shapes are laid out in unit coordinates so any resolution renders the
    same scene; the ring is labeled "toroid" for per-object statistics.
    The rectangles sit on dyadic boundaries (Haar-sparse object masks down
    to 16x16 rasters), the curved toroid is nearest, and far objects sit
    under the brighter part of the beam so apparent amplitudes stay within
    a factor of a few.
    """
    xg, yg = _grid(height, width)
    depth = np.zeros((height, width))
    refl = np.zeros((height, width))
    labels = np.zeros((height, width), dtype=int)

    def paint(mask, d, r, lab):
        depth[mask] = d
        refl[mask] = r
        labels[mask] = lab

    # box, lower left; its right edge is gently scalloped so the object
    # mask carries fine-scale Haar detail at 32x32 and above
    scallop = 0.375 + 0.03 * np.sin(2 * np.pi * 10 * yg)
    paint((xg >= 0.125) & (xg < scallop) & (yg >= 0.625) & (yg < 0.875),
          10.5, 0.90, 1)
    # panel, mid left, scalloped lower edge
    scallop2 = 0.5 - 0.03 * np.sin(2 * np.pi * 10 * xg)
    paint((xg >= 0.125) & (xg < 0.375) & (yg >= 0.375) & (yg < scallop2),
          18.0, 0.85, 2)
    # pillar, upper right
    paint((xg >= 0.625) & (xg < 0.75) & (yg >= 0.25) & (yg < 0.5), 15.0, 0.75, 3)
    # toroid outline, nearest object, lower right (alone in its quadrant so
    # its Haar atoms stay disjoint from every other object down to 16x16)
    rad = np.sqrt((xg - 0.75) ** 2 + (yg - 0.75) ** 2)
    paint((rad > 0.0625) & (rad < 0.125), 6.0, 0.90, 4)
    # far wall panel, top center strip
    paint((xg >= 0.375) & (xg < 0.625) & (yg >= 0.125) & (yg < 0.25), 22.0, 0.85, 5)

    names = {"box": 1, "panel": 2, "pillar": 3, "toroid": 4, "far-wall": 5}
    return Scene(depth=depth, reflectivity=refl, labels=labels, label_names=names)


def make_single_plane(height: int, width: int, depth_m: float = 10.0,
                      reflectivity: float = 0.8) -> Scene:
    depth = np.full((height, width), float(depth_m))
    refl = np.full((height, width), float(reflectivity))
    return Scene(depth=depth, reflectivity=refl)


def make_two_plane(height: int, width: int, near: float = 8.0,
                   far: float = 16.0, reflectivity: float = 0.8) -> Scene:
    depth = np.full((height, width), float(far))
    depth[:, : width // 2] = float(near)
    refl = np.full((height, width), float(reflectivity))
    return Scene(depth=depth, reflectivity=refl)


def make_torus_only(height: int, width: int, depth_m: float = 18.0,
                    reflectivity: float = 0.85) -> Scene:
    xg, yg = _grid(height, width)
    rad = np.sqrt((xg - 0.5) ** 2 + (yg - 0.5) ** 2)
    mask = (rad > 0.15) & (rad < 0.31)
    depth = np.where(mask, float(depth_m), 0.0)
    refl = np.where(mask, float(reflectivity), 0.0)
    labels = mask.astype(int)
    return Scene(depth=depth, reflectivity=refl, labels=labels,
                 label_names={"toroid": 1})


GENERATORS = {
    "paper-demo": make_demo_scene,
    "single-plane": make_single_plane,
    "two-plane": make_two_plane,
    "torus-only": make_torus_only,
}


def builtin_scene(name: str, height: int = 128, width: int = 128, **kwargs) -> Scene:
    if name not in GENERATORS:
        raise SceneError(f"unknown built-in scene {name!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[name](height, width, **kwargs)


# ---------------------------------------------------------------------------
# Scene files
# ---------------------------------------------------------------------------

def save_scene(scene: Scene, path) -> None:
    """Write a scene file; JSON for .json paths, plain text otherwise."""
    path = Path(path)
    if path.suffix == ".json":
        doc = {
            "width": scene.width,
            "height": scene.height,
            "depth_scale": 1.0,
            "depth": scene.depth.ravel().tolist(),
            "reflectivity": scene.reflectivity.ravel().tolist(),
        }
        if scene.labels is not None:
            doc["labels"] = scene.labels.ravel().tolist()
            doc["label_names"] = dict(scene.label_names)
        path.write_text(json.dumps(doc))
        return
    lines = [
        "# cslidar scene: header 'width height depth_scale', then depth",
        "# values (row-major, meters/depth_scale) and reflectivity values",
        f"{scene.width} {scene.height} 1.0",
    ]
    for arr in (scene.depth, scene.reflectivity):
        lines.extend(" ".join(f"{v:.9g}" for v in row) for row in arr)
    path.write_text("\n".join(lines) + "\n")


def load_scene(path) -> Scene:
    """Read a scene file written by :func:`save_scene` (text or JSON)."""
    path = Path(path)
    if not path.exists():
        raise SceneError(f"scene file not found: {path}")
    if path.suffix == ".json":
        return _load_json(path)
    return _load_text(path)


def _load_json(path: Path) -> Scene:
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: invalid JSON ({exc})") from exc
    try:
        w, h = int(doc["width"]), int(doc["height"])
        scale = float(doc.get("depth_scale", 1.0))
        depth = np.asarray(doc["depth"], dtype=float) * scale
        refl = np.asarray(doc["reflectivity"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"{path}: missing or malformed field ({exc})") from exc
    if depth.size != w * h or refl.size != w * h:
        raise SceneError(f"{path}: array lengths do not match {w}x{h}")
    labels = None
    names = {}
    if "labels" in doc:
        labels = np.asarray(doc["labels"], dtype=int)
        if labels.size != w * h:
            raise SceneError(f"{path}: labels length does not match {w}x{h}")
        labels = labels.reshape(h, w)
        names = {str(k): int(v) for k, v in doc.get("label_names", {}).items()}
    try:
        return Scene(depth=depth.reshape(h, w), reflectivity=refl.reshape(h, w),
                     labels=labels, label_names=names)
    except SceneError as exc:
        raise SceneError(f"{path}: {exc}") from exc


def _load_text(path: Path) -> Scene:
    tokens = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if len(tokens) < 3:
        raise SceneError(f"{path}: missing 'width height depth_scale' header")
    try:
        w, h, scale = int(tokens[0]), int(tokens[1]), float(tokens[2])
        values = np.array([float(t) for t in tokens[3:]])
    except ValueError as exc:
        raise SceneError(f"{path}: non-numeric token ({exc})") from exc
    if w <= 0 or h <= 0:
        raise SceneError(f"{path}: dimensions must be positive, got {w}x{h}")
    if values.size != 2 * w * h:
        raise SceneError(
            f"{path}: expected {2 * w * h} values for two {w}x{h} arrays, "
            f"got {values.size}")
    depth = values[: w * h].reshape(h, w) * scale
    refl = values[w * h:].reshape(h, w)
    try:
        return Scene(depth=depth, reflectivity=refl)
    except SceneError as exc:
        raise SceneError(f"{path}: {exc}") from exc
