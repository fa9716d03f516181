"""Scene model shared by the generator, the tracer, and the baselines.

Everything is immutable after construction. Scene files are JSON that
reference OBJ meshes and PNG/EXR textures by path; all numbers round-trip
exactly through JSON, so serialize/deserialize is value-identical.

Camera convention: right-handed, camera looks along -Z with +Y up in its
own frame. A camera rotation matrix maps camera coordinates to world
coordinates (columns are right/up/backward).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import exrio
from .errors import DomainError, FormatError

# --------------------------------------------------------------------------
# Rotations
# --------------------------------------------------------------------------


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    n = np.sqrt(w * w + x * x + y * y + z * z)
    if n == 0:
        raise DomainError("zero quaternion")
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(m: np.ndarray) -> tuple[float, float, float, float]:
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    else:
        i = int(np.argmax([m[0, 0], m[1, 1], m[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(m[i, i] - m[j, j] - m[k, k] + 1.0, 0.0)) * 2
        q = [0.0, 0.0, 0.0]
        q[i] = 0.25 * s
        q[j] = (m[j, i] + m[i, j]) / s
        q[k] = (m[k, i] + m[i, k]) / s
        w = (m[k, j] - m[j, k]) / s
        x, y, z = q
    if w < 0:
        w, x, y, z = -w, -x, -y, -z
    return (float(w), float(x), float(y), float(z))


def yaw_quat(angle: float) -> tuple[float, float, float, float]:
    """Rotation about +Y by ``angle`` radians."""
    return (float(np.cos(angle / 2)), 0.0, float(np.sin(angle / 2)), 0.0)


def quat_mul(a, b) -> tuple[float, float, float, float]:
    """Hamilton product; quat_mul(a, b) rotates by b first, then a."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw)


def look_at(eye, target, up=(0.0, 1.0, 0.0)) -> np.ndarray:
    """Camera-to-world rotation for a camera at ``eye`` looking at ``target``."""
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    n = np.linalg.norm(fwd)
    if n < 1e-12:
        raise DomainError("look_at: eye and target coincide")
    fwd = fwd / n
    upv = np.asarray(up, dtype=np.float64)
    right = np.cross(fwd, upv)
    rn = np.linalg.norm(right)
    if rn < 1e-9:  # looking straight up/down: pick an arbitrary right axis
        right = np.cross(fwd, np.array([1.0, 0.0, 0.0]))
        rn = np.linalg.norm(right)
    right = right / rn
    cam_up = np.cross(right, fwd)
    return np.stack([right, cam_up, -fwd], axis=1)


# --------------------------------------------------------------------------
# Transforms and meshes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Transform:
    """Rigid transform with uniform scale: p -> R @ (s * p) + t."""

    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)  # w, x, y, z
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("transform scale must be > 0")

    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def apply_points(self, pts: np.ndarray) -> np.ndarray:
        return (self.scale * np.asarray(pts)) @ self.matrix().T + np.asarray(self.translation)

    def apply_normals(self, nrm: np.ndarray) -> np.ndarray:
        return np.asarray(nrm) @ self.matrix().T


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (V, 3)
    normals: np.ndarray   # (V, 3)
    uvs: np.ndarray       # (V, 2)
    faces: np.ndarray     # (F, 3) int

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        n = np.ascontiguousarray(np.asarray(self.normals, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.uvs, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int32))
        if v.ndim != 2 or v.shape[1] != 3 or f.ndim != 2 or f.shape[1] != 3:
            raise DomainError("mesh arrays malformed")
        if not np.all(np.isfinite(n)):
            raise DomainError("mesh normals must be finite")
        for a in (v, n, t, f):
            a.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "normals", n)
        object.__setattr__(self, "uvs", t)
        object.__setattr__(self, "faces", f)

    @property
    def n_triangles(self) -> int:
        return self.faces.shape[0]


def mesh_aabb(mesh: Mesh, transform: Transform | None = None) -> np.ndarray:
    """Smallest axis-aligned box containing the (transformed) mesh: (2, 3)."""
    if mesh.vertices.shape[0] == 0:
        raise DomainError("aabb of an empty mesh")
    pts = mesh.vertices if transform is None else transform.apply_points(mesh.vertices)
    return np.stack([pts.min(axis=0), pts.max(axis=0)])


def aabb_overlap(a: np.ndarray, b: np.ndarray, margin: float = 0.0) -> bool:
    return bool(np.all(a[0] - margin < b[1]) and np.all(b[0] - margin < a[1]))


# --------------------------------------------------------------------------
# Procedural primitives (tessellated; the tracer only intersects triangles)
# --------------------------------------------------------------------------


def make_cube() -> Mesh:
    """Axis-aligned unit cube centered at the origin."""
    verts, norms, uvs, faces = [], [], [], []
    axes = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
    for ax, u_ax, v_ax in axes:
        for sgn in (1.0, -1.0):
            base = len(verts)
            for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
                p = [0.0, 0.0, 0.0]
                p[ax] = 0.5 * sgn
                p[u_ax] = (du - 0.5) * sgn
                p[v_ax] = dv - 0.5
                verts.append(p)
                n = [0.0, 0.0, 0.0]
                n[ax] = sgn
                norms.append(n)
                uvs.append([du, dv])
            faces.append([base, base + 1, base + 2])
            faces.append([base, base + 2, base + 3])
    return Mesh(np.array(verts), np.array(norms), np.array(uvs), np.array(faces))


def make_sphere(n_u: int = 32, n_v: int = 16) -> Mesh:
    """UV sphere of diameter 1 centered at the origin."""
    verts, norms, uvs = [], [], []
    for i in range(n_v + 1):
        theta = np.pi * i / n_v
        for j in range(n_u + 1):
            phi = 2 * np.pi * j / n_u
            d = (np.sin(theta) * np.sin(phi), np.cos(theta), -np.sin(theta) * np.cos(phi))
            verts.append([0.5 * d[0], 0.5 * d[1], 0.5 * d[2]])
            norms.append(list(d))
            uvs.append([j / n_u, i / n_v])
    faces = []
    for i in range(n_v):
        for j in range(n_u):
            a = i * (n_u + 1) + j
            b = a + n_u + 1
            if i > 0:
                faces.append([a, b, a + 1])
            if i < n_v - 1:
                faces.append([a + 1, b, b + 1])
    return Mesh(np.array(verts), np.array(norms), np.array(uvs), np.array(faces))


def make_cylinder(n_u: int = 32) -> Mesh:
    """Cylinder of diameter 1 and height 1, axis +Y, centered at the origin."""
    verts, norms, uvs, faces = [], [], [], []
    for i, y in enumerate((-0.5, 0.5)):
        for j in range(n_u + 1):
            phi = 2 * np.pi * j / n_u
            x, z = 0.5 * np.cos(phi), 0.5 * np.sin(phi)
            verts.append([x, y, z])
            norms.append([np.cos(phi), 0.0, np.sin(phi)])
            uvs.append([j / n_u, float(i)])
    for j in range(n_u):
        a, b = j, j + n_u + 1
        faces.append([a, b, a + 1])
        faces.append([a + 1, b, b + 1])
    for y, sgn in ((-0.5, -1.0), (0.5, 1.0)):
        center = len(verts)
        verts.append([0.0, y, 0.0])
        norms.append([0.0, sgn, 0.0])
        uvs.append([0.5, 0.5])
        ring = len(verts)
        for j in range(n_u):
            phi = 2 * np.pi * j / n_u
            verts.append([0.5 * np.cos(phi), y, 0.5 * np.sin(phi)])
            norms.append([0.0, sgn, 0.0])
            uvs.append([0.5 + 0.5 * np.cos(phi), 0.5 + 0.5 * np.sin(phi)])
        for j in range(n_u):
            a = ring + j
            b = ring + (j + 1) % n_u
            if sgn > 0:
                faces.append([center, b, a])
            else:
                faces.append([center, a, b])
    return Mesh(np.array(verts), np.array(norms), np.array(uvs), np.array(faces))


PRIMITIVES = {"cube": make_cube, "sphere": make_sphere, "cylinder": make_cylinder}


def make_plane(extent: float, y: float = 0.0, uv_tiles: float = 1.0) -> Mesh:
    """Square ground plane (side ``extent``) in the XZ plane facing +Y."""
    h = extent / 2.0
    verts = np.array([[-h, y, -h], [h, y, -h], [h, y, h], [-h, y, h]])
    norms = np.tile([0.0, 1.0, 0.0], (4, 1))
    uvs = np.array([[0.0, 0.0], [uv_tiles, 0.0], [uv_tiles, uv_tiles], [0.0, uv_tiles]])
    faces = np.array([[0, 2, 1], [0, 3, 2]])
    return Mesh(verts, norms, uvs, faces)


# --------------------------------------------------------------------------
# OBJ I/O
# --------------------------------------------------------------------------


def write_obj(path, mesh: Mesh) -> None:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for t in mesh.uvs:
        lines.append(f"vt {float(t[0])!r} {float(t[1])!r}")
    for n in mesh.normals:
        lines.append(f"vn {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}")
    for f in mesh.faces:
        a, b, c = (int(i) + 1 for i in f)
        lines.append(f"f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> Mesh:
    positions, texcoords, normals = [], [], []
    corner_index: dict[tuple, int] = {}
    verts, uvs, norms, faces = [], [], [], []

    def corner(spec: str) -> int:
        if spec in corner_index:
            return corner_index[spec]
        parts = spec.split("/")
        vi = int(parts[0])
        ti = int(parts[1]) if len(parts) > 1 and parts[1] else 0
        ni = int(parts[2]) if len(parts) > 2 and parts[2] else 0
        idx = len(verts)
        verts.append(positions[vi - 1 if vi > 0 else vi])
        uvs.append(texcoords[ti - 1 if ti > 0 else ti] if ti else [0.0, 0.0])
        norms.append(normals[ni - 1 if ni > 0 else ni] if ni else [0.0, 0.0, 0.0])
        corner_index[spec] = idx
        return idx

    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            positions.append([float(x) for x in parts[1:4]])
        elif parts[0] == "vt":
            texcoords.append([float(x) for x in parts[1:3]])
        elif parts[0] == "vn":
            normals.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [corner(p) for p in parts[1:]]
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    if not faces:
        raise FormatError(f"{path}: OBJ file has no faces")
    verts_a = np.asarray(verts, dtype=np.float64)
    norms_a = np.asarray(norms, dtype=np.float64)
    faces_a = np.asarray(faces, dtype=np.int32)
    if np.all(norms_a == 0.0):
        norms_a = _smooth_normals(verts_a, faces_a)
    else:
        bad = np.linalg.norm(norms_a, axis=1) < 1e-12
        if np.any(bad):
            smooth = _smooth_normals(verts_a, faces_a)
            norms_a = np.where(bad[:, None], smooth, norms_a)
    return Mesh(verts_a, norms_a, np.asarray(uvs, dtype=np.float64), faces_a)


def _smooth_normals(verts: np.ndarray, faces: np.ndarray) -> np.ndarray:
    fn = np.cross(verts[faces[:, 1]] - verts[faces[:, 0]],
                  verts[faces[:, 2]] - verts[faces[:, 0]])
    out = np.zeros_like(verts)
    for k in range(3):
        np.add.at(out, faces[:, k], fn)
    n = np.linalg.norm(out, axis=1, keepdims=True)
    return out / np.maximum(n, 1e-12)


# --------------------------------------------------------------------------
# Textures and materials
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Texture:
    data: np.ndarray  # (H, W, C) float32 in [0, 1]

    def __post_init__(self):
        d = np.ascontiguousarray(np.asarray(self.data, dtype=np.float32))
        if d.ndim == 2:
            d = d[:, :, None]
        d = np.clip(d, 0.0, 1.0)
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    def sample(self, u, v) -> np.ndarray:
        """Bilinear sample with repeat wrapping; output stays in [0, 1]."""
        h, w = self.data.shape[:2]
        x = np.asarray(u, dtype=np.float64) * w - 0.5
        y = np.asarray(v, dtype=np.float64) * h - 0.5
        x0 = np.floor(x).astype(np.int64)
        y0 = np.floor(y).astype(np.int64)
        fx, fy = (x - x0)[..., None], (y - y0)[..., None]
        x0, x1 = x0 % w, (x0 + 1) % w
        y0, y1 = y0 % h, (y0 + 1) % h
        d = self.data
        top = d[y0, x0] * (1 - fx) + d[y0, x1] * fx
        bot = d[y1, x0] * (1 - fx) + d[y1, x1] * fx
        return top * (1 - fy) + bot * fy


def load_texture(path, srgb: bool) -> Texture:
    p = Path(path)
    if p.suffix.lower() == ".exr":
        data = exrio.read_rgb_exr(p)
        return Texture(np.clip(data, 0.0, 1.0))
    data = exrio.read_png(p)
    if srgb:
        data = exrio.srgb_decode(data)
    return Texture(data)


@dataclass(frozen=True)
class Material:
    """Disney-style base color / roughness / metallic, scalars or textures."""

    base_color: tuple[float, float, float] | None = (0.8, 0.8, 0.8)
    base_tex: str | None = None
    roughness: float | None = 0.5
    rough_tex: str | None = None
    metallic: float | None = 0.0
    metal_tex: str | None = None
    uv_scale: float = 1.0

    def __post_init__(self):
        if self.base_tex is None:
            if self.base_color is None:
                raise DomainError("material needs base_color or base_tex")
            if any(not 0.0 <= c <= 1.0 for c in self.base_color):
                raise DomainError("base_color channels must be in [0,1]")
        if self.rough_tex is None and not 0.0 <= (self.roughness or 0.0) <= 1.0:
            raise DomainError("roughness must be in [0,1]")
        if self.metal_tex is None and not 0.0 <= (self.metallic or 0.0) <= 1.0:
            raise DomainError("metallic must be in [0,1]")


# --------------------------------------------------------------------------
# Scene description
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectSpec:
    """One placed body: either an OBJ mesh by path or a named primitive."""

    mesh_path: str | None
    primitive: str | None
    transform: Transform
    material: Material

    def __post_init__(self):
        if (self.mesh_path is None) == (self.primitive is None):
            raise DomainError("object needs exactly one of mesh_path / primitive")
        if self.primitive is not None and self.primitive not in PRIMITIVES:
            raise DomainError(f"unknown primitive {self.primitive!r}")

    def load_mesh(self, root: Path | None = None) -> Mesh:
        if self.primitive is not None:
            return PRIMITIVES[self.primitive]()
        p = Path(self.mesh_path)
        if root is not None and not p.is_absolute():
            p = root / p
        return read_obj(p)


@dataclass(frozen=True)
class PlaneSpec:
    extent: float
    y: float
    material: Material
    uv_tiles: float = 4.0


@dataclass(frozen=True)
class CameraTrack:
    positions: tuple  # F x (x, y, z)
    rotations: tuple  # F x (w, x, y, z) unit quaternions
    fov: float        # vertical field of view, radians

    def __post_init__(self):
        if len(self.positions) < 1 or len(self.positions) != len(self.rotations):
            raise DomainError("camera track needs >= 1 frame and matching arrays")
        for q in self.rotations:
            m = quat_to_matrix(q)
            if not np.allclose(m @ m.T, np.eye(3), atol=1e-6):
                raise DomainError("camera rotations must be orthonormal within 1e-6")
        if not 0 < self.fov < np.pi:
            raise DomainError("fov must be in (0, pi)")

    @property
    def frame_count(self) -> int:
        return len(self.positions)


def pose_at(track: CameraTrack, frame: int) -> tuple[np.ndarray, np.ndarray]:
    """Stored per-frame pose (position, rotation matrix); no interpolation."""
    if not 0 <= frame < track.frame_count:
        raise IndexError(f"frame {frame} out of range [0, {track.frame_count})")
    return (np.asarray(track.positions[frame], dtype=np.float64),
            quat_to_matrix(track.rotations[frame]))


@dataclass(frozen=True)
class EnvSpec:
    path: str
    yaw: float = 0.0
    flip: bool = False
    scale: float = 1.0


@dataclass(frozen=True)
class SceneDescription:
    plane: PlaneSpec
    objects: tuple[ObjectSpec, ...]
    primitives: tuple[ObjectSpec, ...]
    env: EnvSpec
    camera: CameraTrack
    # Per-body, per-frame transforms (len == len(objects)+len(primitives));
    # None means bodies are static.
    body_tracks: tuple[tuple[Transform, ...], ...] | None
    # Absolute env yaw per frame (includes the base augmentation yaw); None
    # means the base yaw holds for every frame.
    env_yaw_per_frame: tuple[float, ...] | None
    motion_kind: str
    seed: int
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if len(self.objects) > 3 or len(self.primitives) > 3:
            raise DomainError("at most three objects and three primitives")
        n_bodies = len(self.objects) + len(self.primitives)
        if self.body_tracks is not None:
            if len(self.body_tracks) != n_bodies:
                raise DomainError("body_tracks length must match body count")
            for trk in self.body_tracks:
                if len(trk) != self.camera.frame_count:
                    raise DomainError("body track length must match frame count")
        if self.env_yaw_per_frame is not None \
                and len(self.env_yaw_per_frame) != self.camera.frame_count:
            raise DomainError("env_yaw_per_frame length must match frame count")

    @property
    def bodies(self) -> tuple[ObjectSpec, ...]:
        return self.objects + self.primitives

    @property
    def frame_count(self) -> int:
        return self.camera.frame_count

    def body_transform(self, body_idx: int, frame: int) -> Transform:
        if self.body_tracks is None:
            return self.bodies[body_idx].transform
        return self.body_tracks[body_idx][frame]

    def env_yaw_at(self, frame: int) -> float:
        if self.env_yaw_per_frame is None:
            return self.env.yaw
        return self.env_yaw_per_frame[frame]


# --------------------------------------------------------------------------
# JSON serialization
# --------------------------------------------------------------------------

SCENE_SCHEMA_VERSION = 1


def _material_to_json(m: Material) -> dict:
    return {
        "base_color": list(m.base_color) if m.base_color is not None else None,
        "base_tex": m.base_tex, "roughness": m.roughness, "rough_tex": m.rough_tex,
        "metallic": m.metallic, "metal_tex": m.metal_tex, "uv_scale": m.uv_scale,
    }


def _material_from_json(d: dict) -> Material:
    return Material(
        base_color=tuple(d["base_color"]) if d["base_color"] is not None else None,
        base_tex=d["base_tex"], roughness=d["roughness"], rough_tex=d["rough_tex"],
        metallic=d["metallic"], metal_tex=d["metal_tex"], uv_scale=d["uv_scale"])


def _transform_to_json(t: Transform) -> dict:
    return {"translation": list(t.translation), "rotation": list(t.rotation),
            "scale": t.scale}


def _transform_from_json(d: dict) -> Transform:
    return Transform(tuple(d["translation"]), tuple(d["rotation"]), d["scale"])


def _object_to_json(o: ObjectSpec) -> dict:
    return {"mesh_path": o.mesh_path, "primitive": o.primitive,
            "transform": _transform_to_json(o.transform),
            "material": _material_to_json(o.material)}


def _object_from_json(d: dict) -> ObjectSpec:
    return ObjectSpec(d["mesh_path"], d["primitive"],
                      _transform_from_json(d["transform"]),
                      _material_from_json(d["material"]))


def scene_to_json(scene: SceneDescription) -> dict:
    return {
        "schema_version": SCENE_SCHEMA_VERSION,
        "plane": {"extent": scene.plane.extent, "y": scene.plane.y,
                  "uv_tiles": scene.plane.uv_tiles,
                  "material": _material_to_json(scene.plane.material)},
        "objects": [_object_to_json(o) for o in scene.objects],
        "primitives": [_object_to_json(o) for o in scene.primitives],
        "env": {"path": scene.env.path, "yaw": scene.env.yaw,
                "flip": scene.env.flip, "scale": scene.env.scale},
        "camera": {"positions": [list(p) for p in scene.camera.positions],
                   "rotations": [list(q) for q in scene.camera.rotations],
                   "fov": scene.camera.fov},
        "body_tracks": None if scene.body_tracks is None else
            [[_transform_to_json(t) for t in trk] for trk in scene.body_tracks],
        "env_yaw_per_frame": None if scene.env_yaw_per_frame is None
            else list(scene.env_yaw_per_frame),
        "motion_kind": scene.motion_kind,
        "seed": scene.seed,
        "width": scene.width,
        "height": scene.height,
    }


def scene_from_json(d: dict) -> SceneDescription:
    if d.get("schema_version") != SCENE_SCHEMA_VERSION:
        raise FormatError(f"unknown scene schema version {d.get('schema_version')!r}")
    return SceneDescription(
        plane=PlaneSpec(extent=d["plane"]["extent"], y=d["plane"]["y"],
                        material=_material_from_json(d["plane"]["material"]),
                        uv_tiles=d["plane"]["uv_tiles"]),
        objects=tuple(_object_from_json(o) for o in d["objects"]),
        primitives=tuple(_object_from_json(o) for o in d["primitives"]),
        env=EnvSpec(d["env"]["path"], d["env"]["yaw"], d["env"]["flip"], d["env"]["scale"]),
        camera=CameraTrack(tuple(tuple(p) for p in d["camera"]["positions"]),
                           tuple(tuple(q) for q in d["camera"]["rotations"]),
                           d["camera"]["fov"]),
        body_tracks=None if d["body_tracks"] is None else tuple(
            tuple(_transform_from_json(t) for t in trk) for trk in d["body_tracks"]),
        env_yaw_per_frame=None if d["env_yaw_per_frame"] is None
            else tuple(d["env_yaw_per_frame"]),
        motion_kind=d["motion_kind"],
        seed=d["seed"],
        width=d["width"],
        height=d["height"],
    )


def save_scene(path, scene: SceneDescription) -> None:
    Path(path).write_text(json.dumps(scene_to_json(scene), indent=1))


def load_scene(path) -> SceneDescription:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from None
    return scene_from_json(d)


# --------------------------------------------------------------------------
# Camera projection helpers (shared by G-buffer and depth-mesh code)
# --------------------------------------------------------------------------


def unproject_pixels(px: np.ndarray, py: np.ndarray, view_depth: np.ndarray,
                     fov: float, width: int, height: int) -> np.ndarray:
    """Pixel centers + view-space depth -> camera-space points (camera at 0, -Z fwd)."""
    tan_half = np.tan(fov / 2.0)
    aspect = width / height
    ndc_x = (np.asarray(px) + 0.5) / width * 2.0 - 1.0
    ndc_y = 1.0 - (np.asarray(py) + 0.5) / height * 2.0
    x = ndc_x * tan_half * aspect * view_depth
    y = ndc_y * tan_half * view_depth
    z = -np.asarray(view_depth, dtype=np.float64)
    return np.stack([x, y, z], axis=-1)


def project_points(pts_cam: np.ndarray, fov: float, width: int, height: int):
    """Camera-space points -> (px, py, view_depth); inverse of unproject_pixels."""
    pts = np.asarray(pts_cam, dtype=np.float64)
    depth = -pts[..., 2]
    tan_half = np.tan(fov / 2.0)
    aspect = width / height
    ndc_x = pts[..., 0] / (depth * tan_half * aspect)
    ndc_y = pts[..., 1] / (depth * tan_half)
    px = (ndc_x + 1.0) / 2.0 * width - 0.5
    py = (1.0 - ndc_y) / 2.0 * height - 0.5
    return px, py, depth


__all__ = [
    "Transform", "Mesh", "Texture", "Material", "ObjectSpec", "PlaneSpec",
    "CameraTrack", "EnvSpec", "SceneDescription", "pose_at", "mesh_aabb",
    "aabb_overlap", "make_cube", "make_sphere", "make_cylinder", "make_plane",
    "PRIMITIVES", "write_obj", "read_obj", "load_texture", "look_at",
    "quat_to_matrix", "matrix_to_quat", "yaw_quat", "save_scene", "load_scene",
    "scene_to_json", "scene_from_json", "unproject_pixels", "project_points",
    "SCENE_SCHEMA_VERSION",
]
