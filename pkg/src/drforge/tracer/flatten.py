"""Flatten a SceneDescription into the array soup the kernels consume.

All triangles end up in one set of arrays (positions as v0/e1/e2 for
Moller-Trumbore, per-corner normals and uvs, per-triangle material id).
Textures are packed into one flat RGB buffer with offsets. Material id -1
marks triangles carrying per-vertex attributes (used by the depth-mesh
baseline); their albedo/roughness/metallic interpolate barycentrically.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import radiometry, scene as sc
from .bvh import Bvh, build_bvh


class AssetCache:
    """Loads meshes / textures / environment maps at most once."""

    def __init__(self, root: Path | None = None):
        self.root = Path(root) if root is not None else None
        self._meshes: dict[str, sc.Mesh] = {}
        self._textures: dict[tuple[str, bool], sc.Texture] = {}
        self._envs: dict[str, radiometry.EnvironmentMap] = {}

    def _resolve(self, path: str) -> Path:
        p = Path(path)
        if self.root is not None and not p.is_absolute():
            p = self.root / p
        return p

    def mesh(self, spec: sc.ObjectSpec) -> sc.Mesh:
        if spec.primitive is not None:
            key = f"primitive:{spec.primitive}"
            if key not in self._meshes:
                self._meshes[key] = sc.PRIMITIVES[spec.primitive]()
            return self._meshes[key]
        key = str(self._resolve(spec.mesh_path))
        if key not in self._meshes:
            self._meshes[key] = sc.read_obj(key)
        return self._meshes[key]

    def texture(self, path: str, srgb: bool) -> sc.Texture:
        key = (str(self._resolve(path)), srgb)
        if key not in self._textures:
            self._textures[key] = sc.load_texture(key[0], srgb=srgb)
        return self._textures[key]

    def env(self, path: str) -> radiometry.EnvironmentMap:
        key = str(self._resolve(path))
        if key not in self._envs:
            from .. import exrio
            self._envs[key] = radiometry.EnvironmentMap(exrio.read_rgb_exr(key))
        return self._envs[key]


@dataclass
class FlatScene:
    v0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    n0: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    uv0: np.ndarray
    uv1: np.ndarray
    uv2: np.ndarray
    mat_id: np.ndarray
    # per-vertex attribute mode (mat_id == -1)
    va_albedo: np.ndarray  # (N, 3, 3)
    va_rough: np.ndarray   # (N, 3)
    va_metal: np.ndarray   # (N, 3)
    # materials
    mat_base: np.ndarray      # (M, 3)
    mat_base_tex: np.ndarray  # (M,) int32, -1 = scalar
    mat_rough: np.ndarray
    mat_rough_tex: np.ndarray
    mat_metal: np.ndarray
    mat_metal_tex: np.ndarray
    mat_uv_scale: np.ndarray
    # texture atlas
    tex_data: np.ndarray  # flat float64 rgb
    tex_off: np.ndarray
    tex_w: np.ndarray
    tex_h: np.ndarray
    bvh: Bvh

    @property
    def n_triangles(self) -> int:
        return self.v0.shape[0]


class _AtlasBuilder:
    def __init__(self, cache: AssetCache):
        self.cache = cache
        self.chunks: list[np.ndarray] = []
        self.offsets: list[int] = []
        self.dims: list[tuple[int, int]] = []
        self.index: dict[tuple[str, bool], int] = {}
        self.pos = 0

    def add(self, path: str | None, srgb: bool) -> int:
        if path is None:
            return -1
        key = (path, srgb)
        if key in self.index:
            return self.index[key]
        tex = self.cache.texture(path, srgb)
        data = tex.data
        if data.shape[2] == 1:
            data = np.repeat(data, 3, axis=2)
        flat = np.ascontiguousarray(data[:, :, :3], dtype=np.float64).ravel()
        idx = len(self.offsets)
        self.index[key] = idx
        self.chunks.append(flat)
        self.offsets.append(self.pos)
        self.dims.append((data.shape[0], data.shape[1]))
        self.pos += flat.size
        return idx

    def arrays(self):
        data = np.concatenate(self.chunks) if self.chunks else np.zeros(0)
        off = np.asarray(self.offsets, dtype=np.int64)
        h = np.asarray([d[0] for d in self.dims], dtype=np.int64)
        w = np.asarray([d[1] for d in self.dims], dtype=np.int64)
        return data, off, w, h


def _material_arrays(materials: list[sc.Material], atlas: _AtlasBuilder):
    m = len(materials)
    base = np.zeros((m, 3))
    base_tex = np.full(m, -1, dtype=np.int64)
    rough = np.zeros(m)
    rough_tex = np.full(m, -1, dtype=np.int64)
    metal = np.zeros(m)
    metal_tex = np.full(m, -1, dtype=np.int64)
    uv_scale = np.ones(m)
    for i, mat in enumerate(materials):
        uv_scale[i] = mat.uv_scale
        if mat.base_tex is not None:
            base_tex[i] = atlas.add(mat.base_tex, srgb=True)
        else:
            base[i] = mat.base_color
        if mat.rough_tex is not None:
            rough_tex[i] = atlas.add(mat.rough_tex, srgb=False)
        else:
            rough[i] = mat.roughness
        if mat.metal_tex is not None:
            metal_tex[i] = atlas.add(mat.metal_tex, srgb=False)
        else:
            metal[i] = mat.metallic
    return base, base_tex, rough, rough_tex, metal, metal_tex, uv_scale


def flatten_scene(scene: sc.SceneDescription, frame: int,
                  cache: AssetCache | None = None) -> FlatScene:
    """World-space triangle arrays for one frame (bodies may move per frame)."""
    cache = cache or AssetCache()
    pieces = []  # (mesh, transform, material_index)
    materials: list[sc.Material] = []

    plane_mesh = sc.make_plane(scene.plane.extent, scene.plane.y, scene.plane.uv_tiles)
    materials.append(scene.plane.material)
    pieces.append((plane_mesh, sc.Transform(), 0))

    for b_idx, spec in enumerate(scene.bodies):
        mesh = cache.mesh(spec)
        transform = scene.body_transform(b_idx, frame)
        materials.append(spec.material)
        pieces.append((mesh, transform, len(materials) - 1))

    v_list, n_list, uv_list, mat_list = [], [], [], []
    for mesh, transform, mat_idx in pieces:
        verts = transform.apply_points(mesh.vertices)
        norms = transform.apply_normals(mesh.normals)
        ln = np.linalg.norm(norms, axis=1, keepdims=True)
        norms = norms / np.maximum(ln, 1e-12)
        f = mesh.faces
        v_list.append(verts[f])          # (F, 3, 3)
        n_list.append(norms[f])
        uv_list.append(mesh.uvs[f])      # (F, 3, 2)
        mat_list.append(np.full(f.shape[0], mat_idx, dtype=np.int64))

    tri_v = np.concatenate(v_list)
    tri_n = np.concatenate(n_list)
    tri_uv = np.concatenate(uv_list)
    mat_id = np.concatenate(mat_list)

    atlas = _AtlasBuilder(cache)
    (base, base_tex, rough, rough_tex,
     metal, metal_tex, uv_scale) = _material_arrays(materials, atlas)
    tex_data, tex_off, tex_w, tex_h = atlas.arrays()

    return _build_flat(tri_v, tri_n, tri_uv, mat_id,
                       np.zeros((0, 3, 3)), np.zeros((0, 3)), np.zeros((0, 3)),
                       base, base_tex, rough, rough_tex, metal, metal_tex,
                       uv_scale, tex_data, tex_off, tex_w, tex_h)


def flatten_triangle_soup(tri_v, tri_n, va_albedo, va_rough, va_metal) -> FlatScene:
    """Per-vertex-attribute geometry (depth meshes) -> FlatScene."""
    n = tri_v.shape[0]
    return _build_flat(
        np.asarray(tri_v, dtype=np.float64),
        np.asarray(tri_n, dtype=np.float64),
        np.zeros((n, 3, 2)),
        np.full(n, -1, dtype=np.int64),
        np.asarray(va_albedo, dtype=np.float64),
        np.asarray(va_rough, dtype=np.float64),
        np.asarray(va_metal, dtype=np.float64),
        np.zeros((0, 3)), np.zeros(0, dtype=np.int64),
        np.zeros(0), np.zeros(0, dtype=np.int64),
        np.zeros(0), np.zeros(0, dtype=np.int64), np.ones(0),
        np.zeros(0), np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


def _build_flat(tri_v, tri_n, tri_uv, mat_id, va_albedo, va_rough, va_metal,
                base, base_tex, rough, rough_tex, metal, metal_tex, uv_scale,
                tex_data, tex_off, tex_w, tex_h) -> FlatScene:
    c = np.ascontiguousarray
    v0 = c(tri_v[:, 0])
    e1 = c(tri_v[:, 1] - tri_v[:, 0])
    e2 = c(tri_v[:, 2] - tri_v[:, 0])
    tri_min = tri_v.min(axis=1)
    tri_max = tri_v.max(axis=1)
    bvh = build_bvh(tri_min, tri_max)
    return FlatScene(
        v0=v0, e1=e1, e2=e2,
        n0=c(tri_n[:, 0]), n1=c(tri_n[:, 1]), n2=c(tri_n[:, 2]),
        uv0=c(tri_uv[:, 0]), uv1=c(tri_uv[:, 1]), uv2=c(tri_uv[:, 2]),
        mat_id=c(mat_id), va_albedo=c(va_albedo), va_rough=c(va_rough),
        va_metal=c(va_metal), mat_base=c(base), mat_base_tex=c(base_tex),
        mat_rough=c(rough), mat_rough_tex=c(rough_tex), mat_metal=c(metal),
        mat_metal_tex=c(metal_tex), mat_uv_scale=c(uv_scale),
        tex_data=c(tex_data), tex_off=c(tex_off), tex_w=c(tex_w), tex_h=c(tex_h),
        bvh=bvh)


def scene_environment(scene: sc.SceneDescription, frame: int,
                      cache: AssetCache) -> radiometry.EnvironmentMap:
    """The augmented (and per-frame rotated) environment for one frame."""
    base = cache.env(scene.env.path)
    return radiometry.augment_env(base, yaw=scene.env_yaw_at(frame),
                                  flip=scene.env.flip, scale=scene.env.scale)
