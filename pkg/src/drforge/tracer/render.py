"""Public rendering API: HDR clip rendering and G-buffer passes.

Work is banded over image rows and dispatched to a thread pool (kernels
are nogil); every pixel owns its RNG stream, so results are bitwise
identical for any thread count. Depth in G-buffers is normalized per clip
over hit pixels to [-1, 1]; misses carry depth +1, zero materials, zero
normals, and hit=False. Constant-depth clips map to -1.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..scene import SceneDescription, pose_at
from .brdf import ALBEDO_AVG, ALBEDO_TABLE
from .envsampler import EnvSamplerTables, build_env_sampler
from .flatten import AssetCache, FlatScene, flatten_scene, scene_environment
from .kernels import LIGHT_BRDF, LIGHT_MIS, LIGHT_NEE, gbuffer_rows, trace_rows

_LIGHT_MODES = {"mis": LIGHT_MIS, "brdf": LIGHT_BRDF, "nee": LIGHT_NEE}


def default_threads() -> int:
    env = os.environ.get("DR_FORGE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class RenderSettings:
    spp: int = 16
    max_bounces: int = 4
    seed: int = 0
    tonemap: str = "agx"
    firefly_clamp: float = 64.0
    light_sampling: str = "mis"
    threads: int | None = None

    def __post_init__(self):
        if self.spp < 1:
            raise DomainError("spp must be >= 1")
        if self.max_bounces < 1:
            raise DomainError("max_bounces must be >= 1")
        if self.tonemap not in ("agx", "reinhard"):
            raise DomainError(f"unknown tonemap {self.tonemap!r}")
        if self.light_sampling not in _LIGHT_MODES:
            raise DomainError(f"unknown light_sampling {self.light_sampling!r}")


@dataclass
class GBuffer:
    normal: np.ndarray      # (H, W, 3) camera-space unit vectors (hits)
    depth: np.ndarray       # (H, W) in [-1, 1]
    base_color: np.ndarray  # (H, W, 3) in [0, 1]
    roughness: np.ndarray   # (H, W) in [0, 1]
    metallic: np.ndarray    # (H, W) in [0, 1]
    hit: np.ndarray         # (H, W) bool
    depth_range: tuple[float, float]  # per-clip (z_min, z_max), view space

    @property
    def resolution(self) -> tuple[int, int]:
        return self.depth.shape[0], self.depth.shape[1]


def _band_ranges(height: int, threads: int):
    band = max(1, height // (threads * 4)) if threads > 1 else height
    return [(y, min(y + band, height)) for y in range(0, height, band)]


def _run_banded(fn, height: int, threads: int, args):
    bands = _band_ranges(height, threads)
    if threads <= 1 or len(bands) == 1:
        for y0, y1 in bands:
            fn(y0, y1, *args)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, y0, y1, *args) for y0, y1 in bands]
        for fut in futures:
            fut.result()


def _camera_args(scene: SceneDescription, frame: int):
    pos, rot = pose_at(scene.camera, frame)
    tan_half = float(np.tan(scene.camera.fov / 2.0))
    aspect = scene.width / scene.height
    return (np.ascontiguousarray(pos), np.ascontiguousarray(rot),
            tan_half, aspect)


def _flat_args(flat: FlatScene):
    return (flat.bvh.bounds, flat.bvh.child, flat.bvh.order,
            flat.v0, flat.e1, flat.e2,
            flat.n0, flat.n1, flat.n2, flat.uv0, flat.uv1, flat.uv2,
            flat.mat_id, flat.va_albedo, flat.va_rough, flat.va_metal,
            flat.mat_base, flat.mat_base_tex, flat.mat_rough,
            flat.mat_rough_tex, flat.mat_metal, flat.mat_metal_tex,
            flat.mat_uv_scale, flat.tex_data, flat.tex_off,
            flat.tex_w, flat.tex_h)


def trace_frame_flat(flat: FlatScene, env_tables: EnvSamplerTables,
                     cam_pos, cam_rot, fov: float, width: int, height: int,
                     settings: RenderSettings, frame_idx: int = 0) -> np.ndarray:
    """Path-trace arbitrary flattened geometry (also used by the SSRT baseline)."""
    out = np.zeros((height, width, 3))
    threads = settings.threads or default_threads()
    tan_half = float(np.tan(fov / 2.0))
    aspect = width / height
    args = (out, width, height, settings.spp, settings.max_bounces,
            settings.seed, frame_idx, settings.firefly_clamp,
            _LIGHT_MODES[settings.light_sampling],
            np.ascontiguousarray(cam_pos, dtype=np.float64),
            np.ascontiguousarray(cam_rot, dtype=np.float64),
            tan_half, aspect,
            *_flat_args(flat),
            env_tables.pixels, env_tables.marg_cdf, env_tables.cond_cdf,
            env_tables.pmass, env_tables.uniform,
            ALBEDO_TABLE, ALBEDO_AVG)
    _run_banded(trace_rows, height, threads, args)
    return out


def render(scene: SceneDescription, settings: RenderSettings | None = None,
           frames: list[int] | None = None,
           cache: AssetCache | None = None) -> np.ndarray:
    """Path-trace a clip; returns linear HDR frames (F, H, W, 3) float64."""
    settings = settings or RenderSettings()
    cache = cache or AssetCache()
    frame_list = list(range(scene.frame_count)) if frames is None else list(frames)
    out = np.zeros((len(frame_list), scene.height, scene.width, 3))

    static_bodies = scene.body_tracks is None
    static_env = scene.env_yaw_per_frame is None
    flat = env_tables = None
    for i, f in enumerate(frame_list):
        if flat is None or not static_bodies:
            flat = flatten_scene(scene, f, cache)
        if env_tables is None or not static_env:
            env = scene_environment(scene, f, cache)
            env_tables = build_env_sampler(env)
        pos, rot, tan_half, aspect = _camera_args(scene, f)
        out[i] = trace_frame_flat(flat, env_tables, pos, rot, scene.camera.fov,
                                  scene.width, scene.height, settings,
                                  frame_idx=f)
    return out


def _gbuffer_raw(scene: SceneDescription, frame: int, cache: AssetCache,
                 threads: int):
    h, w = scene.height, scene.width
    normal = np.zeros((h, w, 3))
    depth = np.zeros((h, w))
    base = np.zeros((h, w, 3))
    rough = np.zeros((h, w))
    metal = np.zeros((h, w))
    hit = np.zeros((h, w))
    flat = flatten_scene(scene, frame, cache)
    pos, rot, tan_half, aspect = _camera_args(scene, frame)
    args = (normal, depth, base, rough, metal, hit, w, h, pos, rot,
            tan_half, aspect, *_flat_args(flat))
    _run_banded(gbuffer_rows, h, threads, args)
    return normal, depth, base, rough, metal, hit.astype(bool)


def _normalize_depth(depth_raw: np.ndarray, hit: np.ndarray,
                     z_min: float, z_max: float) -> np.ndarray:
    out = np.ones_like(depth_raw)  # misses carry +1
    if z_max - z_min > 1e-12:
        out[hit] = -1.0 + 2.0 * (depth_raw[hit] - z_min) / (z_max - z_min)
        np.clip(out, -1.0, 1.0, out=out)
    else:
        out[hit] = -1.0  # degenerate constant-depth clip
    return out


def render_gbuffer(scene: SceneDescription, frame: int,
                   cache: AssetCache | None = None,
                   depth_range: tuple[float, float] | None = None,
                   threads: int | None = None) -> GBuffer:
    """G-buffer for one frame. Without ``depth_range`` the frame normalizes
    its own hit depths (single-frame clip); pass the clip range for videos."""
    cache = cache or AssetCache()
    threads = threads or default_threads()
    normal, depth_raw, base, rough, metal, hit = _gbuffer_raw(
        scene, frame, cache, threads)
    if depth_range is None:
        if hit.any():
            depth_range = (float(depth_raw[hit].min()), float(depth_raw[hit].max()))
        else:
            depth_range = (0.0, 0.0)
    depth = _normalize_depth(depth_raw, hit, *depth_range)
    return GBuffer(normal=normal, depth=depth, base_color=base, roughness=rough,
                   metallic=metal, hit=hit, depth_range=depth_range)


def render_gbuffer_clip(scene: SceneDescription,
                        cache: AssetCache | None = None,
                        threads: int | None = None) -> list[GBuffer]:
    """G-buffers for all frames with one shared per-clip depth range."""
    cache = cache or AssetCache()
    threads = threads or default_threads()
    raw = [_gbuffer_raw(scene, f, cache, threads)
           for f in range(scene.frame_count)]
    z_min, z_max = np.inf, -np.inf
    for _, depth_raw, _, _, _, hit in raw:
        if hit.any():
            z_min = min(z_min, float(depth_raw[hit].min()))
            z_max = max(z_max, float(depth_raw[hit].max()))
    if not np.isfinite(z_min):
        z_min = z_max = 0.0
    out = []
    for normal, depth_raw, base, rough, metal, hit in raw:
        depth = _normalize_depth(depth_raw, hit, z_min, z_max)
        out.append(GBuffer(normal=normal, depth=depth, base_color=base,
                           roughness=rough, metallic=metal, hit=hit,
                           depth_range=(z_min, z_max)))
    return out
