"""Procedural scene synthesis: sampling, placement, and motion.

Every scene is a textured ground plane with one to three mesh objects
resting on it, up to three primitives (cube/sphere/cylinder) for
inter-reflections, and an augmented HDR environment. Clips carry one of
five motion kinds: camera orbit, camera oscillation, light rotation,
object rotation, object translation.

Placement is rejection sampling over the plane with pairwise AABB
collision tests; bodies that will rotate are placed using their swept
(circumscribed) footprint so every later frame stays collision-free.
(config, seed) fully determines the output; failures raise
GenerationError naming the seed.

Asset pools are plain directories: OBJ meshes, texture sets (a directory
holding basecolor.png plus optional roughness.png / metallic.png), and
equirectangular EXR environment maps. Pool ranges and sizes are
configuration, not claims about any particular dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import scene as sc
from .errors import DomainError, GenerationError
from .tracer.flatten import AssetCache

MOTION_KINDS = ("orbit", "oscillation", "light_rotation",
                "object_rotation", "object_translation")


@dataclass(frozen=True)
class GenConfig:
    asset_dirs: tuple[str, ...]
    texture_dirs: tuple[str, ...]
    env_paths: tuple[str, ...]
    max_objects: int = 3
    max_primitives: int = 3
    plane_extent: float = 4.0
    plane_uv_tiles: tuple[float, float] = (1.0, 4.0)
    object_size: tuple[float, float] = (0.4, 0.9)
    primitive_size: tuple[float, float] = (0.2, 0.6)
    env_scale: tuple[float, float] = (0.5, 2.0)
    cam_distance: tuple[float, float] = (2.2, 3.5)
    cam_elevation: tuple[float, float] = (0.25, 0.9)  # radians above horizon
    fov: tuple[float, float] = (0.6, 0.9)
    motion_weights: tuple[float, float, float, float, float] = (1, 1, 1, 1, 1)
    frames_per_clip: int = 24
    width: int = 512
    height: int = 512
    retry_limit: int = 64

    def __post_init__(self):
        if self.max_objects < 1 or self.max_primitives < 0:
            raise DomainError("max_objects >= 1 and max_primitives >= 0 required")
        if self.retry_limit < 1:
            raise DomainError("retry_limit must be >= 1")
        if self.frames_per_clip < 1:
            raise DomainError("frames_per_clip must be >= 1")


@dataclass(frozen=True)
class AssetPools:
    meshes: tuple[str, ...]
    texture_sets: tuple[str, ...]  # directories
    envs: tuple[str, ...]


def discover_pools(config: GenConfig) -> AssetPools:
    meshes: list[str] = []
    for d in config.asset_dirs:
        meshes.extend(sorted(str(p) for p in Path(d).glob("*.obj")))
    texture_sets: list[str] = []
    for d in config.texture_dirs:
        for sub in sorted(Path(d).iterdir()):
            if sub.is_dir() and (sub / "basecolor.png").exists():
                texture_sets.append(str(sub))
    envs: list[str] = []
    for e in config.env_paths:
        p = Path(e)
        if p.is_dir():
            envs.extend(sorted(str(q) for q in p.glob("*.exr")))
        else:
            envs.append(str(p))
    if not meshes or not texture_sets or not envs:
        raise GenerationError(
            f"empty asset pools: {len(meshes)} meshes, "
            f"{len(texture_sets)} texture sets, {len(envs)} envs")
    return AssetPools(tuple(meshes), tuple(texture_sets), tuple(envs))


def _texture_material(tex_dir: str, rng) -> sc.Material:
    d = Path(tex_dir)
    rough_p = d / "roughness.png"
    metal_p = d / "metallic.png"
    return sc.Material(
        base_color=None,
        base_tex=str(d / "basecolor.png"),
        roughness=None if rough_p.exists() else float(rng.uniform(0.2, 0.9)),
        rough_tex=str(rough_p) if rough_p.exists() else None,
        metallic=None if metal_p.exists() else 0.0,
        metal_tex=str(metal_p) if metal_p.exists() else None,
        uv_scale=1.0,
    )


def _monolithic_material(rng) -> sc.Material:
    metallic = float(rng.uniform(0.0, 1.0)) if rng.random() < 0.4 else 0.0
    return sc.Material(
        base_color=tuple(np.round(rng.uniform(0.05, 0.95, 3), 6)),
        roughness=float(rng.uniform(0.05, 1.0)),
        metallic=metallic,
    )


def _mesh_footprint(mesh: sc.Mesh, transform: sc.Transform):
    """(AABB, swept XZ radius around the transform origin) for one body."""
    box = sc.mesh_aabb(mesh, transform)
    pts = transform.apply_points(mesh.vertices)
    center = np.asarray(transform.translation)
    r = float(np.max(np.hypot(pts[:, 0] - center[0], pts[:, 2] - center[2])))
    return box, r


def _place_bodies(specs, meshes, plane_extent, plane_y, swept, rng, retry_limit,
                  seed):
    """Assign resting positions with disjoint (conservatively inflated) AABBs."""
    placed: list[sc.ObjectSpec] = []
    boxes: list[np.ndarray] = []
    half = plane_extent / 2.0
    for i, (spec, mesh) in enumerate(zip(specs, meshes)):
        ok = False
        for _ in range(retry_limit):
            base = spec.transform
            box0 = sc.mesh_aabb(mesh, replace(base, translation=(0.0, 0.0, 0.0)))
            if swept[i]:
                r = _mesh_footprint(mesh, replace(base, translation=(0, 0, 0)))[1]
                ext_x = ext_z = r
            else:
                ext_x = max(-box0[0, 0], box0[1, 0])
                ext_z = max(-box0[0, 2], box0[1, 2])
            lim_x = half - ext_x
            lim_z = half - ext_z
            if lim_x <= 0 or lim_z <= 0:
                continue  # body larger than the plane: retry (new draw below)
            x = float(rng.uniform(-lim_x, lim_x))
            z = float(rng.uniform(-lim_z, lim_z))
            y = float(plane_y - box0[0, 1])
            t = replace(base, translation=(x, y, z))
            if swept[i]:
                box = np.array([[x - ext_x, plane_y, z - ext_z],
                                [x + ext_x, y + box0[1, 1], z + ext_z]])
            else:
                box = box0 + np.array([x, y, z])
            if any(sc.aabb_overlap(box, b, margin=1e-3) for b in boxes):
                continue
            placed.append(replace(spec, transform=t))
            boxes.append(box)
            ok = True
            break
        if not ok:
            raise GenerationError(
                f"seed {seed}: placement failed for body {i} after "
                f"{retry_limit} tries")
    return placed


def _look_at_quat(eye, target):
    return sc.matrix_to_quat(sc.look_at(eye, target))


def _scene_focus(scene: sc.SceneDescription) -> np.ndarray:
    """Centroid of body positions (plane center if no bodies)."""
    if not scene.bodies:
        return np.array([0.0, scene.plane.y, 0.0])
    pos = np.array([b.transform.translation for b in scene.bodies])
    return pos.mean(axis=0)


@dataclass(frozen=True)
class MotionTracks:
    camera: sc.CameraTrack
    body_tracks: tuple | None
    env_yaw_per_frame: tuple | None


def generate_motion(kind: str, scene: sc.SceneDescription, frames: int,
                    seed: int) -> MotionTracks:
    """Per-frame tracks for one motion kind; the scene supplies frame 0."""
    if kind not in MOTION_KINDS:
        raise DomainError(f"unknown motion kind {kind!r}")
    if frames < 2 and kind != "oscillation":
        raise DomainError(f"motion {kind!r} needs frames >= 2")
    if kind in ("object_rotation", "object_translation") and not scene.objects:
        raise DomainError(f"motion {kind!r} needs at least one object")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xA11CE)))
    pos0, _ = sc.pose_at(scene.camera, 0)
    fov = scene.camera.fov
    focus = _scene_focus(scene)
    static_cam = sc.CameraTrack(tuple([tuple(pos0)] * frames),
                                tuple([scene.camera.rotations[0]] * frames), fov)

    if kind == "orbit":
        offset = pos0 - focus
        radius = float(np.hypot(offset[0], offset[2]))
        az0 = float(np.arctan2(offset[0], offset[2]))
        positions, rotations = [], []
        for t in range(frames):
            az = az0 + 2.0 * np.pi * t / frames
            p = focus + np.array([radius * np.sin(az), offset[1],
                                  radius * np.cos(az)])
            positions.append(tuple(p))
            rotations.append(_look_at_quat(p, focus))
        cam = sc.CameraTrack(tuple(positions), tuple(rotations), fov)
        return MotionTracks(cam, None, None)

    if kind == "oscillation":
        dist = float(np.linalg.norm(pos0 - focus))
        amp = rng.uniform(0.01, 0.05, 3) * dist
        freq = rng.integers(1, 3, 3)
        phase = rng.uniform(0, 2 * np.pi, 3)
        positions, rotations = [], []
        for t in range(frames):
            wob = amp * np.sin(2 * np.pi * freq * t / max(frames, 1) + phase)
            p = pos0 + wob
            positions.append(tuple(p))
            rotations.append(_look_at_quat(p, focus))
        cam = sc.CameraTrack(tuple(positions), tuple(rotations), fov)
        return MotionTracks(cam, None, None)

    if kind == "light_rotation":
        yaw0 = scene.env.yaw
        yaws = tuple(float((yaw0 + 2.0 * np.pi * t / frames) % (2 * np.pi))
                     for t in range(frames))
        return MotionTracks(static_cam, None, yaws)

    n_obj = len(scene.objects)
    if kind == "object_rotation":
        speeds = rng.choice([-1.0, 1.0], n_obj) * rng.uniform(0.5, 1.0, n_obj)
        tracks = []
        for b, spec in enumerate(scene.bodies):
            if b < n_obj:
                track = []
                for t in range(frames):
                    ang = 2.0 * np.pi * speeds[b] * t / frames
                    q = sc.quat_mul(sc.yaw_quat(ang), spec.transform.rotation)
                    track.append(replace(spec.transform, rotation=q))
                tracks.append(tuple(track))
            else:
                tracks.append(tuple([spec.transform] * frames))
        return MotionTracks(static_cam, tuple(tracks), None)

    # object_translation: objects orbit the plane center rigidly
    span = float(rng.choice([-1.0, 1.0]) * rng.uniform(np.pi / 2, 2 * np.pi))
    tracks = []
    for b, spec in enumerate(scene.bodies):
        if b < n_obj:
            x0, y0, z0 = spec.transform.translation
            track = []
            for t in range(frames):
                ang = span * t / frames
                ca, sa = np.cos(ang), np.sin(ang)
                x = ca * x0 + sa * z0
                z = -sa * x0 + ca * z0
                track.append(replace(spec.transform, translation=(x, y0, z)))
            tracks.append(tuple(track))
        else:
            tracks.append(tuple([spec.transform] * frames))
    return MotionTracks(static_cam, tuple(tracks), None)


def check_motion_safety(scene: sc.SceneDescription,
                        cache: AssetCache | None = None,
                        tol: float = 1e-6) -> list[str]:
    """Per-frame AABB overlap and plane-penetration findings (empty = safe)."""
    cache = cache or AssetCache()
    meshes = [cache.mesh(b) for b in scene.bodies]
    half = scene.plane.extent / 2.0
    findings = []
    for f in range(scene.frame_count):
        boxes = [sc.mesh_aabb(m, scene.body_transform(b, f))
                 for b, m in enumerate(meshes)]
        for i in range(len(boxes)):
            if boxes[i][0, 1] < scene.plane.y - tol:
                findings.append(f"frame {f}: body {i} penetrates the plane")
            if (boxes[i][0, 0] < -half - tol or boxes[i][1, 0] > half + tol
                    or boxes[i][0, 2] < -half - tol or boxes[i][1, 2] > half + tol):
                findings.append(f"frame {f}: body {i} leaves the plane")
            for j in range(i + 1, len(boxes)):
                if sc.aabb_overlap(boxes[i], boxes[j]):
                    findings.append(f"frame {f}: bodies {i} and {j} overlap")
    return findings


def generate_scene(config: GenConfig, seed: int,
                   cache: AssetCache | None = None) -> sc.SceneDescription:
    """Deterministic procedural scene for (config, seed)."""
    pools = discover_pools(config)
    cache = cache or AssetCache()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5CE11E)))

    kind = MOTION_KINDS[rng.choice(len(MOTION_KINDS),
                                   p=np.asarray(config.motion_weights, float)
                                   / np.sum(config.motion_weights))]

    plane_mat = _texture_material(pools.texture_sets[rng.integers(
        len(pools.texture_sets))], rng)
    plane_mat = replace(plane_mat, uv_scale=1.0)
    plane = sc.PlaneSpec(extent=config.plane_extent, y=0.0, material=plane_mat,
                         uv_tiles=float(rng.uniform(*config.plane_uv_tiles)))

    env_path = pools.envs[rng.integers(len(pools.envs))]
    env = sc.EnvSpec(path=env_path,
                     yaw=float(rng.uniform(0, 2 * np.pi)),
                     flip=bool(rng.random() < 0.5),
                     scale=float(rng.uniform(*config.env_scale)))

    n_obj = int(rng.integers(1, config.max_objects + 1))
    n_prim = int(rng.integers(0, config.max_primitives + 1))

    specs: list[sc.ObjectSpec] = []
    meshes: list[sc.Mesh] = []
    for _ in range(n_obj):
        path = pools.meshes[rng.integers(len(pools.meshes))]
        spec = sc.ObjectSpec(mesh_path=path, primitive=None,
                             transform=sc.Transform(), material=sc.Material())
        mesh = cache.mesh(spec)
        box = sc.mesh_aabb(mesh)
        size = float(np.max(box[1] - box[0]))
        target = float(rng.uniform(*config.object_size))
        tr = sc.Transform(rotation=sc.yaw_quat(float(rng.uniform(0, 2 * np.pi))),
                          scale=target / max(size, 1e-9))
        if rng.random() < 0.5:
            mat = _texture_material(
                pools.texture_sets[rng.integers(len(pools.texture_sets))], rng)
            mat = replace(mat, uv_scale=float(rng.uniform(1.0, 3.0)))
        else:
            mat = _monolithic_material(rng)
        specs.append(sc.ObjectSpec(path, None, tr, mat))
        meshes.append(mesh)
    for _ in range(n_prim):
        prim = ("cube", "sphere", "cylinder")[rng.integers(3)]
        spec = sc.ObjectSpec(None, prim, sc.Transform(), sc.Material())
        mesh = cache.mesh(spec)
        target = float(rng.uniform(*config.primitive_size))
        tr = sc.Transform(rotation=sc.yaw_quat(float(rng.uniform(0, 2 * np.pi))),
                          scale=target)  # primitives are unit-sized
        if rng.random() < 0.5:
            mat = _texture_material(
                pools.texture_sets[rng.integers(len(pools.texture_sets))], rng)
            mat = replace(mat, uv_scale=float(rng.uniform(1.0, 3.0)))
        else:
            mat = _monolithic_material(rng)
        specs.append(sc.ObjectSpec(None, prim, tr, mat))
        meshes.append(mesh)

    swept = [kind == "object_rotation" and i < n_obj for i in range(len(specs))]
    frames = config.frames_per_clip
    fov = float(rng.uniform(*config.fov))
    elev = float(rng.uniform(*config.cam_elevation))
    azim = float(rng.uniform(0, 2 * np.pi))
    dist = float(rng.uniform(*config.cam_distance))
    motion_seed = int(rng.integers(0, 2**31))

    # placement and motion are sampled jointly: a motion that collides (e.g.
    # a translation orbit sweeping through a static primitive) triggers a
    # full re-placement rather than conservative sweep bounds
    last_error = None
    for attempt in range(config.retry_limit):
        try:
            placed = _place_bodies(specs, meshes, config.plane_extent, plane.y,
                                   swept, rng, config.retry_limit, seed)
        except GenerationError as e:
            last_error = e
            continue
        focus = np.array([b.transform.translation for b in placed]).mean(axis=0)
        cam_pos = focus + dist * np.array([np.cos(elev) * np.sin(azim),
                                           np.sin(elev),
                                           np.cos(elev) * np.cos(azim)])
        camera = sc.CameraTrack((tuple(cam_pos),),
                                (_look_at_quat(cam_pos, focus),), fov)
        scene = sc.SceneDescription(
            plane=plane, objects=tuple(placed[:n_obj]),
            primitives=tuple(placed[n_obj:]), env=env,
            camera=camera, body_tracks=None, env_yaw_per_frame=None,
            motion_kind=kind, seed=seed, width=config.width,
            height=config.height)
        tracks = generate_motion(kind, scene, frames, motion_seed + attempt)
        candidate = replace(scene, camera=tracks.camera,
                            body_tracks=tracks.body_tracks,
                            env_yaw_per_frame=tracks.env_yaw_per_frame)
        if not check_motion_safety(candidate, cache):
            return candidate
    if last_error is not None:
        raise last_error
    raise GenerationError(
        f"seed {seed}: no collision-free {kind} motion after "
        f"{config.retry_limit} attempts")
