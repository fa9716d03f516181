import numpy as np
import pytest

from drforge import scene as sc
from drforge.errors import DomainError, FormatError


def simple_material():
    return sc.Material(base_color=(0.5, 0.4, 0.3), roughness=0.7, metallic=0.1)


def static_track(pos=(0.0, 1.0, 3.0), fov=0.9, frames=1):
    rot = sc.matrix_to_quat(sc.look_at(pos, (0, 0, 0)))
    return sc.CameraTrack(tuple([tuple(pos)] * frames), tuple([rot] * frames), fov)


def minimal_scene(frames=1):
    return sc.SceneDescription(
        plane=sc.PlaneSpec(extent=4.0, y=0.0, material=simple_material()),
        objects=(sc.ObjectSpec(None, "sphere",
                               sc.Transform((0, 0.5, 0)), simple_material()),),
        primitives=(),
        env=sc.EnvSpec("env.exr", yaw=0.3, flip=True, scale=1.5),
        camera=static_track(frames=frames),
        body_tracks=None,
        env_yaw_per_frame=None,
        motion_kind="orbit",
        seed=42,
        width=64, height=64,
    )


# -- aabb ---------------------------------------------------------------------

def test_aabb_unit_cube():
    box = sc.mesh_aabb(sc.make_cube())
    np.testing.assert_allclose(box, [[-0.5] * 3, [0.5] * 3], atol=1e-12)


def test_aabb_scaled_cube():
    box = sc.mesh_aabb(sc.make_cube(), sc.Transform(scale=2.0))
    np.testing.assert_allclose(box, [[-1.0] * 3, [1.0] * 3], atol=1e-12)


def test_aabb_translated_sphere():
    # diameter-1 sphere scaled x2 = radius 1, moved to (3, 0, 0)
    box = sc.mesh_aabb(sc.make_sphere(), sc.Transform((3.0, 0.0, 0.0), scale=2.0))
    np.testing.assert_allclose(box, [[2, -1, -1], [4, 1, 1]], atol=1e-9)


def test_aabb_empty_mesh_errors():
    with pytest.raises(DomainError):
        sc.mesh_aabb(sc.Mesh(np.zeros((0, 3)), np.zeros((0, 3)),
                             np.zeros((0, 2)), np.zeros((0, 3), np.int32)))


# -- pose_at ------------------------------------------------------------------

def test_pose_at_static():
    trk = static_track(frames=3)
    pos, rot = sc.pose_at(trk, 0)
    np.testing.assert_allclose(pos, (0, 1, 3))
    assert rot.shape == (3, 3)


def test_pose_at_orbit_half_turn():
    # linear azimuth schedule: frame F/2 of a 2*pi orbit is rotated 180 deg
    f_count, radius = 8, 3.0
    positions, rotations = [], []
    for t in range(f_count):
        az = 2 * np.pi * t / f_count
        pos = (radius * np.sin(az), 1.0, radius * np.cos(az))
        positions.append(pos)
        rotations.append(sc.matrix_to_quat(sc.look_at(pos, (0, 1, 0))))
    trk = sc.CameraTrack(tuple(positions), tuple(rotations), 0.9)
    p0, _ = sc.pose_at(trk, 0)
    ph, _ = sc.pose_at(trk, f_count // 2)
    np.testing.assert_allclose(ph[[0, 2]], -p0[[0, 2]], atol=1e-12)


def test_pose_at_out_of_range():
    trk = static_track(frames=4)
    with pytest.raises(IndexError):
        sc.pose_at(trk, 4)
    with pytest.raises(IndexError):
        sc.pose_at(trk, -1)


# -- serialization -------------------------------------------------------------

def test_scene_roundtrip_value_identical(tmp_path):
    scene = minimal_scene(frames=3)
    path = tmp_path / "scene.json"
    sc.save_scene(path, scene)
    back = sc.load_scene(path)
    assert back == scene


def test_scene_roundtrip_with_tracks(tmp_path):
    base = minimal_scene(frames=2)
    tracks = (tuple(sc.Transform((0.1 * t, 0.5, 0.0)) for t in range(2)),)
    scene = sc.SceneDescription(
        **{**base.__dict__, "body_tracks": tracks,
           "env_yaw_per_frame": (0.0, 0.5)})
    path = tmp_path / "scene.json"
    sc.save_scene(path, scene)
    assert sc.load_scene(path) == scene


def test_scene_schema_version_check(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"schema_version": 999}')
    with pytest.raises(FormatError):
        sc.load_scene(p)


# -- OBJ I/O --------------------------------------------------------------------

def test_obj_roundtrip(tmp_path):
    mesh = sc.make_cylinder(n_u=8)
    p = tmp_path / "m.obj"
    sc.write_obj(p, mesh)
    back = sc.read_obj(p)
    assert back.n_triangles == mesh.n_triangles
    np.testing.assert_allclose(sc.mesh_aabb(back), sc.mesh_aabb(mesh), atol=1e-12)
    # triangle soups may reindex; compare per-face corner positions
    np.testing.assert_allclose(back.vertices[back.faces], mesh.vertices[mesh.faces],
                               atol=1e-12)


def test_obj_without_normals_gets_smooth_ones(tmp_path):
    p = tmp_path / "tri.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    mesh = sc.read_obj(p)
    np.testing.assert_allclose(mesh.normals, [[0, 0, 1]] * 3, atol=1e-12)


def test_obj_no_faces_errors(tmp_path):
    p = tmp_path / "e.obj"
    p.write_text("v 0 0 0\n")
    with pytest.raises(FormatError):
        sc.read_obj(p)


# -- textures -------------------------------------------------------------------

def test_texture_sample_in_bounds_and_bilinear():
    data = np.zeros((2, 2, 3), np.float32)
    data[0, 0] = 1.0
    tex = sc.Texture(data)
    # center of texel (0,0)
    np.testing.assert_allclose(tex.sample(0.25, 0.25), [1, 1, 1], atol=1e-6)
    # midpoint between the two top texels
    np.testing.assert_allclose(tex.sample(0.5, 0.25), [0.5] * 3, atol=1e-6)
    # repeat wrapping
    np.testing.assert_allclose(tex.sample(1.25, 0.25), tex.sample(0.25, 0.25), atol=1e-6)
    vals = tex.sample(np.linspace(0, 2, 40), np.linspace(0, 2, 40))
    assert vals.min() >= 0.0 and vals.max() <= 1.0


def test_texture_clamps_out_of_range_input():
    tex = sc.Texture(np.array([[[2.0, -1.0, 0.5]]], np.float32))
    np.testing.assert_allclose(tex.sample(0.5, 0.5), [1.0, 0.0, 0.5], atol=1e-6)


# -- materials / validation -------------------------------------------------------

def test_material_channel_bounds():
    with pytest.raises(DomainError):
        sc.Material(base_color=(1.2, 0, 0))
    with pytest.raises(DomainError):
        sc.Material(roughness=1.5)
    with pytest.raises(DomainError):
        sc.Material(metallic=-0.1)


def test_scene_body_count_bounds():
    base = minimal_scene()
    objs = tuple(sc.ObjectSpec(None, "cube", sc.Transform(), simple_material())
                 for _ in range(4))
    with pytest.raises(DomainError):
        sc.SceneDescription(**{**base.__dict__, "objects": objs})


def test_camera_rotation_orthonormality_enforced():
    with pytest.raises(DomainError):
        sc.CameraTrack(((0, 0, 0),), ((1.0, 0.0, 0.0, 0.0),), fov=0.9) \
            .__class__(((0, 0, 0),), ((0.0, 0.0, 0.0, 0.0),), fov=0.9)


# -- projection helpers ------------------------------------------------------------

def test_project_unproject_roundtrip():
    rng = np.random.default_rng(3)
    w, h, fov = 96, 64, 0.8
    px = rng.uniform(0, w - 1, 200)
    py = rng.uniform(0, h - 1, 200)
    depth = rng.uniform(0.5, 10.0, 200)
    pts = sc.unproject_pixels(px, py, depth, fov, w, h)
    qx, qy, qd = sc.project_points(pts, fov, w, h)
    np.testing.assert_allclose(qx, px, atol=1e-9)
    np.testing.assert_allclose(qy, py, atol=1e-9)
    np.testing.assert_allclose(qd, depth, atol=1e-9)


def test_look_at_points_minus_z_at_target():
    eye = np.array([1.0, 2.0, 3.0])
    rot = sc.look_at(eye, (0, 0, 0))
    fwd_world = rot @ np.array([0.0, 0.0, -1.0])
    expect = -eye / np.linalg.norm(eye)
    np.testing.assert_allclose(fwd_world, expect, atol=1e-12)
    np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-12)


def test_quat_matrix_roundtrip():
    rng = np.random.default_rng(8)
    for _ in range(50):
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        m = sc.quat_to_matrix(q)
        q2 = sc.matrix_to_quat(m)
        m2 = sc.quat_to_matrix(q2)
        np.testing.assert_allclose(m2, m, atol=1e-10)
