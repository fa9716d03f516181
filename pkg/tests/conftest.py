import numpy as np
import pytest

from drforge import exrio, scene as sc


@pytest.fixture(scope="session")
def asset_root(tmp_path_factory):
    """Small on-disk asset pool shared across the suite."""
    root = tmp_path_factory.mktemp("assets")
    (root / "meshes").mkdir()
    (root / "textures" / "checker").mkdir(parents=True)
    (root / "textures" / "stripes").mkdir(parents=True)
    (root / "envs").mkdir()

    sc.write_obj(root / "meshes" / "sphere.obj", sc.make_sphere())
    sc.write_obj(root / "meshes" / "box.obj", sc.make_cube())
    sc.write_obj(root / "meshes" / "cyl.obj", sc.make_cylinder())

    yy, xx = np.mgrid[0:16, 0:16]
    checker = ((xx // 4 + yy // 4) % 2).astype(np.float32)
    img = np.stack([checker, 1 - checker, np.full_like(checker, 0.5)], -1)
    exrio.write_png(root / "textures" / "checker" / "basecolor.png",
                    exrio.srgb_encode(img))
    exrio.write_png(root / "textures" / "checker" / "roughness.png",
                    0.3 + 0.4 * checker)
    stripes = (np.sin(xx * 0.8) * 0.5 + 0.5).astype(np.float32)
    img2 = np.stack([stripes, stripes, 1 - stripes], -1)
    exrio.write_png(root / "textures" / "stripes" / "basecolor.png",
                    exrio.srgb_encode(img2))

    rng = np.random.default_rng(0)
    h = 16
    v = (np.arange(h) + 0.5) / h
    sky = np.zeros((h, 2 * h, 3))
    sky[:] = (0.4 + 0.6 * np.cos(np.pi * v))[:, None, None] * np.array([0.7, 0.8, 1.0])
    sky = np.clip(sky, 0.02, None)
    sky[2, 5] = (40.0, 38.0, 30.0)  # a sun-ish hot texel
    exrio.write_rgb_exr(root / "envs" / "sky.exr", sky)
    exrio.write_rgb_exr(root / "envs" / "gray.exr", np.full((8, 16, 3), 0.7))
    return root


def uniform_env_file(path, value, h=8):
    exrio.write_rgb_exr(path, np.full((h, 2 * h, 3), value))
    return str(path)


def simple_camera(pos=(0.0, 1.2, 3.0), target=(0.0, 0.2, 0.0), fov=0.8, frames=1):
    rot = sc.matrix_to_quat(sc.look_at(pos, target))
    return sc.CameraTrack(tuple([tuple(pos)] * frames),
                          tuple([rot] * frames), fov)


def sphere_scene(env_path, width=32, height=32, mat=None, cam=None,
                 sphere_scale=2.0, plane=None):
    """Single sphere, plane shrunk away unless provided."""
    mat = mat or sc.Material(base_color=(1.0, 1.0, 1.0), roughness=1.0, metallic=0.0)
    cam = cam or simple_camera(pos=(0.0, 0.0, 3.0), target=(0.0, 0.0, 0.0), fov=0.6)
    plane = plane or sc.PlaneSpec(extent=1e-4, y=-1e6, material=mat)
    return sc.SceneDescription(
        plane=plane,
        objects=(sc.ObjectSpec(None, "sphere", sc.Transform(scale=sphere_scale), mat),),
        primitives=(),
        env=sc.EnvSpec(str(env_path)),
        camera=cam,
        body_tracks=None,
        env_yaw_per_frame=None,
        motion_kind="static",
        seed=0,
        width=width,
        height=height,
    )
