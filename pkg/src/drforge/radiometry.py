"""Equirectangular HDR environment maps, tonemapping, and lighting encodings.

Direction convention (fixed so encodings are testable): for a pixel center
(u, v) in [0,1)^2 the polar angle is theta = pi*v measured from +Y and the
azimuth is phi = 2*pi*(u - 0.5) measured from the -Z forward axis, giving

    d = (sin(theta)*sin(phi), cos(theta), -sin(theta)*cos(phi)).

(u, v) = (0.5, 0.5) is therefore the camera forward direction (0, 0, -1)
and v -> 0 is straight up (0, 1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidRadianceError

LOG_MAX_FLOOR = 1e-6


def _check_radiance(x: np.ndarray, what: str = "radiance") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidRadianceError(f"{what} contains non-finite values")
    if np.any(x < 0.0):
        raise InvalidRadianceError(f"{what} contains negative values")
    return x


@dataclass(frozen=True)
class EnvironmentMap:
    """Equirectangular HDR radiance field; width must be 2x height."""

    pixels: np.ndarray  # (H, W, 3) linear radiance
    intensity_scale: float = 1.0

    def __post_init__(self):
        pix = _check_radiance(self.pixels, "environment map")
        if pix.ndim != 3 or pix.shape[2] != 3:
            raise DomainError(f"environment map must be (H, W, 3), got {pix.shape}")
        if pix.shape[1] != 2 * pix.shape[0]:
            raise DomainError(
                f"equirectangular map needs width == 2*height, got {pix.shape[1]}x{pix.shape[0]}")
        if not self.intensity_scale > 0:
            raise DomainError("intensity_scale must be > 0")
        pix = np.ascontiguousarray(pix)
        pix.flags.writeable = False
        object.__setattr__(self, "pixels", pix)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def radiance(self) -> np.ndarray:
        """Pixels with the intensity scale applied."""
        return self.pixels * self.intensity_scale


@dataclass(frozen=True)
class LightingEncoding:
    """The three panoramic conditioning images plus the log normalizer."""

    e_ldr: np.ndarray   # (H, W, 3) in [0, 1]
    e_log: np.ndarray   # (H, W, 3) in [0, 1]
    e_dir: np.ndarray   # (H, W, 3) unit vectors
    e_max: float

    def __post_init__(self):
        if not (self.e_ldr.shape == self.e_log.shape == self.e_dir.shape):
            raise DomainError("encoding images must share one resolution")
        if not self.e_max > 0:
            raise DomainError("e_max must be > 0")


def reinhard_tonemap(hdr) -> np.ndarray:
    """Per-channel x -> x/(1+x); monotone, range [0, 1)."""
    x = _check_radiance(hdr)
    return x / (1.0 + x)


def log_encode(env: EnvironmentMap) -> tuple[np.ndarray, float]:
    """log(E+1)/e_max with e_max = max log intensity, floored at 1e-6."""
    y = np.log1p(env.radiance())
    e_max = max(float(y.max()), LOG_MAX_FLOOR)
    return y / e_max, e_max


def direction_encoding(width: int, height: int,
                       camera_rotation: np.ndarray | None = None) -> np.ndarray:
    """Per-pixel unit direction image, optionally rotated into camera coords."""
    if width != 2 * height:
        raise DomainError(f"direction encoding needs width == 2*height, got {width}x{height}")
    u = (np.arange(width) + 0.5) / width
    v = (np.arange(height) + 0.5) / height
    theta = np.pi * v[:, None]
    phi = 2.0 * np.pi * (u[None, :] - 0.5)
    st = np.sin(theta)
    d = np.empty((height, width, 3))
    d[:, :, 0] = st * np.sin(phi)
    d[:, :, 1] = np.broadcast_to(np.cos(theta), (height, width))
    d[:, :, 2] = -st * np.cos(phi)
    if camera_rotation is not None:
        d = d @ np.asarray(camera_rotation, dtype=np.float64).T
    return d


def dir_to_uv(dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of the pixel-center direction mapping; returns (u, v) in [0,1]."""
    d = np.asarray(dirs, dtype=np.float64)
    y = np.clip(d[..., 1], -1.0, 1.0)
    theta = np.arccos(y)
    phi = np.arctan2(d[..., 0], -d[..., 2])
    u = phi / (2.0 * np.pi) + 0.5
    v = theta / np.pi
    return u, v


def _bilinear_equirect(pixels: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear lookup with horizontal wrap and vertical clamp."""
    h, w = pixels.shape[:2]
    x = u * w - 0.5
    y = v * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x1 = (x0 + 1) % w
    x0 = x0 % w
    y1 = np.clip(y0 + 1, 0, h - 1)
    y0 = np.clip(y0, 0, h - 1)
    top = pixels[y0, x0] * (1 - fx) + pixels[y0, x1] * fx
    bot = pixels[y1, x0] * (1 - fx) + pixels[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def sample_env(env: EnvironmentMap, dirs: np.ndarray) -> np.ndarray:
    """Bilinear radiance lookup in the direction(s) given (unit vectors)."""
    d = np.asarray(dirs, dtype=np.float64)
    norms = np.linalg.norm(d, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-4):
        raise DomainError("sample_env requires unit directions (|d| = 1 +/- 1e-4)")
    u, v = dir_to_uv(d)
    out = _bilinear_equirect(env.pixels, u, v) * env.intensity_scale
    return out


def augment_env(env: EnvironmentMap, yaw: float = 0.0, flip: bool = False,
                scale: float = 1.0) -> EnvironmentMap:
    """Horizontal rotation by ``yaw`` radians, optional mirror, intensity scale.

    Integer-pixel yaws are applied as an exact roll; sub-pixel amounts use a
    bilinear horizontal resample so per-frame light rotation stays smooth.
    """
    if not scale > 0:
        raise DomainError("scale must be > 0")
    h, w = env.height, env.width
    shift = yaw / (2.0 * np.pi) * w
    k = int(np.floor(shift + 0.5))
    frac = shift - k
    pix = env.pixels
    if abs(frac) > 1e-9:
        # fractional shift: out[x] = in[x - shift] sampled bilinearly
        x = (np.arange(w) - frac) % w
        x0 = np.floor(x).astype(np.int64) % w
        x1 = (x0 + 1) % w
        fx = (x - np.floor(x))[None, :, None]
        pix = pix[:, x0] * (1 - fx) + pix[:, x1] * fx
        pix = np.roll(pix, k, axis=1)
    elif k % w != 0:
        pix = np.roll(pix, k, axis=1)
    if flip:
        pix = pix[:, ::-1]
    if scale != 1.0:
        pix = pix * scale
    return EnvironmentMap(np.ascontiguousarray(pix), intensity_scale=env.intensity_scale)


def encode_environment(env: EnvironmentMap,
                       camera_rotation: np.ndarray | None = None) -> LightingEncoding:
    """Bundle the three conditioning images for one environment map."""
    e_ldr = reinhard_tonemap(env.radiance())
    e_log, e_max = log_encode(env)
    e_dir = direction_encoding(env.width, env.height, camera_rotation)
    return LightingEncoding(e_ldr=e_ldr, e_log=e_log, e_dir=e_dir, e_max=e_max)
