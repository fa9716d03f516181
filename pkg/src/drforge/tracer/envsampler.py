"""Importance sampling of equirectangular environment maps.

Builds a discrete 2D distribution with per-texel probability proportional
to luminance * sin(theta_texel) (equivalently, luminance times the exact
texel solid angle). Sampling picks a texel by CDF inversion and jitters
uniformly in solid angle inside it (uniform azimuth, cos-theta inversion
in elevation), so the density is the piecewise constant
p(texel) / solid_angle(texel), which integrates to exactly 1 over the
sphere and equals 1/(4 pi) everywhere for a uniform map. An all-black map
falls back to uniform sphere sampling at pdf = 1/(4 pi).

Shadow rays evaluate the map with nearest-texel lookups so the radiance
support matches this piecewise-constant density exactly; camera and BRDF
rays use bilinear lookups (see kernels.py).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..radiometry import EnvironmentMap


@dataclass(frozen=True)
class EnvSamplerTables:
    pixels: np.ndarray    # (H, W, 3) float64, intensity scale premultiplied
    marg_cdf: np.ndarray  # (H,) row-marginal CDF
    cond_cdf: np.ndarray  # (H, W) per-row conditional CDF
    pmass: np.ndarray     # (H, W) texel probability mass
    uniform: bool


def build_env_sampler(env: EnvironmentMap | np.ndarray,
                      intensity_scale: float | None = None) -> EnvSamplerTables:
    if isinstance(env, EnvironmentMap):
        pix = env.pixels * (env.intensity_scale if intensity_scale is None
                            else intensity_scale)
    else:
        pix = np.asarray(env, dtype=np.float64)
        if intensity_scale is not None:
            pix = pix * intensity_scale
    pix = np.ascontiguousarray(pix, dtype=np.float64)
    h, w = pix.shape[:2]
    lum = 0.2126 * pix[:, :, 0] + 0.7152 * pix[:, :, 1] + 0.0722 * pix[:, :, 2]
    sin_theta = np.sin(np.pi * (np.arange(h) + 0.5) / h)
    weight = lum * sin_theta[:, None]
    total = weight.sum()
    if total <= 0.0:
        zero = np.zeros((h, w))
        return EnvSamplerTables(pix, np.linspace(1 / h, 1.0, h),
                                np.tile(np.linspace(1 / w, 1.0, w), (h, 1)),
                                zero, uniform=True)
    pmass = weight / total
    row_mass = pmass.sum(axis=1)
    marg_cdf = np.cumsum(row_mass)
    marg_cdf[-1] = 1.0
    safe_rows = np.maximum(row_mass, 1e-300)
    cond_cdf = np.cumsum(pmass, axis=1) / safe_rows[:, None]
    cond_cdf[:, -1] = 1.0
    return EnvSamplerTables(pix, np.ascontiguousarray(marg_cdf),
                            np.ascontiguousarray(cond_cdf),
                            np.ascontiguousarray(pmass), uniform=False)


@njit(cache=True, inline="always")
def _cdf_invert(cdf, u):
    lo, hi = 0, cdf.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] < u:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, inline="always")
def uv_to_dir(u, v):
    theta = np.pi * v
    phi = 2.0 * np.pi * (u - 0.5)
    st = np.sin(theta)
    return st * np.sin(phi), np.cos(theta), -st * np.cos(phi)


@njit(cache=True, inline="always")
def dir_to_uv(dx, dy, dz):
    y = min(max(dy, -1.0), 1.0)
    theta = np.arccos(y)
    phi = np.arctan2(dx, -dz)
    return phi / (2.0 * np.pi) + 0.5, theta / np.pi


@njit(cache=True, inline="always")
def _row_solid_angle(h, w, row):
    ct = np.cos(np.pi * row / h)
    cb = np.cos(np.pi * (row + 1) / h)
    return (2.0 * np.pi / w) * (ct - cb)


@njit(cache=True, inline="always")
def env_sample_dir(marg_cdf, cond_cdf, pmass, uniform, u1, u2):
    """Draw a direction; returns (dx, dy, dz, pdf in 1/sr)."""
    if uniform:
        z = 1.0 - 2.0 * u1
        r = np.sqrt(max(1.0 - z * z, 0.0))
        phi = 2.0 * np.pi * u2
        return r * np.cos(phi), z, r * np.sin(phi), 1.0 / (4.0 * np.pi)
    h, w = pmass.shape
    row = _cdf_invert(marg_cdf, u1)
    lo = marg_cdf[row - 1] if row > 0 else 0.0
    seg = marg_cdf[row] - lo
    ur = (u1 - lo) / seg if seg > 1e-300 else 0.5
    col = _cdf_invert(cond_cdf[row], u2)
    lo2 = cond_cdf[row, col - 1] if col > 0 else 0.0
    seg2 = cond_cdf[row, col] - lo2
    uc = (u2 - lo2) / seg2 if seg2 > 1e-300 else 0.5
    # uniform in solid angle inside the texel: linear in cos(theta)
    ct = np.cos(np.pi * row / h)
    cb = np.cos(np.pi * (row + 1) / h)
    cos_t = ct + ur * (cb - ct)
    st = np.sqrt(max(1.0 - cos_t * cos_t, 0.0))
    phi = 2.0 * np.pi * ((col + uc) / w - 0.5)
    dx = st * np.sin(phi)
    dy = cos_t
    dz = -st * np.cos(phi)
    pdf = pmass[row, col] / _row_solid_angle(h, w, row)
    return dx, dy, dz, pdf


@njit(cache=True, inline="always")
def env_pdf(pmass, uniform, dx, dy, dz):
    """Density of env_sample_dir at an arbitrary direction."""
    if uniform:
        return 1.0 / (4.0 * np.pi)
    h, w = pmass.shape
    u, v = dir_to_uv(dx, dy, dz)
    col = min(max(int(u * w), 0), w - 1)
    row = min(max(int(v * h), 0), h - 1)
    return pmass[row, col] / _row_solid_angle(h, w, row)


@njit(cache=True, inline="always")
def env_radiance_nearest(pixels, dx, dy, dz):
    h, w = pixels.shape[:2]
    u, v = dir_to_uv(dx, dy, dz)
    col = min(max(int(u * w), 0), w - 1)
    row = min(max(int(v * h), 0), h - 1)
    return pixels[row, col, 0], pixels[row, col, 1], pixels[row, col, 2]


@njit(cache=True, inline="always")
def env_radiance_bilinear(pixels, dx, dy, dz):
    h, w = pixels.shape[:2]
    u, v = dir_to_uv(dx, dy, dz)
    x = u * w - 0.5
    y = v * h - 0.5
    x0 = int(np.floor(x))
    y0 = int(np.floor(y))
    fx = x - x0
    fy = y - y0
    x1 = (x0 + 1) % w
    x0 = x0 % w
    y1 = min(max(y0 + 1, 0), h - 1)
    y0 = min(max(y0, 0), h - 1)
    r = ((pixels[y0, x0, 0] * (1 - fx) + pixels[y0, x1, 0] * fx) * (1 - fy)
         + (pixels[y1, x0, 0] * (1 - fx) + pixels[y1, x1, 0] * fx) * fy)
    g = ((pixels[y0, x0, 1] * (1 - fx) + pixels[y0, x1, 1] * fx) * (1 - fy)
         + (pixels[y1, x0, 1] * (1 - fx) + pixels[y1, x1, 1] * fx) * fy)
    b = ((pixels[y0, x0, 2] * (1 - fx) + pixels[y0, x1, 2] * fx) * (1 - fy)
         + (pixels[y1, x0, 2] * (1 - fx) + pixels[y1, x1, 2] * fx) * fy)
    return r, g, b


@njit(cache=True)
def _sample_many(marg_cdf, cond_cdf, pmass, uniform, u1s, u2s, dirs, pdfs):
    for k in range(u1s.shape[0]):
        dx, dy, dz, pdf = env_sample_dir(marg_cdf, cond_cdf, pmass, uniform,
                                         u1s[k], u2s[k])
        dirs[k, 0], dirs[k, 1], dirs[k, 2] = dx, dy, dz
        pdfs[k] = pdf


@njit(cache=True)
def _pdf_many(pmass, uniform, dirs, out):
    for k in range(dirs.shape[0]):
        out[k] = env_pdf(pmass, uniform, dirs[k, 0], dirs[k, 1], dirs[k, 2])


def sample_many(tables: EnvSamplerTables, u1s, u2s):
    """Vectorized sampling entry point for tests and baselines."""
    u1s = np.ascontiguousarray(u1s, dtype=np.float64)
    u2s = np.ascontiguousarray(u2s, dtype=np.float64)
    dirs = np.empty((u1s.shape[0], 3))
    pdfs = np.empty(u1s.shape[0])
    _sample_many(tables.marg_cdf, tables.cond_cdf, tables.pmass,
                 tables.uniform, u1s, u2s, dirs, pdfs)
    return dirs, pdfs


def pdf_many(tables: EnvSamplerTables, dirs):
    dirs = np.ascontiguousarray(np.atleast_2d(dirs), dtype=np.float64)
    out = np.empty(dirs.shape[0])
    _pdf_many(tables.pmass, tables.uniform, dirs, out)
    return out
