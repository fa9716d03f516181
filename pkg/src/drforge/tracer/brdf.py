"""Disney-subset BRDF: coupled Lambert diffuse + GGX microfacet specular.

Specular: GGX normal distribution, height-correlated Smith shadowing,
Schlick Fresnel with F0 = lerp(0.04, base_color, metallic). Sampling draws
visible normals (VNDF) for the specular lobe and cosine directions for the
diffuse lobe, mixed by albedo-weighted probabilities.

The diffuse term is scaled by the reciprocal coupling factor
(1 - E(r, cos_i)) * (1 - E(r, cos_o)) / (1 - E_avg(r)), where E is the
specular lobe's directional albedo at the dielectric F0. This keeps the
total directional-hemispherical reflectance <= 1 for every parameter
combination (exactly 1 for a white diffuse material), which plain
Lambert-plus-specular violates. E comes from a baked table
(ggx_albedo.npz, regenerated by scripts/bake_ggx_albedo.py).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numba import njit

from ..errors import DomainError
from .rng import rng_next

ROUGHNESS_FLOOR = 0.01

_npz = np.load(Path(__file__).parent / "ggx_albedo.npz")
ALBEDO_TABLE = np.ascontiguousarray(_npz["table"])
ALBEDO_AVG = np.ascontiguousarray(_npz["avg"])
_N_R, _N_MU = ALBEDO_TABLE.shape


@njit(cache=True, inline="always")
def _e_spec(table, r, mu):
    """Bilinear lookup of the F0=0.04 specular directional albedo."""
    n_r, n_mu = table.shape
    x = min(max(r, 0.0), 1.0) * (n_r - 1)
    i0 = int(x)
    if i0 >= n_r - 1:
        i0 = n_r - 2
    fx = x - i0
    y = min(max(mu, 0.0), 1.0) * n_mu - 0.5
    j0 = int(np.floor(y))
    fy = y - j0
    if j0 < 0:
        j0, fy = 0, 0.0
    if j0 >= n_mu - 1:
        j0, fy = n_mu - 2, 1.0
    a = table[i0, j0] * (1 - fx) + table[i0 + 1, j0] * fx
    b = table[i0, j0 + 1] * (1 - fx) + table[i0 + 1, j0 + 1] * fx
    return a * (1 - fy) + b * fy


@njit(cache=True, inline="always")
def _e_spec_avg(avg, r):
    n_r = avg.shape[0]
    x = min(max(r, 0.0), 1.0) * (n_r - 1)
    i0 = int(x)
    if i0 >= n_r - 1:
        i0 = n_r - 2
    fx = x - i0
    return avg[i0] * (1 - fx) + avg[i0 + 1] * fx


@njit(cache=True, inline="always")
def _smith_lambda(alpha, c):
    if c >= 1.0:
        return 0.0
    c = max(c, 1e-9)
    t2 = (1.0 - c * c) / (c * c)
    return 0.5 * (-1.0 + np.sqrt(1.0 + alpha * alpha * t2))


@njit(cache=True, inline="always")
def _ggx_d(alpha, ch):
    a2 = alpha * alpha
    d = ch * ch * (a2 - 1.0) + 1.0
    return a2 / (np.pi * d * d)


@njit(cache=True, inline="always")
def _onb(nx, ny, nz):
    """Branchless orthonormal basis (Duff et al.)."""
    s = 1.0 if nz >= 0.0 else -1.0
    a = -1.0 / (s + nz)
    b = nx * ny * a
    t1 = (1.0 + s * nx * nx * a, s * b, -s * nx)
    t2 = (b, s + ny * ny * a, -ny)
    return t1, t2


@njit(cache=True, inline="always")
def _eval_local(br, bg, bb, rough, metal, wox, woy, woz, wix, wiy, wiz, table, avg):
    """f_r in a frame with n = +Z; returns (fr, fg, fb)."""
    co = woz
    ci = wiz
    if co <= 0.0 or ci <= 0.0:
        return 0.0, 0.0, 0.0
    alpha = min(max(rough, ROUGHNESS_FLOOR), 1.0) ** 2
    hx, hy, hz = wox + wix, woy + wiy, woz + wiz
    hl = np.sqrt(hx * hx + hy * hy + hz * hz)
    if hl < 1e-12:
        return 0.0, 0.0, 0.0
    hx, hy, hz = hx / hl, hy / hl, hz / hl
    ch = min(hz, 1.0)
    voh = min(max(wox * hx + woy * hy + woz * hz, 0.0), 1.0)
    d = _ggx_d(alpha, ch)
    g = 1.0 / (1.0 + _smith_lambda(alpha, co) + _smith_lambda(alpha, ci))
    f5 = (1.0 - voh) ** 5
    k_spec = d * g / (4.0 * co * ci)
    f0r = 0.04 + metal * (br - 0.04)
    f0g = 0.04 + metal * (bg - 0.04)
    f0b = 0.04 + metal * (bb - 0.04)
    sr = k_spec * (f0r + (1.0 - f0r) * f5)
    sg = k_spec * (f0g + (1.0 - f0g) * f5)
    sb = k_spec * (f0b + (1.0 - f0b) * f5)
    coup = (1.0 - _e_spec(table, rough, ci)) * (1.0 - _e_spec(table, rough, co)) \
        / (1.0 - _e_spec_avg(avg, rough))
    kd = (1.0 - metal) * coup / np.pi
    return kd * br + sr, kd * bg + sg, kd * bb + sb


@njit(cache=True, inline="always")
def _lobe_probs(br, bg, bb, metal):
    """Specular-lobe selection probability from relative lobe albedos."""
    lum_d = (1.0 - metal) * (0.2126 * br + 0.7152 * bg + 0.0722 * bb)
    f0r = 0.04 + metal * (br - 0.04)
    f0g = 0.04 + metal * (bg - 0.04)
    f0b = 0.04 + metal * (bb - 0.04)
    lum_s = 0.2126 * f0r + 0.7152 * f0g + 0.0722 * f0b
    tot = lum_d + lum_s
    if tot < 1e-12:
        return 0.0
    return lum_s / tot


@njit(cache=True, inline="always")
def _pdf_local(rough, p_spec, wox, woy, woz, wix, wiy, wiz):
    """Mixture density actually used by _sample_local, for any direction."""
    alpha = min(max(rough, ROUGHNESS_FLOOR), 1.0) ** 2
    pdf_d = max(wiz, 0.0) / np.pi
    hx, hy, hz = wox + wix, woy + wiy, woz + wiz
    hl = np.sqrt(hx * hx + hy * hy + hz * hz)
    pdf_s = 0.0
    if hl > 1e-12 and woz > 0.0:
        ch = min(hz / hl, 1.0)
        if ch > 0.0:
            g1 = 1.0 / (1.0 + _smith_lambda(alpha, woz))
            pdf_s = g1 * _ggx_d(alpha, ch) / (4.0 * woz)
    return (1.0 - p_spec) * pdf_d + p_spec * pdf_s


@njit(cache=True, inline="always")
def _sample_vndf(alpha, wox, woy, woz, u1, u2):
    """Visible-normal sampling for GGX (Heitz 2018); wo in local frame."""
    vx, vy, vz = alpha * wox, alpha * woy, woz
    vl = np.sqrt(vx * vx + vy * vy + vz * vz)
    vx, vy, vz = vx / vl, vy / vl, vz / vl
    lensq = vx * vx + vy * vy
    if lensq > 1e-14:
        inv = 1.0 / np.sqrt(lensq)
        t1x, t1y, t1z = -vy * inv, vx * inv, 0.0
    else:
        t1x, t1y, t1z = 1.0, 0.0, 0.0
    t2x = vy * t1z - vz * t1y
    t2y = vz * t1x - vx * t1z
    t2z = vx * t1y - vy * t1x
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    p1 = r * np.cos(phi)
    p2 = r * np.sin(phi)
    s = 0.5 * (1.0 + vz)
    p2 = (1.0 - s) * np.sqrt(max(1.0 - p1 * p1, 0.0)) + s * p2
    p3 = np.sqrt(max(1.0 - p1 * p1 - p2 * p2, 0.0))
    nhx = p1 * t1x + p2 * t2x + p3 * vx
    nhy = p1 * t1y + p2 * t2y + p3 * vy
    nhz = p1 * t1z + p2 * t2z + p3 * vz
    hx, hy, hz = alpha * nhx, alpha * nhy, max(nhz, 1e-9)
    hl = np.sqrt(hx * hx + hy * hy + hz * hz)
    return hx / hl, hy / hl, hz / hl


@njit(cache=True, inline="always")
def _sample_local(state, br, bg, bb, rough, metal, p_spec, wox, woy, woz, table, avg):
    """Draw wi in the local frame. Returns
    (state, wix, wiy, wiz, pdf, vr, vg, vb) with v = f_r * cos_i."""
    alpha = min(max(rough, ROUGHNESS_FLOOR), 1.0) ** 2
    state, u1 = rng_next(state)
    state, u2 = rng_next(state)
    state, u3 = rng_next(state)
    if u1 < p_spec:
        hx, hy, hz = _sample_vndf(alpha, wox, woy, woz, u2, u3)
        voh = wox * hx + woy * hy + woz * hz
        wix = 2.0 * voh * hx - wox
        wiy = 2.0 * voh * hy - woy
        wiz = 2.0 * voh * hz - woz
    else:
        r = np.sqrt(u2)
        phi = 2.0 * np.pi * u3
        wix = r * np.cos(phi)
        wiy = r * np.sin(phi)
        wiz = np.sqrt(max(1.0 - u2, 0.0))
    pdf = _pdf_local(rough, p_spec, wox, woy, woz, wix, wiy, wiz)
    if wiz <= 0.0 or pdf <= 0.0:
        return state, wix, wiy, wiz, max(pdf, 0.0), 0.0, 0.0, 0.0
    fr, fg, fb = _eval_local(br, bg, bb, rough, metal,
                             wox, woy, woz, wix, wiy, wiz, table, avg)
    return state, wix, wiy, wiz, pdf, fr * wiz, fg * wiz, fb * wiz


@njit(cache=True, inline="always")
def _to_local(nx, ny, nz, vx, vy, vz):
    t1, t2 = _onb(nx, ny, nz)
    return (vx * t1[0] + vy * t1[1] + vz * t1[2],
            vx * t2[0] + vy * t2[1] + vz * t2[2],
            vx * nx + vy * ny + vz * nz)


@njit(cache=True, inline="always")
def _to_world(nx, ny, nz, vx, vy, vz):
    t1, t2 = _onb(nx, ny, nz)
    return (vx * t1[0] + vy * t2[0] + vz * nx,
            vx * t1[1] + vy * t2[1] + vz * ny,
            vx * t1[2] + vy * t2[2] + vz * nz)


@njit(cache=True)
def _eval_batch(base, rough, metal, n, wo, wi, table, avg, out):
    for k in range(wi.shape[0]):
        lox, loy, loz = _to_local(n[0], n[1], n[2], wo[0], wo[1], wo[2])
        lix, liy, liz = _to_local(n[0], n[1], n[2], wi[k, 0], wi[k, 1], wi[k, 2])
        fr, fg, fb = _eval_local(base[0], base[1], base[2], rough, metal,
                                 lox, loy, loz, lix, liy, liz, table, avg)
        out[k, 0] = fr
        out[k, 1] = fg
        out[k, 2] = fb


@njit(cache=True)
def _pdf_batch(base, rough, metal, p_spec, n, wo, wi, out):
    for k in range(wi.shape[0]):
        lox, loy, loz = _to_local(n[0], n[1], n[2], wo[0], wo[1], wo[2])
        lix, liy, liz = _to_local(n[0], n[1], n[2], wi[k, 0], wi[k, 1], wi[k, 2])
        out[k] = _pdf_local(rough, p_spec, lox, loy, loz, lix, liy, liz)


@njit(cache=True)
def _sample_batch(seed, base, rough, metal, p_spec, n, wo, table, avg,
                  dirs, pdfs, vals):
    lox, loy, loz = _to_local(n[0], n[1], n[2], wo[0], wo[1], wo[2])
    for k in range(dirs.shape[0]):
        state = np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15) * np.uint64(k + 1)
        state, wix, wiy, wiz, pdf, vr, vg, vb = _sample_local(
            state, base[0], base[1], base[2], rough, metal, p_spec,
            lox, loy, loz, table, avg)
        wx, wy, wz = _to_world(n[0], n[1], n[2], wix, wiy, wiz)
        dirs[k, 0], dirs[k, 1], dirs[k, 2] = wx, wy, wz
        pdfs[k] = pdf
        vals[k, 0], vals[k, 1], vals[k, 2] = vr, vg, vb


# --------------------------------------------------------------------------
# Public (validated, numpy-facing) API
# --------------------------------------------------------------------------


def _check_unit(v, name):
    v = np.asarray(v, dtype=np.float64)
    if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1.0) > 1e-4):
        raise DomainError(f"{name} must be unit-length")
    return v


def brdf_eval(base_color, roughness, metallic, n, wo, wi) -> np.ndarray:
    """f_r for one material and one (or many) incident directions."""
    n = _check_unit(n, "n")
    wo = _check_unit(wo, "wo")
    wi = _check_unit(wi, "wi")
    if float(np.dot(n, wo)) <= 0.0:
        raise DomainError("brdf_eval requires n . wo > 0")
    wi2 = np.atleast_2d(wi)
    out = np.empty((wi2.shape[0], 3))
    _eval_batch(np.asarray(base_color, dtype=np.float64), float(roughness),
                float(metallic), n, wo, np.ascontiguousarray(wi2),
                ALBEDO_TABLE, ALBEDO_AVG, out)
    return out[0] if np.ndim(wi) == 1 else out


def brdf_pdf(base_color, roughness, metallic, n, wo, wi, p_spec=None) -> np.ndarray:
    """Density of sample_brdf in solid angle, for any direction."""
    n = _check_unit(n, "n")
    wo = _check_unit(wo, "wo")
    wi = np.asarray(wi, dtype=np.float64)
    wi2 = np.atleast_2d(wi)
    out = np.empty(wi2.shape[0])
    base = np.asarray(base_color, dtype=np.float64)
    if p_spec is None:
        p_spec = _lobe_probs(base[0], base[1], base[2], float(metallic))
    _pdf_batch(base, float(roughness), float(metallic), float(p_spec),
               n, wo, np.ascontiguousarray(wi2), out)
    return float(out[0]) if wi.ndim == 1 else out


def sample_brdf(base_color, roughness, metallic, n, wo, count=1, seed=0,
                p_spec=None):
    """Draw ``count`` directions; returns (directions, pdfs, values).

    values are f_r * cos_i, so values/pdfs is the unbiased estimator weight.
    Degenerate draws (reflected below the hemisphere) come back with a zero
    value and their true mixture density. ``p_spec`` overrides the
    albedo-weighted specular lobe probability (0 forces pure cosine
    sampling; the returned pdfs use the override).
    """
    n = _check_unit(n, "n")
    wo = _check_unit(wo, "wo")
    if float(np.dot(n, wo)) <= 0.0:
        raise DomainError("sample_brdf requires n . wo > 0")
    base = np.asarray(base_color, dtype=np.float64)
    if p_spec is None:
        p_spec = _lobe_probs(base[0], base[1], base[2], float(metallic))
    dirs = np.empty((count, 3))
    pdfs = np.empty(count)
    vals = np.empty((count, 3))
    _sample_batch(seed, base, float(roughness), float(metallic), float(p_spec),
                  n, wo, ALBEDO_TABLE, ALBEDO_AVG, dirs, pdfs, vals)
    return dirs, pdfs, vals


def specular_albedo(roughness, mu) -> float:
    """Table lookup of the dielectric (F0=0.04) specular directional albedo."""
    return float(_e_spec(ALBEDO_TABLE, float(roughness), float(mu)))
