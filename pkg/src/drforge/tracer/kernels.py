"""Numba kernels: path tracing and G-buffer rasterization by ray casting.

Kernels are nogil and row-banded; the dispatcher in render.py fans bands
out over a thread pool. Every pixel derives its own RNG stream from
(seed, frame, x, y, sample), so output is bitwise reproducible and
independent of the thread count.

Light transport: next-event estimation against the environment combined
with BRDF sampling via the balance heuristic. Shadow rays use
nearest-texel radiance (matching the piecewise-constant sampling density
exactly); camera and BRDF rays use bilinear lookups. light_mode selects
MIS (0), BRDF-only (1), or NEE-only (2) — the single-strategy modes exist
for the estimator-consistency checks.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .brdf import (
    _eval_local,
    _lobe_probs,
    _pdf_local,
    _sample_local,
    _to_local,
    _to_world,
)
from .bvh import any_hit, closest_hit
from .envsampler import (
    env_pdf,
    env_radiance_bilinear,
    env_radiance_nearest,
    env_sample_dir,
)
from .rng import rng_init, rng_next

LIGHT_MIS, LIGHT_BRDF, LIGHT_NEE = 0, 1, 2


@njit(cache=True, inline="always")
def _tex_fetch(tex_data, tex_off, tex_w, tex_h, tex_id, u, v):
    """Bilinear atlas fetch with repeat wrapping; returns (r, g, b)."""
    w = tex_w[tex_id]
    h = tex_h[tex_id]
    off = tex_off[tex_id]
    x = u * w - 0.5
    y = v * h - 0.5
    x0 = int(np.floor(x))
    y0 = int(np.floor(y))
    fx = x - x0
    fy = y - y0
    x1 = (x0 + 1) % w
    x0 = x0 % w
    y1 = (y0 + 1) % h
    y0 = y0 % h
    r = g = b = 0.0
    wgt00 = (1 - fx) * (1 - fy)
    wgt10 = fx * (1 - fy)
    wgt01 = (1 - fx) * fy
    wgt11 = fx * fy
    p = off + (y0 * w + x0) * 3
    r += tex_data[p] * wgt00
    g += tex_data[p + 1] * wgt00
    b += tex_data[p + 2] * wgt00
    p = off + (y0 * w + x1) * 3
    r += tex_data[p] * wgt10
    g += tex_data[p + 1] * wgt10
    b += tex_data[p + 2] * wgt10
    p = off + (y1 * w + x0) * 3
    r += tex_data[p] * wgt01
    g += tex_data[p + 1] * wgt01
    b += tex_data[p + 2] * wgt01
    p = off + (y1 * w + x1) * 3
    r += tex_data[p] * wgt11
    g += tex_data[p + 1] * wgt11
    b += tex_data[p + 2] * wgt11
    return r, g, b


@njit(cache=True, inline="always")
def _shading_at(fs_n0, fs_n1, fs_n2, fs_uv0, fs_uv1, fs_uv2, fs_mat,
                fs_va_albedo, fs_va_rough, fs_va_metal,
                mat_base, mat_base_tex, mat_rough, mat_rough_tex,
                mat_metal, mat_metal_tex, mat_uv_scale,
                tex_data, tex_off, tex_w, tex_h, tri, bu, bv):
    """Interpolated shading data at hit (tri, bu, bv).

    Returns (nx, ny, nz unnormalized shading normal, br, bg, bb, rough, metal).
    """
    w0 = 1.0 - bu - bv
    nx = w0 * fs_n0[tri, 0] + bu * fs_n1[tri, 0] + bv * fs_n2[tri, 0]
    ny = w0 * fs_n0[tri, 1] + bu * fs_n1[tri, 1] + bv * fs_n2[tri, 1]
    nz = w0 * fs_n0[tri, 2] + bu * fs_n1[tri, 2] + bv * fs_n2[tri, 2]
    m = fs_mat[tri]
    if m < 0:
        br = w0 * fs_va_albedo[tri, 0, 0] + bu * fs_va_albedo[tri, 1, 0] \
            + bv * fs_va_albedo[tri, 2, 0]
        bg = w0 * fs_va_albedo[tri, 0, 1] + bu * fs_va_albedo[tri, 1, 1] \
            + bv * fs_va_albedo[tri, 2, 1]
        bb = w0 * fs_va_albedo[tri, 0, 2] + bu * fs_va_albedo[tri, 1, 2] \
            + bv * fs_va_albedo[tri, 2, 2]
        rough = w0 * fs_va_rough[tri, 0] + bu * fs_va_rough[tri, 1] \
            + bv * fs_va_rough[tri, 2]
        metal = w0 * fs_va_metal[tri, 0] + bu * fs_va_metal[tri, 1] \
            + bv * fs_va_metal[tri, 2]
        return nx, ny, nz, br, bg, bb, rough, metal
    scale = mat_uv_scale[m]
    u = (w0 * fs_uv0[tri, 0] + bu * fs_uv1[tri, 0] + bv * fs_uv2[tri, 0]) * scale
    v = (w0 * fs_uv0[tri, 1] + bu * fs_uv1[tri, 1] + bv * fs_uv2[tri, 1]) * scale
    if mat_base_tex[m] >= 0:
        br, bg, bb = _tex_fetch(tex_data, tex_off, tex_w, tex_h, mat_base_tex[m], u, v)
    else:
        br = mat_base[m, 0]
        bg = mat_base[m, 1]
        bb = mat_base[m, 2]
    if mat_rough_tex[m] >= 0:
        rough, _, _ = _tex_fetch(tex_data, tex_off, tex_w, tex_h, mat_rough_tex[m], u, v)
    else:
        rough = mat_rough[m]
    if mat_metal_tex[m] >= 0:
        metal, _, _ = _tex_fetch(tex_data, tex_off, tex_w, tex_h, mat_metal_tex[m], u, v)
    else:
        metal = mat_metal[m]
    return nx, ny, nz, br, bg, bb, rough, metal


@njit(cache=True, inline="always")
def _camera_ray(cam_pos, cam_rot, tan_half, aspect, width, height, px, py):
    ndc_x = (px + 0.5) / width * 2.0 - 1.0
    ndc_y = 1.0 - (py + 0.5) / height * 2.0
    cx = ndc_x * tan_half * aspect
    cy = ndc_y * tan_half
    cz = -1.0
    dx = cam_rot[0, 0] * cx + cam_rot[0, 1] * cy + cam_rot[0, 2] * cz
    dy = cam_rot[1, 0] * cx + cam_rot[1, 1] * cy + cam_rot[1, 2] * cz
    dz = cam_rot[2, 0] * cx + cam_rot[2, 1] * cy + cam_rot[2, 2] * cz
    n = np.sqrt(dx * dx + dy * dy + dz * dz)
    return cam_pos[0], cam_pos[1], cam_pos[2], dx / n, dy / n, dz / n


@njit(cache=True, nogil=True)
def trace_rows(y0, y1, out,
               width, height, spp, max_bounces, seed, frame_idx,
               clamp_val, light_mode,
               cam_pos, cam_rot, tan_half, aspect,
               bvh_bounds, bvh_child, bvh_order, v0, e1, e2,
               n0, n1, n2, uv0, uv1, uv2, mat_id,
               va_albedo, va_rough, va_metal,
               mat_base, mat_base_tex, mat_rough, mat_rough_tex,
               mat_metal, mat_metal_tex, mat_uv_scale,
               tex_data, tex_off, tex_w, tex_h,
               env_pix, marg_cdf, cond_cdf, pmass, env_uniform,
               table, avg):
    """Path-trace rows [y0, y1) into out (H, W, 3)."""
    inv_spp = 1.0 / spp
    for py in range(y0, y1):
        for px in range(width):
            acc_r = acc_g = acc_b = 0.0
            for s in range(spp):
                state = rng_init(seed, frame_idx, px, py, s)
                state, jx = rng_next(state)
                state, jy = rng_next(state)
                ox, oy, oz, dx, dy, dz = _camera_ray(
                    cam_pos, cam_rot, tan_half, aspect, width, height,
                    px + jx - 0.5, py + jy - 0.5)
                tp_r = tp_g = tp_b = 1.0
                sam_r = sam_g = sam_b = 0.0
                prev_pdf = -1.0  # <0 marks a camera ray (delta)
                for bounce in range(max_bounces + 1):
                    t, tri, bu, bvv = closest_hit(
                        bvh_bounds, bvh_child, bvh_order, v0, e1, e2,
                        ox, oy, oz, dx, dy, dz, 1e-9, np.inf)
                    if tri < 0:
                        lr, lg, lb = env_radiance_bilinear(env_pix, dx, dy, dz)
                        if prev_pdf < 0.0:
                            w = 1.0
                        elif light_mode == LIGHT_MIS:
                            pl = env_pdf(pmass, env_uniform, dx, dy, dz)
                            w = prev_pdf / (prev_pdf + pl)
                        elif light_mode == LIGHT_BRDF:
                            w = 1.0
                        else:
                            w = 0.0
                        cr = tp_r * lr * w
                        cg = tp_g * lg * w
                        cb = tp_b * lb * w
                        if prev_pdf >= 0.0:  # indirect: firefly clamp
                            cr = min(cr, clamp_val)
                            cg = min(cg, clamp_val)
                            cb = min(cb, clamp_val)
                        sam_r += cr
                        sam_g += cg
                        sam_b += cb
                        break
                    if bounce == max_bounces:
                        break
                    hx = ox + t * dx
                    hy = oy + t * dy
                    hz = oz + t * dz
                    nx, ny, nz, br, bg, bb, rough, metal = _shading_at(
                        n0, n1, n2, uv0, uv1, uv2, mat_id,
                        va_albedo, va_rough, va_metal,
                        mat_base, mat_base_tex, mat_rough, mat_rough_tex,
                        mat_metal, mat_metal_tex, mat_uv_scale,
                        tex_data, tex_off, tex_w, tex_h, tri, bu, bvv)
                    nl = np.sqrt(nx * nx + ny * ny + nz * nz)
                    if nl < 1e-12:
                        break
                    nx /= nl
                    ny /= nl
                    nz /= nl
                    # face the shading normal toward the incoming ray
                    if nx * dx + ny * dy + nz * dz > 0.0:
                        nx = -nx
                        ny = -ny
                        nz = -nz
                    rough = min(max(rough, 0.0), 1.0)
                    metal = min(max(metal, 0.0), 1.0)
                    br = min(max(br, 0.0), 1.0)
                    bg = min(max(bg, 0.0), 1.0)
                    bb = min(max(bb, 0.0), 1.0)
                    eps = 1e-7 * (abs(hx) + abs(hy) + abs(hz) + t) + 1e-9
                    wox = -dx
                    woy = -dy
                    woz = -dz
                    lox, loy, loz = _to_local(nx, ny, nz, wox, woy, woz)
                    if loz <= 0.0:
                        break
                    p_spec = _lobe_probs(br, bg, bb, metal)
                    # next-event estimation against the environment
                    if light_mode != LIGHT_BRDF:
                        state, u1 = rng_next(state)
                        state, u2 = rng_next(state)
                        sx, sy, sz, pl = env_sample_dir(
                            marg_cdf, cond_cdf, pmass, env_uniform, u1, u2)
                        cos_l = sx * nx + sy * ny + sz * nz
                        if cos_l > 0.0 and pl > 0.0:
                            six, siy, siz = _to_local(nx, ny, nz, sx, sy, sz)
                            fr, fg, fb = _eval_local(
                                br, bg, bb, rough, metal,
                                lox, loy, loz, six, siy, siz, table, avg)
                            if fr > 0.0 or fg > 0.0 or fb > 0.0:
                                if not any_hit(bvh_bounds, bvh_child, bvh_order,
                                               v0, e1, e2,
                                               hx + eps * nx, hy + eps * ny,
                                               hz + eps * nz,
                                               sx, sy, sz, 1e-9, np.inf):
                                    lr, lg, lb = env_radiance_nearest(
                                        env_pix, sx, sy, sz)
                                    if light_mode == LIGHT_MIS:
                                        pb = _pdf_local(rough, p_spec,
                                                        lox, loy, loz,
                                                        six, siy, siz)
                                        w = pl / (pl + pb)
                                    else:
                                        w = 1.0
                                    k = w * cos_l / pl
                                    cr = min(tp_r * fr * lr * k, clamp_val)
                                    cg = min(tp_g * fg * lg * k, clamp_val)
                                    cb = min(tp_b * fb * lb * k, clamp_val)
                                    sam_r += cr
                                    sam_g += cg
                                    sam_b += cb
                    # continue the path with a BRDF sample
                    state, wix, wiy, wiz, pdf_b, vr, vg, vb = _sample_local(
                        state, br, bg, bb, rough, metal, p_spec,
                        lox, loy, loz, table, avg)
                    if pdf_b <= 0.0 or (vr <= 0.0 and vg <= 0.0 and vb <= 0.0):
                        break
                    wx, wy, wz = _to_world(nx, ny, nz, wix, wiy, wiz)
                    inv_pdf = 1.0 / pdf_b
                    tp_r *= vr * inv_pdf
                    tp_g *= vg * inv_pdf
                    tp_b *= vb * inv_pdf
                    ox = hx + eps * nx
                    oy = hy + eps * ny
                    oz = hz + eps * nz
                    dx = wx
                    dy = wy
                    dz = wz
                    prev_pdf = pdf_b
                acc_r += sam_r
                acc_g += sam_g
                acc_b += sam_b
            out[py, px, 0] = acc_r * inv_spp
            out[py, px, 1] = acc_g * inv_spp
            out[py, px, 2] = acc_b * inv_spp


@njit(cache=True, nogil=True)
def gbuffer_rows(y0, y1, out_normal, out_depth, out_base, out_rough,
                 out_metal, out_hit,
                 width, height, cam_pos, cam_rot, tan_half, aspect,
                 bvh_bounds, bvh_child, bvh_order, v0, e1, e2,
                 n0, n1, n2, uv0, uv1, uv2, mat_id,
                 va_albedo, va_rough, va_metal,
                 mat_base, mat_base_tex, mat_rough, mat_rough_tex,
                 mat_metal, mat_metal_tex, mat_uv_scale,
                 tex_data, tex_off, tex_w, tex_h):
    """Primary-ray attributes; depth is raw view-space distance (misses -> 0)."""
    for py in range(y0, y1):
        for px in range(width):
            ox, oy, oz, dx, dy, dz = _camera_ray(
                cam_pos, cam_rot, tan_half, aspect, width, height,
                np.float64(px), np.float64(py))
            t, tri, bu, bvv = closest_hit(
                bvh_bounds, bvh_child, bvh_order, v0, e1, e2,
                ox, oy, oz, dx, dy, dz, 1e-9, np.inf)
            if tri < 0:
                out_hit[py, px] = 0.0
                out_depth[py, px] = 0.0
                out_normal[py, px, 0] = 0.0
                out_normal[py, px, 1] = 0.0
                out_normal[py, px, 2] = 0.0
                out_base[py, px, 0] = 0.0
                out_base[py, px, 1] = 0.0
                out_base[py, px, 2] = 0.0
                out_rough[py, px] = 0.0
                out_metal[py, px] = 0.0
                continue
            nx, ny, nz, br, bg, bb, rough, metal = _shading_at(
                n0, n1, n2, uv0, uv1, uv2, mat_id,
                va_albedo, va_rough, va_metal,
                mat_base, mat_base_tex, mat_rough, mat_rough_tex,
                mat_metal, mat_metal_tex, mat_uv_scale,
                tex_data, tex_off, tex_w, tex_h, tri, bu, bvv)
            nl = np.sqrt(nx * nx + ny * ny + nz * nz)
            if nl > 1e-12:
                nx /= nl
                ny /= nl
                nz /= nl
            if nx * dx + ny * dy + nz * dz > 0.0:
                nx = -nx
                ny = -ny
                nz = -nz
            # camera space: n_cam = R^T n_world
            cnx = cam_rot[0, 0] * nx + cam_rot[1, 0] * ny + cam_rot[2, 0] * nz
            cny = cam_rot[0, 1] * nx + cam_rot[1, 1] * ny + cam_rot[2, 1] * nz
            cnz = cam_rot[0, 2] * nx + cam_rot[1, 2] * ny + cam_rot[2, 2] * nz
            hx = ox + t * dx - cam_pos[0]
            hy = oy + t * dy - cam_pos[1]
            hz = oz + t * dz - cam_pos[2]
            # view depth = distance along camera forward (-Z column)
            depth = -(cam_rot[0, 2] * hx + cam_rot[1, 2] * hy + cam_rot[2, 2] * hz)
            out_hit[py, px] = 1.0
            out_depth[py, px] = depth
            out_normal[py, px, 0] = cnx
            out_normal[py, px, 1] = cny
            out_normal[py, px, 2] = cnz
            out_base[py, px, 0] = min(max(br, 0.0), 1.0)
            out_base[py, px, 1] = min(max(bg, 0.0), 1.0)
            out_base[py, px, 2] = min(max(bb, 0.0), 1.0)
            out_rough[py, px] = min(max(rough, 0.0), 1.0)
            out_metal[py, px] = min(max(metal, 0.0), 1.0)
