"""Median-split BVH over triangle AABBs, flattened for the numba kernels.

Node layout (index 0 is the root):
  bounds: (M, 6)  [min_xyz, max_xyz]
  child:  (M, 2)  internal -> [left, right]; leaf -> [-(start+1), count]
  order:  (N,)    triangle permutation, leaves reference [start, start+count)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

LEAF_SIZE = 4


@dataclass(frozen=True)
class Bvh:
    bounds: np.ndarray
    child: np.ndarray
    order: np.ndarray


def build_bvh(tri_min: np.ndarray, tri_max: np.ndarray) -> Bvh:
    n = tri_min.shape[0]
    if n == 0:
        bounds = np.zeros((1, 6))
        bounds[0, :3] = np.inf
        bounds[0, 3:] = -np.inf
        return Bvh(bounds, np.array([[-1, 0]], dtype=np.int64),
                   np.zeros(0, dtype=np.int64))
    centroid = 0.5 * (tri_min + tri_max)
    order = np.arange(n, dtype=np.int64)
    bounds_list: list[np.ndarray] = []
    child_list: list[tuple[int, int]] = []

    def new_node() -> int:
        bounds_list.append(np.empty(6))
        child_list.append((0, 0))
        return len(bounds_list) - 1

    root = new_node()
    # each stack entry: (node_idx, start, end) over order[start:end]
    stack = [(root, 0, n)]
    while stack:
        node, start, end = stack.pop()
        idx = order[start:end]
        lo = tri_min[idx].min(axis=0)
        hi = tri_max[idx].max(axis=0)
        bounds_list[node][:3] = lo
        bounds_list[node][3:] = hi
        count = end - start
        if count <= LEAF_SIZE:
            child_list[node] = (-(start + 1), count)
            continue
        axis = int(np.argmax(hi - lo))
        mid = count // 2
        part = np.argpartition(centroid[idx, axis], mid)
        order[start:end] = idx[part]
        left = new_node()
        right = new_node()
        child_list[node] = (left, right)
        stack.append((left, start, start + mid))
        stack.append((right, start + mid, end))

    return Bvh(np.ascontiguousarray(np.stack(bounds_list)),
               np.ascontiguousarray(np.array(child_list, dtype=np.int64)),
               np.ascontiguousarray(order))


@njit(cache=True, inline="always")
def _slab_hit(bounds, node, ox, oy, oz, ix, iy, iz, t_max):
    t0 = (bounds[node, 0] - ox) * ix
    t1 = (bounds[node, 3] - ox) * ix
    tn = min(t0, t1)
    tf = max(t0, t1)
    t0 = (bounds[node, 1] - oy) * iy
    t1 = (bounds[node, 4] - oy) * iy
    tn = max(tn, min(t0, t1))
    tf = min(tf, max(t0, t1))
    t0 = (bounds[node, 2] - oz) * iz
    t1 = (bounds[node, 5] - oz) * iz
    tn = max(tn, min(t0, t1))
    tf = min(tf, max(t0, t1))
    return tf >= max(tn, 0.0) and tn <= t_max


@njit(cache=True, inline="always")
def _tri_hit(v0, e1, e2, tri, ox, oy, oz, dx, dy, dz):
    """Moller-Trumbore; returns (t, u, v) with t < 0 on miss."""
    px = dy * e2[tri, 2] - dz * e2[tri, 1]
    py = dz * e2[tri, 0] - dx * e2[tri, 2]
    pz = dx * e2[tri, 1] - dy * e2[tri, 0]
    det = e1[tri, 0] * px + e1[tri, 1] * py + e1[tri, 2] * pz
    if abs(det) < 1e-14:
        return -1.0, 0.0, 0.0
    inv = 1.0 / det
    tx = ox - v0[tri, 0]
    ty = oy - v0[tri, 1]
    tz = oz - v0[tri, 2]
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return -1.0, 0.0, 0.0
    qx = ty * e1[tri, 2] - tz * e1[tri, 1]
    qy = tz * e1[tri, 0] - tx * e1[tri, 2]
    qz = tx * e1[tri, 1] - ty * e1[tri, 0]
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0, 0.0, 0.0
    t = (e2[tri, 0] * qx + e2[tri, 1] * qy + e2[tri, 2] * qz) * inv
    return t, u, v


@njit(cache=True)
def closest_hit(bounds, child, order, v0, e1, e2,
                ox, oy, oz, dx, dy, dz, t_min, t_max):
    """Nearest intersection; returns (t, tri_index, u, v), tri_index < 0 on miss."""
    ix = 1.0 / dx if dx != 0.0 else np.inf
    iy = 1.0 / dy if dy != 0.0 else np.inf
    iz = 1.0 / dz if dz != 0.0 else np.inf
    best_t = t_max
    best_tri = -1
    best_u = 0.0
    best_v = 0.0
    stack = np.empty(64, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _slab_hit(bounds, node, ox, oy, oz, ix, iy, iz, best_t):
            continue
        c0 = child[node, 0]
        if c0 < 0:
            start = -c0 - 1
            for k in range(child[node, 1]):
                tri = order[start + k]
                t, u, v = _tri_hit(v0, e1, e2, tri, ox, oy, oz, dx, dy, dz)
                if t_min < t < best_t:
                    best_t = t
                    best_tri = tri
                    best_u = u
                    best_v = v
        else:
            stack[top] = c0
            top += 1
            stack[top] = child[node, 1]
            top += 1
    if best_tri < 0:
        return -1.0, -1, 0.0, 0.0
    return best_t, best_tri, best_u, best_v


@njit(cache=True)
def any_hit(bounds, child, order, v0, e1, e2,
            ox, oy, oz, dx, dy, dz, t_min, t_max):
    """Occlusion query: True if any triangle lies in (t_min, t_max)."""
    ix = 1.0 / dx if dx != 0.0 else np.inf
    iy = 1.0 / dy if dy != 0.0 else np.inf
    iz = 1.0 / dz if dz != 0.0 else np.inf
    stack = np.empty(64, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _slab_hit(bounds, node, ox, oy, oz, ix, iy, iz, t_max):
            continue
        c0 = child[node, 0]
        if c0 < 0:
            start = -c0 - 1
            for k in range(child[node, 1]):
                tri = order[start + k]
                t, _, _ = _tri_hit(v0, e1, e2, tri, ox, oy, oz, dx, dy, dz)
                if t_min < t < t_max:
                    return True
        else:
            stack[top] = c0
            top += 1
            stack[top] = child[node, 1]
            top += 1
    return False
