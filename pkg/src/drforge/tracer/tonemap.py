"""Display transforms for LDR output: AgX (default) and Reinhard+sRGB.

AgX follows the widely used minimal implementation: inset matrix,
log2 encoding over [-12.47393, 4.026069] EV, a 6th-order sigmoid
polynomial, and the outset matrix. Output is display-referred in [0, 1]
and is written to PNG as-is.
"""

from __future__ import annotations

import numpy as np

from ..exrio import srgb_encode

_AGX_INSET = np.array([
    [0.842479062253094, 0.0784335999999992, 0.0792237451477643],
    [0.0423282422610123, 0.878468636469772, 0.0791661274605434],
    [0.0423756549057051, 0.0784336, 0.879142973793104],
])
_AGX_OUTSET = np.array([
    [1.19687900512017, -0.0980208811401368, -0.0990297440797205],
    [-0.0528968517574562, 1.15190312990417, -0.0989611768448433],
    [-0.0529716355144438, -0.0980434501171241, 1.15107367264116],
])
_AGX_MIN_EV = -12.47393
_AGX_MAX_EV = 4.026069


def _agx_sigmoid(x: np.ndarray) -> np.ndarray:
    x2 = x * x
    x4 = x2 * x2
    return (15.5 * x4 * x2 - 40.14 * x4 * x + 31.96 * x4
            - 6.868 * x2 * x + 0.4298 * x2 + 0.1191 * x - 0.00232)


def tonemap_agx(img: np.ndarray) -> np.ndarray:
    """Linear HDR (..., 3) -> display-referred [0, 1]."""
    v = np.asarray(img, dtype=np.float64) @ _AGX_INSET.T
    v = np.clip(v, 1e-10, None)
    v = np.clip(np.log2(v), _AGX_MIN_EV, _AGX_MAX_EV)
    v = (v - _AGX_MIN_EV) / (_AGX_MAX_EV - _AGX_MIN_EV)
    v = _agx_sigmoid(v)
    v = v @ _AGX_OUTSET.T
    return np.clip(v, 0.0, 1.0)


def tonemap_reinhard_srgb(img: np.ndarray) -> np.ndarray:
    """Linear HDR -> Reinhard x/(1+x) -> sRGB-encoded [0, 1]."""
    x = np.clip(np.asarray(img, dtype=np.float64), 0.0, None)
    return srgb_encode(x / (1.0 + x))


def to_ldr(img: np.ndarray, mode: str = "agx") -> np.ndarray:
    if mode == "agx":
        return tonemap_agx(img)
    if mode == "reinhard":
        return tonemap_reinhard_srgb(img)
    raise ValueError(f"unknown tonemap {mode!r}")
