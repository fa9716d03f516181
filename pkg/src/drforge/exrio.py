"""Minimal OpenEXR scanline codec plus PNG helpers.

Supports the subset of EXR this pipeline needs: little-endian scanline
images, FLOAT/HALF/UINT channels, NONE/ZIP/ZIPS compression, increasing-Y
line order, and multi-part files (used to cache prefiltered environment
maps). Channel names are free-form, so G-buffers can use names like
``normal.x`` or ``roughness.y``.

PNG I/O goes through Pillow; sRGB transfer helpers live here too since
every LDR output shares them.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError

MAGIC = 20000630
PT_UINT, PT_HALF, PT_FLOAT = 0, 1, 2
_DTYPES = {PT_UINT: np.dtype("<u4"), PT_HALF: np.dtype("<f2"), PT_FLOAT: np.dtype("<f4")}
COMP_NONE, COMP_ZIPS, COMP_ZIP = 0, 2, 3
_LINES_PER_BLOCK = {COMP_NONE: 1, COMP_ZIPS: 1, COMP_ZIP: 16}
_COMP_NAMES = {"none": COMP_NONE, "zips": COMP_ZIPS, "zip": COMP_ZIP}


def _null_str(s: str) -> bytes:
    return s.encode("ascii") + b"\x00"


def _attr(name: str, typ: str, data: bytes) -> bytes:
    return _null_str(name) + _null_str(typ) + struct.pack("<i", len(data)) + data


def _chlist(names: list[str], pixel_types: list[int]) -> bytes:
    out = b""
    for name, pt in zip(names, pixel_types):
        out += _null_str(name)
        out += struct.pack("<iBBBBii", pt, 0, 0, 0, 0, 1, 1)
    return out + b"\x00"


def _zip_compress(raw: bytes) -> bytes:
    # EXR zip: de-interleave into two halves, delta-encode, then deflate.
    arr = np.frombuffer(raw, dtype=np.uint8)
    n = arr.size
    half = (n + 1) // 2
    tmp = np.empty(n, dtype=np.uint8)
    tmp[:half] = arr[0::2]
    tmp[half:] = arr[1::2]
    d = tmp.astype(np.int16)
    d[1:] -= tmp[:-1].astype(np.int16)
    d[1:] += 128 + 256
    return zlib.compress(d.astype(np.uint8).tobytes())


def _zip_decompress(data: bytes, raw_size: int) -> bytes:
    tmp = np.frombuffer(zlib.decompress(data), dtype=np.uint8).copy()
    if tmp.size != raw_size:
        raise FormatError(f"zip block decoded to {tmp.size} bytes, expected {raw_size}")
    d = tmp.astype(np.int64)
    np.cumsum(d[1:] - 128, out=d[1:])
    d[1:] += d[0]
    tmp = (d & 0xFF).astype(np.uint8)
    half = (raw_size + 1) // 2
    out = np.empty(raw_size, dtype=np.uint8)
    out[0::2] = tmp[:half]
    out[1::2] = tmp[half:]
    return out.tobytes()


def _pack_part(channels: dict[str, np.ndarray], compression: int,
               part_name: str | None = None) -> tuple[bytes, list[bytes], int]:
    """Build one header + list of chunk payloads (without part-number prefix)."""
    names = sorted(channels)
    if not names:
        raise FormatError("EXR part needs at least one channel")
    arrs, ptypes = [], []
    h, w = channels[names[0]].shape
    for name in names:
        a = np.asarray(channels[name])
        if a.ndim != 2:
            raise FormatError(f"channel {name!r} must be 2-D, got shape {a.shape}")
        if a.shape != (h, w):
            raise FormatError(f"channel {name!r} shape {a.shape} != {(h, w)}")
        if a.dtype == np.uint32:
            pt = PT_UINT
        elif a.dtype == np.float16:
            pt = PT_HALF
        else:
            a = a.astype(np.float32, copy=False)
            pt = PT_FLOAT
        arrs.append(np.ascontiguousarray(a))
        ptypes.append(pt)

    header = _attr("channels", "chlist", _chlist(names, ptypes))
    header += _attr("compression", "compression", struct.pack("<B", compression))
    box = struct.pack("<iiii", 0, 0, w - 1, h - 1)
    header += _attr("dataWindow", "box2i", box)
    header += _attr("displayWindow", "box2i", box)
    header += _attr("lineOrder", "lineOrder", struct.pack("<B", 0))
    header += _attr("pixelAspectRatio", "float", struct.pack("<f", 1.0))
    header += _attr("screenWindowCenter", "v2f", struct.pack("<ff", 0.0, 0.0))
    header += _attr("screenWindowWidth", "float", struct.pack("<f", 1.0))
    if part_name is not None:
        header += _attr("name", "string", part_name.encode("ascii"))
        header += _attr("type", "string", b"scanlineimage")
        header += _attr("chunkCount", "int", struct.pack("<i", -1))  # patched later
    header += b"\x00"

    lines = _LINES_PER_BLOCK[compression]
    n_blocks = (h + lines - 1) // lines
    chunks = []
    for b in range(n_blocks):
        y0 = b * lines
        y1 = min(y0 + lines, h)
        raw = b"".join(arrs[c][y].tobytes() for y in range(y0, y1) for c in range(len(names)))
        if compression == COMP_NONE:
            payload = raw
        else:
            payload = _zip_compress(raw)
            if len(payload) >= len(raw):
                payload = raw
        chunks.append(struct.pack("<ii", y0, len(payload)) + payload)
    return header, chunks, n_blocks


def write_exr(path, channels: dict[str, np.ndarray], compression: str = "zip") -> None:
    """Write a single-part scanline EXR; channel arrays are (H, W)."""
    comp = _COMP_NAMES[compression]
    header, chunks, n_blocks = _pack_part(channels, comp)
    pos = 8 + len(header) + 8 * n_blocks
    offsets, body = [], []
    for c in chunks:
        offsets.append(pos)
        body.append(c)
        pos += len(c)
    data = struct.pack("<ii", MAGIC, 2) + header
    data += struct.pack(f"<{n_blocks}q", *offsets) + b"".join(body)
    Path(path).write_bytes(data)


def write_exr_multipart(path, parts: dict[str, dict[str, np.ndarray]],
                        compression: str = "zip") -> None:
    """Write a multi-part scanline EXR; ``parts`` maps part name -> channels."""
    comp = _COMP_NAMES[compression]
    headers, all_chunks = [], []
    for pname, channels in parts.items():
        header, chunks, n_blocks = _pack_part(channels, comp, part_name=pname)
        header = header.replace(struct.pack("<i", -1), struct.pack("<i", n_blocks), 1)
        headers.append(header)
        all_chunks.append(chunks)

    version = 2 | (1 << 12)  # multi-part bit
    head_blob = b"".join(headers) + b"\x00"
    pos = 8 + len(head_blob)
    for chunks in all_chunks:
        pos += 8 * len(chunks)
    offset_tables, body = [], []
    for part_idx, chunks in enumerate(all_chunks):
        offs = []
        for c in chunks:
            offs.append(pos)
            body.append(struct.pack("<i", part_idx) + c)
            pos += 4 + len(c)
        offset_tables.append(offs)
    # offsets were assigned walking parts in order, matching table layout
    data = struct.pack("<ii", MAGIC, version) + head_blob
    for offs in offset_tables:
        data += struct.pack(f"<{len(offs)}q", *offs)
    data += b"".join(body)
    Path(path).write_bytes(data)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError("truncated EXR file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def cstr(self) -> str:
        end = self.buf.index(b"\x00", self.pos)
        out = self.buf[self.pos:end].decode("ascii", errors="replace")
        self.pos = end + 1
        return out

    def i32(self) -> int:
        return struct.unpack("<i", self.take(4))[0]


def _read_header(r: _Reader) -> dict:
    attrs = {}
    while True:
        if r.buf[r.pos:r.pos + 1] == b"\x00":
            r.pos += 1
            break
        name = r.cstr()
        typ = r.cstr()
        size = r.i32()
        data = r.take(size)
        attrs[name] = (typ, data)
    if "channels" not in attrs or "dataWindow" not in attrs or "compression" not in attrs:
        raise FormatError("EXR header missing required attributes")
    ch_r = _Reader(attrs["channels"][1])
    channels = []
    while ch_r.buf[ch_r.pos:ch_r.pos + 1] != b"\x00":
        cname = ch_r.cstr()
        pt, _pl, _r0, _r1, _r2, _xs, _ys = struct.unpack("<iBBBBii", ch_r.take(16))
        channels.append((cname, pt))
    xmin, ymin, xmax, ymax = struct.unpack("<iiii", attrs["dataWindow"][1])
    comp = attrs["compression"][1][0]
    if comp not in _LINES_PER_BLOCK:
        raise FormatError(f"unsupported EXR compression code {comp}")
    line_order = attrs.get("lineOrder", (None, b"\x00"))[1][0]
    if line_order != 0:
        raise FormatError("only increasing-Y line order is supported")
    part_name = attrs.get("name", (None, b""))[1].decode("ascii", errors="replace")
    return {
        "channels": channels,
        "width": xmax - xmin + 1,
        "height": ymax - ymin + 1,
        "ymin": ymin,
        "compression": comp,
        "name": part_name,
    }


def _read_part(buf: bytes, hdr: dict, offsets: list[int],
               part_idx: int | None) -> dict[str, np.ndarray]:
    names = [c[0] for c in hdr["channels"]]
    dtypes = [_DTYPES[c[1]] for c in hdr["channels"]]
    w, h = hdr["width"], hdr["height"]
    comp = hdr["compression"]
    lines = _LINES_PER_BLOCK[comp]
    row_bytes = sum(w * dt.itemsize for dt in dtypes)
    out = {n: np.empty((h, w), dtype=dt) for n, dt in zip(names, dtypes)}
    for off in offsets:
        r = _Reader(buf)
        r.pos = off
        if part_idx is not None:
            got = r.i32()
            if got != part_idx:
                raise FormatError("chunk part index mismatch")
        y0 = r.i32() - hdr["ymin"]
        size = r.i32()
        payload = r.take(size)
        n_rows = min(lines, h - y0)
        raw_size = row_bytes * n_rows
        raw = payload if size == raw_size else _zip_decompress(payload, raw_size)
        pos = 0
        for y in range(y0, y0 + n_rows):
            for n, dt in zip(names, dtypes):
                nb = w * dt.itemsize
                out[n][y] = np.frombuffer(raw, dtype=dt, count=w, offset=pos)
                pos += nb
    return out


def read_exr(path) -> dict[str, np.ndarray]:
    """Read a single-part EXR into {channel name: (H, W) array}."""
    buf = Path(path).read_bytes()
    r = _Reader(buf)
    magic, version = struct.unpack("<ii", r.take(8))
    if magic != MAGIC:
        raise FormatError(f"{path}: not an EXR file")
    if version & (1 << 12):
        parts = read_exr_multipart(path)
        return next(iter(parts.values()))
    if version & (1 << 9):
        raise FormatError("tiled EXR files are not supported")
    hdr = _read_header(r)
    n_blocks = (hdr["height"] + _LINES_PER_BLOCK[hdr["compression"]] - 1) \
        // _LINES_PER_BLOCK[hdr["compression"]]
    offsets = struct.unpack(f"<{n_blocks}q", r.take(8 * n_blocks))
    return _read_part(buf, hdr, list(offsets), None)


def read_exr_multipart(path) -> dict[str, dict[str, np.ndarray]]:
    """Read a multi-part EXR into {part name: {channel: array}}."""
    buf = Path(path).read_bytes()
    r = _Reader(buf)
    magic, version = struct.unpack("<ii", r.take(8))
    if magic != MAGIC:
        raise FormatError(f"{path}: not an EXR file")
    if not version & (1 << 12):
        hdr_single = read_exr(path)
        return {"": hdr_single}
    headers = []
    while r.buf[r.pos:r.pos + 1] != b"\x00":
        headers.append(_read_header(r))
    r.pos += 1
    tables = []
    for hdr in headers:
        lines = _LINES_PER_BLOCK[hdr["compression"]]
        n_blocks = (hdr["height"] + lines - 1) // lines
        tables.append(list(struct.unpack(f"<{n_blocks}q", r.take(8 * n_blocks))))
    out = {}
    for idx, (hdr, offs) in enumerate(zip(headers, tables)):
        out[hdr["name"]] = _read_part(buf, hdr, offs, idx)
    return out


def write_rgb_exr(path, img: np.ndarray, compression: str = "zip") -> None:
    """Write an (H, W, 3) linear image with channels R, G, B."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise FormatError(f"expected (H, W, 3) image, got {img.shape}")
    write_exr(path, {"R": img[:, :, 0], "G": img[:, :, 1], "B": img[:, :, 2]},
              compression=compression)


def read_rgb_exr(path) -> np.ndarray:
    ch = read_exr(path)
    try:
        return np.stack([ch["R"], ch["G"], ch["B"]], axis=-1).astype(np.float32)
    except KeyError as e:
        raise FormatError(f"{path}: missing channel {e}") from None


def srgb_encode(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.power(x, 1.0 / 2.4) - 0.055)


def srgb_decode(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return np.where(x <= 0.04045, x / 12.92, np.power((x + 0.055) / 1.055, 2.4))


def write_png(path, img: np.ndarray) -> None:
    """Write a [0,1] image (H, W) or (H, W, 3) as 8-bit PNG (no transfer applied)."""
    arr = np.clip(np.asarray(img), 0.0, 1.0)
    data = (arr * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(data).save(str(path), format="PNG")


def read_png(path) -> np.ndarray:
    """Read a PNG as float in [0,1] (no transfer applied)."""
    img = np.asarray(Image.open(str(path)))
    out = img.astype(np.float32) / 255.0
    if out.ndim == 3 and out.shape[2] == 4:
        out = out[:, :, :3]
    return out
