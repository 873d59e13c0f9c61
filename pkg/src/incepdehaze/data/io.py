"""Raster I/O: 8/16-bit PNG images, PFM and 16-bit PNG depth maps.

Images come back as float64 ``H x W x C`` arrays in [0, 1] with RGB channel
order (grey PNGs give ``C == 1``).
"""

from __future__ import annotations

import re
from pathlib import Path

import cv2
import numpy as np

from ..exceptions import ConfigError, ImageFormatError, ValidationError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_PNG_PARAMS = [cv2.IMWRITE_PNG_COMPRESSION, 6]


def _read_png_codes(path):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"{path}: {exc.strerror or exc}") from None
    if not raw.startswith(PNG_SIGNATURE):
        raise ImageFormatError(f"{path}: not a PNG file")
    try:
        codes = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_UNCHANGED)
    except cv2.error as exc:
        raise ImageFormatError(f"{path}: cannot decode PNG ({exc})") from None
    if codes is None:
        raise ImageFormatError(f"{path}: truncated or corrupt PNG")
    if codes.dtype not in (np.uint8, np.uint16):
        raise ImageFormatError(f"{path}: unsupported sample type {codes.dtype}")
    return codes


def load_image(path):
    codes = _read_png_codes(path)
    peak = float(np.iinfo(codes.dtype).max)
    img = codes.astype(np.float64) / peak
    if img.ndim == 2:
        return img[..., None]
    if img.shape[2] == 4:
        img = img[..., :3]
    if img.shape[2] == 3:
        img = img[..., ::-1]
    return np.ascontiguousarray(img)


def quantize(img, bit_depth=8):
    """Round [0, 1] floats to integer codes of the given depth."""
    if bit_depth not in (8, 16):
        raise ConfigError(f"bit depth must be 8 or 16, got {bit_depth}")
    peak = 255 if bit_depth == 8 else 65535
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    return np.rint(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * peak).astype(dtype)


def dequantize(codes):
    return codes.astype(np.float64) / float(np.iinfo(codes.dtype).max)


def save_image(img, path, bit_depth=8):
    arr = np.asarray(img)
    codes = arr if arr.dtype in (np.uint8, np.uint16) else quantize(arr, bit_depth)
    if codes.ndim == 3 and codes.shape[2] == 1:
        codes = codes[..., 0]
    elif codes.ndim == 3 and codes.shape[2] == 3:
        codes = codes[..., ::-1]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ok, buf = cv2.imencode(".png", np.ascontiguousarray(codes), _PNG_PARAMS)
    if not ok:
        raise ImageFormatError(f"{path}: PNG encoding failed")
    path.write_bytes(buf.tobytes())


def write_pfm(path, data):
    """Write a float32 portable float map (little-endian, bottom row first)."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 3 and arr.shape[2] == 3:
        tag = b"PF"
    elif arr.ndim == 2:
        tag = b"Pf"
    else:
        raise ValidationError(f"PFM supports H x W or H x W x 3, got {arr.shape}")
    h, w = arr.shape[:2]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(tag + b"\n" + f"{w} {h}\n".encode() + b"-1.0\n")
        fh.write(np.ascontiguousarray(arr[::-1]).astype("<f4").tobytes())


_PFM_HEADER = re.compile(rb"^(PF|Pf)\s+(\d+)\s+(\d+)\s+([-+0-9.eE]+)\s")


def read_pfm(path):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"{path}: {exc.strerror or exc}") from None
    m = _PFM_HEADER.match(raw[:128])
    if not m:
        raise ImageFormatError(f"{path}: not a PFM file")
    channels = 3 if m.group(1) == b"PF" else 1
    w, h, scale = int(m.group(2)), int(m.group(3)), float(m.group(4))
    dtype = "<f4" if scale < 0 else ">f4"
    body = raw[m.end() :]
    count = w * h * channels
    if len(body) < 4 * count:
        raise ImageFormatError(f"{path}: truncated PFM payload")
    arr = np.frombuffer(body[: 4 * count], dtype=dtype).astype(np.float32)
    shape = (h, w, 3) if channels == 3 else (h, w)
    return np.ascontiguousarray(arr.reshape(shape)[::-1])


def load_depth(path, scale=None):
    """Read a depth map as a non-negative ``H x W`` float field.

    PFM values are used as stored. 16-bit PNG codes map to
    ``code / 65535 * scale`` and therefore need ``scale``.
    """
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        d = read_pfm(path)
        if d.ndim == 3:
            d = d[..., 0]
        d = d.astype(np.float64)
    elif path.suffix.lower() == ".png":
        codes = _read_png_codes(path)
        if codes.dtype != np.uint16:
            raise ImageFormatError(f"{path}: depth PNGs must be 16-bit")
        if scale is None:
            raise ConfigError(f"{path}: 16-bit depth needs a scale annotation")
        if codes.ndim == 3:
            codes = codes[..., 0]
        d = codes.astype(np.float64) / 65535.0 * float(scale)
    else:
        raise ImageFormatError(f"{path}: unsupported depth format")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValidationError(f"{path}: depth values must be finite and non-negative")
    return d


def save_depth(depth, path):
    write_pfm(path, depth)


def resize_bilinear(img, width, height):
    arr = np.asarray(img)
    if arr.shape[1] == width and arr.shape[0] == height:
        return arr
    squeeze = arr.ndim == 3 and arr.shape[2] == 1
    out = cv2.resize(arr.astype(np.float32), (width, height), interpolation=cv2.INTER_LINEAR)
    if squeeze:
        out = out[..., None]
    return out.astype(np.float64) if arr.dtype == np.float64 else out
