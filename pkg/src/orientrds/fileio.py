"""
File formats: raw float volumes, PNG/PGM images, and curve CSVs.

Volume files are 16-byte magic + little-endian u32 header (W, H, K,
dtype tag) + raw samples, x-fastest. The only dtype tag is 1 (32-bit
float). The layout is fixed bit-exactly so independently written files
interoperate; writes are deterministic functions of the array contents.
"""

import csv
import struct

import numpy as np
from PIL import Image as PilImage

from .core import Image, Volume

MAGIC = b"ORIENTRDS:VOL\x00\x00\x00"
DTYPE_F32 = 1
_HEADER = struct.Struct("<4I")


def write_volume(path, volume):
    """Writes a Volume as magic + (W, H, K, tag) + '<f4' samples, x-fastest."""
    k, h, w = volume.data.shape
    payload = np.ascontiguousarray(volume.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(w, h, k, DTYPE_F32))
        fh.write(payload)


def read_volume(path):
    """Reads a volume file written by write_volume.

    Raises:
        OSError: unreadable file, bad magic, unknown dtype tag, or
            truncated payload.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + _HEADER.size or not blob.startswith(MAGIC):
        raise OSError(f"{path}: not a volume file (bad magic or truncated header)")
    w, h, k, tag = _HEADER.unpack_from(blob, len(MAGIC))
    if tag != DTYPE_F32:
        raise OSError(f"{path}: unknown dtype tag {tag}")
    count = w * h * k
    start = len(MAGIC) + _HEADER.size
    expected = start + 4 * count
    if len(blob) != expected:
        raise OSError(f"{path}: payload is {len(blob) - start} bytes, expected {4 * count}")
    data = np.frombuffer(blob, dtype="<f4", count=count, offset=start)
    return Volume(data.reshape(k, h, w).astype(np.float64))


def read_image(path):
    """Loads an 8- or 16-bit grayscale image (PNG/PGM) scaled to [0, 1].

    Color inputs are converted to luminance first.
    """
    with PilImage.open(path) as img:
        mode = img.mode
        if mode == "L":
            data = np.asarray(img, dtype=np.float64) / 255.0
        elif mode in ("I", "I;16", "I;16L", "I;16B"):
            data = np.asarray(img, dtype=np.float64) / 65535.0
        elif mode == "F":
            data = np.asarray(img, dtype=np.float64)
        else:
            data = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    return Image(data)


def write_image(path, image):
    """Writes an Image as 8-bit grayscale PNG.

    Values are clipped to [0, 1] and scaled to [0, 255] with
    round-half-to-even, so outputs are deterministic.
    """
    scaled = np.rint(np.clip(image.data, 0.0, 1.0) * 255.0).astype(np.uint8)
    PilImage.fromarray(scaled, mode="L").save(path)


def write_curve(path, rows):
    """Writes (t, psnr_db) rows as CSV with a mandatory header line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "psnr_db"])
        for t, value in rows:
            writer.writerow([f"{t:.6g}", f"{value:.6g}"])
