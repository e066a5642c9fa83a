"""Writes small synthetic Radiance .hdr scenes used by the test suites.

The encoder here is deliberately independent of the Rust codec so that
decoding these files exercises the reader against a second implementation.
"""
import math
import pathlib
import sys

import numpy as np


def to_rgbe(rgb):
    v = rgb.max(axis=-1)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    ok = v >= 1e-32
    m, e = np.frexp(v[ok])
    scale = m * 256.0 / v[ok]
    out[ok, :3] = np.clip(np.floor(rgb[ok] * scale[:, None]), 0, 255).astype(np.uint8)
    out[ok, 3] = (e + 128).astype(np.uint8)
    return out


def rle_channel(data):
    out = bytearray()
    i, n = 0, len(data)
    while i < n:
        run = 1
        while i + run < n and run < 127 and data[i + run] == data[i]:
            run += 1
        if run >= 3:
            out += bytes([128 + run, data[i]])
            i += run
            continue
        j = i
        while j < n and j - i < 128:
            if j + 2 < n and data[j] == data[j + 1] == data[j + 2]:
                break
            j += 1
        out += bytes([j - i]) + bytes(data[i:j])
        i = j
    return out


def write_hdr(path, rgb):
    h, w, _ = rgb.shape
    px = to_rgbe(rgb.astype(np.float64))
    body = bytearray()
    for y in range(h):
        body += bytes([2, 2, w >> 8, w & 0xFF])
        for c in range(4):
            body += rle_channel(px[y, :, c].tolist())
    head = f"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\nEXPOSURE=1.0\n\n-Y {h} +X {w}\n".encode()
    pathlib.Path(path).write_bytes(head + body)


def scene(w, h, seed):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    sky = 50.0 + 400.0 * (1.0 - y / h)
    sun = 2.0e4 * np.exp(-((x - 0.7 * w) ** 2 + (y - 0.25 * h) ** 2) / (2 * (0.05 * w) ** 2))
    ground = np.where(y > 0.6 * h, 5.0 + 20.0 * (np.sin(x * 0.9) * np.cos(y * 0.7) + 1.0), 0.0)
    lum = np.where(y > 0.6 * h, ground, sky + sun) + rng.uniform(0, 2.0, (h, w))
    tint = np.stack([1.0 + 0.1 * np.sin(x / 7), np.ones_like(x), 1.0 - 0.1 * np.cos(y / 5)], -1)
    return lum[..., None] * tint


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ref = scene(64, 48, 1)
    write_hdr(out / "scene_ref.hdr", ref)
    rng = np.random.default_rng(2)
    noisy = np.clip(ref + rng.normal(0, 0.05 * ref.max() / 20, ref.shape), 0, None)
    write_hdr(out / "scene_noisy.hdr", noisy)
    write_hdr(out / "scene_dim.hdr", ref * 0.5)
    write_hdr(out / "scene_small.hdr", scene(32, 32, 3))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/testdata")
