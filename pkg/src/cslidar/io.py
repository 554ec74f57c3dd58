"""Artifact writers: depth maps (PFM/PGM/CSV), measurement CSVs, sweep CSVs."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .evalbench import SweepResult
from .recon import DepthMap
from .spectral import MeasurementVectors, Spectrum


def write_pfm(dmap: DepthMap, path) -> None:
    """Grayscale PFM, little-endian, rows bottom-to-top per the format."""
    data = np.flipud(dmap.depths).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{dmap.width} {dmap.height}\n".encode())
        fh.write(b"-1.0\n")
        fh.write(data.tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"Pf":
            raise ValueError(f"{path} is not a grayscale PFM")
        width, height = map(int, fh.readline().split())
        scale = float(fh.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(4 * width * height), dtype=dtype)
    return np.flipud(data.reshape(height, width)).astype(float)


def write_pgm(dmap: DepthMap, path, depth_scale: float) -> None:
    """16-bit binary PGM with depths scaled so depth_scale maps to 65535."""
    if depth_scale <= 0:
        raise ValueError("depth_scale must be positive")
    levels = np.clip(dmap.depths / depth_scale, 0.0, 1.0) * 65535.0
    data = np.round(levels).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{dmap.width} {dmap.height}\n65535\n".encode())
        fh.write(data.tobytes())


def write_depth_csv(dmap: DepthMap, path) -> None:
    lines = ["x,y,depth_m,valid"]
    for y in range(dmap.height):
        for x in range(dmap.width):
            lines.append(f"{x},{y},{dmap.depths[y, x]!r},{int(dmap.mask[y, x])}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_measurements_csv(mv: MeasurementVectors, path) -> None:
    """Exactly 2m measurement scalars: one (k, y_i, y_inu) row per projection."""
    lines = ["k,y_i,y_inu"]
    for k in range(mv.m):
        lines.append(f"{k},{mv.y_i[k]!r},{mv.y_inu[k]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_measurements_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = Path(path).read_text().strip().splitlines()[1:]
    parts = [line.split(",") for line in rows]
    y_i = np.array([float(p[1]) for p in parts])
    y_inu = np.array([float(p[2]) for p in parts])
    return y_i, y_inu


def write_spectrum_csv(spec: Spectrum, path) -> None:
    lines = ["bin_hz,amplitude"]
    freqs = spec.freqs
    for f, a in zip(freqs, spec.amplitudes):
        lines.append(f"{f!r},{a!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(value: float) -> str:
    return repr(float(value))


def write_sweep_csv(result: SweepResult, path) -> None:
    lines = ["ratio,psnr,linewidth_hz,mean_mse_m2,sem_m2"]
    for c in result.cells:
        lines.append(",".join([_fmt(c.ratio), _fmt(c.psnr), _fmt(c.linewidth),
                               _fmt(c.mean_mse), _fmt(c.sem_mse)]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_toroid_csv(result: SweepResult, path) -> None:
    lines = ["ratio,psnr,linewidth_hz,toroid_std_m"]
    for c in result.cells:
        lines.append(",".join([_fmt(c.ratio), _fmt(c.psnr), _fmt(c.linewidth),
                               _fmt(c.toroid_std)]))
    Path(path).write_text("\n".join(lines) + "\n")
