"""Raw plot data: sign maps as CSV and PPM, trajectory traces as CSV."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .flow import TrajectoryRecord
from .sphere import NEG_CERTIFIED, POS_CERTIFIED, RegionComplex

LABEL_NAMES = {NEG_CERTIFIED: "NEG", 0: "UNCERTIFIED", POS_CERTIFIED: "POS"}
COLOURS = {NEG_CERTIFIED: (40, 90, 200), 0: (160, 160, 160), POS_CERTIFIED: (210, 60, 40)}


def sign_map_csv(rc: RegionComplex, path: str | Path) -> None:
    """One row per cell: id, vertex coordinates, label."""
    mesh = rc.mesh
    k = mesh.cells.shape[1]
    coords = [f"v{i}_{c}" for i in range(k) for c in "xyz"[:mesh.n]]
    pts = mesh.points
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", *coords, "label"])
        for cid, (cell, lab) in enumerate(zip(mesh.cells, rc.labels)):
            w.writerow([cid, *(f"{v:.12g}" for v in pts[cell].reshape(-1)), LABEL_NAMES[int(lab)]])


def _write_ppm(path: str | Path, image: np.ndarray) -> None:
    h, w, _ = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.astype(np.uint8).tobytes())


def _pixel_labels(rc: RegionComplex, directions: np.ndarray) -> np.ndarray:
    mesh = rc.mesh
    centres = mesh.vertices[mesh.cells].mean(axis=1)
    centres /= np.linalg.norm(centres, axis=1, keepdims=True)
    _, idx = cKDTree(centres).query(directions)
    return rc.labels[idx]


def sign_map_ppm(rc: RegionComplex, path: str | Path, width: int = 720, height: int | None = None) -> None:
    """Angle strip for the circle, equirectangular projection for the 2-sphere.
    Each pixel takes the label of the nearest cell centre."""
    n = rc.mesh.n
    if n == 2:
        height = height or 24
        t = 2 * np.pi * (np.arange(width) + 0.5) / width
        labels = _pixel_labels(rc, np.stack([np.cos(t), np.sin(t)], axis=1))
        labels = np.tile(labels, (height, 1))
    else:
        height = height or width // 2
        lon = 2 * np.pi * (np.arange(width) + 0.5) / width - np.pi
        lat = np.pi / 2 - np.pi * (np.arange(height) + 0.5) / height
        LON, LAT = np.meshgrid(lon, lat)
        d = np.stack([np.cos(LAT) * np.cos(LON), np.cos(LAT) * np.sin(LON), np.sin(LAT)], axis=-1)
        labels = _pixel_labels(rc, d.reshape(-1, 3)).reshape(height, width)
    image = np.zeros(labels.shape + (3,), dtype=np.uint8)
    for lab, colour in COLOURS.items():
        image[labels == lab] = colour
    _write_ppm(path, image)


def trajectory_csv(record: TrajectoryRecord, path: str | Path) -> None:
    """Columns t, x1..xn, f, |x|, ell (the running value of x.grad f / f)."""
    if record.trace is None:
        raise ValueError("trajectory was integrated without a trace")
    n = len(record.seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *(f"x{i + 1}" for i in range(n)), "f", "norm_x", "ell_running"])
        for row in record.trace:
            w.writerow([f"{v:.15g}" for v in row])
