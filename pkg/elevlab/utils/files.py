"""
On-disk formats: polar rasters with JSON sidecars, ASCII PLY clouds, CSV and JSON.

Raster layout (little endian): 8-byte magic, uint32 version, uint32 plane
count, uint32 rows, uint32 columns, then planes x rows x columns float32 in
row-major order. Every file is written to a temporary sibling and moved into
place with ``os.replace``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from elevlab.core.errors import DatasetError
from elevlab.core.geometry import RigidMotion, SensorConfig
from elevlab.core.rasters import ElevationMap, PointCloud, PolarImage

RASTER_MAGIC = b"FLSRAST\0"
RASTER_VERSION = 1
_HEADER = struct.Struct("<8sIIII")


def atomic_write_bytes(path: Path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(temp_name, path)
    except BaseException:
        Path(temp_name).unlink(missing_ok=True)
        raise
    return path


def atomic_write_text(path: Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: Path, document) -> Path:
    return atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")


def read_json(path: Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return atomic_write_text(path, buffer.getvalue())


def write_raster(path: Path, planes: Sequence[np.ndarray]) -> Path:
    stack = np.stack([np.asarray(p, dtype="<f4") for p in planes])
    count, rows, cols = stack.shape
    header = _HEADER.pack(RASTER_MAGIC, RASTER_VERSION, count, rows, cols)
    return atomic_write_bytes(path, header + stack.tobytes(order="C"))


def read_raster(path: Path) -> np.ndarray:
    """Planes shaped (count, rows, cols) as float64."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DatasetError(f"cannot read raster {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise DatasetError(f"{path} is too short to be a raster")
    magic, version, count, rows, cols = _HEADER.unpack_from(data)
    if magic != RASTER_MAGIC or version != RASTER_VERSION:
        raise DatasetError(f"{path} is not a version {RASTER_VERSION} raster")
    expected = count * rows * cols * 4
    if len(data) - _HEADER.size != expected:
        raise DatasetError(f"{path} payload size does not match {count}x{rows}x{cols}")
    planes = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return planes.reshape(count, rows, cols).astype(float)


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix(".json")


def _write_sidecar(path: Path, config: SensorConfig, pose: RigidMotion, extra: dict | None) -> None:
    document = {"sensor": config.to_document(), "pose": pose.to_document(), **(extra or {})}
    write_json(sidecar_path(path), document)


def _read_sidecar(path: Path) -> tuple[SensorConfig, RigidMotion, dict]:
    document = read_json(sidecar_path(path))
    config = SensorConfig.from_document(document["sensor"])
    pose = RigidMotion.from_document(document["pose"]) if "pose" in document else RigidMotion()
    return config, pose, document


def dump_sensor_config(path: Path, config: SensorConfig) -> Path:
    return write_json(path, config.to_document())


def save_polar_image(path: Path, image: PolarImage, extra: dict | None = None) -> Path:
    planes = [image.intensity]
    if image.valid is not None:
        planes.append(image.valid.astype(float))
    write_raster(path, planes)
    _write_sidecar(path, image.config, image.pose, extra)
    return Path(path)


def load_polar_image(path: Path) -> PolarImage:
    planes = read_raster(path)
    config, pose, _ = _read_sidecar(path)
    valid = planes[1] > 0.5 if len(planes) > 1 else None
    return PolarImage(planes[0], config, pose, valid)


def save_elevation_map(
    path: Path, elevation: ElevationMap, pose: RigidMotion | None = None, extra: dict | None = None
) -> Path:
    write_raster(path, [elevation.phi, elevation.valid.astype(float)])
    _write_sidecar(path, elevation.config, pose or RigidMotion(), extra)
    return Path(path)


def load_elevation_map(path: Path) -> ElevationMap:
    planes = read_raster(path)
    if len(planes) != 2:
        raise DatasetError(f"{path} is not an elevation map (expected 2 planes)")
    config, _, _ = _read_sidecar(path)
    valid = planes[1] > 0.5
    # float32 storage can round a boundary value just past the aperture
    phi = np.clip(planes[0], -config.half_aperture, config.half_aperture)
    return ElevationMap(phi, valid, config)


def write_ply(path: Path, cloud: PointCloud) -> Path:
    lines = [
        "ply",
        "format ascii 1.0",
        f"comment frame {cloud.frame}",
        f"element vertex {len(cloud)}",
        "property float x",
        "property float y",
        "property float z",
        "end_header",
    ]
    lines.extend(f"{x:.6f} {y:.6f} {z:.6f}" for x, y, z in cloud.points)
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_ply(path: Path) -> PointCloud:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read point cloud {path}: {exc}") from exc
    header, _, body = text.partition("end_header\n")
    count = None
    frame = "sensor"
    for line in header.splitlines():
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            count = int(parts[2])
        elif parts[:2] == ["comment", "frame"] and len(parts) > 2:
            frame = parts[2]
    if count is None:
        raise DatasetError(f"{path} has no vertex element")
    points = np.loadtxt(io.StringIO(body), dtype=float, ndmin=2) if count else np.zeros((0, 3))
    if len(points) != count:
        raise DatasetError(f"{path} declares {count} vertices but holds {len(points)}")
    return PointCloud(points, frame)
