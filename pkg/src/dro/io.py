"""Dataset directory reader/writer and key=value config files.

Layout::

    scans/NNNNNN.bin    row-major N x M float32 little-endian intensities
    scans/NNNNNN.meta   key=value lines
    gyro.csv            timestamp_s,omega_rad_s
    gt_poses.csv        timestamp_s,x_m,y_m,theta_rad
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .types import Config, GyroSeries, LocalMap, Pose2, RadarScan

_F32 = np.dtype("<f4")


def _fmt_floats(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _fmt_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _parse_floats(text: str) -> np.ndarray:
    text = text.strip()
    if not text:
        return np.zeros(0)
    return np.array([float(v) for v in text.split(",")])


def read_kv(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_scan(scan: RadarScan, stem: str | Path) -> None:
    """Write ``stem.bin`` and ``stem.meta``; intensities are stored as float32."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    n, m = scan.shape
    np.ascontiguousarray(scan.intensity, dtype=_F32).tofile(stem.with_suffix(".bin"))
    meta = [
        f"n_azimuths={n}",
        f"n_range_bins={m}",
        f"range_resolution_m={scan.range_resolution!r}",
        f"azimuths_rad={_fmt_floats(scan.azimuths)}",
        f"timestamps_s={_fmt_floats(scan.timestamps)}",
        "chirp_up=" + ",".join(str(int(c)) for c in scan.chirp_dir),
    ]
    stem.with_suffix(".meta").write_text("\n".join(meta) + "\n", encoding="utf-8")


def read_scan(stem: str | Path) -> RadarScan:
    stem = Path(stem)
    meta = read_kv(stem.with_suffix(".meta"))
    n, m = int(meta["n_azimuths"]), int(meta["n_range_bins"])
    data = np.fromfile(stem.with_suffix(".bin"), dtype=_F32)
    if data.size != n * m:
        raise ValueError(f"{stem}.bin holds {data.size} values, expected {n * m}")
    chirp = np.array([int(c) for c in meta["chirp_up"].split(",")], dtype=np.int8)
    return RadarScan(
        azimuths=_parse_floats(meta["azimuths_rad"]),
        timestamps=_parse_floats(meta["timestamps_s"]),
        range_resolution=float(meta["range_resolution_m"]),
        intensity=data.reshape(n, m).astype(np.float64),
        chirp_dir=chirp,
    )


def scan_stems(data_dir: str | Path) -> list[Path]:
    scan_dir = Path(data_dir) / "scans"
    if not scan_dir.is_dir():
        return []
    return sorted(p.with_suffix("") for p in scan_dir.glob("*.meta"))


def read_scans(data_dir: str | Path):
    """Yield scans in file order; a missing ``.bin`` is a hard error."""
    for stem in scan_stems(data_dir):
        if not stem.with_suffix(".bin").exists():
            raise FileNotFoundError(f"missing scan payload {stem}.bin")
        yield read_scan(stem)


def write_gyro(gyro: GyroSeries, path: str | Path) -> None:
    lines = ["timestamp_s,omega_rad_s"]
    lines += [_fmt_floats(row) for row in zip(gyro.timestamps.tolist(), gyro.rates.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_gyro(path: str | Path) -> GyroSeries | None:
    path = Path(path)
    if not path.exists():
        return None
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return None
    return GyroSeries(data[:, 0], data[:, 1])


def write_poses(poses: list[Pose2], path: str | Path) -> None:
    lines = ["timestamp_s,x_m,y_m,theta_rad"]
    for p in poses:
        lines.append(_fmt_floats([p.timestamp, p.position[0], p.position[1], p.angle]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_poses(path: str | Path) -> np.ndarray:
    """Return an ``(K, 4)`` array of ``t, x, y, theta`` rows."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    if not any(line.strip() for line in lines):
        return np.zeros((0, 4))
    return np.loadtxt(lines, delimiter=",", ndmin=2).reshape(-1, 4)


def write_table(path: str | Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_map(local_map: LocalMap, stem: str | Path) -> None:
    """Debug dump of a local map in the scan binary+meta layout."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    h, w = local_map.image.shape
    np.ascontiguousarray(local_map.image, dtype=_F32).tofile(stem.with_suffix(".bin"))
    meta = [
        f"n_azimuths={h}",
        f"n_range_bins={w}",
        f"range_resolution_m={local_map.resolution!r}",
        f"origin_m={_fmt_floats(local_map.origin)}",
        f"frame_time_s={local_map.frame_time!r}",
    ]
    stem.with_suffix(".meta").write_text("\n".join(meta) + "\n", encoding="utf-8")


def _coerce(field: dataclasses.Field, raw: str):
    default = field.default
    if isinstance(default, tuple):
        return tuple(type(d)(v) for d, v in zip(default, raw.split(",")))
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int) and not isinstance(default, bool):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def read_config(path: str | Path | None, **overrides) -> Config:
    values = {}
    if path is not None:
        known = {f.name: f for f in dataclasses.fields(Config)}
        for key, raw in read_kv(path).items():
            if key not in known:
                raise KeyError(f"unknown config key {key!r}")
            values[key] = _coerce(known[key], raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Config(**values)


def write_config(config: Config, path: str | Path) -> None:
    lines = []
    for f in dataclasses.fields(Config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif hasattr(value, "value"):
            value = value.value
        lines.append(f"{f.name}={value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
