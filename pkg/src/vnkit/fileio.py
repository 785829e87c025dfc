"""On-disk formats: PFM, 16-bit PNG depth, PLY clouds, JSON, CSV.

PFM layout used here: a text header of three tokens, ``Pf`` (one
channel) or ``PF`` (three), ``width height``, and a scale whose sign
encodes byte order (negative = little-endian), followed by float32
scanlines stored bottom-up.  Depth semantics on top of raw PFM: invalid
pixels are written as 0.0 and masked out again on read.

PNG16 depth: raw 16-bit values times ``depth_scale`` give meters; raw 0
is invalid.

All CSV numbers are formatted with ``repr`` (shortest round-trip), so
identical data always produces identical bytes.
"""

from __future__ import annotations

import json

import numpy as np
from PIL import Image

from .errors import FileFormatError
from .geometry import CameraIntrinsics, DepthMap, PointCloud
from .normals import NormalMap
from .sampling import TripletSet

__all__ = [
    "read_pfm",
    "write_pfm",
    "read_depth",
    "write_depth",
    "read_normal_map",
    "write_normal_map",
    "write_ply",
    "read_intrinsics",
    "write_intrinsics",
    "write_triplets_csv",
    "read_triplets_csv",
    "format_csv_table",
    "report_json_line",
]


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain str for the rest."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


# ---------------------------------------------------------------- PFM


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data) and data[pos : pos + 1].isspace():
        pos += 1
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FileFormatError(f"truncated header at byte {start}")
    return data[start:pos], pos


def read_pfm(path) -> np.ndarray:
    """Raw PFM load: (H, W) float64 for ``Pf``, (H, W, 3) for ``PF``."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _read_token(data, 0)
    if magic == b"Pf":
        channels = 1
    elif magic == b"PF":
        channels = 3
    else:
        raise FileFormatError(f"bad magic {magic!r} at byte 0")
    wtok, pos = _read_token(data, pos)
    htok, pos = _read_token(data, pos)
    stok, pos = _read_token(data, pos)
    try:
        width, height = int(wtok), int(htok)
        scale = float(stok)
    except ValueError as e:
        raise FileFormatError(f"bad header token near byte {pos}: {e}") from e
    if width < 1 or height < 1:
        raise FileFormatError(f"bad dimensions {width}x{height}")
    if scale == 0.0:
        raise FileFormatError("scale must be nonzero")
    pos += 1  # single whitespace byte terminates the header
    expected = width * height * channels * 4
    if width * height > 2**28:
        raise FileFormatError(f"dimension overflow: {width}x{height}")
    if len(data) - pos != expected:
        raise FileFormatError(
            f"payload is {len(data) - pos} bytes at offset {pos}, "
            f"expected {expected}"
        )
    dtype = "<f4" if scale < 0.0 else ">f4"
    flat = np.frombuffer(data, dtype=dtype, count=width * height * channels, offset=pos)
    shape = (height, width) if channels == 1 else (height, width, 3)
    img = flat.reshape(shape).astype(np.float64)
    return img[::-1].copy()  # scanlines are stored bottom-up


def write_pfm(path, array: np.ndarray) -> None:
    """Raw PFM store (float32, little-endian, bottom-up scanlines)."""
    arr = np.asarray(array, dtype=np.float32)
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"array must be (H, W) or (H, W, 3), got {arr.shape}")
    h, w = arr.shape[0], arr.shape[1]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.ascontiguousarray(arr[::-1], dtype="<f4").tobytes())


def read_depth(path, fmt: str, k: CameraIntrinsics) -> DepthMap:
    """Load a depth map; zeros are invalid pixels in both formats.

    PFM values are meters already; PNG16 raw values are multiplied by
    ``k.depth_scale``.  Negative or non-finite stored depths are format
    errors, not data.
    """
    if fmt == "pfm":
        values = read_pfm(path)
        if values.ndim != 2:
            raise FileFormatError("depth PFM must be single-channel 'Pf'")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise FileFormatError("depth values must be finite and >= 0")
        return DepthMap(values, values > 0.0)
    if fmt == "png16":
        with Image.open(path) as img:
            raw = np.asarray(img)
        if raw.ndim != 2 or raw.dtype not in (np.uint16, np.int32, np.uint8):
            raise FileFormatError(
                f"expected a single-channel integer PNG, got {raw.dtype} "
                f"with shape {raw.shape}"
            )
        raw = raw.astype(np.int64)
        if np.any(raw < 0) or np.any(raw > 0xFFFF):
            raise FileFormatError("PNG16 sample out of 16-bit range")
        return DepthMap(raw.astype(np.float64) * k.depth_scale, raw > 0)
    raise ValueError(f"unknown depth format {fmt!r}")


def write_depth(path, depth: DepthMap, fmt: str, k: CameraIntrinsics) -> None:
    """Store a depth map; invalid pixels become 0.

    PNG16 quantizes to round(d / depth_scale) clamped to [0, 65535];
    valid depths below half a depth unit therefore degrade to invalid,
    which is the format's floor, not an error.
    """
    if fmt == "pfm":
        write_pfm(path, depth.values)
        return
    if fmt == "png16":
        raw = np.rint(depth.values / k.depth_scale)
        raw = np.clip(raw, 0, 0xFFFF).astype(np.uint16)
        raw[~depth.mask] = 0
        Image.fromarray(raw).save(path, format="PNG")
        return
    raise ValueError(f"unknown depth format {fmt!r}")


def write_normal_map(path, nm: NormalMap) -> None:
    """Normal map as 3-channel PFM; invalid pixels are zero vectors."""
    write_pfm(path, nm.normals)


def read_normal_map(path) -> NormalMap:
    """Inverse of :func:`write_normal_map` (re-normalizes float32 rounding)."""
    arr = read_pfm(path)
    if arr.ndim != 3:
        raise FileFormatError("normal map PFM must be 3-channel 'PF'")
    norms = np.linalg.norm(arr, axis=2)
    valid = norms > 0.5  # unit vectors vs exact-zero invalid fill
    normals = np.zeros_like(arr)
    normals[valid] = arr[valid] / norms[valid][:, None]
    return NormalMap(normals=normals, valid=valid)


# ---------------------------------------------------------------- PLY


def write_ply(cloud: PointCloud, normals, path, mode: str = "binary_le") -> None:
    """Point cloud to PLY 1.0 with float32 x y z and optional normals.

    ``normals`` may be None, an (N, 3) array, or a NormalMap (requires
    a grid-indexed cloud; vertices whose pixel has no valid normal get
    the zero vector).
    """
    n = len(cloud)
    if n == 0:
        raise ValueError("cannot write an empty cloud")
    if mode not in ("ascii", "binary_le"):
        raise ValueError("mode must be 'ascii' or 'binary_le'")

    per_vertex = None
    if isinstance(normals, NormalMap):
        if cloud.pixel_index is None:
            raise ValueError("NormalMap needs a grid-indexed cloud")
        rows = cloud.pixel_index[:, 0]
        cols = cloud.pixel_index[:, 1]
        per_vertex = normals.normals[rows, cols]
    elif normals is not None:
        per_vertex = np.asarray(normals, dtype=np.float64)
        if per_vertex.shape != (n, 3):
            raise ValueError("normals array must be (N, 3)")

    header = ["ply"]
    header.append(
        "format ascii 1.0" if mode == "ascii" else "format binary_little_endian 1.0"
    )
    header.append(f"element vertex {n}")
    header += ["property float x", "property float y", "property float z"]
    if per_vertex is not None:
        header += [
            "property float nx",
            "property float ny",
            "property float nz",
        ]
    header.append("end_header")

    data = (
        cloud.points
        if per_vertex is None
        else np.concatenate([cloud.points, per_vertex], axis=1)
    )
    data32 = data.astype(np.float32)
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if mode == "ascii":
            lines = [" ".join(f"{v:.9g}" for v in row) for row in data32]
            fh.write(("\n".join(lines) + "\n").encode("ascii"))
        else:
            fh.write(np.ascontiguousarray(data32, dtype="<f4").tobytes())


# --------------------------------------------------------------- JSON


def write_intrinsics(k: CameraIntrinsics, path) -> None:
    obj = {
        "fx": k.fx,
        "fy": k.fy,
        "u0": k.u0,
        "v0": k.v0,
        "depth_scale": k.depth_scale,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def read_intrinsics(path) -> CameraIntrinsics:
    """Camera JSON: fx, fy, u0, v0 required; depth_scale optional.

    Unknown keys are rejected so typos fail loudly instead of silently
    falling back to defaults.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"intrinsics file is not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise FileFormatError("intrinsics JSON must be an object")
    allowed = {"fx", "fy", "u0", "v0", "depth_scale"}
    unknown = set(obj) - allowed
    if unknown:
        raise FileFormatError(f"unknown intrinsics keys: {sorted(unknown)}")
    missing = {"fx", "fy", "u0", "v0"} - set(obj)
    if missing:
        raise FileFormatError(f"missing intrinsics keys: {sorted(missing)}")
    try:
        return CameraIntrinsics(
            fx=float(obj["fx"]),
            fy=float(obj["fy"]),
            u0=float(obj["u0"]),
            v0=float(obj["v0"]),
            depth_scale=float(obj.get("depth_scale", 1.0)),
        )
    except (TypeError, ValueError) as e:
        raise FileFormatError(f"bad intrinsics values: {e}") from e


# ---------------------------------------------------------------- CSV


def write_triplets_csv(triplets: TripletSet, path, comments=()) -> None:
    """Triplet pixel indices as CSV with optional '#' header comments."""
    lines = [f"# {c}" for c in comments]
    lines.append("rA,cA,rB,cB,rC,cC")
    flat = triplets.triplets.reshape(-1, 6)
    lines += [",".join(str(int(v)) for v in row) for row in flat]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_triplets_csv(path) -> np.ndarray:
    """Parse a triplet CSV back into an (N, 3, 2) int64 array."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        header_seen = False
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != "rA,cA,rB,cB,rC,cC":
                    raise FileFormatError(
                        f"line {line_no}: expected triplet CSV header"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise FileFormatError(f"line {line_no}: expected 6 columns")
            try:
                rows.append([int(p) for p in parts])
            except ValueError as e:
                raise FileFormatError(f"line {line_no}: {e}") from e
    if not header_seen:
        raise FileFormatError("missing triplet CSV header")
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3, 2)


def format_csv_table(columns, rows, comments=()) -> str:
    """Generic small-table CSV with '#' comments; repr-formatted floats."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def report_json_line(report, extra: dict | None = None) -> str:
    """One-line JSON for any report object exposing ``as_dict``."""
    obj = report.as_dict() if hasattr(report, "as_dict") else dict(report)
    if extra:
        obj = {**obj, **extra}
    return json.dumps(obj, separators=(", ", ": "))
