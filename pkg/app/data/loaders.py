# app/data/loaders.py
"""
File ingestion and export.

CSV: header row, one feature per column, the label column picked by name or
index. IDX: the big-endian MNIST layout, unsigned-byte payloads only:

    offset  type    value
    0       int32   0x00000803 (images) / 0x00000801 (labels)
    4       int32   item count
    8..     int32   one size per remaining dimension
    ...     uint8   payload, row-major
"""

import csv
import io
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from common.api_error import DataFormatError
from common.scripts import file_sha256, write_csv, write_json
from app.schemas import Dataset, Provenance

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def load_csv(path: Union[str, Path], label_column: Union[str, int] = "label") -> Dataset:
    """
    Raises:
        DataFormatError: undecodable bytes (with the byte offset), missing label
            column, ragged rows, non-numeric cells or negative / non-integer
            labels (with the 1-based line number)
    """
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataFormatError(
            f"invalid UTF-8: {exc.reason}", path=str(path), offset=exc.start
        ) from exc
    with io.StringIO(text, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty CSV file", path=str(path), line=1)
        if isinstance(label_column, int):
            if not 0 <= label_column < len(header):
                raise DataFormatError(
                    f"label column index {label_column} out of range", path=str(path), line=1
                )
            label_idx = label_column
        elif label_column in header:
            label_idx = header.index(label_column)
        else:
            raise DataFormatError(
                f"label column {label_column!r} not in header", path=str(path), line=1
            )

        features: list[list[float]] = []
        labels: list[int] = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"expected {len(header)} cells, found {len(row)}", path=str(path), line=line
                )
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise DataFormatError(
                    f"non-numeric cell: {exc}", path=str(path), line=line
                ) from exc
            label = values.pop(label_idx)
            if label != int(label) or label < 0:
                raise DataFormatError(
                    f"label {row[label_idx]!r} is not a non-negative integer",
                    path=str(path),
                    line=line,
                )
            features.append(values)
            labels.append(int(label))

    if not features:
        raise DataFormatError("CSV file has no data rows", path=str(path), line=2)
    labels_arr = np.asarray(labels, dtype=np.int64)
    try:
        return Dataset(
            inputs=np.asarray(features, dtype=np.float64),
            labels=labels_arr,
            num_classes=max(int(labels_arr.max()) + 1, 2),
            provenance=Provenance(source=f"csv:{path.name}", file_sha256=(file_sha256(path),)),
        )
    except ValueError as exc:
        raise DataFormatError(f"invalid dataset: {exc}", path=str(path)) from exc


def _read_idx(path: Path, magic: int) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < 8:
        raise DataFormatError("IDX header truncated", path=str(path), offset=len(raw))
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise DataFormatError(
            f"magic 0x{found:08x} != expected 0x{magic:08x}", path=str(path), offset=0
        )
    ndims = magic & 0xFF
    header_size = 4 + 4 * ndims
    if len(raw) < header_size:
        raise DataFormatError("IDX dimension header truncated", path=str(path), offset=len(raw))
    dims = struct.unpack(f">{ndims}I", raw[4:header_size])
    expected = int(np.prod(dims))
    if expected == 0:
        raise DataFormatError(f"IDX dimensions {dims} hold no data", path=str(path), offset=4)
    payload = len(raw) - header_size
    if payload != expected:
        raise DataFormatError(
            f"payload has {payload} bytes, dimensions {dims} need {expected}",
            path=str(path),
            offset=header_size + min(payload, expected),
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=header_size).reshape(dims)


def load_idx(
    images_path: Union[str, Path], labels_path: Union[str, Path], scale: bool = True
) -> Dataset:
    """
    Read an IDX image/label pair; images are flattened to one row per item
    and, with ``scale``, mapped from 0..255 to [0, 1].
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"{images.shape[0]} images but {labels.shape[0]} labels",
            path=str(labels_path),
            offset=4,
        )
    inputs = images.reshape(images.shape[0], -1).astype(np.float64)
    if scale:
        inputs /= 255.0
    return Dataset(
        inputs=inputs,
        labels=labels.astype(np.int64),
        num_classes=max(int(labels.max()) + 1, 2),
        provenance=Provenance(
            source=f"idx:{images_path.name}+{labels_path.name}",
            file_sha256=(file_sha256(images_path), file_sha256(labels_path)),
            transforms=("scale_pixels",) if scale else (),
        ),
    )


def save_csv(data: Dataset, path: Union[str, Path], label_column: str = "label") -> Path:
    """Write features as x0..x{d-1} plus the label column, and a provenance sidecar."""
    path = Path(path)
    header = [f"x{j}" for j in range(data.dim)] + [label_column]
    rows = (
        [*features.tolist(), int(label)] for features, label in zip(data.inputs, data.labels)
    )
    write_csv(path, header, rows)
    write_json(path.with_suffix(path.suffix + ".provenance.json"), data.provenance.model_dump())
    return path


def save_idx(
    data: Dataset,
    images_path: Union[str, Path],
    labels_path: Union[str, Path],
    shape: Tuple[int, ...] = (),
) -> Tuple[Path, Path]:
    """
    Write inputs and labels as unsigned-byte IDX files; inputs must hold
    integers in 0..255. ``shape`` = (rows, cols) splits each row into an image; default (1, d).
    """
    inputs = data.inputs
    if not np.array_equal(inputs, np.round(inputs)) or inputs.min() < 0 or inputs.max() > 255:
        raise DataFormatError("IDX images need integer values in 0..255", path=str(images_path))
    if data.labels.max() > 255:
        raise DataFormatError("IDX labels need values in 0..255", path=str(labels_path))
    dims = tuple(shape) or (1, data.dim)
    if len(dims) != 2 or int(np.prod(dims)) != data.dim:
        raise DataFormatError(
            f"shape {dims} does not cover {data.dim} features", path=str(images_path)
        )

    images_path, labels_path = Path(images_path), Path(labels_path)
    images_path.parent.mkdir(parents=True, exist_ok=True)
    labels_path.parent.mkdir(parents=True, exist_ok=True)
    images_path.write_bytes(
        struct.pack(">IIII", IDX_IMAGES_MAGIC, data.n, *dims)
        + inputs.astype(np.uint8).tobytes()
    )
    labels_path.write_bytes(
        struct.pack(">II", IDX_LABELS_MAGIC, data.n) + data.labels.astype(np.uint8).tobytes()
    )
    return images_path, labels_path


__all__ = [
    "IDX_IMAGES_MAGIC",
    "IDX_LABELS_MAGIC",
    "load_csv",
    "load_idx",
    "save_csv",
    "save_idx",
]
