"""Minimal NIfTI-1 volume I/O (.nii and .nii.gz), little-endian.

File schema used by the toolkit: masks are unsigned 8-bit, scalar volumes
32-bit float, spacing lives in pixdim, the sform affine is preserved on
write.  Data on disk is in the standard NIfTI Fortran layout (x fastest);
in memory every array follows the package convention (C-contiguous,
indexed [ix, iy, iz]).

Gzipped output is written with a zeroed modification time so identical
volumes produce identical bytes.

A raw debug format (JSON header line + little-endian blob) backs fixture
tests; it is not part of the interchange surface.
"""

from __future__ import annotations

import gzip
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, NonBinaryMaskError
from .grid import BinaryMask, ScalarVolume, Spacing

_HDR_SIZE = 348
_VOX_OFFSET = 352
_MAGIC = b"n+1\x00"

_DT_UINT8 = 2
_DT_INT16 = 4
_DT_INT32 = 8
_DT_FLOAT32 = 16
_DT_FLOAT64 = 64

_DTYPES = {
    _DT_UINT8: np.dtype("<u1"),
    _DT_INT16: np.dtype("<i2"),
    _DT_INT32: np.dtype("<i4"),
    _DT_FLOAT32: np.dtype("<f4"),
    _DT_FLOAT64: np.dtype("<f8"),
}


def _read_bytes(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _write_bytes(path: Path, payload: bytes) -> None:
    if path.name.endswith(".gz"):
        path.write_bytes(gzip.compress(payload, compresslevel=6, mtime=0))
    else:
        path.write_bytes(payload)


def default_affine(spacing: Spacing) -> np.ndarray:
    aff = np.eye(4, dtype=np.float64)
    aff[0, 0], aff[1, 1], aff[2, 2] = spacing.sx, spacing.sy, spacing.sz
    return aff


def _parse_header(buf: bytes, path: Path):
    if len(buf) < _HDR_SIZE:
        raise FormatError(f"{path}: truncated header ({len(buf)} bytes)")
    (sizeof_hdr,) = struct.unpack_from("<i", buf, 0)
    if sizeof_hdr != _HDR_SIZE:
        (swapped,) = struct.unpack_from(">i", buf, 0)
        if swapped == _HDR_SIZE:
            raise FormatError(f"{path}: big-endian NIfTI is not supported")
        raise FormatError(f"{path}: not a NIfTI-1 file (sizeof_hdr={sizeof_hdr})")
    magic = buf[344:348]
    if magic not in (b"n+1\x00", b"ni1\x00"):
        raise FormatError(f"{path}: bad magic {magic!r}")
    dim = struct.unpack_from("<8h", buf, 40)
    ndim = dim[0]
    if not (1 <= ndim <= 7):
        raise FormatError(f"{path}: invalid dim[0]={ndim}")
    shape = tuple(int(d) for d in dim[1:1 + ndim])
    if ndim > 3 and any(d != 1 for d in shape[3:]):
        raise FormatError(f"{path}: only 3-D volumes supported, got shape {shape}")
    shape3 = (shape + (1, 1, 1))[:3]
    (datatype,) = struct.unpack_from("<h", buf, 70)
    if datatype not in _DTYPES:
        raise FormatError(f"{path}: unsupported NIfTI datatype code {datatype}")
    pixdim = struct.unpack_from("<8f", buf, 76)
    zooms = tuple(abs(float(p)) for p in pixdim[1:4])
    if any(z <= 0 or not np.isfinite(z) for z in zooms):
        raise FormatError(f"{path}: non-positive pixdim {zooms}")
    (vox_offset,) = struct.unpack_from("<f", buf, 108)
    scl_slope, scl_inter = struct.unpack_from("<2f", buf, 112)
    (sform_code,) = struct.unpack_from("<h", buf, 254)
    affine = default_affine(Spacing(*zooms))
    if sform_code > 0:
        rows = struct.unpack_from("<12f", buf, 280)
        affine = np.vstack([np.array(rows, dtype=np.float64).reshape(3, 4), [0, 0, 0, 1]])
    return shape3, datatype, zooms, int(vox_offset), (scl_slope, scl_inter), affine


def read_volume(path: str | Path, binarize: bool = False) -> ScalarVolume | BinaryMask:
    """Load a volume; uint8 files are masks, everything else a scalar volume.

    A uint8 file with values outside {0, 1} raises NonBinaryMaskError unless
    ``binarize`` maps all positive labels to 1.
    """
    path = Path(path)
    buf = _read_bytes(path)
    shape, datatype, zooms, vox_offset, (slope, inter), _ = _parse_header(buf, path)
    spacing = Spacing(*zooms)
    dtype = _DTYPES[datatype]
    count = int(np.prod(shape))
    end = vox_offset + count * dtype.itemsize
    if len(buf) < end:
        raise FormatError(f"{path}: truncated data section")
    arr = np.frombuffer(buf[vox_offset:end], dtype=dtype).reshape(shape, order="F")
    arr = np.ascontiguousarray(arr)

    if datatype == _DT_UINT8:
        if not np.isin(arr, (0, 1)).all():
            if not binarize:
                raise NonBinaryMaskError(
                    f"{path}: mask has labels outside {{0,1}}; pass binarize to map >0 to 1"
                )
            arr = (arr > 0).astype(np.uint8)
        return BinaryMask(arr, spacing)

    data = arr.astype(np.float64)
    if slope not in (0.0, 1.0) or inter != 0.0:
        if slope != 0.0:
            data = data * float(slope) + float(inter)
    return ScalarVolume(data, spacing)


def read_affine(path: str | Path) -> np.ndarray:
    """4x4 world affine of a volume file (sform if set, else spacing diagonal)."""
    path = Path(path)
    buf = _read_bytes(path)
    return _parse_header(buf, path)[5]


def _build_header(shape: tuple[int, int, int], datatype: int, spacing: Spacing,
                  affine: np.ndarray) -> bytes:
    hdr = bytearray(_VOX_OFFSET)
    struct.pack_into("<i", hdr, 0, _HDR_SIZE)
    struct.pack_into("<8h", hdr, 40, 3, shape[0], shape[1], shape[2], 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, datatype)
    struct.pack_into("<h", hdr, 72, _DTYPES[datatype].itemsize * 8)
    struct.pack_into("<8f", hdr, 76, 1.0, spacing.sx, spacing.sy, spacing.sz, 0, 0, 0, 0)
    struct.pack_into("<f", hdr, 108, float(_VOX_OFFSET))
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)  # scl_slope, scl_inter
    hdr[123] = 2  # xyzt_units: millimeters
    struct.pack_into("<2h", hdr, 252, 0, 1)  # qform_code=0, sform_code=1
    struct.pack_into("<12f", hdr, 280, *np.asarray(affine, dtype=np.float64)[:3, :4].ravel())
    hdr[344:348] = _MAGIC
    return bytes(hdr)


def write_volume(path: str | Path, volume: ScalarVolume | BinaryMask,
                 affine: np.ndarray | None = None) -> None:
    """Write a mask as uint8 or a scalar volume as float32."""
    path = Path(path)
    if affine is None:
        affine = default_affine(volume.spacing)
    if isinstance(volume, BinaryMask):
        datatype = _DT_UINT8
        data = volume.data
    else:
        datatype = _DT_FLOAT32
        data = volume.data.astype("<f4")
    header = _build_header(volume.dims, datatype, volume.spacing, affine)
    _write_bytes(path, header + data.tobytes(order="F"))


# --- raw debug format -------------------------------------------------------

def write_rawvol(path: str | Path, volume: ScalarVolume | BinaryMask) -> None:
    path = Path(path)
    is_mask = isinstance(volume, BinaryMask)
    header = {
        "kind": "mask" if is_mask else "scalar",
        "dims": list(volume.dims),
        "spacing": [volume.spacing.sx, volume.spacing.sy, volume.spacing.sz],
    }
    blob = volume.data.tobytes() if is_mask else volume.data.astype("<f8").tobytes()
    path.write_bytes(json.dumps(header, sort_keys=True).encode() + b"\n" + blob)


def read_rawvol(path: str | Path) -> ScalarVolume | BinaryMask:
    path = Path(path)
    raw = path.read_bytes()
    nl = raw.index(b"\n")
    try:
        header = json.loads(raw[:nl].decode())
        dims = tuple(header["dims"])
        spacing = Spacing(*header["spacing"])
        kind = header["kind"]
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: bad raw volume header") from exc
    blob = raw[nl + 1:]
    if kind == "mask":
        arr = np.frombuffer(blob, dtype="<u1").reshape(dims)
        return BinaryMask(arr.copy(), spacing)
    arr = np.frombuffer(blob, dtype="<f8").reshape(dims)
    return ScalarVolume(arr.copy(), spacing)
