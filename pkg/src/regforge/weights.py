"""Binary weight container.

Layout: magic "RGFW", version u32, count u32; per entry: name length u16,
UTF-8 name, rank u8, extents as u64 little-endian, payload as little-endian
f64. Round-trips are bit-exact.
"""

import struct

import numpy as np

MAGIC = b"RGFW"
VERSION = 1


class WeightFormatError(ValueError):
    pass


def save_weights(path, named_arrays):
    """Write an ordered {name: ndarray} mapping to `path`."""
    items = list(named_arrays.items())
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(items)))
        for name, arr in items:
            arr = np.asarray(arr, dtype=np.float64)
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", arr.ndim))
            for extent in arr.shape:
                f.write(struct.pack("<Q", extent))
            f.write(arr.astype("<f8").tobytes(order="C"))


def load_weights(path):
    """Read a weight file back into an ordered {name: ndarray} dict."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise WeightFormatError(f"{path}: bad magic {blob[:4]!r}")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise WeightFormatError(f"{path}: unsupported version {version}")
    out = {}
    offset = 12
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{rank}Q", blob, offset) if rank else ()
        offset += 8 * rank
        n = int(np.prod(shape)) if rank else 1
        arr = np.frombuffer(blob, dtype="<f8", count=n, offset=offset).reshape(shape)
        offset += 8 * n
        out[name] = arr.astype(np.float64)
    if offset != len(blob):
        raise WeightFormatError(f"{path}: {len(blob) - offset} trailing bytes")
    return out
