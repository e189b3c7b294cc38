"""Regenerate the shared tensor-wire conformance fixtures (tensors.json).

Run from the repository root:  python3 fixtures/protocol/gen_fixtures.py
Deterministic by construction; the file is committed so conformance tests
never depend on this script at runtime.

The payload bytes are assembled here from the documented layout with plain
struct packing — deliberately importing neither codec under test — so the
fixtures stay a neutral referee between implementations:

    magic "AVTN" | dtype u8 (0=i64, 1=f64) | rank u8 | reserved u16 = 0
    | extents u64-le x rank | data little-endian row-major

Each case records dtype, shape, the raw data bytes, and the full payload,
all base64. A conforming codec must decode the payload to exactly that
array and re-encode it to exactly those payload bytes.
"""

from __future__ import annotations

import base64
import json
import os
import struct

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "tensors.json")

NP_DTYPES = {"i64": np.dtype("<i8"), "f64": np.dtype("<f8")}
DTYPE_CODES = {"i64": 0, "f64": 1}

I64_SPECIALS = [0, -1, 1, 2**63 - 1, -(2**63), 12345678901234567]
F64_SPECIALS = [0.0, -0.0, 1.0, -1.0, float("nan"), float("inf"),
                float("-inf"), 5e-324, -5e-324, 1.7976931348623157e308,
                2.2250738585072014e-308]

# every rank 0-4; extents drawn from 0..7 including empty and max cases
SHAPES = {
    0: [()],
    1: [(0,), (1,), (3,), (7,)],
    2: [(0, 4), (2, 0), (1, 1), (3, 5), (7, 7)],
    3: [(2, 0, 3), (1, 2, 3), (4, 1, 6), (7, 7, 7)],
    4: [(1, 1, 1, 1), (2, 3, 0, 4), (2, 2, 2, 2), (7, 1, 7, 1), (3, 4, 5, 6)],
}


def pack(dtype: str, arr: np.ndarray) -> bytes:
    head = struct.pack("<4sBBH", b"AVTN", DTYPE_CODES[dtype], arr.ndim, 0)
    dims = b"".join(struct.pack("<Q", d) for d in arr.shape)
    return head + dims + arr.tobytes(order="C")


def fill(rng: np.random.Generator, dtype: str, shape: tuple[int, ...],
         case: int) -> np.ndarray:
    n = int(np.prod(shape, dtype=np.int64)) if shape else 1
    if dtype == "i64":
        flat = rng.integers(-(2**62), 2**62, size=n, dtype=np.int64)
        specials = I64_SPECIALS
    else:
        flat = rng.uniform(-1e300, 1e300, size=n)
        specials = F64_SPECIALS
    # every third case gets boundary values spliced in
    if case % 3 == 0 and n:
        idx = rng.integers(0, n, size=min(n, len(specials)))
        for slot, value in zip(idx, specials):
            flat[slot] = value
    return np.asarray(flat, dtype=NP_DTYPES[dtype]).reshape(shape)


def main() -> None:
    rng = np.random.default_rng(424242)
    cases = []
    case = 0
    for dtype in ("i64", "f64"):
        for rank in range(5):
            for shape in SHAPES[rank]:
                for _ in range(3):
                    arr = fill(rng, dtype, shape, case)
                    cases.append({
                        "id": case,
                        "dtype": dtype,
                        "shape": list(shape),
                        "data_b64": base64.b64encode(
                            arr.tobytes(order="C")).decode("ascii"),
                        "payload_b64": base64.b64encode(
                            pack(dtype, arr)).decode("ascii"),
                    })
                    case += 1
    doc = {"protocol": 1, "layout": "AVTN v1", "cases": cases}
    with open(OUT, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {OUT}: {len(cases)} cases")


if __name__ == "__main__":
    main()
