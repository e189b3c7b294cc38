"""Shared tensor-wire conformance fixtures, checked bit-exactly.

fixtures/protocol/tensors.json at the repository root is generated from the
documented payload layout with plain struct packing (no codec involved), so
every protocol implementation in this repository is tested against the same
neutral byte set.
"""

import base64
import json
from pathlib import Path

import numpy as np
import pytest

from trajflow.model.tensor import Tensor
from trajflow.scripting import wire

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures" / "protocol"


@pytest.fixture(scope="module")
def cases():
    doc = json.loads((FIXTURES / "tensors.json").read_text())
    assert doc["protocol"] == wire.PROTOCOL_VERSION
    return doc["cases"]


NP_DTYPES = {"i64": np.dtype("<i8"), "f64": np.dtype("<f8")}


def test_decode_reproduces_every_case(cases):
    for case in cases:
        payload = base64.b64decode(case["payload_b64"])
        tensor = wire.decode_tensor(payload)
        assert tensor.dtype == case["dtype"], case["id"]
        assert list(tensor.array.shape) == case["shape"], case["id"]
        raw = np.asarray(tensor.array, dtype=NP_DTYPES[case["dtype"]])
        assert raw.tobytes(order="C") == base64.b64decode(case["data_b64"]), \
            case["id"]


def test_encode_reproduces_every_payload(cases):
    for case in cases:
        arr = np.frombuffer(
            base64.b64decode(case["data_b64"]), dtype=NP_DTYPES[case["dtype"]]
        ).reshape(case["shape"])
        payload = wire.encode_tensor(Tensor(arr.copy()))
        assert payload == base64.b64decode(case["payload_b64"]), case["id"]
