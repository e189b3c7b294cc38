from .attributes import AttributeStore, attr_read, attr_write
from .frame import Box, Frame
from .pbc import minimum_image, require_orthorhombic
from .tensor import Tensor, scalar_f64, scalar_i64, tensor_reshape
from .trajectory import ByteSource, CallableFrameSource, Trajectory

__all__ = [
    "AttributeStore",
    "Box",
    "ByteSource",
    "CallableFrameSource",
    "Frame",
    "Tensor",
    "Trajectory",
    "attr_read",
    "attr_write",
    "minimum_image",
    "require_orthorhombic",
    "scalar_f64",
    "scalar_i64",
    "tensor_reshape",
]
