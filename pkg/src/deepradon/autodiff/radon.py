"""The projector and its adjoint as graph operations."""

from __future__ import annotations

import numpy as np

from ..projector import Geometry, _transpose, system_matrix
from .tensor import Tensor, make_op

__all__ = ["radon_layer", "backproject_layer"]


def _as_columns(data: np.ndarray, trailing: tuple[int, int], what: str) -> np.ndarray:
    if data.shape[-2:] != trailing:
        raise ValueError(f"{what} trailing shape {data.shape[-2:]} != {trailing}")
    return data.reshape(-1, trailing[0] * trailing[1]).T


def radon_layer(x: Tensor, geom: Geometry) -> Tensor:
    """Project every trailing ``N x N`` image of ``x``; gradients flow through ``A^T``."""
    lead = x.shape[:-2]
    mat, mat_t = system_matrix(geom), _transpose(geom)
    cols = _as_columns(x.data, geom.image_shape, "image tensor")
    out = (mat @ cols).T.reshape(*lead, *geom.sinogram_shape).astype(x.dtype, copy=False)

    def backward(g):
        gcols = _as_columns(g, geom.sinogram_shape, "sinogram gradient")
        return ((mat_t @ gcols).T.reshape(*lead, *geom.image_shape).astype(x.dtype, copy=False),)

    return make_op(out, (x,), backward, "radon")


def backproject_layer(y: Tensor, geom: Geometry) -> Tensor:
    """Apply ``A^T`` to every trailing sinogram of ``y``; gradients flow through ``A``."""
    lead = y.shape[:-2]
    mat, mat_t = system_matrix(geom), _transpose(geom)
    cols = _as_columns(y.data, geom.sinogram_shape, "sinogram tensor")
    out = (mat_t @ cols).T.reshape(*lead, *geom.image_shape).astype(y.dtype, copy=False)

    def backward(g):
        gcols = _as_columns(g, geom.image_shape, "image gradient")
        return ((mat @ gcols).T.reshape(*lead, *geom.sinogram_shape).astype(y.dtype, copy=False),)

    return make_op(out, (y,), backward, "backproject")
