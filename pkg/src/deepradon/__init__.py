"""Sparse-view CT reconstruction with a Deep Radon Prior.

The pieces, bottom up: an exact-adjoint parallel-beam projector, filtered
back-projection, a small numpy autodiff engine with the layers of an
encoder-decoder network, classical iterative baselines, and the DRP loop
that alternates an input-space gradient step with network fitting.
"""

from .drp import (DrpConfig, Mode, RunRecord, drp_reconstruct, drp_single_stage,
                  reconstruct, undip_reconstruct)
from .fbp import FilterKind, fbp
from .iterative import IterConfig, admm_tv_reconstruct, gd_reconstruct, tv
from .metrics import entropy, psnr, ssim
from .network import NetConfig, Network, build_network, fit_identity
from .phantoms import Phantom, render_phantom, shepp_logan
from .projector import Geometry, back_project, forward_project, operator_norm_sq

__version__ = "0.1.0"

__all__ = [
    "Geometry", "forward_project", "back_project", "operator_norm_sq",
    "FilterKind", "fbp",
    "IterConfig", "gd_reconstruct", "admm_tv_reconstruct", "tv",
    "NetConfig", "Network", "build_network", "fit_identity",
    "DrpConfig", "Mode", "RunRecord", "drp_reconstruct", "drp_single_stage",
    "undip_reconstruct", "reconstruct",
    "Phantom", "render_phantom", "shepp_logan",
    "psnr", "ssim", "entropy",
]
