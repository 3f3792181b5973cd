"""
Projector and filtered back-projection
======================================

Render a phantom, take its sinogram, check the adjoint, and compare
filtered back-projection at full and sparse angular sampling.
"""

import numpy as np

from deepradon import Geometry, back_project, fbp, forward_project, psnr, shepp_logan
from deepradon.imageio import write_image

# a 64x64 Shepp-Logan head; values sit in [0, 1]
x = shepp_logan(64)
print("phantom range", x.min(), x.max())

# 180 views over half a turn, 96 detector bins of one pixel each
dense = Geometry(64, 180)
p = forward_project(x, dense)
print("sinogram", p.shape)

# every view integrates the same mass
print("mass per view", (p.sum(axis=1) * dense.detector_spacing)[:3], "image", x.sum())

# back-projection is the literal transpose, so <Ax, y> == <x, A^T y>
rng = np.random.default_rng(0)
u = rng.standard_normal(dense.image_shape)
v = rng.standard_normal(dense.sinogram_shape)
print("adjoint gap", np.vdot(forward_project(u, dense), v) - np.vdot(u, back_project(v, dense)))

# plain back-projection blurs; the ramp filter undoes the 1/|w| weighting
blurry = back_project(p, dense)
sharp = fbp(p, dense)
print("FBP, 180 views: %.2f dB" % psnr(sharp, x))

# 30 views: streaks appear and PSNR drops
sparse = Geometry(64, 30)
streaky = fbp(forward_project(x, sparse), sparse)
print("FBP,  30 views: %.2f dB" % psnr(streaky, x))

write_image("fbp_180.png", sharp)
write_image("fbp_30.png", streaky)
write_image("backprojection.png", blurry / blurry.max())
