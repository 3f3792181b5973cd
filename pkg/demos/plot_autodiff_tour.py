"""
A tour of the autodiff engine
=============================

The network is trained with a small reverse-mode engine. This walks
through tensors, a convolution, the projector as a layer, and Adam.
"""

import numpy as np

from deepradon import Geometry, back_project, forward_project
from deepradon.autodiff import Adam, Tensor, conv2d, radon_layer, relu, sum_squares

rng = np.random.default_rng(0)

# leaves that need gradients say so
x = Tensor(rng.standard_normal((1, 1, 8, 8)), requires_grad=True, name="x")
w = Tensor(rng.standard_normal((4, 1, 3, 3)) * 0.3, requires_grad=True, name="w")

y = relu(conv2d(x, w, padding=1))
loss = sum_squares(y)
loss.backward()
print("loss", loss.item(), "grad shapes", x.grad.shape, w.grad.shape)

# the projector is a layer too; its backward pass is back-projection
geom = Geometry(16, 10)
img = Tensor(rng.random((16, 16)), requires_grad=True)
p = forward_project(np.ones((16, 16)), geom)
sum_squares(radon_layer(img, geom) - p).backward()
direct = 2 * back_project(forward_project(img.data, geom) - p, geom)
print("autodiff vs 2 A^T(Az - p):", np.abs(img.grad - direct).max())

# fit a single image straight through the projector with Adam
z = Tensor(np.zeros((16, 16)), requires_grad=True, name="z")
opt = Adam([z], lr=0.05)
for step in range(300):
    opt.zero_grad()
    loss = sum_squares(radon_layer(z, geom) - p)
    loss.backward()
    opt.step()
    if step % 100 == 0:
        print("step %3d  loss %.4g" % (step, loss.item()))
print("final loss %.4g" % loss.item())
