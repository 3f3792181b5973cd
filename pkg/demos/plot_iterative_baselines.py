"""
Gradient descent and ADMM-TV
============================

Two classical answers to sparse-view data: Landweber iterations on the
least-squares loss, and the same loss with a total-variation penalty
solved by ADMM.
"""

from deepradon import (Geometry, IterConfig, admm_tv_reconstruct, forward_project,
                       gd_reconstruct, psnr, shepp_logan)
from deepradon.iterative import tune_tv_weight

x = shepp_logan(64)
geom = Geometry(64, 30)
p = forward_project(x, geom)

# step_beta is in units of 1/||A||^2, anything up to 1 descends
img, trace = gd_reconstruct(p, geom, IterConfig(max_iters=300), reference=x)
print("GD: loss %.3g -> %.3g, %.2f dB" % (trace.loss[0], trace.loss[-1], trace.psnr[-1]))

# least squares alone fits the data but not the gaps between views.
# TV rewards piecewise-constant images, which is exactly what the phantom is
cfg = IterConfig(max_iters=150)
weight, scores = tune_tv_weight(p, geom, x, [0.003, 0.01, 0.03, 0.1], cfg)
for w, db in scores.items():
    print("  tv_weight %-6g %.2f dB" % (w, db))

img, trace = admm_tv_reconstruct(p, geom, IterConfig(max_iters=150, tv_weight=weight))
print("ADMM-TV (tv_weight %g): %.2f dB" % (weight, psnr(img, x)))

# the primal residual ||grad x - d|| tracks how well the split has closed
print("primal residual first/last: %.3g / %.3g"
      % (trace.primal_residual[0], trace.primal_residual[-1]))
