"""Classical iterative reconstructions: projected gradient descent and ADMM-TV."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .fbp import fbp
from .metrics import psnr
from .projector import Geometry, back_project, forward_project, operator_norm_sq

__all__ = [
    "DivergenceError",
    "IterConfig",
    "IterTrace",
    "tv",
    "grad2d",
    "grad2d_adjoint",
    "soft_threshold",
    "gd_reconstruct",
    "admm_tv_reconstruct",
    "tune_tv_weight",
]


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class IterConfig:
    """Settings shared by the iterative solvers.

    ``step_beta`` is measured in units of ``1 / ||A||^2`` when
    ``normalize_step`` is on, so any value in ``(0, 1]`` is a safe descent step.
    """

    max_iters: int = 200
    step_beta: float = 0.25
    nonneg: bool = True
    tv_weight: float = 0.1
    admm_rho: float = 1.0
    tol: float = 1e-6
    inner_steps: int = 20
    normalize_step: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.step_beta > 0:
            raise ValueError(f"step_beta must be positive, got {self.step_beta}")
        if self.tv_weight < 0:
            raise ValueError(f"tv_weight must be >= 0, got {self.tv_weight}")
        if not self.admm_rho > 0:
            raise ValueError(f"admm_rho must be positive, got {self.admm_rho}")
        if self.inner_steps < 1:
            raise ValueError(f"inner_steps must be >= 1, got {self.inner_steps}")


@dataclass
class IterTrace:
    """Per-iteration history; ``objective`` is the method's own cost."""

    loss: list[float] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    psnr: list[float] = field(default_factory=list)
    primal_residual: list[float] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["iter", "loss", "psnr"])
            for i, loss in enumerate(self.loss, 1):
                value = self.psnr[i - 1] if self.psnr else ""
                out.writerow([i, repr(loss), value if value == "" else repr(value)])


def tv(img) -> float:
    """Anisotropic total variation: sum of |horizontal| + |vertical| differences."""
    img = np.asarray(img, dtype=np.float64)
    return float(np.abs(np.diff(img, axis=1)).sum() + np.abs(np.diff(img, axis=0)).sum())


def grad2d(img: np.ndarray) -> np.ndarray:
    """Forward differences, zero in the last row/column (no wrap-around)."""
    g = np.zeros((2, *img.shape))
    g[0, :, :-1] = img[:, 1:] - img[:, :-1]
    g[1, :-1, :] = img[1:, :] - img[:-1, :]
    return g


def grad2d_adjoint(g: np.ndarray) -> np.ndarray:
    out = np.zeros(g.shape[1:])
    out[:, :-1] -= g[0, :, :-1]
    out[:, 1:] += g[0, :, :-1]
    out[:-1, :] -= g[1, :-1, :]
    out[1:, :] += g[1, :-1, :]
    return out


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _check_sino(p, geom: Geometry) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != geom.sinogram_shape:
        raise ValueError(f"sinogram has shape {p.shape}, geometry expects {geom.sinogram_shape}")
    return p


def _converged(trace: list[float], tol: float) -> bool:
    if len(trace) < 2:
        return False
    prev, cur = trace[-2], trace[-1]
    return abs(prev - cur) <= tol * max(abs(prev), np.finfo(float).tiny)


def gd_reconstruct(p, geom: Geometry, cfg: IterConfig = IterConfig(), reference=None,
                   x0=None):
    """Landweber iteration ``z <- z + step * A^T (p - A z)`` starting from zero.

    Returns ``(image, trace)``; ``trace.loss[i]`` is ``||A z - p||^2`` after
    iteration ``i + 1``.
    """
    p = _check_sino(p, geom)
    step = cfg.step_beta / operator_norm_sq(geom) if cfg.normalize_step else cfg.step_beta
    z = np.zeros(geom.image_shape) if x0 is None else np.array(x0, dtype=np.float64)
    initial = float(np.sum((forward_project(z, geom) - p) ** 2))
    trace = IterTrace()
    for it in range(cfg.max_iters):
        z = z + step * back_project(p - forward_project(z, geom), geom)
        if cfg.nonneg:
            np.maximum(z, 0.0, out=z)
        loss = float(np.sum((forward_project(z, geom) - p) ** 2))
        if not np.isfinite(loss) or (initial > 0 and loss > 10 * initial):
            raise DivergenceError(
                f"gradient descent diverged at iteration {it + 1} "
                f"(loss {loss:.3g} vs initial {initial:.3g}); use a smaller step_beta"
            )
        trace.loss.append(loss)
        trace.objective.append(loss)
        if reference is not None:
            trace.psnr.append(psnr(z, reference))
        if _converged(trace.loss, cfg.tol):
            break
    return z, trace


def admm_tv_reconstruct(p, geom: Geometry, cfg: IterConfig = IterConfig(),
                        reference=None, x0=None):
    """ADMM for ``1/2 ||Ax - p||^2 + tv_weight * TV(x)``.

    The split variable ``d = grad(x)`` takes the soft-thresholding prox; the
    image update runs ``inner_steps`` projected gradient steps on the
    quadratic sub-problem.  Starts from the FBP image unless ``x0`` is given.
    """
    p = _check_sino(p, geom)
    lam, rho = cfg.tv_weight, cfg.admm_rho
    # Lipschitz constant of the sub-problem gradient; ||grad2d||^2 <= 8
    inner_step = 1.0 / (operator_norm_sq(geom) + 8.0 * rho)

    x = fbp(p, geom) if x0 is None else np.array(x0, dtype=np.float64)
    if cfg.nonneg:
        np.maximum(x, 0.0, out=x)
    d = grad2d(x)
    u = np.zeros_like(d)
    initial = float(np.sum((forward_project(x, geom) - p) ** 2))
    trace = IterTrace()
    for it in range(cfg.max_iters):
        for _ in range(cfg.inner_steps):
            resid = forward_project(x, geom) - p
            g = back_project(resid, geom) + rho * grad2d_adjoint(grad2d(x) - d + u)
            x = x - inner_step * g
            if cfg.nonneg:
                np.maximum(x, 0.0, out=x)
        dx = grad2d(x)
        d = soft_threshold(dx + u, lam / rho)
        u = u + dx - d

        loss = float(np.sum((forward_project(x, geom) - p) ** 2))
        if not np.isfinite(loss) or (initial > 0 and loss > 10 * initial):
            raise DivergenceError(
                f"ADMM-TV diverged at iteration {it + 1}; lower admm_rho or tv_weight"
            )
        lagrangian = (0.5 * loss + lam * np.abs(d).sum()
                      + 0.5 * rho * np.sum((dx - d + u) ** 2) - 0.5 * rho * np.sum(u * u))
        trace.loss.append(loss)
        trace.objective.append(float(lagrangian))
        trace.primal_residual.append(float(np.linalg.norm(dx - d)))
        if reference is not None:
            trace.psnr.append(psnr(x, reference))
        if _converged(trace.objective, cfg.tol):
            break
    return x, trace


def tune_tv_weight(p, geom: Geometry, reference, grid, cfg: IterConfig = IterConfig()):
    """Pick the TV weight from ``grid`` that maximises PSNR against ``reference``.

    Returns ``(best_weight, {weight: psnr})``.
    """
    if reference is None:
        raise ValueError("tuning the TV weight needs a reference image")
    scores = {}
    for weight in grid:
        img, _ = admm_tv_reconstruct(p, geom, replace(cfg, tv_weight=float(weight)))
        scores[float(weight)] = psnr(img, reference)
    best = max(scores, key=scores.get)
    return best, scores
