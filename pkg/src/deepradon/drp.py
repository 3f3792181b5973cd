"""Deep Radon Prior reconstruction and its ablations.

The full method alternates two updates.  The network input takes one
gradient step on the projection residual, ``z <- O(z) + step * A^T (p - A O(z))``,
and then the network parameters are fitted for ``inner_iters`` Adam steps
on ``||A O(z) - p||^2`` with ``z`` held fixed.  Parameters and optimizer
moments persist from one epoch to the next.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Adam, Tensor, backproject_layer, radon_layer, sum_squares
from .fbp import FilterKind, fbp
from .metrics import entropy, psnr, ssim
from .network import NetConfig, Network, build_network
from .projector import Geometry, back_project, forward_project, operator_norm_sq

__all__ = [
    "Mode",
    "DrpConfig",
    "EpochRow",
    "RunRecord",
    "radon_loss",
    "normal_loss",
    "drp_reconstruct",
    "drp_single_stage",
    "undip_reconstruct",
    "reconstruct",
]

log = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    DRP = "drp"
    SINGLE_STAGE = "single_stage"
    UNDIP_FIXED_INPUT = "undip_fixed"
    UNDIP_NORMAL_OP = "undip_normal"


@dataclass(frozen=True)
class DrpConfig:
    """Run settings.  ``step_beta`` is in units of ``1 / ||A||^2`` unless
    ``normalize_step`` is off.  ``seed`` seeds the network and noise input.

    An inner loss above ``spike_factor`` times the epoch's first loss counts
    as divergence: the epoch restarts from its saved parameters and optimizer
    moments with the learning rate halved (``0`` disables the check).
    """

    epochs: int = 60
    inner_iters: int = 100
    step_beta: float = 0.25
    lr: float = 5e-4
    net: NetConfig = field(default_factory=NetConfig)
    mode: Mode = Mode.DRP
    seed: int = 0
    log_every: int = 0
    normalize_step: bool = True
    update_input: bool = True
    fbp_filter: FilterKind = FilterKind.RAM_LAK
    dtype: str = "float64"
    spike_factor: float = 10.0
    max_lr_halvings: int = 8

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.epochs < 1 or self.inner_iters < 1:
            raise ValueError("epochs and inner_iters must be >= 1")
        if self.step_beta < 0:
            raise ValueError(f"step_beta must be >= 0, got {self.step_beta}")
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.spike_factor < 0 or 0 < self.spike_factor <= 1:
            raise ValueError(f"spike_factor must be 0 (off) or > 1, got {self.spike_factor}")


@dataclass
class EpochRow:
    epoch: int
    loss: float
    psnr: float | None
    ssim: float | None
    entropy: float
    seconds: float


@dataclass
class RunRecord:
    rows: list[EpochRow] = field(default_factory=list)
    initial_loss: float = math.nan
    image: np.ndarray | None = None
    input: np.ndarray | None = None
    network: Network | None = None
    step: float = math.nan
    step_halvings: int = 0
    lr: float = math.nan
    lr_halvings: int = 0
    checkpoint: str | None = None

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.rows])

    @property
    def psnrs(self) -> np.ndarray:
        return np.array([np.nan if r.psnr is None else r.psnr for r in self.rows])

    @property
    def entropies(self) -> np.ndarray:
        return np.array([r.entropy for r in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["epoch", "loss", "psnr", "ssim", "entropy", "seconds"])
            for r in self.rows:
                out.writerow([r.epoch, repr(r.loss), _fmt(r.psnr), _fmt(r.ssim),
                              repr(r.entropy), f"{r.seconds:.3f}"])


def _fmt(value):
    if value is None:
        return ""
    return "inf" if value == math.inf else repr(value)


def radon_loss(net: Network, z, p, geom: Geometry) -> Tensor:
    """``||A O(z) - p||^2`` (sum of squares) as a differentiable scalar."""
    out = net(z)
    return sum_squares(radon_layer(out, geom) - np.asarray(p, dtype=out.dtype))


def normal_loss(net: Network, z, p, geom: Geometry) -> Tensor:
    """``||A^T A O(z) - A^T p||^2``, the normal-operator objective."""
    out = net(z)
    resid = radon_layer(out, geom) - np.asarray(p, dtype=out.dtype)
    return sum_squares(backproject_layer(resid, geom))


def _image(net: Network, z) -> np.ndarray:
    return net(z).data[0, 0].astype(np.float64)


def _projection_loss(x: np.ndarray, p: np.ndarray, geom: Geometry) -> float:
    r = forward_project(x, geom) - p
    return float(np.vdot(r, r))


class _Run:
    """Shared bookkeeping for one reconstruction."""

    def __init__(self, p, geom: Geometry, cfg: DrpConfig, reference, network=None):
        if geom.image_size % 16:
            raise ValueError(f"image size {geom.image_size} is not divisible by 16")
        self.p = np.asarray(p, dtype=np.float64)
        if self.p.shape != geom.sinogram_shape:
            raise ValueError(f"sinogram has shape {self.p.shape}, geometry expects "
                             f"{geom.sinogram_shape}")
        self.geom, self.cfg, self.reference = geom, cfg, reference
        if network is None:
            network = build_network(replace(cfg.net, seed=cfg.seed), dtype=np.dtype(cfg.dtype))
        self.net = network
        self.opt = Adam(self.net.parameters(), lr=cfg.lr)
        self.record = RunRecord(network=self.net)
        self.t0 = time.perf_counter()
        self.loss_fn = normal_loss if cfg.mode is Mode.UNDIP_NORMAL_OP else radon_loss

    def fit(self, z: np.ndarray, steps: int, epoch: int) -> None:
        zt = Tensor(z.astype(self.net.dtype))
        factor = self.cfg.spike_factor
        saved = self._snapshot() if factor else None
        while not self._fit_once(zt, steps, epoch, factor):
            if self.record.lr_halvings >= self.cfg.max_lr_halvings:
                raise FloatingPointError(
                    f"epoch {epoch}: inner loss still diverging after "
                    f"{self.record.lr_halvings} learning-rate halvings")
            self._restore(saved)
            self.opt.state.lr /= 2
            self.record.lr_halvings += 1
            log.warning("epoch %d: inner loss spiked above %gx its start; restarting the "
                        "epoch with lr %.3g", epoch, factor, self.opt.state.lr)
        self.record.lr = self.opt.state.lr

    def _fit_once(self, zt: Tensor, steps: int, epoch: int, factor: float) -> bool:
        first = None
        for it in range(steps):
            self.opt.zero_grad()
            try:
                loss = self.loss_fn(self.net, zt, self.p, self.geom)
                value = loss.item()
                if first is None:
                    first = value
                elif factor and value > factor * first:
                    return False
                loss.backward()
                self.opt.step()
            except FloatingPointError as exc:
                raise FloatingPointError(f"epoch {epoch}, iteration {it + 1}: {exc}") from None
        return True

    def _snapshot(self):
        st = self.opt.state
        return ([p.data.copy() for p in self.opt.params], [m.copy() for m in st.m],
                [v.copy() for v in st.v], st.t)

    def _restore(self, saved) -> None:
        params, m, v, t = saved
        for p, value in zip(self.opt.params, params):
            p.data[...] = value
        st = self.opt.state
        st.m = [a.copy() for a in m]
        st.v = [a.copy() for a in v]
        st.t = t

    def log_epoch(self, epoch: int, x: np.ndarray) -> None:
        ref = self.reference
        row = EpochRow(
            epoch=epoch,
            loss=_projection_loss(x, self.p, self.geom),
            psnr=None if ref is None else psnr(x, ref),
            ssim=None if ref is None else ssim(x, ref),
            entropy=entropy(x),
            seconds=time.perf_counter() - self.t0,
        )
        if not all(math.isfinite(v) for v in (row.loss, row.entropy)):
            raise FloatingPointError(f"epoch {epoch}: non-finite loss or entropy")
        self.record.rows.append(row)
        if self.cfg.log_every and epoch % self.cfg.log_every == 0:
            log.info("epoch %d loss %.6g psnr %s entropy %.4f", epoch, row.loss,
                     "-" if row.psnr is None else f"{row.psnr:.2f}", row.entropy)

    def finish(self, x: np.ndarray):
        self.record.image = np.maximum(x, 0.0)
        return self.record.image, self.record


def drp_reconstruct(p, geom: Geometry, cfg: DrpConfig = DrpConfig(), reference=None,
                    z0=None, network: Network | None = None):
    """Full alternating DRP.  Returns ``(image, RunRecord)``.

    The input step is checked against the descent condition
    ``||A z - p|| <= ||A O(z) - p||`` and halved (with a warning) until it
    holds, so an over-large ``step_beta`` cannot blow up the iterate.
    ``z0`` replaces the FBP starting input and ``network`` the freshly
    initialised one (it is trained in place).
    """
    run = _Run(p, geom, cfg, reference, network)
    p = run.p
    step = cfg.step_beta / operator_norm_sq(geom) if cfg.normalize_step else cfg.step_beta

    z = fbp(p, geom, cfg.fbp_filter) if z0 is None else np.array(z0, dtype=np.float64)
    x = _image(run.net, z)
    run.record.initial_loss = _projection_loss(x, p, geom)
    delta = back_project(p - forward_project(x, geom), geom)

    for epoch in range(1, cfg.epochs + 1):
        if cfg.update_input:
            base = _projection_loss(x, p, geom)
            z = x + step * delta
            while step > 0 and _projection_loss(z, p, geom) > base:
                step /= 2
                run.record.step_halvings += 1
                log.warning("epoch %d: input step increased the projection loss; "
                            "halving step to %.3g", epoch, step)
                z = x + step * delta
        run.fit(z, cfg.inner_iters, epoch)
        x = _image(run.net, z)
        delta = back_project(p - forward_project(x, geom), geom)
        run.log_epoch(epoch, x)

    run.record.step = step
    run.record.input = z
    return run.finish(x)


def drp_single_stage(p, geom: Geometry, cfg: DrpConfig = DrpConfig(), reference=None):
    """Network-only ablation: the input stays at the FBP image throughout."""
    run = _Run(p, geom, cfg, reference)
    z = fbp(run.p, geom, cfg.fbp_filter)
    return _fixed_input(run, z)


def undip_reconstruct(p, geom: Geometry, cfg: DrpConfig = DrpConfig(), reference=None):
    """Untrained-network baselines with a fixed seeded Gaussian-noise input.

    ``cfg.mode`` picks the projection-domain loss (``UNDIP_FIXED_INPUT``) or
    the normal-operator loss (``UNDIP_NORMAL_OP``).
    """
    if cfg.mode not in (Mode.UNDIP_FIXED_INPUT, Mode.UNDIP_NORMAL_OP):
        cfg = replace(cfg, mode=Mode.UNDIP_FIXED_INPUT)
    run = _Run(p, geom, cfg, reference)
    rng = np.random.default_rng([cfg.seed, 1])
    z = rng.standard_normal(geom.image_shape)
    return _fixed_input(run, z)


def _fixed_input(run: _Run, z: np.ndarray):
    run.record.input = z
    x = _image(run.net, z)
    run.record.initial_loss = _projection_loss(x, run.p, run.geom)
    run.record.step = 0.0
    for epoch in range(1, run.cfg.epochs + 1):
        run.fit(z, run.cfg.inner_iters, epoch)
        x = _image(run.net, z)
        run.log_epoch(epoch, x)
    return run.finish(x)


def reconstruct(p, geom: Geometry, cfg: DrpConfig = DrpConfig(), reference=None):
    """Dispatch on ``cfg.mode``."""
    if cfg.mode is Mode.DRP:
        return drp_reconstruct(p, geom, cfg, reference)
    if cfg.mode is Mode.SINGLE_STAGE:
        return drp_single_stage(p, geom, cfg, reference)
    return undip_reconstruct(p, geom, cfg, reference)
