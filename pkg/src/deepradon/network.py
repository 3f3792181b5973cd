"""Encoder-decoder prior network with skip connections.

Five encoder levels (two Conv-BN-ReLU blocks each, 2x average pooling in
between), four decoder levels (bilinear 2x upsampling, optional concatenation
with the matching encoder output, two Conv-BN-ReLU blocks) and a final 1x1
convolution to a single channel.  Input and output are ``N x N`` images with
``N`` divisible by 16.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (Adam, Tensor, batch_norm, concat, conv2d, downsample2,
                       load_checkpoint, relu, save_checkpoint, sum_squares,
                       upsample2)

__all__ = ["NetConfig", "Network", "build_network", "fit_identity", "LEVELS"]

LEVELS = 5


@dataclass(frozen=True)
class NetConfig:
    channels: tuple[int, ...] = (8, 16, 32, 64, 128)
    kernel_size: int = 3
    skip_connections: bool = True
    init_std: float = 0.01
    seed: int = 0
    bn_eps: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if len(self.channels) != LEVELS or min(self.channels) < 1:
            raise ValueError(f"channels must be {LEVELS} positive ints, got {self.channels}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and positive, got {self.kernel_size}")
        if not self.init_std > 0:
            raise ValueError(f"init_std must be positive, got {self.init_std}")


def _layer_plan(cfg: NetConfig):
    """(block name, in channels, out channels) for every Conv-BN-ReLU pair."""
    ch = cfg.channels
    plan = []
    cin = 1
    for i in range(LEVELS):
        plan.append((f"enc{i + 1}", cin, ch[i]))
        cin = ch[i]
    for i in reversed(range(LEVELS - 1)):
        extra = ch[i] if cfg.skip_connections else 0
        plan.append((f"dec{i + 1}", ch[i + 1] + extra, ch[i]))
    return plan


@dataclass
class Network:
    cfg: NetConfig
    params: dict[str, Tensor] = field(default_factory=dict)

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self.params) ^ set(state)
        if missing:
            raise KeyError(f"parameter names differ: {sorted(missing)}")
        for k, p in self.params.items():
            if state[k].shape != p.shape:
                raise ValueError(f"{k}: shape {state[k].shape} != {p.shape}")
            p.data[...] = state[k]

    def save(self, path):
        return save_checkpoint(path, self.state_dict())

    def load(self, path) -> None:
        self.load_state_dict(load_checkpoint(path))

    def _block(self, name: str, x: Tensor) -> Tensor:
        pad = self.cfg.kernel_size // 2
        p = self.params
        for j in (1, 2):
            stage = f"{name}.conv{j}"
            try:
                x = conv2d(x, p[f"{stage}.weight"], p[f"{stage}.bias"], padding=pad)
                x = batch_norm(x, p[f"{name}.bn{j}.gamma"], p[f"{name}.bn{j}.beta"],
                               self.cfg.bn_eps)
                x = relu(x)
            except FloatingPointError as exc:
                raise FloatingPointError(f"layer {stage}: {exc}") from None
        return x

    def __call__(self, z) -> Tensor:
        return self.forward(z)

    def forward(self, z) -> Tensor:
        """Run the network on an ``N x N`` image (array or tensor)."""
        if not isinstance(z, Tensor):
            z = Tensor(np.asarray(z, dtype=self.dtype))
        if z.ndim == 2:
            z = z.reshape(1, 1, *z.shape)
        n = z.shape[-1]
        if z.shape[-2] != n or n % 16:
            raise ValueError(f"input must be square with side divisible by 16, got {z.shape[-2:]}")

        skips = []
        x = z
        for i in range(LEVELS):
            if i:
                x = downsample2(x)
            x = self._block(f"enc{i + 1}", x)
            skips.append(x)
        for i in reversed(range(LEVELS - 1)):
            x = upsample2(x)
            if self.cfg.skip_connections:
                x = concat([x, skips[i]], axis=1)
            x = self._block(f"dec{i + 1}", x)
        try:
            return conv2d(x, self.params["out.weight"], self.params["out.bias"])
        except FloatingPointError as exc:
            raise FloatingPointError(f"layer out: {exc}") from None

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype


def build_network(cfg: NetConfig | None = None, dtype=np.float64) -> Network:
    """Gaussian conv weights (std ``init_std``), zero biases, unit BN scale."""
    cfg = cfg or NetConfig()
    rng = np.random.default_rng(cfg.seed)
    k = cfg.kernel_size
    params = {}

    def leaf(name, arr):
        params[name] = Tensor(np.asarray(arr, dtype=dtype), requires_grad=True, name=name)

    for name, cin, cout in _layer_plan(cfg):
        for j, c_in in ((1, cin), (2, cout)):
            leaf(f"{name}.conv{j}.weight", rng.normal(0.0, cfg.init_std, (cout, c_in, k, k)))
            leaf(f"{name}.conv{j}.bias", np.zeros(cout))
            leaf(f"{name}.bn{j}.gamma", np.ones(cout))
            leaf(f"{name}.bn{j}.beta", np.zeros(cout))
    leaf("out.weight", rng.normal(0.0, cfg.init_std, (1, cfg.channels[0], 1, 1)))
    leaf("out.bias", np.zeros(1))
    return Network(cfg, params)


def fit_identity(net: Network, z: np.ndarray, steps: int, lr: float = 5e-4):
    """Train ``net`` so that ``net(z) ~= z``; returns the per-step loss list."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    z = np.asarray(z, dtype=net.dtype)
    target = z.reshape(1, 1, *z.shape)
    opt = Adam(net.parameters(), lr=lr)
    losses = []
    for step in range(steps):
        opt.zero_grad()
        loss = sum_squares(net(z) - target)
        if not np.isfinite(loss.item()):
            raise FloatingPointError(f"identity fit diverged at step {step}")
        loss.backward()
        opt.step()
        losses.append(loss.item())
    return losses
