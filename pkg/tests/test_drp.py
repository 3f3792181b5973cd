import math

import numpy as np
import pytest

from conftest import central_difference, rel_err
from deepradon import drp
from deepradon.autodiff import Tensor
from deepradon.drp import (DrpConfig, Mode, RunRecord, drp_reconstruct, drp_single_stage,
                           normal_loss, radon_loss, reconstruct, undip_reconstruct)
from deepradon.fbp import fbp
from deepradon.network import NetConfig, build_network, fit_identity
from deepradon.phantoms import shepp_logan
from deepradon.projector import Geometry, back_project, forward_project

LIGHT = NetConfig(channels=(2, 4, 8, 16, 32))
SMALL = DrpConfig(epochs=3, inner_iters=5, net=LIGHT)


@pytest.fixture(scope="module")
def problem():
    x = shepp_logan(32)
    geom = Geometry(32, 12)
    return x, geom, forward_project(x, geom)


class Fixed:
    """Stand-in network returning a fixed image, differentiable in ``x``."""

    def __init__(self, x):
        self.x = Tensor(np.asarray(x, float).reshape(1, 1, *np.shape(x)), requires_grad=True)

    def __call__(self, z):
        return self.x


def test_config_validation():
    with pytest.raises(ValueError):
        DrpConfig(epochs=0)
    with pytest.raises(ValueError):
        DrpConfig(lr=0.0)
    with pytest.raises(ValueError):
        DrpConfig(spike_factor=0.5)
    assert DrpConfig(mode="undip_fixed").mode is Mode.UNDIP_FIXED_INPUT


def test_radon_loss_is_sum_of_squares(problem, rng):
    x, geom, p = problem
    cand = rng.random(x.shape)
    value = radon_loss(Fixed(cand), None, p, geom).item()
    assert value == pytest.approx(np.sum((forward_project(cand, geom) - p) ** 2), rel=1e-12)
    assert radon_loss(Fixed(x), None, p, geom).item() == pytest.approx(0.0, abs=1e-20)


def test_normal_loss_shared_minimizer(problem, rng):
    x, geom, p = problem
    assert normal_loss(Fixed(x), None, p, geom).item() == pytest.approx(0.0, abs=1e-20)
    cand = rng.random(x.shape)
    r = back_project(forward_project(cand, geom) - p, geom)
    assert normal_loss(Fixed(cand), None, p, geom).item() == pytest.approx(np.sum(r * r))


def test_radon_loss_gradient_wrt_image(problem, rng):
    x, geom, p = problem
    net = Fixed(rng.random(x.shape))
    radon_loss(net, None, p, geom).backward()
    delta = back_project(p - forward_project(net.x.data[0, 0], geom), geom)
    assert rel_err(net.x.grad[0, 0], -2 * delta) <= 1e-10


def test_radon_loss_gradient_wrt_input_pixels(problem, rng):
    x, geom, p = problem
    net = build_network(LIGHT)
    z = Tensor(fbp(p, geom), requires_grad=True)
    radon_loss(net, z, p, geom).backward()
    for _ in range(3):
        i, j = rng.integers(0, 32, 2)
        orig = z.data[i, j]

        def f(v):
            z.data[i, j] = v
            out = radon_loss(net, Tensor(z.data), p, geom).item()
            z.data[i, j] = orig
            return out

        h = 1e-4
        numeric = (f(orig + h) - f(orig - h)) / (2 * h)
        assert z.grad[i, j] == pytest.approx(numeric, rel=1e-3, abs=1e-6)


def test_radon_loss_after_identity_fit(problem):
    x, geom, p = problem
    net = build_network(LIGHT)
    fit_identity(net, x, 300, lr=2e-3)
    loss = radon_loss(net, x, p, geom).item()
    assert loss < 1e-2 * np.sum(p**2)


def test_one_epoch_one_iteration(problem):
    x, geom, p = problem
    img, rec = drp_reconstruct(p, geom, DrpConfig(epochs=1, inner_iters=1, net=LIGHT))
    assert len(rec.rows) == 1 and np.all(np.isfinite(img))
    assert img.min() >= 0.0


def test_record_fields_and_csv(problem, tmp_path):
    x, geom, p = problem
    img, rec = drp_reconstruct(p, geom, SMALL, reference=x)
    assert [r.epoch for r in rec.rows] == [1, 2, 3]
    assert all(math.isfinite(v) for r in rec.rows for v in (r.loss, r.psnr, r.ssim, r.entropy))
    assert rec.network is not None and rec.image is img
    path = tmp_path / "run.csv"
    rec.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,loss,psnr,ssim,entropy,seconds" and len(lines) == 4


def test_no_reference_leaves_quality_columns_empty(problem, tmp_path):
    x, geom, p = problem
    _, rec = drp_reconstruct(p, geom, DrpConfig(epochs=1, inner_iters=2, net=LIGHT))
    assert rec.rows[0].psnr is None
    rec.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[1].split(",")[2:4] == ["", ""]


def test_seeded_runs_are_identical(problem):
    x, geom, p = problem
    _, a = drp_reconstruct(p, geom, SMALL)
    _, b = drp_reconstruct(p, geom, SMALL)
    assert np.array_equal(a.losses, b.losses)
    assert np.array_equal(a.image, b.image)


def test_degenerate_drp_equals_single_stage(problem):
    x, geom, p = problem
    cfg = DrpConfig(epochs=3, inner_iters=4, net=LIGHT, update_input=False)
    _, frozen = drp_reconstruct(p, geom, cfg)
    _, single = drp_single_stage(p, geom, cfg)
    assert np.array_equal(frozen.losses, single.losses)


def test_bad_size_rejected():
    geom = Geometry(24, 8)
    with pytest.raises(ValueError, match="16"):
        drp_reconstruct(np.zeros(geom.sinogram_shape), geom, SMALL)


def test_nan_reports_coordinates(problem):
    x, geom, p = problem
    cfg = DrpConfig(epochs=2, inner_iters=3, net=LIGHT, lr=1e200, spike_factor=0)
    with pytest.raises(FloatingPointError, match=r"epoch 1, iteration \d"):
        drp_reconstruct(p, geom, cfg)


def test_single_stage_reduces_projection_loss(problem):
    x, geom, p = problem
    _, rec = drp_single_stage(p, geom, DrpConfig(epochs=4, inner_iters=10, net=LIGHT))
    assert rec.losses[-1] < rec.initial_loss
    assert rec.step == 0.0


@pytest.mark.parametrize("mode", [Mode.UNDIP_FIXED_INPUT, Mode.UNDIP_NORMAL_OP])
def test_undip_uses_fixed_noise_input(problem, mode):
    x, geom, p = problem
    cfg = DrpConfig(epochs=2, inner_iters=3, net=LIGHT, mode=mode)
    _, a = undip_reconstruct(p, geom, cfg)
    _, b = reconstruct(p, geom, cfg)
    assert np.array_equal(a.losses, b.losses)


def test_spike_restarts_epoch_with_half_lr(problem, monkeypatch):
    x, geom, p = problem
    calls = {"n": 0}
    real = drp.radon_loss

    def spiky(net, z, p_, geom_):
        calls["n"] += 1
        loss = real(net, z, p_, geom_)
        return loss * 1e3 if calls["n"] == 3 else loss

    monkeypatch.setattr(drp, "radon_loss", spiky)
    _, rec = drp_reconstruct(p, geom, DrpConfig(epochs=1, inner_iters=4, net=LIGHT))
    assert rec.lr_halvings == 1
    assert rec.lr == pytest.approx(DrpConfig().lr / 2)
    # first attempt stopped at the spike, the restart ran all four steps
    assert calls["n"] == 3 + 4


def test_spike_restart_restores_state(problem, monkeypatch):
    # a restarted epoch with lr/2 matches a clean run started at lr/2
    x, geom, p = problem
    calls = {"n": 0}
    real = drp.radon_loss

    def spiky(net, z, p_, geom_):
        calls["n"] += 1
        loss = real(net, z, p_, geom_)
        return loss * 1e3 if calls["n"] == 2 else loss

    cfg = DrpConfig(epochs=1, inner_iters=3, net=LIGHT)
    monkeypatch.setattr(drp, "radon_loss", spiky)
    _, restarted = drp_reconstruct(p, geom, cfg)
    monkeypatch.setattr(drp, "radon_loss", real)
    _, clean = drp_reconstruct(p, geom, DrpConfig(epochs=1, inner_iters=3, net=LIGHT,
                                                  lr=cfg.lr / 2))
    assert np.array_equal(restarted.losses, clean.losses)


def test_near_fixed_point_with_dense_views():
    # with consistent dense-view data the input step cannot push z further
    # from x* than the identity fit already is
    xs = shepp_logan(32)
    geom = Geometry(32, 180)
    p = forward_project(xs, geom)
    net = build_network(LIGHT)
    fit_identity(net, xs, 400, lr=2e-3)
    fit_error = np.linalg.norm(net(xs).data[0, 0] - xs)
    _, rec = drp_reconstruct(p, geom, DrpConfig(epochs=1, inner_iters=5, net=LIGHT),
                             z0=xs, network=net)
    assert np.linalg.norm(rec.input - xs) <= fit_error + 1e-3 * np.linalg.norm(xs)


def test_run_record_defaults():
    rec = RunRecord()
    assert rec.losses.size == 0 and math.isnan(rec.initial_loss)
