import numpy as np
import pytest

from deepradon.autodiff import Tensor
from deepradon.fbp import fbp
from deepradon.network import NetConfig, Network, build_network, fit_identity
from deepradon.phantoms import shepp_logan
from deepradon.projector import Geometry, forward_project

LIGHT = NetConfig(channels=(2, 4, 8, 16, 32))


def count_parameters(channels, k=3, skips=True):
    """Walk the hourglass layer by layer and add up every tensor's size."""
    def conv(cin, cout, size):
        return cout * cin * size * size + cout

    def bn(c):
        return 2 * c

    total = 0
    cin = 1
    for c in channels:                       # encoder levels
        total += conv(cin, c, k) + bn(c) + conv(c, c, k) + bn(c)
        cin = c
    for level in (3, 2, 1, 0):               # decoder levels, deepest first
        c = channels[level]
        cin = channels[level + 1] + (c if skips else 0)
        total += conv(cin, c, k) + bn(c) + conv(c, c, k) + bn(c)
    return total + conv(channels[0], 1, 1)   # final 1x1 projection


@pytest.mark.parametrize("cfg", [LIGHT, NetConfig(), NetConfig(channels=(3, 5, 7, 9, 11),
                                                                kernel_size=5,
                                                                skip_connections=False)])
def test_parameter_count_matches_shape_walk(cfg):
    net = build_network(cfg)
    assert net.num_parameters() == count_parameters(cfg.channels, cfg.kernel_size,
                                                   cfg.skip_connections)


def test_config_validation():
    with pytest.raises(ValueError, match="channels"):
        NetConfig(channels=(8, 16, 32, 64))
    with pytest.raises(ValueError, match="odd"):
        NetConfig(kernel_size=4)
    with pytest.raises(ValueError, match="init_std"):
        NetConfig(init_std=0.0)


def test_initialization_statistics():
    net = build_network(NetConfig(seed=3))
    w = net.params["enc3.conv2.weight"].data
    assert abs(w.std() - 0.01) < 0.001 and abs(w.mean()) < 0.001
    assert not net.params["enc3.conv2.bias"].data.any()
    assert np.all(net.params["dec2.bn1.gamma"].data == 1.0)
    assert not net.params["dec2.bn1.beta"].data.any()


def test_same_seed_same_parameters():
    a = build_network(NetConfig(seed=11)).state_dict()
    b = build_network(NetConfig(seed=11)).state_dict()
    c = build_network(NetConfig(seed=12)).state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)


@pytest.mark.parametrize("n", [16, 32, 64])
def test_shape_preserved(n, rng):
    out = build_network(LIGHT)(rng.standard_normal((n, n)))
    assert out.shape == (1, 1, n, n)


def test_default_net_on_64():
    assert build_network()(np.zeros((64, 64))).shape == (1, 1, 64, 64)


def test_bad_input_size_rejected():
    with pytest.raises(ValueError, match="16"):
        build_network(LIGHT)(np.zeros((40, 40)))


def test_zero_input_finite_and_repeatable():
    net = build_network(LIGHT)
    a = net(np.zeros((32, 32))).data
    b = net(np.zeros((32, 32))).data
    assert np.all(np.isfinite(a)) and np.array_equal(a, b)


def test_no_blowup_at_initialization():
    geom = Geometry(64, 30)
    z = fbp(forward_project(shepp_logan(64), geom), geom)
    out = build_network()(z).data
    assert np.all(np.isfinite(out))
    assert np.abs(out).max() < 10 * np.abs(z).max()
    # measured envelope: 0.148 on this phantom
    assert np.abs(out).max() < 0.3 * np.abs(z).max()


def test_non_finite_activation_names_layer():
    net = build_network(LIGHT)
    net.params["enc2.conv1.weight"].data[...] = 1e300
    with pytest.raises(FloatingPointError, match="enc2"):
        net(np.ones((32, 32)))


def test_checkpoint_round_trip(tmp_path):
    net = build_network(LIGHT)
    path = net.save(tmp_path / "net.ckpt")
    other = build_network(NetConfig(channels=LIGHT.channels, seed=99))
    other.load(path)
    z = np.linspace(0, 1, 32 * 32).reshape(32, 32)
    assert np.array_equal(net(z).data, other(z).data)


def test_checkpoint_shape_mismatch_rejected(tmp_path):
    path = build_network(LIGHT).save(tmp_path / "net.ckpt")
    with pytest.raises(ValueError, match="shape"):
        build_network().load(path)


def test_fit_identity_reduces_loss():
    z = shepp_logan(32)
    net = build_network(LIGHT)
    losses = fit_identity(net, z, 60, lr=5e-3)
    assert losses[-1] < losses[0]
    with pytest.raises(ValueError):
        fit_identity(net, z, 0)


def test_forward_accepts_tensor(rng):
    net = build_network(LIGHT)
    z = rng.standard_normal((16, 16))
    assert np.array_equal(net(Tensor(z)).data, net(z).data)
