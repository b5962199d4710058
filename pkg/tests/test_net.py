import hashlib

import numpy as np
import pytest

from csvm import modelio, net as netmod
from csvm.errors import DegenerateLabels, InvalidArgument, InvalidInput
from csvm.layers import FilterBank, PoolSpec, conv2d, relu
from csvm.linsvm import SvmModel
from csvm.net import (BlockSpec, CsvmNetwork, TrainConfig, block_forward, default_architecture, infer,
                      learn_filters, output_shapes, stack_filters, train_block, train_network)
from csvm.synthetic import make_stripes
from csvm.tensor import Tensor3


def random_bank(rng, spec, c_in):
    return FilterBank(rng.normal(size=(spec.n_filters, spec.kernel, spec.kernel, c_in)) * 0.1, spec.stride)


def test_default_architecture_constants():
    b1, b2, b3 = default_architecture()
    assert (b1.n_filters, b1.kernel, b1.stride) == (40, 7, 2)
    assert (b2.n_filters, b2.kernel, b2.stride) == (128, 3, 1)
    assert (b3.n_filters, b3.kernel, b3.stride) == (256, 1, 1)
    for b in (b1, b2, b3):
        assert b.pool == PoolSpec(3, 2, "max") and b.activation == "relu"


def test_shape_pipeline():
    shapes = output_shapes((128, 128, 1), default_architecture())
    assert [s["conv"][0] for s in shapes] == [61, 28, 13]
    assert [s["pool"][0] for s in shapes] == [30, 13, 6]
    assert [s["head_dim"] for s in shapes] == [36000, 21632, 9216]


def test_block_forward_shapes(rng):
    t = Tensor3(rng.random((128, 128, 1)))
    expected = [(30, 30, 40), (13, 13, 128), (6, 6, 256)]
    c_in = 1
    for spec, shape in zip(default_architecture(), expected):
        t = block_forward(t, spec, random_bank(rng, spec, c_in))
        assert t.shape == shape
        c_in = spec.n_filters


def test_block_forward_is_pool_relu_conv(rng):
    spec = BlockSpec(3, 3, 1, PoolSpec(2, 2, "mean"))
    bank = random_bank(rng, spec, 2)
    t = Tensor3(rng.normal(size=(9, 9, 2)))
    from csvm.layers import pool
    assert block_forward(t, spec, bank) == pool(relu(conv2d(t, bank)), spec.pool)


def test_train_block_block1_shapes(rng, tiny_cfg):
    inputs = [(Tensor3(rng.random((128, 128, 1))), lab) for lab in (1, 1, -1, -1)]
    bank, outs = train_block(inputs, default_architecture()[0], tiny_cfg, depth=1)
    assert bank.weights.shape == (40, 7, 7, 1) and bank.stride == 2
    assert [o.shape for o, _ in outs] == [(30, 30, 40)] * 4
    assert [lab for _, lab in outs] == [1, 1, -1, -1]


def test_filters_are_verbatim_svm_weights(rng, tiny_cfg):
    inputs = [(Tensor3(rng.random((16, 16, 2))), lab) for lab in (1, -1, 1, -1)]
    spec = BlockSpec(5, 3, 1, PoolSpec(2, 2))
    models = learn_filters(inputs, spec, tiny_cfg, depth=2)
    bank, _ = train_block(inputs, spec, tiny_cfg, depth=2)
    assert bank == stack_filters(models, spec, 2)
    for f, m in enumerate(models):
        np.testing.assert_array_equal(bank.weights[f].ravel(), m.weights.astype(np.float32))
        np.testing.assert_array_equal(bank.weights[f], m.weights.astype(np.float32).reshape(3, 3, 2))


def test_identical_subsets_give_identical_filters(rng, tiny_cfg, monkeypatch):
    inputs = [(Tensor3(rng.random((16, 16, 1))), lab) for lab in (1, -1, 1, -1)]
    monkeypatch.setattr(netmod, "filter_stream", lambda seed, depth, index: netmod.stream(seed, "filter", 0, 0))
    bank, _ = train_block(inputs, BlockSpec(6, 3, 1, PoolSpec(2, 2)), tiny_cfg, depth=1)
    w = bank.weights
    assert all(np.array_equal(w[0], w[i]) for i in range(1, 6))


def test_distinct_filter_streams_give_distinct_filters(rng, tiny_cfg):
    inputs = [(Tensor3(rng.random((16, 16, 1))), lab) for lab in (1, -1, 1, -1)]
    cfg = TrainConfig(**{**tiny_cfg.to_dict(), "per_image_patches": 40})  # pool larger than a subset
    bank, _ = train_block(inputs, BlockSpec(6, 3, 1, PoolSpec(2, 2)), cfg, depth=1)
    assert len({bank.weights[i].tobytes() for i in range(6)}) == 6


def test_stripe_filters_are_discriminative():
    data = make_stripes(50, seed=4)
    spec = default_architecture()[0]
    bank, _ = train_block(data, spec, TrainConfig(master_seed=1), depth=1)
    assert len({bank.weights[i].tobytes() for i in range(spec.n_filters)}) == spec.n_filters
    resp = {1: [], -1: []}
    for t, lab in data:
        resp[lab].append(np.abs(relu(conv2d(t, bank)).data).mean(axis=(0, 1)))
    vert, horiz = np.mean(resp[1], axis=0), np.mean(resp[-1], axis=0)
    ratio = np.maximum(vert / np.maximum(horiz, 1e-12), horiz / np.maximum(vert, 1e-12))
    assert ratio.max() >= 2.0


def test_train_block_needs_both_classes(rng, tiny_cfg):
    inputs = [(Tensor3(rng.random((16, 16, 1))), 1) for _ in range(3)]
    with pytest.raises(DegenerateLabels):
        train_block(inputs, BlockSpec(2, 3), tiny_cfg, 1)


@pytest.fixture(scope="module")
def stripes_net():
    data = make_stripes(12, seed=5)
    return train_network(data, default_architecture(), TrainConfig(master_seed=3, per_image_patches=10)), data


def test_head_dims_default_arch(stripes_net):
    net, _ = stripes_net
    assert [h.dim for h in net.heads] == [36000, 21632, 9216]
    assert [bank.weights.shape for _, bank in net.blocks] == [(40, 7, 7, 1), (128, 3, 3, 40), (256, 1, 1, 128)]
    assert all(h.weights.dtype == np.float32 for h in net.heads)


def test_infer_on_stripes(stripes_net):
    net, _ = stripes_net
    test = make_stripes(5, seed=77)
    for t, lab in test:
        if lab == 1:
            label, score = infer(net, t, 3)
            assert label == 1 and score > 0


def test_infer_is_pure(stripes_net):
    net, data = stripes_net
    before = hashlib.sha256(modelio.to_bytes(net)).hexdigest()
    t = data[0][0]
    assert infer(net, t, 2) == infer(net, t, 2)
    assert hashlib.sha256(modelio.to_bytes(net)).hexdigest() == before


def test_infer_errors(stripes_net):
    net, data = stripes_net
    with pytest.raises(InvalidArgument):
        infer(net, data[0][0], 4)
    with pytest.raises(InvalidArgument):
        infer(net, data[0][0], 0)
    with pytest.raises(InvalidInput):
        infer(net, Tensor3(np.zeros((64, 64, 1))), 1)


def test_zero_filter_bank_scores_zero():
    spec = BlockSpec(2, 3, 1, PoolSpec(2, 2))
    bank = FilterBank(np.zeros((2, 3, 3, 1)))
    head = SvmModel(np.ones(4 * 4 * 2, dtype=np.float32), 1.0)
    net = CsvmNetwork((10, 10, 1), ((spec, bank),), (head,), TrainConfig())
    assert infer(net, Tensor3(np.random.default_rng(0).random((10, 10, 1))), 1) == (-1, 0.0)


def test_one_block_network(rng, tiny_cfg):
    data = make_stripes(4, seed=1, size=32)
    net = train_network(data, [BlockSpec(4, 7, 2, PoolSpec(3, 2))], tiny_cfg)
    assert net.depth == 1 and net.heads[0].dim == 6 * 6 * 4


def test_head_bias_flag(tiny_cfg):
    data = make_stripes(4, seed=1, size=32)
    cfg = TrainConfig(**{**tiny_cfg.to_dict(), "head_bias": True})
    net = train_network(data, [BlockSpec(4, 7, 2, PoolSpec(3, 2))], cfg)
    assert net.heads[0].dim == 6 * 6 * 4 + 1
    label, score = infer(net, data[0][0], 1)
    assert label in (1, -1)


def test_deterministic_across_runs_and_workers(small_arch, tiny_cfg):
    data = make_stripes(6, seed=2, size=32)
    a = modelio.to_bytes(train_network(data, small_arch, tiny_cfg, workers=1))
    b = modelio.to_bytes(train_network(data, small_arch, tiny_cfg, workers=1))
    c = modelio.to_bytes(train_network(data, small_arch, tiny_cfg, workers=4))
    assert a == b == c


def test_train_network_validation(small_arch, tiny_cfg):
    data = make_stripes(1, seed=2, size=32)
    with pytest.raises(DegenerateLabels):
        train_network(data, small_arch, tiny_cfg)
    with pytest.raises(DegenerateLabels):
        train_network([], small_arch, tiny_cfg)


def test_config_validation():
    with pytest.raises(InvalidArgument):
        TrainConfig(svm_c=0)
    with pytest.raises(InvalidArgument):
        BlockSpec(0, 3)
    with pytest.raises(InvalidArgument):
        TrainConfig.from_dict({"bogus": 1})
