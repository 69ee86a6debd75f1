import itertools
import math
from collections import Counter

import numpy as np
import pytest

from lineopt.mps import (
    MPSModel,
    TrainParams,
    WeightedDataset,
    amplitude,
    amplitudes,
    canonical_residual,
    dumps_mps,
    init_mps,
    load_mps,
    loads_mps,
    loss,
    merge_pair,
    merged_nll_gradient,
    norm_squared,
    probability,
    right_canonicalize,
    sample,
    save_mps,
    train,
    PROB_FLOOR,
)


def all_bitstrings(n):
    return ["".join(bits) for bits in itertools.product("01", repeat=n)]


def test_init_shapes_and_normalization(rng):
    model = init_mps(12, TrainParams(chi_max=6), rng)
    assert model.n_sites == 12
    assert all(b <= 6 for b in model.bond_dimensions())
    assert model.bond_dimensions()[0] == 2  # edge bonds grow as 2^k
    assert abs(norm_squared(model) - 1.0) < 1e-9
    assert canonical_residual(model) < 1e-9


def test_init_single_site(rng):
    model = init_mps(1, TrainParams(), rng)
    assert probability(model, "0") + probability(model, "1") == pytest.approx(1.0, abs=1e-12)


def test_init_deterministic():
    a = init_mps(8, TrainParams(), np.random.default_rng(42))
    b = init_mps(8, TrainParams(), np.random.default_rng(42))
    assert all(np.array_equal(x, y) for x, y in zip(a.tensors, b.tensors))


def test_probability_product_state():
    # every site pinned to |0>
    tensors = [np.zeros((1, 2, 1)) for _ in range(6)]
    for t in tensors:
        t[0, 0, 0] = 1.0
    model = MPSModel(tensors, chi_max=1, center=0)
    assert probability(model, "000000") == 1.0
    assert probability(model, "000001") == 0.0
    assert probability(model, "100000") == 0.0


def test_probability_normalization_exhaustive(rng):
    for n in (6, 10, 12):
        model = init_mps(n, TrainParams(chi_max=5), rng)
        total = sum(probability(model, bits) for bits in all_bitstrings(n))
        assert abs(total - 1.0) < 1e-9


def test_probability_length_mismatch(rng):
    model = init_mps(6, TrainParams(), rng)
    with pytest.raises(ValueError):
        probability(model, "0101")


def test_amplitudes_batch_matches_scalar(rng):
    model = init_mps(9, TrainParams(), rng)
    strings = ["010101010", "111000111", "000000000"]
    data = np.array([[int(c) for c in s] for s in strings])
    batch = amplitudes(model, data)
    for s, a in zip(strings, batch):
        assert math.isclose(amplitude(model, s), float(a), rel_tol=1e-12)


def test_train_memorizes_single_string(rng):
    dataset = WeightedDataset([("10110", 1.0)])
    model = init_mps(5, TrainParams(sweeps=30), rng)
    model, history = train(model, dataset, TrainParams(sweeps=30))
    assert probability(model, "10110") > 0.99
    assert history[-1] < 1e-2


def test_train_loss_monotone_nonincreasing(rng):
    dataset = WeightedDataset([("0011", 0.4), ("1100", 0.4), ("0101", 0.2)])
    model = init_mps(4, TrainParams(), rng)
    _, history = train(model, dataset, TrainParams(sweeps=15))
    for a, b in zip(history, history[1:]):
        assert b <= a + 1e-8


def test_train_uniform_reaches_entropy_floor(rng):
    n = 4
    strings = all_bitstrings(n)
    dataset = WeightedDataset([(s, 1.0 / len(strings)) for s in strings])
    model = init_mps(n, TrainParams(chi_max=4), rng)
    model, history = train(model, dataset, TrainParams(sweeps=40, chi_max=4))
    floor = n * math.log(2.0)
    assert history[-1] >= floor - 1e-9  # entropy lower-bounds the NLL
    assert history[-1] < floor * 1.05


def test_train_two_cluster_close_to_empirical_entropy(rng):
    weights = {"00000000": 0.5, "11111111": 0.3, "10101010": 0.2}
    dataset = WeightedDataset(list(weights.items()))
    model = init_mps(8, TrainParams(chi_max=6), rng)
    model, history = train(model, dataset, TrainParams(sweeps=25, chi_max=6))
    entropy = -sum(w * math.log(w) for w in weights.values())
    assert history[-1] <= entropy * 1.05
    assert history[-1] >= entropy - 1e-9


def test_train_keeps_canonical_and_bond_cap(rng):
    dataset = WeightedDataset([("110010", 0.5), ("001101", 0.5)])
    params = TrainParams(sweeps=5, chi_max=3)
    model = init_mps(6, params, rng)
    model, _ = train(model, dataset, params)
    assert all(b <= 3 for b in model.bond_dimensions())
    assert canonical_residual(model) < 1e-9
    assert abs(norm_squared(model) - 1.0) < 1e-9


def test_train_validates_inputs(rng):
    model = init_mps(4, TrainParams(), rng)
    with pytest.raises(ValueError):
        train(model, WeightedDataset([("01101", 1.0)]), TrainParams())
    with pytest.raises(ValueError):
        WeightedDataset([])
    with pytest.raises(ValueError):
        WeightedDataset([("01", -1.0)])


def test_gradient_matches_finite_differences(rng):
    model = init_mps(6, TrainParams(chi_max=4), rng)
    dataset = WeightedDataset(
        [("101010", 0.3), ("111000", 0.2), ("000111", 0.25), ("110011", 0.25)]
    )
    data, weights = dataset.arrays()
    k = 2
    B = data.shape[0]
    left = np.ones((B, 1))
    for j in range(k):
        sel = model.tensors[j][:, data[:, j], :]
        left = np.einsum("bl,lbr->br", left, sel)
    right = np.ones((B, 1))
    for j in range(model.n_sites - 1, k + 1, -1):
        sel = model.tensors[j][:, data[:, j], :]
        right = np.einsum("lbr,br->bl", sel, right)
    merged = merge_pair(model, k) * 1.3 + 0.01  # general gauge, norm != 1

    def objective(m):
        sel = m[:, data[:, k], data[:, k + 1], :]
        psi = np.einsum("bl,lbr,br->b", left, sel, right)
        z = float(np.vdot(m, m))
        pr = np.maximum(psi * psi, PROB_FLOOR * z)
        return float(-(weights * (np.log(pr) - math.log(z))).sum())

    value, grad = merged_nll_gradient(merged, left, right, data[:, k], data[:, k + 1], weights)
    assert math.isclose(value, objective(merged), rel_tol=1e-12)
    eps = 1e-6
    fd = np.zeros_like(merged)
    it = np.nditer(merged, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        plus = merged.copy()
        plus[idx] += eps
        minus = merged.copy()
        minus[idx] -= eps
        fd[idx] = (objective(plus) - objective(minus)) / (2 * eps)
        it.iternext()
    rel = np.abs(grad - fd).max() / np.abs(fd).max()
    assert rel < 1e-4


def test_loss_examples(rng):
    # P = 1 for the only item -> 0
    tensors = [np.zeros((1, 2, 1)) for _ in range(4)]
    for t in tensors:
        t[0, 1, 0] = 1.0
    pinned = MPSModel(tensors, chi_max=1, center=0)
    assert loss(pinned, WeightedDataset([("1111", 1.0)])) == 0.0
    # uniform model, one n-bit item -> n log 2
    uniform = MPSModel(
        [np.full((1, 2, 1), 1.0 / math.sqrt(2.0)) for _ in range(5)], chi_max=1, center=0
    )
    assert math.isclose(loss(uniform, WeightedDataset([("10110", 1.0)])), 5 * math.log(2.0),
                        rel_tol=1e-12)
    # definitional consistency with probability()
    model = init_mps(6, TrainParams(), rng)
    dataset = WeightedDataset([("101010", 0.7), ("010101", 0.3)])
    direct = -sum(w * math.log(max(probability(model, b), PROB_FLOOR))
                  for b, w in dataset.items)
    assert math.isclose(loss(model, dataset), direct, rel_tol=1e-12)


def test_sample_product_state_deterministic(rng):
    tensors = [np.zeros((1, 2, 1)) for _ in range(6)]
    for t in tensors:
        t[0, 1, 0] = 1.0
    model = MPSModel(tensors, chi_max=1, center=0)
    assert set(sample(model, 50, rng)) == {"111111"}


def test_sample_seed_reproducible(rng):
    model = init_mps(10, TrainParams(), rng)
    a = sample(model, 100, np.random.default_rng(7))
    b = sample(model, 100, np.random.default_rng(7))
    assert a == b


def test_sample_matches_exact_distribution(rng):
    model = init_mps(8, TrainParams(chi_max=4), rng)
    n_samples = 100_000
    counts = Counter(sample(model, n_samples, np.random.default_rng(3)))
    tv = 0.0
    for bits in all_bitstrings(8):
        tv += abs(counts.get(bits, 0) / n_samples - probability(model, bits))
    assert tv / 2 <= 0.02


def test_sample_does_not_mutate_model(rng):
    model = init_mps(6, TrainParams(), rng)
    # train leaves the center at site 0; move it away to force the copy path
    dataset = WeightedDataset([("101010", 1.0)])
    train(model, dataset, TrainParams(sweeps=2))
    before = [t.copy() for t in model.tensors]
    sample(model, 10, np.random.default_rng(0))
    assert all(np.array_equal(a, b) for a, b in zip(before, model.tensors))


def test_serialization_round_trip_bit_exact(rng, tmp_path):
    model = init_mps(10, TrainParams(chi_max=5), rng)
    dataset = WeightedDataset([("1010101010", 0.6), ("0101010101", 0.4)])
    model, _ = train(model, dataset, TrainParams(sweeps=3, chi_max=5))
    clone = loads_mps(dumps_mps(model))
    assert clone.n_sites == model.n_sites
    assert clone.chi_max == model.chi_max
    assert clone.center == model.center
    assert all(np.array_equal(a, b) for a, b in zip(model.tensors, clone.tensors))
    path = tmp_path / "model.json"
    save_mps(model, path)
    reloaded = load_mps(path)
    assert all(np.array_equal(a, b) for a, b in zip(model.tensors, reloaded.tensors))


def test_loads_rejects_foreign_documents():
    with pytest.raises(ValueError):
        loads_mps('{"format": "something-else", "n_sites": 1, "tensors": []}')


def test_right_canonicalize_arbitrary_model(rng):
    tensors = [rng.normal(size=(1, 2, 3)), rng.normal(size=(3, 2, 3)), rng.normal(size=(3, 2, 1))]
    model = MPSModel(tensors, chi_max=3)
    right_canonicalize(model)
    assert model.center == 0
    assert canonical_residual(model) < 1e-9
    assert abs(norm_squared(model) - 1.0) < 1e-9


def test_split_isometry_every_position(rng):
    """Every two-site split leaves the model in canonical form."""
    from lineopt.mps import TrainParams, _split_pair

    params = TrainParams(chi_max=4)
    model = init_mps(7, params, rng)
    for k in range(model.n_sites - 1):
        merged = merge_pair(model, k)
        _split_pair(model, k, merged, going_right=True, params=params)
        assert canonical_residual(model) < 1e-9
        assert abs(norm_squared(model) - 1.0) < 1e-9
    for k in range(model.n_sites - 2, -1, -1):
        merged = merge_pair(model, k)
        _split_pair(model, k, merged, going_right=False, params=params)
        assert canonical_residual(model) < 1e-9
