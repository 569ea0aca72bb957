import numpy as np
import pytest

from ddzlab.bidding import (
    CorruptDataset,
    EmptyDataset,
    THRESHOLDS,
    decide_bid,
    generate_bid_dataset,
    hand_value,
    load_bid_dataset,
    train_bid_network,
    value_to_bid,
)
from ddzlab.encoding import BID_FEATURES_WIDTH
from ddzlab.networks import bid_network


class TestDataset:
    def test_generate_and_load(self, tmp_path):
        p = tmp_path / "bids.bin"
        rows = generate_bid_dataset(p, 6, seed=1, n_rollouts=3)
        x, y = load_bid_dataset(p)
        assert x.shape == (6, BID_FEATURES_WIDTH)
        assert (np.abs(y) <= 1.0).all()
        assert (x == rows[:, :-1]).all() and (y == rows[:, -1]).all()

    def test_labels_reproducible_bytes(self, tmp_path):
        a = tmp_path / "a.bin"
        b = tmp_path / "b.bin"
        generate_bid_dataset(a, 5, seed=9, n_rollouts=3)
        generate_bid_dataset(b, 5, seed=9, n_rollouts=3)
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a = tmp_path / "a.bin"
        b = tmp_path / "b.bin"
        generate_bid_dataset(a, 5, seed=1, n_rollouts=3)
        generate_bid_dataset(b, 5, seed=2, n_rollouts=3)
        assert a.read_bytes() != b.read_bytes()

    def test_corruption_detected(self, tmp_path):
        p = tmp_path / "bids.bin"
        generate_bid_dataset(p, 3, seed=0, n_rollouts=2)
        raw = bytearray(p.read_bytes())
        raw[30] ^= 0xFF
        p.write_bytes(bytes(raw))
        with pytest.raises(CorruptDataset):
            load_bid_dataset(p)


class TestTraining:
    def test_loss_decreases(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((128, BID_FEATURES_WIDTH)).astype(np.float32)
        w = rng.standard_normal(BID_FEATURES_WIDTH).astype(np.float32)
        y = np.tanh(x @ w / 8)
        net, history, val = train_bid_network(x, y, epochs=15, batch_size=32,
                                              lr=1e-3, seed=1)
        assert history[-1] < history[0]
        assert val == []

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((32, BID_FEATURES_WIDTH)).astype(np.float32)
        y = rng.uniform(-1, 1, 32).astype(np.float32)
        _, h1, _ = train_bid_network(x, y, epochs=3, seed=5)
        _, h2, _ = train_bid_network(x, y, epochs=3, seed=5)
        assert h1 == h2

    def test_validation_split(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((80, BID_FEATURES_WIDTH)).astype(np.float32)
        w = rng.standard_normal(BID_FEATURES_WIDTH).astype(np.float32)
        y = np.tanh(x @ w / 8)
        _, history, val = train_bid_network(x, y, epochs=10, batch_size=16,
                                            lr=1e-3, seed=3, val_fraction=0.25)
        assert len(val) == len(history) == 10
        assert val[-1] < val[0]

    def test_empty_dataset_rejected(self):
        x = np.empty((0, BID_FEATURES_WIDTH), dtype=np.float32)
        y = np.empty(0, dtype=np.float32)
        with pytest.raises(EmptyDataset):
            train_bid_network(x, y)

    def test_policy_rollouts_change_labels(self, tmp_path):
        from ddzlab.game import legal_moves

        a = tmp_path / "a.bin"
        b = tmp_path / "b.bin"
        generate_bid_dataset(a, 3, seed=4, n_rollouts=3)
        generate_bid_dataset(b, 3, seed=4, n_rollouts=3,
                             policy=lambda s: legal_moves(s)[0])
        _, ya = load_bid_dataset(a)
        _, yb = load_bid_dataset(b)
        assert not np.array_equal(ya, yb)
        assert (np.abs(yb) <= 1.0).all()


class FixedValueNet:
    """Stand-in network returning a preset scalar."""

    def __init__(self, value):
        self.value = value

    def forward(self, x, train=False, rng=None):
        return np.array([self.value], dtype=np.float32)


def seventeen():
    hand = [1] * 14 + [0]
    hand[0] = 4
    return hand


class TestDecision:
    def test_threshold_mapping(self):
        assert value_to_bid(-0.5) == 0
        assert value_to_bid(0.0) == 1
        assert value_to_bid(0.3) == 2
        assert value_to_bid(0.59) == 2
        assert value_to_bid(0.9) == 3

    def test_monotone_in_value(self):
        hand = seventeen()
        values = np.linspace(-1, 1, 41)
        for prior in ([], [0], [1], [2], [0, 1], [1, 2], [0, 0]):
            last = 0
            chosen = [decide_bid(FixedValueNet(v), hand, prior)
                      for v in values]
            nonpass = [b for b in chosen if b > 0]
            assert nonpass == sorted(nonpass)

    def test_legality_clipping(self):
        strong = FixedValueNet(0.9)
        hand = seventeen()
        assert decide_bid(strong, hand, []) == 3
        weak2 = FixedValueNet(0.4)   # wants 2
        assert decide_bid(weak2, hand, [2]) == 0   # only 3 legal, above want
        assert decide_bid(weak2, hand, [1]) == 2
        weak1 = FixedValueNet(0.1)   # wants 1
        assert decide_bid(weak1, hand, [1]) == 0
        assert decide_bid(weak1, hand, []) == 1

    def test_always_legal_against_any_prefix(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            prior = []
            highest = 0
            for _ in range(int(rng.integers(3))):
                opts = [0] + [v for v in (1, 2, 3) if v > highest]
                b = int(opts[rng.integers(len(opts))])
                prior.append(b)
                highest = max(highest, b)
            if highest == 3:
                continue
            v = float(rng.uniform(-1, 1))
            bid = decide_bid(FixedValueNet(v), seventeen(), prior)
            assert bid == 0 or bid > highest

    def test_hand_value_runs_on_real_net(self):
        net = bid_network(seed=0)
        hand = seventeen()
        assert sum(hand) == 17
        v = hand_value(net, hand, [1, 2])
        assert np.isfinite(v)
