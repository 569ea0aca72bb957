"""Bid decision learning: rollout-labeled datasets and threshold mapping.

A bidding example is the 68-wide bid context of a 17-card hand. Its label
is the mean game outcome in [-1, 1] over Monte Carlo rollouts in which
that hand takes the landlord role against uniform-random opposition. The
trained value network maps through fixed thresholds to a bid of 1, 2, or
3, clipped to whatever is still legal in the auction.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .cards import FULL_DECK
from .encoding import BID_FEATURES_WIDTH, encode_bid_context
from .game import (
    Phase,
    apply_move,
    legal_moves,
    new_game,
    start_play,
    winner_side,
)
from .networks import Network, RMSProp, bid_network

DATASET_MAGIC = b"DDZBIDS1"
THRESHOLDS = (0.0, 0.3, 0.6)


class CorruptDataset(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


def _rollout_value(deal_seed, n_rollouts, rng, policy=None):
    """Mean +-1 landlord outcome for seat 0 of the deal.

    Every seat plays uniformly at random unless `policy` (a callable from
    state to move) is given, in which case it drives all three seats.
    """
    total = 0.0
    for _ in range(n_rollouts):
        state = start_play(new_game(deal_seed, 0, FULL_DECK), 0)
        plies = 0
        while state.phase == Phase.PLAY:
            if policy is not None:
                state = apply_move(state, policy(state))
            else:
                moves = legal_moves(state)
                state = apply_move(state, moves[rng.integers(len(moves))])
            plies += 1
            if plies > 400:
                raise RuntimeError("rollout exceeded the ply budget")
        total += 1.0 if winner_side(state) == "landlord" else -1.0
    return total / n_rollouts


def _random_bid_context(rng):
    """A consistent prior auction seen by the third, second, or first bidder."""
    n_prior = int(rng.integers(3))
    bids = []
    highest = 0
    for _ in range(n_prior):
        options = [0] + [v for v in (1, 2) if v > highest]
        b = int(options[rng.integers(len(options))])
        bids.append(b)
        highest = max(highest, b)
    return bids


def generate_bid_dataset(path, n_deals, seed=0, n_rollouts=20, policy=None):
    """Write `n_deals` (context, label) rows; fully seed-reproducible.

    With the default `policy=None` the rollouts are uniform random; pass
    a state-to-move callable to label deals under stronger play instead.
    """
    rng = np.random.default_rng(seed)
    rows = np.empty((n_deals, BID_FEATURES_WIDTH + 1), dtype=np.float32)
    for i in range(n_deals):
        deal_seed = (seed * 2_000_003 + i) & ((1 << 63) - 1)
        state = new_game(deal_seed, 0, FULL_DECK)
        hand = state.hands[0]
        context = encode_bid_context(hand, _random_bid_context(rng))
        label = _rollout_value(deal_seed, n_rollouts, rng, policy)
        rows[i, :-1] = context
        rows[i, -1] = label
    blob = rows.tobytes()
    out = bytearray()
    out += DATASET_MAGIC
    out += struct.pack("<II", n_deals, BID_FEATURES_WIDTH)
    out += blob
    out += struct.pack("<Q", zlib.crc32(out))
    with open(path, "wb") as fh:
        fh.write(out)
    return rows


def load_bid_dataset(path):
    """Returns (features (n, 68), labels (n,)); verifies the checksum."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 24 or raw[:8] != DATASET_MAGIC:
        raise CorruptDataset("bad magic")
    (crc,) = struct.unpack("<Q", raw[-8:])
    if crc != zlib.crc32(raw[:-8]):
        raise CorruptDataset("checksum mismatch")
    n, width = struct.unpack("<II", raw[8:16])
    payload = raw[16:-8]
    expect = n * (width + 1) * 4
    if len(payload) != expect:
        raise CorruptDataset("payload size mismatch")
    rows = np.frombuffer(payload, dtype="<f4").reshape(n, width + 1)
    return rows[:, :-1].copy(), rows[:, -1].copy()


def train_bid_network(features, labels, epochs=20, batch_size=64,
                      lr=1e-4, seed=0, net: Network | None = None,
                      val_fraction=0.0):
    """MSE regression of label on context.

    Returns (net, train history, validation history); the validation
    history is empty unless `val_fraction` holds out a tail split.
    """
    if len(features) == 0:
        raise EmptyDataset("no training rows")
    if net is None:
        net = bid_network(seed=seed)
    opt = RMSProp(net, lr=lr)
    rng = np.random.default_rng(seed)
    n_val = int(len(features) * val_fraction)
    if n_val:
        split = rng.permutation(len(features))
        train_idx, val_idx = split[:-n_val], split[-n_val:]
    else:
        train_idx, val_idx = np.arange(len(features)), np.empty(0, int)
    n = len(train_idx)
    if n == 0:
        raise EmptyDataset("validation split left no training rows")
    history = []
    val_history = []
    for _ in range(epochs):
        order = train_idx[rng.permutation(n)]
        total = 0.0
        batches = 0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, _ = net.train_batch(features[idx], labels[idx], rng=rng)
            opt.step(net)
            total += loss
            batches += 1
        history.append(total / max(batches, 1))
        if n_val:
            pred = net.forward(features[val_idx])
            val_history.append(float(np.mean((pred - labels[val_idx]) ** 2)))
    return net, history, val_history


def hand_value(net: Network, hand, opponent_bids) -> float:
    return float(net.forward(encode_bid_context(hand, opponent_bids))[0])


def value_to_bid(value, thresholds=THRESHOLDS) -> int:
    """0 (pass) below the first threshold, else 1, 2, or 3."""
    bid = 0
    for i, t in enumerate(thresholds):
        if value >= t:
            bid = i + 1
    return bid


def decide_bid(net: Network, hand, opponent_bids,
               thresholds=THRESHOLDS) -> int:
    """Threshold the predicted value, then clip to the legal bids.

    The target bid drops to the highest still-legal bid below it; if even
    bid 1 is unavailable the answer is pass. The mapping is monotone in
    the predicted value for any fixed auction prefix.
    """
    target = value_to_bid(hand_value(net, hand, opponent_bids), thresholds)
    highest = max((b for b in opponent_bids if b > 0), default=0)
    legal = [v for v in (1, 2, 3) if v > highest]
    choices = [v for v in legal if v <= target]
    return max(choices) if choices else 0
