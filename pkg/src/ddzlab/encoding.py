"""Numeric featurization of hands, bid contexts, game states, and actions.

A hand becomes a 4x15 binary matrix: column r has its first count(r) rows
set (thermometer over copies), joker columns use row 0 only. Bid context
adds a 4x2 one-hot of the two other players' scores, rows ordered
{Pass,1,2,3}. The play-phase state vector is a flat concatenation (all
widths fixed): own hand, union of the two concealed hands, last non-pass
move, per-opponent cards-remaining one-hots, bombs-played one-hot, all
played cards, and the last 15 moves. History is kept feed-forward (flat
concatenation) rather than recurrent.
"""

from __future__ import annotations

import numpy as np

from .cards import Move, N_RANKS, RANK_CHARS, cards_to_str
from .game import GameState, Phase, WrongPhase

HAND_WIDTH = 60            # 4 x 15
BID_SCORE_WIDTH = 8        # 4 x 2
BID_FEATURES_WIDTH = 68
ACTION_WIDTH = 60
HISTORY_MOVES = 15
MAX_HAND = 20
STATE_WIDTH = (HAND_WIDTH * 3 + 2 * MAX_HAND + 15 + HAND_WIDTH
               + HISTORY_MOVES * HAND_WIDTH)  # 1195


class HandSize(ValueError):
    pass


def encode_hand(counts) -> np.ndarray:
    """4x15 thermometer matrix of a count vector."""
    m = np.zeros((4, N_RANKS), dtype=np.float32)
    for r in range(N_RANKS):
        m[: int(counts[r]), r] = 1.0
    return m


def decode_hand(matrix) -> tuple[int, ...]:
    return tuple(int(x) for x in np.asarray(matrix).sum(axis=0))


def encode_action(move: Move) -> np.ndarray:
    """Flat 60-wide encoding of the played cards; Pass is all-zero."""
    return encode_hand(move.cards).reshape(-1)


def encode_bid_scores(opponent_bids) -> np.ndarray:
    """4x2 one-hot: rows {Pass,1,2,3}, one column per acted opponent."""
    m = np.zeros((4, 2), dtype=np.float32)
    if len(opponent_bids) > 2:
        raise ValueError("at most two opposing bids")
    for col, bid in enumerate(opponent_bids):
        m[int(bid), col] = 1.0
    return m


def encode_bid_context(hand, opponent_bids) -> np.ndarray:
    if sum(int(x) for x in hand) != 17:
        raise HandSize("bidding hand must have 17 cards")
    return np.concatenate([encode_hand(hand).reshape(-1),
                           encode_bid_scores(opponent_bids).reshape(-1)])


def _one_hot(width, index):
    v = np.zeros(width, dtype=np.float32)
    v[min(max(index, 0), width - 1)] = 1.0
    return v


def encode_state(state: GameState, viewer: int) -> np.ndarray:
    """Flat 1195-wide play-phase features from `viewer`'s perspective.

    Uses only information visible to the viewer: the union of the two
    concealed hands equals deck minus own hand minus all played cards
    (the hidden cards are public once picked up).
    """
    if state.phase != Phase.PLAY:
        raise WrongPhase("state encoding is defined for the play phase")
    own = np.array(state.hands[viewer], dtype=np.int64)
    played = np.zeros(N_RANKS, dtype=np.int64)
    for _, m in state.history:
        played += np.array(m.cards, dtype=np.int64)
    others = np.array(state.deck.deck_counts, dtype=np.int64) - own - played

    last_move = np.zeros(HAND_WIDTH, dtype=np.float32)
    for _, m in reversed(state.history):
        if not m.is_pass:
            last_move = encode_action(m)
            break

    opp = [(viewer + 1) % 3, (viewer + 2) % 3]
    remaining = np.concatenate([
        _one_hot(MAX_HAND, sum(state.hands[s]) - 1) for s in opp])

    hist = np.zeros((HISTORY_MOVES, HAND_WIDTH), dtype=np.float32)
    recent = state.history[-HISTORY_MOVES:]
    for i, (_, m) in enumerate(recent, start=HISTORY_MOVES - len(recent)):
        hist[i] = encode_action(m)

    return np.concatenate([
        encode_hand(own).reshape(-1),
        encode_hand(others).reshape(-1),
        last_move,
        remaining,
        _one_hot(15, state.bomb_count),
        encode_hand(played).reshape(-1),
        hist.reshape(-1),
    ])


def format_matrix(matrix, title) -> str:
    """Debug rendering used by the `encode-inspect` CLI subcommand."""
    lines = [title, "    " + " ".join(RANK_CHARS[: matrix.shape[1]])]
    for i, row in enumerate(matrix):
        lines.append(f"r{i}  " + " ".join(str(int(x)) for x in row))
    return "\n".join(lines)
