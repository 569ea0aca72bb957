"""Three-player game state machine: bidding, play, settlement.

States are immutable; apply_bid/apply_move return new states. Bidding
follows the auction rules: a bid must strictly exceed the previous one, a
bid of 3 closes the auction at once, and three passes flag a redeal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .cards import (
    Category,
    Deal,
    DeckSpec,
    FULL_DECK,
    Move,
    PASS_MOVE,
    cards_from_str,
    cards_to_str,
    classify_move,
    deal as make_deal,
    legal_moves as card_legal_moves,
)


class Phase(IntEnum):
    BIDDING = 0
    PLAY = 1
    TERMINAL = 2


BID_PASS = 0
BID_VALUES = (0, 1, 2, 3)


class WrongPhase(RuntimeError):
    pass


class IllegalBid(ValueError):
    pass


class IllegalMove(ValueError):
    def __init__(self, move):
        super().__init__(f"illegal move: {move!r}")
        self.move = move


@dataclass(frozen=True)
class Settlement:
    winner_side: str                  # "landlord" | "peasants"
    points: tuple[int, int, int]


@dataclass(frozen=True)
class GameState:
    phase: Phase
    deck: DeckSpec
    deal: Deal
    first_bidder: int
    bids: tuple[tuple[int, int], ...]       # (seat, bid value)
    landlord: int | None
    hands: tuple[tuple[int, ...], ...]
    current: int
    incumbent: Move | None
    incumbent_owner: int | None
    history: tuple[tuple[int, Move], ...]
    bomb_count: int
    base_multiplier: int
    redeal: bool = False

    def hand(self, seat: int) -> np.ndarray:
        return np.array(self.hands[seat], dtype=np.int8)

    @property
    def pending_incumbent(self) -> Move | None:
        """The move that must be beaten, None when `current` leads."""
        if self.incumbent_owner == self.current:
            return None
        return self.incumbent


def new_game(seed: int, first_bidder: int = 0,
             deck: DeckSpec = FULL_DECK) -> GameState:
    d = make_deal(seed, deck)
    return GameState(
        phase=Phase.BIDDING,
        deck=deck,
        deal=d,
        first_bidder=first_bidder,
        bids=(),
        landlord=None,
        hands=d.hands,
        current=first_bidder,
        incumbent=None,
        incumbent_owner=None,
        history=(),
        bomb_count=0,
        base_multiplier=1,
    )


def start_play(state: GameState, landlord: int,
               base_multiplier: int = 1) -> GameState:
    """Skip the auction and assign the landlord directly (evaluation mode)."""
    if state.phase != Phase.BIDDING:
        raise WrongPhase("landlord can only be assigned during bidding")
    hands = list(state.hands)
    hands[landlord] = tuple(
        int(a + b) for a, b in zip(hands[landlord], state.deal.hidden))
    return replace(state, phase=Phase.PLAY, landlord=landlord,
                   hands=tuple(hands), current=landlord,
                   base_multiplier=base_multiplier)


def legal_bids(state: GameState) -> list[int]:
    if state.phase != Phase.BIDDING:
        raise WrongPhase("not in the bidding phase")
    highest = max((v for _, v in state.bids if v > 0), default=0)
    return [BID_PASS] + [v for v in (1, 2, 3) if v > highest]


def apply_bid(state: GameState, bid: int) -> GameState:
    if state.phase != Phase.BIDDING:
        raise WrongPhase("not in the bidding phase")
    if bid not in legal_bids(state):
        raise IllegalBid(f"bid {bid} not legal here")
    bids = state.bids + ((state.current, bid),)
    nonpass = [(s, v) for s, v in bids if v > 0]
    auction_over = (bid == 3) or (len(bids) == 3 and nonpass)
    if not auction_over:
        if len(bids) == 3:  # all passed
            return replace(state, bids=bids, redeal=True)
        return replace(state, bids=bids, current=(state.current + 1) % 3)
    landlord, winning = max(nonpass, key=lambda t: t[1])
    hands = list(state.hands)
    hands[landlord] = tuple(
        int(a + b) for a, b in zip(hands[landlord], state.deal.hidden))
    return replace(state, phase=Phase.PLAY, bids=bids, landlord=landlord,
                   hands=tuple(hands), current=landlord,
                   base_multiplier=winning)


def legal_moves(state: GameState) -> list[Move]:
    if state.phase != Phase.PLAY:
        raise WrongPhase("not in the play phase")
    return card_legal_moves(state.hand(state.current),
                            state.pending_incumbent, state.deck)


def apply_move(state: GameState, move: Move) -> GameState:
    if state.phase != Phase.PLAY:
        raise WrongPhase("not in the play phase")
    allowed = legal_moves(state)
    if move not in allowed:
        raise IllegalMove(move)
    seat = state.current
    history = state.history + ((seat, move),)
    if move.is_pass:
        nxt = (seat + 1) % 3
        return replace(state, history=history, current=nxt)
    hand = tuple(int(a - b) for a, b in zip(state.hands[seat], move.cards))
    hands = list(state.hands)
    hands[seat] = hand
    bombs = state.bomb_count
    if move.category in (Category.BOMB, Category.ROCKET):
        bombs += 1
    phase = Phase.TERMINAL if sum(hand) == 0 else Phase.PLAY
    return replace(state, phase=phase, hands=tuple(hands), history=history,
                   incumbent=move, incumbent_owner=seat,
                   bomb_count=bombs, current=(seat + 1) % 3)


def winner_side(state: GameState) -> str:
    if state.phase != Phase.TERMINAL:
        raise WrongPhase("game not finished")
    empty = [s for s in range(3) if sum(state.hands[s]) == 0]
    return "landlord" if empty[0] == state.landlord else "peasants"


def settle(state: GameState) -> Settlement:
    side = winner_side(state)
    m = state.base_multiplier * (2 ** state.bomb_count)
    pts = [0, 0, 0]
    for s in range(3):
        if s == state.landlord:
            pts[s] = 2 * m if side == "landlord" else -2 * m
        else:
            pts[s] = -m if side == "landlord" else m
    return Settlement(winner_side=side, points=tuple(pts))


def terminal_reward(state: GameState, seat: int, mode: str = "winloss") -> float:
    """Training return for `seat`: +-1 ("winloss") or graded points/stake."""
    s = settle(state)
    won = ((seat == state.landlord) == (s.winner_side == "landlord"))
    sign = 1.0 if won else -1.0
    if mode == "winloss":
        return sign
    # graded: magnitude = multiplier x 2^bombs (seat points / base stake)
    return sign * state.base_multiplier * (2 ** state.bomb_count)


# ---------------------------------------------------------------------------
# Replay format: one JSON record per game (newline-delimited in files).
# ---------------------------------------------------------------------------

def game_record(state: GameState) -> dict:
    rec = {
        "seed": state.deal.seed,
        "first_bidder": state.first_bidder,
        "bids": [[s, v] for s, v in state.bids],
        "moves": [{"seat": s, "category": m.category.name,
                   "cards": cards_to_str(m.cards)}
                  for s, m in state.history],
    }
    if state.phase == Phase.TERMINAL:
        st = settle(state)
        rec["settlement"] = {"winner_side": st.winner_side,
                             "points": list(st.points)}
    if not state.bids and state.landlord is not None:
        rec["assigned_landlord"] = state.landlord
        rec["base_multiplier"] = state.base_multiplier
    return rec


def replay_record(rec: dict, deck: DeckSpec = FULL_DECK) -> GameState:
    """Re-drive a recorded game through the engine, validating every step."""
    state = new_game(rec["seed"], rec["first_bidder"], deck)
    if rec.get("bids"):
        for _, v in rec["bids"]:
            state = apply_bid(state, v)
    elif "assigned_landlord" in rec:
        state = start_play(state, rec["assigned_landlord"],
                           rec.get("base_multiplier", 1))
    for entry in rec["moves"]:
        move = classify_move(cards_from_str(entry["cards"]), deck)
        if entry["seat"] != state.current:
            raise IllegalMove(move)
        if entry["category"] != move.category.name:
            raise IllegalMove(move)
        state = apply_move(state, move)
    if "settlement" in rec:
        st = settle(state)
        want = rec["settlement"]
        if (st.winner_side != want["winner_side"]
                or list(st.points) != want["points"]):
            raise ValueError("settlement mismatch on replay")
    return state


def write_replays(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_replays(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
