"""Head-to-head evaluation with duplicate decks and role swapping.

Each deck is played twice: side A takes the landlord in one game and the
peasant pair in the other, with the deal held fixed. A side scores a point
per game its camp wins; the win probability is points over games. The swap
cancels deal luck, so identical deterministic sides score exactly 0.5.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import checkpoint as ckpt
from .cards import FULL_DECK, Category, DeckSpec, Move
from .dmc import ROLE_NAMES, score_moves, scripted_bid, seat_role
from .game import (
    GameState,
    Phase,
    apply_bid,
    apply_move,
    legal_moves,
    new_game,
    start_play,
    winner_side,
)


class Policy:
    """A move selector for whatever seat is to act."""

    name = "policy"

    def begin_game(self, seed: int):
        """Called before each game so stochastic policies stay paired."""

    def move(self, state: GameState) -> Move:
        raise NotImplementedError


class RandomPolicy(Policy):
    """Uniform over legal moves; reseeded per game for paired decks."""

    def __init__(self, seed=0, name="random"):
        self.seed = seed
        self.name = name
        self._rng = np.random.default_rng(seed)

    def begin_game(self, seed):
        self._rng = np.random.default_rng((self.seed << 32) ^ seed)

    def move(self, state):
        moves = legal_moves(state)
        return moves[self._rng.integers(len(moves))]


class RulePolicy(Policy):
    """Greedy heuristic: shed the cheapest combination available.

    When leading, play the legal move spending the most cards at the
    lowest principal rank; when following, play the weakest beating move
    but hold bombs and rockets unless nothing else beats.
    """

    name = "rule"

    def move(self, state):
        moves = legal_moves(state)
        plain = [m for m in moves if m.category not in
                 (Category.PASS, Category.BOMB, Category.ROCKET)]
        if state.pending_incumbent is None:
            pool = plain or [m for m in moves if not m.is_pass]
            return min(pool, key=lambda m: (m.principal, -sum(m.cards)))
        if plain:
            return min(plain, key=lambda m: (m.principal, sum(m.cards)))
        strong = [m for m in moves if not m.is_pass]
        if strong:
            return min(strong, key=lambda m: (m.category, m.principal))
        return moves[0]


class QPolicy(Policy):
    """Greedy argmax over the per-role Q networks."""

    def __init__(self, name, nets, deck: DeckSpec = FULL_DECK):
        self.name = name
        self.nets = nets
        self.deck = deck

    @classmethod
    def load(cls, ckpt_dir, step, name=None, deck: DeckSpec = FULL_DECK):
        """Load the three role checkpoints `<role>_<step>.ckpt`."""
        nets = {}
        for role in range(3):
            path = os.path.join(ckpt_dir, f"{ROLE_NAMES[role]}_{step}.ckpt")
            nets[role], _, _, _ = ckpt.load(path)
        return cls(name or os.path.basename(str(ckpt_dir)), nets, deck)

    def move(self, state):
        moves = legal_moves(state)
        if len(moves) == 1:
            return moves[0]
        role = seat_role(state.current, state.landlord)
        q = score_moves(self.nets[role], state, moves)
        return moves[int(np.argmax(q))]


def wilson_interval(wins, games, z=1.959964):
    """95% confidence interval for a binomial proportion."""
    if games == 0:
        return (0.0, 1.0)
    p = wins / games
    denom = 1 + z * z / games
    center = (p + z * z / (2 * games)) / denom
    half = z * math.sqrt(p * (1 - p) / games + z * z / (4 * games ** 2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class MatchResult:
    name_a: str
    name_b: str
    wins_a: int
    games: int
    decks: int

    @property
    def wp_a(self) -> float:
        return self.wins_a / self.games

    @property
    def wp_b(self) -> float:
        return 1.0 - self.wp_a

    @property
    def ci_a(self):
        return wilson_interval(self.wins_a, self.games)


def _play_game(seed, landlord_policy, peasant_policy, landlord_seat,
               deck, auction=False, max_plies=400):
    """One game; returns the winning side.

    With auction=True the scripted opening bid runs first (the first
    bidder takes the deal at multiplier 1); otherwise the landlord seat
    is assigned directly.
    """
    state = new_game(seed, landlord_seat, deck)
    if auction and deck.hidden_size > 0:
        while state.phase == Phase.BIDDING:
            state = apply_bid(state, scripted_bid(state))
    else:
        state = start_play(state, landlord_seat)
    for policy in (landlord_policy, peasant_policy):
        policy.begin_game(seed)
    plies = 0
    while state.phase == Phase.PLAY:
        if seat_role(state.current, state.landlord) == 0:
            move = landlord_policy.move(state)
        else:
            move = peasant_policy.move(state)
        state = apply_move(state, move)
        plies += 1
        if plies > max_plies:
            raise RuntimeError("game exceeded the ply budget")
    return winner_side(state)


def duplicate_match(policy_a: Policy, policy_b: Policy, n_decks=100,
                    seed=0, deck: DeckSpec = FULL_DECK,
                    auction=False) -> MatchResult:
    """Role-swapped paired match; returns side A's win statistics."""
    wins_a = 0
    for i in range(n_decks):
        deal_seed = (seed * 1_000_003 + i) & ((1 << 63) - 1)
        if _play_game(deal_seed, policy_a, policy_b, i % 3,
                      deck, auction) == "landlord":
            wins_a += 1
        if _play_game(deal_seed, policy_b, policy_a, i % 3,
                      deck, auction) == "peasants":
            wins_a += 1
    return MatchResult(policy_a.name, policy_b.name, wins_a,
                       2 * n_decks, n_decks)


def wp_table(policies, n_decks=100, seed=0, deck: DeckSpec = FULL_DECK):
    """All ordered pairings; returns (result list, formatted text)."""
    results = []
    for a in policies:
        for b in policies:
            if a is b:
                continue
            results.append(duplicate_match(a, b, n_decks, seed, deck))
    width = max(len(p.name) for p in policies) + 2
    lines = ["side A".ljust(width) + "side B".ljust(width)
             + "WP(A)   95% CI          games"]
    for r in results:
        lo, hi = r.ci_a
        lines.append(r.name_a.ljust(width) + r.name_b.ljust(width)
                     + f"{r.wp_a:.4f}  [{lo:.4f}, {hi:.4f}]  {r.games}")
    return results, "\n".join(lines)


def results_csv_rows(results):
    rows = [["side_a", "side_b", "wp_a", "ci_low", "ci_high", "games"]]
    for r in results:
        lo, hi = r.ci_a
        rows.append([r.name_a, r.name_b, f"{r.wp_a:.4f}",
                     f"{lo:.4f}", f"{hi:.4f}", r.games])
    return rows
