"""Card primitives, move classification, and legal-move generation.

Ranks are ordinals 0..14 over {3,4,5,6,7,8,9,T,J,Q,K,A,2,BlackJoker,RedJoker}.
A hand is a length-15 count vector (numpy int8 or any sequence of ints).

Rules ledger (the variant implemented here, matching the dominant online
ruleset and DouZero-style engines):
  - solo chain length >= 5, pair chain >= 3, trio chain (plane) >= 2..6;
    chains never contain 2 or jokers.
  - plane solo kickers: a multiset of L cards from ranks outside the chain,
    at most 3 copies of any one rank, at most one of each joker, never both
    jokers, and the combined card set may not contain a run of consecutive
    trios longer than the chain itself (that would be a longer plane/chain).
  - plane pair kickers: L distinct non-joker ranks outside the chain.
  - quad with solos: any 2 kicker cards outside the quad rank (a same-rank
    pair counts as two solos), never both jokers.
  - quad with pairs: 2 distinct non-joker ranks outside the quad rank.
  - four equal cards always classify as Bomb.
Under these rules every valid card multiset has exactly one classification,
and the full-deck action catalogue holds 27,472 entries including Pass.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .rng import Xoshiro256StarStar

N_RANKS = 15
RANK_CHARS = "3456789TJQKA2BR"
BLACK_JOKER = 13
RED_JOKER = 14
RANK_TWO = 12
MAX_CHAIN_RANK = 11  # chains run over 3..A only

SOLO_CHAIN_MIN = 5
PAIR_CHAIN_MIN = 3
TRIO_CHAIN_MIN = 2
TRIO_CHAIN_MAX = 6


class InvalidCombo(ValueError):
    """Card set matches no move category."""


class Category(IntEnum):
    PASS = 0
    SOLO = 1
    PAIR = 2
    TRIO = 3
    TRIO_SOLO = 4
    TRIO_PAIR = 5
    SOLO_CHAIN = 6
    PAIR_CHAIN = 7
    TRIO_CHAIN = 8
    PLANE_SOLO = 9
    PLANE_PAIR = 10
    QUAD_SOLO = 11
    QUAD_PAIR = 12
    BOMB = 13
    ROCKET = 14


@dataclass(frozen=True, order=True)
class Move:
    """A classified combination. `cards` is the 15-tuple of played counts."""

    category: Category
    length: int
    principal: int
    kickers: tuple[int, ...]
    cards: tuple[int, ...]

    @property
    def is_pass(self):
        return self.category == Category.PASS

    @property
    def size(self):
        return sum(self.cards)

    def __repr__(self):
        if self.is_pass:
            return "Move(Pass)"
        return f"Move({self.category.name} {cards_to_str(self.cards)})"


PASS_MOVE = Move(Category.PASS, 0, -1, (), (0,) * N_RANKS)


@dataclass(frozen=True)
class DeckSpec:
    """Which ranks exist and how cards are dealt."""

    n_suited: int = 13          # ranks with 4 copies each
    jokers: bool = True
    hand_size: int = 17
    hidden_size: int = 3

    @property
    def chain_max(self):
        return min(MAX_CHAIN_RANK, self.n_suited - 1)

    @property
    def deck_counts(self):
        v = np.zeros(N_RANKS, dtype=np.int8)
        v[: self.n_suited] = 4
        if self.jokers:
            v[BLACK_JOKER] = 1
            v[RED_JOKER] = 1
        return v

    @property
    def deck_size(self):
        return int(self.deck_counts.sum())


FULL_DECK = DeckSpec()
# Reduced 24-card game used for smoke training: ranks 3..8, 8/8/8, no
# jokers, no hidden cards, no bidding.
REDUCED_DECK = DeckSpec(n_suited=6, jokers=False, hand_size=8, hidden_size=0)


@dataclass(frozen=True)
class Deal:
    hands: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]
    hidden: tuple[int, ...]
    seed: int


def hand_array(counts) -> np.ndarray:
    return np.asarray(counts, dtype=np.int8)


def cards_from_str(text: str) -> tuple[int, ...]:
    v = [0] * N_RANKS
    for ch in text:
        v[RANK_CHARS.index(ch)] += 1
    return tuple(v)


def cards_to_str(counts) -> str:
    return "".join(RANK_CHARS[r] * int(counts[r]) for r in range(N_RANKS))


def _trio_run_too_long(counts, length, chain_max):
    """True if the set holds a run of >length consecutive trios (3..A)."""
    run = 0
    for r in range(chain_max + 1):
        run = run + 1 if counts[r] >= 3 else 0
        if run > length:
            return True
    return False


def _valid_solo_kickers(kick, n_kickers):
    if sum(kick) != n_kickers:
        return False
    if any(c > 3 for c in kick):
        return False
    if kick[BLACK_JOKER] > 1 or kick[RED_JOKER] > 1:
        return False
    if kick[BLACK_JOKER] and kick[RED_JOKER]:
        return False
    return True


def _kicker_tuple(kick):
    out = []
    for r in range(N_RANKS):
        out.extend([r] * int(kick[r]))
    return tuple(out)


def classify_move(counts, deck: DeckSpec = FULL_DECK) -> Move:
    """Classify a card multiset, or raise InvalidCombo.

    Canonical: when a plane admits several chain windows the lowest-start
    window is chosen (equivalently the lexicographically smallest kickers).
    """
    c = [int(x) for x in counts]
    if len(c) != N_RANKS or any(x < 0 for x in c):
        raise InvalidCombo("malformed count vector")
    deckc = deck.deck_counts
    if any(c[r] > deckc[r] for r in range(N_RANKS)):
        raise InvalidCombo("counts exceed the deck")
    s = sum(c)
    cards = tuple(c)
    present = [r for r in range(N_RANKS) if c[r] > 0]
    cmax = deck.chain_max

    if s == 0:
        return PASS_MOVE
    if s == 1:
        return Move(Category.SOLO, 1, present[0], (), cards)
    if c[BLACK_JOKER] == 1 and c[RED_JOKER] == 1:
        if s == 2:
            return Move(Category.ROCKET, 1, RED_JOKER, (), cards)
        # jokers together otherwise appear only inside larger invalid sets
    if s == 2 and len(present) == 1:
        return Move(Category.PAIR, 1, present[0], (), cards)
    if s == 3 and len(present) == 1:
        return Move(Category.TRIO, 1, present[0], (), cards)
    if s == 4 and len(present) == 1:
        return Move(Category.BOMB, 1, present[0], (), cards)

    quads = [r for r in present if c[r] == 4]
    trios = [r for r in present if c[r] == 3]

    if s == 4 and len(trios) == 1:
        k = next(r for r in present if c[r] == 1)
        return Move(Category.TRIO_SOLO, 1, trios[0], (k,), cards)
    if s == 5 and len(trios) == 1 and len(present) == 2:
        k = next(r for r in present if c[r] == 2)
        if k <= RANK_TWO:
            return Move(Category.TRIO_PAIR, 1, trios[0], (k,), cards)
        raise InvalidCombo("jokers cannot form the pair of a trio-with-pair")

    # pure chains
    consecutive = present[-1] - present[0] + 1 == len(present)
    if consecutive and present[-1] <= cmax:
        n = len(present)
        if all(c[r] == 1 for r in present) and n >= SOLO_CHAIN_MIN:
            return Move(Category.SOLO_CHAIN, n, present[-1], (), cards)
        if all(c[r] == 2 for r in present) and n >= PAIR_CHAIN_MIN:
            return Move(Category.PAIR_CHAIN, n, present[-1], (), cards)
        if (all(c[r] == 3 for r in present)
                and TRIO_CHAIN_MIN <= n <= TRIO_CHAIN_MAX):
            return Move(Category.TRIO_CHAIN, n, present[-1], (), cards)

    # quad with kickers
    if len(quads) == 1 and s in (6, 8):
        q = quads[0]
        kick = c.copy()
        kick[q] = 0
        if s == 6 and _valid_solo_kickers(kick, 2):
            return Move(Category.QUAD_SOLO, 1, q, _kicker_tuple(kick), cards)
        if s == 8:
            pairs = [r for r in range(N_RANKS) if kick[r] == 2]
            if len(pairs) == 2 and sum(kick) == 4 and pairs[1] <= RANK_TWO:
                return Move(Category.QUAD_PAIR, 1, q, tuple(pairs), cards)

    # plane with solo kickers: s = 4L
    if s % 4 == 0 and s >= 8 and not quads:
        length = s // 4
        if TRIO_CHAIN_MIN <= length <= TRIO_CHAIN_MAX:
            for start in range(0, cmax - length + 2):
                window = range(start, start + length)
                if not all(c[r] == 3 for r in window):
                    continue
                kick = c.copy()
                for r in window:
                    kick[r] = 0
                if not _valid_solo_kickers(kick, length):
                    continue
                if _trio_run_too_long(c, length, cmax):
                    continue
                return Move(Category.PLANE_SOLO, length, start + length - 1,
                            _kicker_tuple(kick), cards)

    # plane with pair kickers: s = 5L
    if s % 5 == 0 and s >= 10 and not quads:
        length = s // 5
        if TRIO_CHAIN_MIN <= length <= TRIO_CHAIN_MAX:
            for start in range(0, cmax - length + 2):
                window = range(start, start + length)
                if not all(c[r] == 3 for r in window):
                    continue
                kick = c.copy()
                for r in window:
                    kick[r] = 0
                pairs = [r for r in range(N_RANKS) if kick[r] == 2]
                if (len(pairs) == length and sum(kick) == 2 * length
                        and all(r <= RANK_TWO for r in pairs)):
                    return Move(Category.PLANE_PAIR, length,
                                start + length - 1, tuple(pairs), cards)

    raise InvalidCombo(f"no category matches {cards_to_str(cards)!r}")


def beats(challenger: Move, incumbent: Move) -> bool:
    """True iff challenger legally beats incumbent. Both must be non-Pass."""
    if challenger.is_pass or incumbent.is_pass:
        raise ValueError("beats() compares non-Pass moves")
    if challenger.category == Category.ROCKET:
        return True
    if incumbent.category == Category.ROCKET:
        return False
    if challenger.category == Category.BOMB:
        if incumbent.category == Category.BOMB:
            return challenger.principal > incumbent.principal
        return True
    if incumbent.category == Category.BOMB:
        return False
    return (challenger.category == incumbent.category
            and challenger.length == incumbent.length
            and challenger.principal > incumbent.principal)


# ---------------------------------------------------------------------------
# Action catalogue: every distinct playable card multiset, Pass first,
# ordered by (category, length, principal, kickers).
# ---------------------------------------------------------------------------

def _gen_kicker_multisets(avail, n, max_copies):
    """Multisets of size n over `avail` ranks, joker limits applied."""
    out = []

    def rec(idx, left, current):
        if left == 0:
            out.append(dict(current))
            return
        if idx == len(avail):
            return
        r = avail[idx]
        cap = 1 if r >= BLACK_JOKER else max_copies
        for take in range(min(cap, left), -1, -1):
            if take:
                current[r] = take
            rec(idx + 1, left - take, current)
            current.pop(r, None)

    rec(0, n, {})
    return [k for k in out
            if not (k.get(BLACK_JOKER) and k.get(RED_JOKER))]


def _vec(pairs):
    v = [0] * N_RANKS
    for r, n in pairs:
        v[r] += n
    return tuple(v)


@dataclass
class ActionCatalogue:
    deck: DeckSpec
    moves: list[Move]
    matrix: np.ndarray            # (n, 15) int8 card counts, row 0 = Pass
    category: np.ndarray          # (n,) int16
    length: np.ndarray            # (n,) int16
    principal: np.ndarray         # (n,) int16
    index: dict = field(repr=False, default_factory=dict)

    def __len__(self):
        return len(self.moves)

    def index_of(self, move: Move) -> int:
        return self.index[move.cards]


def _build_moves(deck: DeckSpec) -> list[Move]:
    moves = [PASS_MOVE]
    suited = list(range(deck.n_suited))
    ranks = suited + ([BLACK_JOKER, RED_JOKER] if deck.jokers else [])
    cmax = deck.chain_max
    hand_max = deck.hand_size + deck.hidden_size

    def emit(cards):
        moves.append(classify_move(cards, deck))

    for r in ranks:
        emit(_vec([(r, 1)]))
    for r in suited:
        emit(_vec([(r, 2)]))
        emit(_vec([(r, 3)]))
        emit(_vec([(r, 4)]))
    if deck.jokers:
        emit(_vec([(BLACK_JOKER, 1), (RED_JOKER, 1)]))

    for r in suited:
        for k in ranks:
            if k != r:
                emit(_vec([(r, 3), (k, 1)]))
        for k in suited:
            if k != r:
                emit(_vec([(r, 3), (k, 2)]))

    def chains(length):
        return [tuple(range(s, s + length))
                for s in range(0, cmax - length + 2)]

    for length in range(SOLO_CHAIN_MIN, cmax + 2):
        for ch in chains(length):
            emit(_vec([(r, 1) for r in ch]))
    for length in range(PAIR_CHAIN_MIN, cmax + 2):
        if 2 * length > hand_max:
            break
        for ch in chains(length):
            emit(_vec([(r, 2) for r in ch]))
    for length in range(TRIO_CHAIN_MIN, TRIO_CHAIN_MAX + 1):
        if 3 * length > hand_max:
            break
        for ch in chains(length):
            emit(_vec([(r, 3) for r in ch]))

    # planes with kickers
    for length in range(TRIO_CHAIN_MIN, TRIO_CHAIN_MAX + 1):
        if 4 * length > hand_max:
            break
        for ch in chains(length):
            avail = [r for r in ranks if r not in ch]
            for kick in _gen_kicker_multisets(avail, length, max_copies=3):
                cards = list(_vec([(r, 3) for r in ch]))
                for k, n in kick.items():
                    cards[k] += n
                if any(cards[r] > 4 for r in suited):
                    continue
                if _trio_run_too_long(cards, length, cmax):
                    continue
                emit(tuple(cards))
    from itertools import combinations
    for length in range(TRIO_CHAIN_MIN, TRIO_CHAIN_MAX + 1):
        if 5 * length > hand_max:
            break
        for ch in chains(length):
            avail = [r for r in suited if r not in ch]
            for kick in combinations(avail, length):
                emit(_vec([(r, 3) for r in ch] + [(k, 2) for k in kick]))

    # quads with kickers
    for r in suited:
        avail = [k for k in ranks if k != r]
        for kick in _gen_kicker_multisets(avail, 2, max_copies=2):
            cards = list(_vec([(r, 4)]))
            for k, n in kick.items():
                cards[k] += n
            emit(tuple(cards))
        for kick in combinations([k for k in suited if k != r], 2):
            emit(_vec([(r, 4)] + [(k, 2) for k in kick]))

    uniq = {}
    for m in moves:
        uniq[m.cards] = m
    ordered = sorted(uniq.values(),
                     key=lambda m: (m.category, m.length, m.principal,
                                    m.kickers))
    return ordered


@lru_cache(maxsize=4)
def get_catalogue(deck: DeckSpec = FULL_DECK) -> ActionCatalogue:
    moves = _build_moves(deck)
    matrix = np.array([m.cards for m in moves], dtype=np.int8)
    cat = ActionCatalogue(
        deck=deck,
        moves=moves,
        matrix=matrix,
        category=np.array([int(m.category) for m in moves], dtype=np.int16),
        length=np.array([m.length for m in moves], dtype=np.int16),
        principal=np.array([m.principal for m in moves], dtype=np.int16),
    )
    cat.index = {m.cards: i for i, m in enumerate(moves)}
    return cat


def enumerate_action_space(deck: DeckSpec = FULL_DECK) -> list[Move]:
    """The complete catalogue of abstract moves, Pass included, stable order."""
    return list(get_catalogue(deck).moves)


def legal_moves(hand, incumbent: Move | None = None,
                deck: DeckSpec = FULL_DECK) -> list[Move]:
    """All moves playable from `hand`.

    Leading (incumbent None): every non-Pass move contained in the hand.
    Following: every containing move that beats the incumbent, plus Pass.
    """
    from ._kernels import playable_mask
    cat = get_catalogue(deck)
    h = hand_array(hand)
    if int(h.sum()) == 0:
        raise ValueError("hand is empty")
    if incumbent is not None and incumbent.is_pass:
        incumbent = None

    mask = playable_mask(cat.matrix, h)
    mask[0] = False  # Pass handled separately
    if incumbent is None:
        idx = np.nonzero(mask)[0]
        return [cat.moves[i] for i in idx]

    inc_cat = int(incumbent.category)
    if inc_cat == Category.ROCKET:
        allowed = np.zeros(len(cat.moves), dtype=bool)
    elif inc_cat == Category.BOMB:
        allowed = (((cat.category == Category.BOMB)
                    & (cat.principal > incumbent.principal))
                   | (cat.category == Category.ROCKET))
    else:
        allowed = ((cat.category == inc_cat)
                   & (cat.length == incumbent.length)
                   & (cat.principal > incumbent.principal))
        allowed |= (cat.category == Category.BOMB)
        allowed |= (cat.category == Category.ROCKET)
    idx = np.nonzero(mask & allowed)[0]
    return [PASS_MOVE] + [cat.moves[i] for i in idx]


def deal(seed: int, deck: DeckSpec = FULL_DECK) -> Deal:
    """Deterministic uniform deal from a 64-bit seed (xoshiro256**)."""
    cards = [r for r in range(N_RANKS)
             for _ in range(int(deck.deck_counts[r]))]
    rng = Xoshiro256StarStar(seed)
    rng.shuffle(cards)
    h = deck.hand_size
    parts = []
    for i in range(3):
        v = [0] * N_RANKS
        for r in cards[i * h:(i + 1) * h]:
            v[r] += 1
        parts.append(tuple(v))
    hidden = [0] * N_RANKS
    for r in cards[3 * h:]:
        hidden[r] += 1
    return Deal(hands=tuple(parts), hidden=tuple(hidden), seed=seed)
