"""Deep Monte Carlo self-play training.

Actors play full games with epsilon-greedy Q maximization over legal moves
and emit one transition per decision, labeled with the undiscounted
terminal return. A single learner regresses Q(s,a) toward those returns,
one batch per role per step. Three role networks (landlord, peasant down,
peasant up) are trained jointly.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import checkpoint as ckpt
from .cards import FULL_DECK, REDUCED_DECK, Move
from .encoding import encode_action, encode_state
from .game import (
    GameState,
    Phase,
    WrongPhase,
    apply_bid,
    apply_move,
    game_record,
    legal_bids,
    legal_moves,
    new_game,
    start_play,
    terminal_reward,
)
from .networks import Network, RMSProp, q_network

ROLE_NAMES = ("landlord", "peasant_down", "peasant_up")


def seat_role(seat: int, landlord: int) -> int:
    """0 landlord, 1 peasant directly after the landlord, 2 the other."""
    return (seat - landlord) % 3


@dataclass
class Transition:
    role: int
    seat: int
    s: np.ndarray
    a: np.ndarray
    g: float


class ReplayQueue:
    """Bounded FIFO of transitions; oldest-first eviction at capacity."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items = deque()
        self._lock = threading.Condition()
        self.evictions = 0
        self.closed = False

    def __len__(self):
        with self._lock:
            return len(self._items)

    def put(self, item: Transition):
        with self._lock:
            if self.closed:
                raise RuntimeError("queue closed")
            if len(self._items) >= self.capacity:
                self._items.popleft()
                self.evictions += 1
            self._items.append(item)
            self._lock.notify_all()

    def take(self, n: int, timeout=None):
        """Pop the n oldest transitions; blocks until available or closed."""
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._lock:
            while len(self._items) < n and not self.closed:
                remaining = None
                if deadline is not None:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        return None
                self._lock.wait(remaining)
            if len(self._items) < n:
                return None
            return [self._items.popleft() for _ in range(n)]

    def close(self):
        with self._lock:
            self.closed = True
            self._lock.notify_all()


@dataclass
class TrainConfig:
    arch: str = "baseline"           # baseline | resA | resB
    blocks: int = 0
    hidden: int = 512
    epsilon: float = 0.01
    lr: float = 1e-4
    batch_size: int = 32
    capacity: int = 4096
    actors: int = 1
    snapshot_every: int = 10
    total_steps: int = 100
    seed: int = 0
    reward_mode: str = "winloss"     # winloss | graded
    deck: str = "full"               # full | reduced
    eval_every: int = 0              # 0 disables periodic eval
    eval_decks: int = 100
    checkpoint_steps: tuple = ()
    deterministic: bool = True
    verbose_episodes: bool = False

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")
        for name in ("hidden", "batch_size", "capacity", "actors",
                     "snapshot_every", "lr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def deck_spec(self):
        return REDUCED_DECK if self.deck == "reduced" else FULL_DECK

    @classmethod
    def from_file(cls, path):
        """JSON or key=value text; unknown keys rejected."""
        text = open(path, encoding="utf-8").read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            data = {}
            for line in text.splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                data[key.strip()] = value.strip()
        defaults = {f.name: f.default for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in defaults:
                raise ValueError(f"unknown config key {key!r}")
            default = defaults[key]
            if isinstance(value, str) and not isinstance(default, str):
                if isinstance(default, bool):
                    value = value.lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    value = int(value)
                elif isinstance(default, float):
                    value = float(value)
                elif isinstance(default, tuple):
                    value = tuple(int(v) for v in value.split(",") if v)
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)


def make_role_networks(config: TrainConfig, seed_offset=0):
    return {role: q_network(config.arch, blocks=config.blocks,
                            hidden=config.hidden,
                            seed=config.seed + seed_offset + role)
            for role in range(3)}


def score_moves(net: Network, state: GameState, moves) -> np.ndarray:
    """Q values for every candidate move in one batched forward pass."""
    s = encode_state(state, state.current)
    x = np.empty((len(moves), s.size + 60), dtype=np.float32)
    x[:, : s.size] = s
    for i, m in enumerate(moves):
        x[i, s.size:] = encode_action(m)
    return net.forward(x)


def act(nets, state: GameState, epsilon: float, rng) -> Move:
    """Epsilon-greedy argmax over legal moves; ties break on move order."""
    if state.phase != Phase.PLAY:
        raise WrongPhase("acting requires the play phase")
    moves = legal_moves(state)
    if epsilon > 0 and rng.random() < epsilon:
        return moves[rng.integers(len(moves))]
    role = seat_role(state.current, state.landlord)
    q = score_moves(nets[role], state, moves)
    return moves[int(np.argmax(q))]


def scripted_bid(state: GameState) -> int:
    """Bid 1 at the first opportunity, otherwise pass."""
    bids = legal_bids(state)
    highest = max((v for _, v in state.bids if v > 0), default=0)
    return 1 if highest == 0 and 1 in bids else 0


def play_episode(nets, seed, config: TrainConfig, rng, first_bidder=0,
                 bid_policy=None, collect=True):
    """One full self-play game; returns (terminal state, transitions, record).

    Bidding uses the scripted rule (or a trained bid policy) on the full
    deck; the reduced game assigns the first bidder as landlord directly.
    """
    deck = config.deck_spec
    state = new_game(seed, first_bidder, deck)
    if deck.hidden_size == 0:
        state = start_play(state, first_bidder)
    else:
        while state.phase == Phase.BIDDING and not state.redeal:
            if bid_policy is not None:
                bid = bid_policy(state)
            else:
                bid = scripted_bid(state)
            state = apply_bid(state, bid)
        if state.redeal:
            return state, [], None

    transitions = []
    chosen_q = []
    while state.phase == Phase.PLAY:
        seat = state.current
        role = seat_role(seat, state.landlord)
        moves = legal_moves(state)
        explore = config.epsilon > 0 and rng.random() < config.epsilon
        q_value = None
        if explore and len(moves) > 1:
            move = moves[rng.integers(len(moves))]
        elif len(moves) == 1:
            move = moves[0]
        else:
            q = score_moves(nets[role], state, moves)
            best = int(np.argmax(q))
            move = moves[best]
            q_value = float(q[best])
        if collect:
            transitions.append(Transition(
                role=role, seat=seat,
                s=encode_state(state, seat),
                a=encode_action(move),
                g=0.0))
        if config.verbose_episodes:
            chosen_q.append(q_value)
        state = apply_move(state, move)

    for t in transitions:
        t.g = terminal_reward(state, t.seat, config.reward_mode)
    record = game_record(state)
    if config.verbose_episodes:
        record["q"] = chosen_q
    return state, transitions, record


def run_actor(actor_id, snapshots, queues, config: TrainConfig,
              stop_event, episode_sink=None, max_games=None):
    """Generate episodes until stopped; push transitions per role."""
    rng = np.random.default_rng(config.seed * 9973 + actor_id)
    games = 0
    while not stop_event.is_set():
        if max_games is not None and games >= max_games:
            break
        nets = snapshots.get()
        seed = (config.seed + actor_id * 1_000_003 + games) & ((1 << 64) - 1)
        state, transitions, record = play_episode(
            nets, seed, config, rng, first_bidder=games % 3)
        games += 1
        if record is None:
            continue
        try:
            for t in transitions:
                queues[t.role].put(t)
        except RuntimeError:
            break  # queues closed: clean shutdown
        if episode_sink is not None:
            episode_sink(record)
    return games


class SnapshotHolder:
    """Atomic publication of read-only network copies to actors."""

    def __init__(self, nets):
        self._lock = threading.Lock()
        self._nets = nets

    def get(self):
        with self._lock:
            return self._nets

    def publish(self, nets):
        copies = {r: n.copy() for r, n in nets.items()}
        with self._lock:
            self._nets = copies


def learner_step(queues, nets, optimizers, config: TrainConfig,
                 timeout=None):
    """One MSE regression batch per role; returns per-role loss or None."""
    losses = {}
    for role in range(3):
        batch = queues[role].take(config.batch_size, timeout=timeout)
        if batch is None:
            return None
        x = np.stack([np.concatenate([t.s, t.a]) for t in batch])
        g = np.array([t.g for t in batch], dtype=np.float32)
        loss, _ = nets[role].train_batch(x, g)
        optimizers[role].step(nets[role])
        losses[role] = loss
    return losses


def train(config: TrainConfig, out_dir, log=print):
    """Run actors + learner to total_steps; writes checkpoints and metrics.

    Deterministic mode runs a single inline actor so repeated runs produce
    bit-identical metrics; otherwise actor threads feed the queues.
    """
    os.makedirs(out_dir, exist_ok=True)
    nets = make_role_networks(config)
    optimizers = {r: RMSProp(nets[r], lr=config.lr) for r in range(3)}
    queues = {r: ReplayQueue(config.capacity) for r in range(3)}
    snapshots = SnapshotHolder({r: n.copy() for r, n in nets.items()})
    metrics_path = os.path.join(out_dir, "metrics.csv")
    episodes_path = os.path.join(out_dir, "episodes.jsonl")
    episode_fh = open(episodes_path, "w", encoding="utf-8")
    games_played = 0

    def sink(record):
        nonlocal games_played
        games_played += 1
        episode_fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    def save_checkpoints(step):
        for role in range(3):
            path = os.path.join(out_dir, f"{ROLE_NAMES[role]}_{step}.ckpt")
            ckpt.save(path, nets[role], optimizers[role], step=step)

    metrics_fh = open(metrics_path, "w", newline="", encoding="utf-8")
    writer = csv.writer(metrics_fh)
    writer.writerow(["step", "role", "loss", "wp_vs_random", "games",
                     "evictions"])

    save_checkpoints(0)
    stop_event = threading.Event()
    threads = []
    actor_rng = np.random.default_rng(config.seed * 9973)
    actor_games = 0

    def inline_fill():
        nonlocal actor_games
        while any(len(queues[r]) < config.batch_size for r in range(3)):
            current = snapshots.get()
            seed = (config.seed + actor_games) & ((1 << 64) - 1)
            _, transitions, record = play_episode(
                current, seed, config, actor_rng,
                first_bidder=actor_games % 3)
            actor_games += 1
            if record is None:
                continue
            sink(record)
            for t in transitions:
                queues[t.role].put(t)

    threaded = config.actors > 1 and not config.deterministic
    if threaded:
        for i in range(config.actors):
            th = threading.Thread(
                target=run_actor,
                args=(i, snapshots, queues, config, stop_event, sink),
                daemon=True)
            th.start()
            threads.append(th)

    wp = ""
    try:
        for step in range(1, config.total_steps + 1):
            if not threaded:
                inline_fill()
            losses = learner_step(queues, nets, optimizers, config)
            if losses is None:
                break
            if config.snapshot_every and step % config.snapshot_every == 0:
                snapshots.publish(nets)
            if config.eval_every and step % config.eval_every == 0:
                from .evaluation import duplicate_match, QPolicy, RandomPolicy
                wp_val = duplicate_match(
                    QPolicy("learner", nets, deck=config.deck_spec),
                    RandomPolicy(seed=config.seed),
                    n_decks=config.eval_decks, seed=config.seed,
                    deck=config.deck_spec).wp_a
                wp = f"{wp_val:.4f}"
            for role in range(3):
                writer.writerow([step, ROLE_NAMES[role],
                                 f"{losses[role]:.6f}", wp, games_played,
                                 queues[role].evictions])
            if step in config.checkpoint_steps:
                save_checkpoints(step)
        save_checkpoints(config.total_steps)
    finally:
        stop_event.set()
        for q in queues.values():
            q.close()
        for th in threads:
            th.join(timeout=5)
        metrics_fh.close()
        episode_fh.close()
    return nets
