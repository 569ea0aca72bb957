"""Command-line entry points.

Subcommands: train, eval, bid-data, bid-train, bid-eval, serve,
encode-inspect, movegen-bench, replay-verify. Exit codes: 0 success,
2 usage error (argparse), 3 unreadable or invalid input data,
4 verification failure (replay or benchmark mismatch).
"""

from __future__ import annotations

import argparse
import asyncio
import itertools
import json
import sys
import time

import numpy as np

EXIT_OK = 0
EXIT_DATA = 3
EXIT_VERIFY = 4


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _deck(name):
    from .cards import FULL_DECK, REDUCED_DECK
    return REDUCED_DECK if name == "reduced" else FULL_DECK


def _parse_policy(spec, deck, default_seed=0):
    """random[:seed] | rule | ckpt:DIR:STEP"""
    from .evaluation import QPolicy, RandomPolicy, RulePolicy
    parts = spec.split(":")
    if parts[0] == "random":
        seed = int(parts[1]) if len(parts) > 1 else default_seed
        return RandomPolicy(seed=seed, name=f"random{seed}")
    if parts[0] == "rule":
        return RulePolicy()
    if parts[0] == "ckpt":
        if len(parts) != 3:
            raise ValueError("checkpoint policy needs ckpt:DIR:STEP")
        return QPolicy.load(parts[1], int(parts[2]), deck=deck)
    raise ValueError(f"unknown policy spec {spec!r}")


def _reference_moves(hand, incumbent, deck):
    """Slow enumeration of playable moves straight from the rules."""
    from .cards import InvalidCombo, PASS_MOVE, beats, classify_move
    n = len(hand)
    found = []
    for take in itertools.product(*[range(int(c) + 1) for c in hand]):
        if sum(take) == 0:
            continue
        try:
            move = classify_move(take, deck)
        except InvalidCombo:
            continue
        if incumbent is None or beats(move, incumbent):
            found.append(move)
    found.sort(key=lambda m: (m.category, m.length, m.principal, m.kickers))
    if incumbent is not None:
        found.insert(0, PASS_MOVE)
    return found


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def cmd_train(args):
    from .dmc import TrainConfig, train
    try:
        cfg = TrainConfig.from_file(args.config) if args.config \
            else TrainConfig()
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.seed is not None:
        import dataclasses
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.print_config:
        import dataclasses
        print(json.dumps(dataclasses.asdict(cfg), indent=1))
        if args.dry_run:
            return EXIT_OK
    if args.dry_run:
        return EXIT_OK
    train(cfg, args.out)
    print(f"trained {cfg.total_steps} steps into {args.out}")
    return EXIT_OK


def cmd_eval(args):
    from .evaluation import duplicate_match, results_csv_rows
    deck = _deck(args.deck)
    try:
        a = _parse_policy(args.side_a, deck, default_seed=args.seed)
        b = _parse_policy(args.side_b, deck, default_seed=args.seed + 1)
    except (OSError, ValueError) as exc:
        print(f"policy error: {exc}", file=sys.stderr)
        return EXIT_DATA
    result = duplicate_match(a, b, n_decks=args.decks, seed=args.seed,
                             deck=deck, auction=args.auction)
    lo, hi = result.ci_a
    print(f"{result.name_a} vs {result.name_b}: "
          f"WP {result.wp_a:.4f} [{lo:.4f}, {hi:.4f}] "
          f"over {result.games} games")
    if args.csv:
        import csv
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(results_csv_rows([result]))
    return EXIT_OK


def cmd_bid_data(args):
    from .bidding import generate_bid_dataset
    generate_bid_dataset(args.out, args.deals, seed=args.seed,
                         n_rollouts=args.rollouts)
    print(f"wrote {args.deals} labeled deals to {args.out}")
    return EXIT_OK


def cmd_bid_train(args):
    from . import checkpoint
    from .bidding import CorruptDataset, load_bid_dataset, train_bid_network
    try:
        x, y = load_bid_dataset(args.data)
    except (OSError, CorruptDataset) as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATA
    net, history, val_history = train_bid_network(
        x, y, epochs=args.epochs, batch_size=args.batch_size,
        lr=args.lr, seed=args.seed, val_fraction=args.val_fraction)
    checkpoint.save(args.out, net, step=args.epochs)
    line = f"final epoch loss {history[-1]:.6f}"
    if val_history:
        line += f", validation loss {val_history[-1]:.6f}"
    print(f"{line}; saved to {args.out}")
    return EXIT_OK


def cmd_bid_eval(args):
    from . import checkpoint
    from .bidding import CorruptDataset, decide_bid, load_bid_dataset
    from .encoding import decode_hand
    try:
        net, _, _, _ = checkpoint.load(args.ckpt)
        x, y = load_bid_dataset(args.data)
    except (OSError, CorruptDataset, checkpoint.CorruptCheckpoint) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    pred = net.forward(x)
    mse = float(np.mean((pred - y) ** 2))
    counts = [0, 0, 0, 0]
    for row in x:
        hand = decode_hand(row[:60].reshape(4, 15))
        counts[decide_bid(net, hand, [])] += 1
    print(f"mse {mse:.6f} over {len(y)} examples")
    print("bid distribution (open auction): "
          + " ".join(f"{b}:{c}" for b, c in enumerate(counts)))
    return EXIT_OK


def cmd_serve(args):
    from .service import Server
    server = Server(host=args.host, port=args.port, opponent=args.opponent,
                    ckpt_dir=args.ckpt_dir, ckpt_step=args.step,
                    replay_path=args.replays, turn_timeout=args.timeout,
                    seed=args.seed)

    async def run():
        await server.start()
        print(f"listening on {server.host}:{server.port}")
        await server.serve_forever()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_encode_inspect(args):
    from .cards import cards_to_str
    from .encoding import encode_hand, encode_state, format_matrix
    from .game import Phase, apply_move, legal_moves, new_game, start_play
    deck = _deck(args.deck)
    state = start_play(new_game(args.seed, 0, deck), 0)
    rng = np.random.default_rng(args.seed)
    for _ in range(args.plies):
        if state.phase != Phase.PLAY:
            break
        moves = legal_moves(state)
        state = apply_move(state, moves[rng.integers(len(moves))])
    if state.phase != Phase.PLAY:
        print("game ended before the requested ply; showing final hands")
        for seat in range(3):
            print(f"seat {seat}: {cards_to_str(state.hands[seat])}")
        return EXIT_OK
    seat = state.current
    print(f"seed {args.seed}, ply {len(state.history)}, "
          f"seat to act {seat}")
    print(format_matrix(encode_hand(state.hands[seat]),
                        f"hand of seat {seat} "
                        f"({cards_to_str(state.hands[seat])})"))
    v = encode_state(state, seat)
    print(f"state vector width {v.size}, nonzero {int((v != 0).sum())}")
    return EXIT_OK


def cmd_movegen_bench(args):
    from . import _kernels
    from .cards import get_catalogue, legal_moves
    deck = _deck(args.deck)
    cat = get_catalogue(deck)
    rng = np.random.default_rng(args.seed)

    hands = []
    for i in range(args.states):
        from .cards import deal
        d = deal(args.seed * 7919 + i, deck)
        hands.append(np.array(d.hands[i % 3], dtype=np.int8))

    def bench(fn):
        fn(cat.matrix, hands[0])        # warm-up / JIT compile
        t0 = time.perf_counter()
        masks = [fn(cat.matrix, h) for h in hands]
        dt = time.perf_counter() - t0
        return masks, args.states / dt

    numpy_masks, numpy_rate = bench(_kernels.playable_mask_numpy)
    print(f"numpy: {numpy_rate:,.0f} states/sec")
    mismatches = 0
    if _kernels.JIT_ENABLED:
        jit_masks, jit_rate = bench(_kernels.playable_mask)
        mismatches = sum(int((a != b).any())
                         for a, b in zip(numpy_masks, jit_masks))
        print(f"numba: {jit_rate:,.0f} states/sec")
        print(f"kernel mismatches: {mismatches}")
    else:
        print("numba: unavailable (fallback active)")

    oracle_bad = 0
    for i in range(min(args.oracle_states, len(hands))):
        hand = hands[i]
        fast = legal_moves(hand, None, deck)
        slow = _reference_moves(hand, None, deck)
        if fast != slow:
            oracle_bad += 1
    print(f"oracle mismatches: {oracle_bad} "
          f"({min(args.oracle_states, len(hands))} states)")
    return EXIT_VERIFY if (mismatches or oracle_bad) else EXIT_OK


def cmd_replay_verify(args):
    from .game import read_replays, replay_record
    deck = _deck(args.deck)
    try:
        records = read_replays(args.path)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read replays: {exc}", file=sys.stderr)
        return EXIT_DATA
    bad = 0
    for i, rec in enumerate(records):
        try:
            replay_record(rec, deck)
        except Exception as exc:
            bad += 1
            print(f"record {i}: {type(exc).__name__}: {exc}")
    print(f"{len(records) - bad}/{len(records)} records verified")
    return EXIT_VERIFY if bad else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="ddzlab")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run self-play training")
    t.add_argument("--config", help="JSON or key=value config file")
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--print-config", action="store_true")
    t.add_argument("--dry-run", action="store_true")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="paired head-to-head evaluation")
    e.add_argument("side_a", help="random[:seed] | rule | ckpt:DIR:STEP")
    e.add_argument("side_b")
    e.add_argument("--decks", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--deck", choices=["full", "reduced"], default="full")
    e.add_argument("--auction", action="store_true")
    e.add_argument("--csv")
    e.set_defaults(fn=cmd_eval)

    d = sub.add_parser("bid-data", help="generate a labeled bid dataset")
    d.add_argument("--out", required=True)
    d.add_argument("--deals", type=int, default=1000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--rollouts", type=int, default=20)
    d.set_defaults(fn=cmd_bid_data)

    bt = sub.add_parser("bid-train", help="train the bid value network")
    bt.add_argument("--data", required=True)
    bt.add_argument("--out", required=True)
    bt.add_argument("--epochs", type=int, default=20)
    bt.add_argument("--batch-size", type=int, default=64)
    bt.add_argument("--lr", type=float, default=1e-4)
    bt.add_argument("--seed", type=int, default=0)
    bt.add_argument("--val-fraction", type=float, default=0.0)
    bt.set_defaults(fn=cmd_bid_train)

    be = sub.add_parser("bid-eval", help="score a bid network on a dataset")
    be.add_argument("--ckpt", required=True)
    be.add_argument("--data", required=True)
    be.set_defaults(fn=cmd_bid_eval)

    s = sub.add_parser("serve", help="run the network play service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=4780)
    s.add_argument("--opponent", default="rule",
                   choices=["rule", "random", "checkpoint"])
    s.add_argument("--ckpt-dir")
    s.add_argument("--step", type=int)
    s.add_argument("--replays", help="JSONL replay output path")
    s.add_argument("--timeout", type=float, default=60.0,
                   help="per-turn auto-pass timer in seconds")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_serve)

    ei = sub.add_parser("encode-inspect", help="print feature matrices")
    ei.add_argument("--seed", type=int, default=0)
    ei.add_argument("--plies", type=int, default=0)
    ei.add_argument("--deck", choices=["full", "reduced"], default="full")
    ei.set_defaults(fn=cmd_encode_inspect)

    mb = sub.add_parser("movegen-bench",
                        help="benchmark and cross-check move generation")
    mb.add_argument("--states", type=int, default=1000)
    mb.add_argument("--oracle-states", type=int, default=20)
    mb.add_argument("--seed", type=int, default=0)
    mb.add_argument("--deck", choices=["full", "reduced"], default="full")
    mb.set_defaults(fn=cmd_movegen_bench)

    rv = sub.add_parser("replay-verify", help="re-drive recorded games")
    rv.add_argument("path")
    rv.add_argument("--deck", choices=["full", "reduced"], default="full")
    rv.set_defaults(fn=cmd_replay_verify)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
