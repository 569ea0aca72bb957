"""Network play service: one human seat against built-in agents.

Transport is JSON messages over either raw TCP (4-byte big-endian length
prefix, UTF-8 payload) or a WebSocket (RFC 6455 text frames; the upgrade
handshake is detected automatically on the shared port). Message types:

  client -> server: hello, new_game, bid, move
  server -> client: hello, state, your_turn, bid_made, move_made,
                    game_over, error

Every state message contains only information visible to the client's
seat. Finished games are appended to a JSONL replay file. A per-turn
timer auto-passes (or auto-bids pass) when the human does not answer in
time. Errors in one connection never take down the server.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import json
import os
import struct

from .cards import (
    FULL_DECK,
    REDUCED_DECK,
    InvalidCombo,
    cards_from_str,
    cards_to_str,
    classify_move,
)
from .dmc import scripted_bid
from .evaluation import Policy, QPolicy, RandomPolicy, RulePolicy
from .game import (
    GameState,
    IllegalBid,
    IllegalMove,
    PASS_MOVE,
    Phase,
    apply_bid,
    apply_move,
    game_record,
    legal_bids,
    legal_moves,
    new_game,
    settle,
    start_play,
)

PROTOCOL_VERSION = 1
WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------

class ConnectionClosed(Exception):
    pass


class TcpTransport:
    """Length-prefixed JSON over a plain socket."""

    def __init__(self, reader, writer, first_chunk=b""):
        self.reader = reader
        self.writer = writer
        self._buf = bytearray(first_chunk)

    async def _fill(self, n):
        while len(self._buf) < n:
            chunk = await self.reader.read(65536)
            if not chunk:
                raise ConnectionClosed
            self._buf += chunk

    async def recv(self) -> dict:
        await self._fill(4)
        (length,) = struct.unpack(">I", bytes(self._buf[:4]))
        await self._fill(4 + length)
        payload = bytes(self._buf[4:4 + length])
        del self._buf[:4 + length]
        return json.loads(payload.decode("utf-8"))

    async def send(self, message: dict):
        payload = json.dumps(message, separators=(",", ":")).encode("utf-8")
        self.writer.write(struct.pack(">I", len(payload)) + payload)
        await self.writer.drain()

    async def close(self):
        self.writer.close()


class WebSocketTransport:
    """Server side of a minimal RFC 6455 text-frame connection."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    @classmethod
    async def upgrade(cls, reader, writer, first_chunk):
        data = bytearray(first_chunk)
        while b"\r\n\r\n" not in data:
            chunk = await reader.read(65536)
            if not chunk:
                raise ConnectionClosed
            data += chunk
        head, _, rest = bytes(data).partition(b"\r\n\r\n")
        headers = {}
        for line in head.decode("latin-1").split("\r\n")[1:]:
            name, _, value = line.partition(":")
            headers[name.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key", "")
        accept = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()).decode()
        writer.write((
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode("latin-1"))
        await writer.drain()
        self = cls(reader, writer)
        self._buf = bytearray(rest)
        return self

    async def _fill(self, n):
        while len(self._buf) < n:
            chunk = await self.reader.read(65536)
            if not chunk:
                raise ConnectionClosed
            self._buf += chunk

    async def _read_frame(self):
        await self._fill(2)
        b0, b1 = self._buf[0], self._buf[1]
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        length = b1 & 0x7F
        offset = 2
        if length == 126:
            await self._fill(4)
            (length,) = struct.unpack(">H", bytes(self._buf[2:4]))
            offset = 4
        elif length == 127:
            await self._fill(10)
            (length,) = struct.unpack(">Q", bytes(self._buf[2:10]))
            offset = 10
        mask = b""
        if masked:
            await self._fill(offset + 4)
            mask = bytes(self._buf[offset:offset + 4])
            offset += 4
        await self._fill(offset + length)
        payload = bytes(self._buf[offset:offset + length])
        del self._buf[:offset + length]
        if mask:
            payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
        return opcode, payload

    async def recv(self) -> dict:
        while True:
            opcode, payload = await self._read_frame()
            if opcode == 0x8:           # close
                raise ConnectionClosed
            if opcode == 0x9:           # ping
                await self._send_frame(0xA, payload)
                continue
            if opcode in (0x1, 0x2):
                return json.loads(payload.decode("utf-8"))

    async def _send_frame(self, opcode, payload):
        header = bytearray([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header.append(n)
        elif n < 65536:
            header.append(126)
            header += struct.pack(">H", n)
        else:
            header.append(127)
            header += struct.pack(">Q", n)
        self.writer.write(bytes(header) + payload)
        await self.writer.drain()

    async def send(self, message: dict):
        payload = json.dumps(message, separators=(",", ":")).encode("utf-8")
        await self._send_frame(0x1, payload)

    async def close(self):
        try:
            await self._send_frame(0x8, b"")
        except (ConnectionError, RuntimeError):
            pass
        self.writer.close()


async def open_transport(reader, writer):
    """Sniff the first bytes: an HTTP GET means a WebSocket client."""
    chunk = await reader.read(65536)
    if not chunk:
        raise ConnectionClosed
    if chunk[:4] in (b"GET ", b"GET\t"):
        return await WebSocketTransport.upgrade(reader, writer, chunk)
    return TcpTransport(reader, writer, chunk)


# ---------------------------------------------------------------------------
# Game session
# ---------------------------------------------------------------------------

def visible_state(state: GameState, viewer: int) -> dict:
    """Everything `viewer` may see, nothing more."""
    msg = {
        "type": "state",
        "phase": state.phase.name.lower(),
        "seat": viewer,
        "current": state.current,
        "hand": cards_to_str(state.hands[viewer]),
        "counts": [sum(h) for h in state.hands],
        "landlord": state.landlord,
        "bids": [[s, v] for s, v in state.bids],
        "multiplier": state.base_multiplier,
        "bombs": state.bomb_count,
        "history": [{"seat": s, "cards": cards_to_str(m.cards)}
                    for s, m in state.history],
    }
    if state.phase == Phase.TERMINAL:
        st = settle(state)
        msg["settlement"] = {"winner_side": st.winner_side,
                             "points": list(st.points)}
    return msg


def _move_payloads(moves) -> list:
    return [cards_to_str(m.cards) for m in moves]


def make_policy(kind, ckpt_dir=None, step=None, seed=0, deck=FULL_DECK):
    if kind == "random":
        return RandomPolicy(seed=seed)
    if kind == "rule":
        return RulePolicy()
    if kind == "checkpoint":
        return QPolicy.load(ckpt_dir, step, deck=deck)
    raise ValueError(f"unknown opponent kind {kind!r}")


class Session:
    """One connected client: at most one game in progress."""

    def __init__(self, server, transport):
        self.server = server
        self.transport = transport
        self.state = None
        self.seat = 0
        self.policy = None

    # -- helpers -----------------------------------------------------------

    async def send(self, message):
        await self.transport.send(message)

    async def error(self, code, text):
        await self.send({"type": "error", "code": code, "message": text})

    async def broadcast_state(self):
        await self.send(visible_state(self.state, self.seat))

    async def prompt(self):
        s = self.state
        if s.phase == Phase.BIDDING:
            await self.send({"type": "your_turn", "phase": "bidding",
                             "legal_bids": legal_bids(s),
                             "timeout": self.server.turn_timeout})
        else:
            await self.send({"type": "your_turn", "phase": "play",
                             "legal_moves": _move_payloads(legal_moves(s)),
                             "timeout": self.server.turn_timeout})

    async def run_agents(self):
        """Advance the game until it is the human's turn or it ends."""
        s = self.state
        while s.phase != Phase.TERMINAL and s.current != self.seat:
            if s.phase == Phase.BIDDING:
                value = scripted_bid(s)
                s = apply_bid(s, value)
                await self.send({"type": "bid_made",
                                 "seat": s.bids[-1][0],
                                 "value": s.bids[-1][1]})
                if s.redeal:
                    break
            else:
                move = self.policy.move(s)
                seat = s.current
                s = apply_move(s, move)
                await self.send({"type": "move_made", "seat": seat,
                                 "cards": cards_to_str(move.cards)})
        self.state = s
        await self.broadcast_state()
        if s.phase == Phase.TERMINAL:
            self.server.persist_replay(game_record(s))
            await self.send({"type": "game_over",
                             **visible_state(s, self.seat)["settlement"]})
        elif s.current == self.seat:
            await self.prompt()

    # -- message handlers --------------------------------------------------

    async def on_hello(self, msg):
        await self.send({"type": "hello", "protocol": PROTOCOL_VERSION,
                         "name": str(msg.get("name", ""))})

    async def on_ping(self, msg):
        """Health probe; answers without touching any game state."""
        await self.send({"type": "pong", "status": "ready",
                         "in_game": self.state is not None})

    async def on_new_game(self, msg):
        deck = REDUCED_DECK if msg.get("deck") == "reduced" else FULL_DECK
        seat = int(msg.get("seat", 0))
        if seat not in (0, 1, 2):
            return await self.error("bad_seat", "seat must be 0, 1, or 2")
        seed = int(msg.get("seed", int.from_bytes(os.urandom(6), "big")))
        self.seat = seat
        self.policy = self.server.make_opponent(deck)
        self.policy.begin_game(seed)
        state = new_game(seed, int(msg.get("first_bidder", 0)), deck)
        if deck.hidden_size == 0 or not msg.get("auction", True):
            state = start_play(state, int(msg.get("landlord", seat)))
        self.state = state
        await self.send({"type": "game_started", "seed": seed,
                         "seat": seat, "deck": "reduced"
                         if deck is REDUCED_DECK else "full"})
        await self.run_agents()

    async def on_bid(self, msg):
        s = self.state
        if s is None or s.phase != Phase.BIDDING or s.current != self.seat:
            return await self.error("wrong_phase", "no bid expected now")
        try:
            value = int(msg.get("value", -1))
            s = apply_bid(s, value)
        except (IllegalBid, ValueError):
            await self.error("illegal_bid", "that bid is not available")
            return await self.prompt()
        self.state = s
        await self.send({"type": "bid_made", "seat": self.seat,
                         "value": value})
        if s.redeal:
            await self.send({"type": "redeal"})
            return
        await self.run_agents()

    async def on_move(self, msg):
        s = self.state
        if (s is None or s.phase != Phase.PLAY
                or s.current != self.seat):
            return await self.error("wrong_phase", "no move expected now")
        text = str(msg.get("cards", ""))
        try:
            if text == "":
                move = PASS_MOVE
            else:
                move = classify_move(cards_from_str(text), s.deck)
            s = apply_move(s, move)
        except (InvalidCombo, IllegalMove, KeyError, ValueError):
            await self.error("illegal_move", f"cannot play {text!r} here")
            return await self.prompt()
        self.state = s
        await self.send({"type": "move_made", "seat": self.seat,
                         "cards": text})
        await self.run_agents()

    async def on_timeout(self):
        """Auto-pass the human's turn when the clock runs out."""
        s = self.state
        if s is None or s.phase == Phase.TERMINAL or s.current != self.seat:
            return
        await self.send({"type": "timeout"})
        if s.phase == Phase.BIDDING:
            await self.on_bid({"value": 0})
        else:
            moves = legal_moves(s)
            fallback = "" if PASS_MOVE in moves \
                else cards_to_str(moves[0].cards)
            await self.on_move({"cards": fallback})

    HANDLERS = {"hello": on_hello, "ping": on_ping, "new_game": on_new_game,
                "bid": on_bid, "move": on_move}

    async def run(self):
        while True:
            try:
                msg = await asyncio.wait_for(
                    self.transport.recv(),
                    None if self.server.turn_timeout is None
                    else self.server.turn_timeout)
            except asyncio.TimeoutError:
                await self.on_timeout()
                continue
            if not isinstance(msg, dict) or "type" not in msg:
                await self.error("bad_message", "expected a typed object")
                continue
            handler = self.HANDLERS.get(msg["type"])
            if handler is None:
                await self.error("unknown_type",
                                 f"unknown message type {msg['type']!r}")
                continue
            try:
                await handler(self, msg)
            except ConnectionClosed:
                raise
            except Exception as exc:  # crash isolation per connection
                await self.error("internal", type(exc).__name__)


class Server:
    def __init__(self, host="127.0.0.1", port=0, opponent="rule",
                 ckpt_dir=None, ckpt_step=None, replay_path=None,
                 turn_timeout=60.0, seed=0):
        self.host = host
        self.port = port
        self.opponent = opponent
        self.ckpt_dir = ckpt_dir
        self.ckpt_step = ckpt_step
        self.replay_path = replay_path
        self.turn_timeout = turn_timeout
        self.seed = seed
        self._server = None
        self._next_seed = seed

    def make_opponent(self, deck) -> Policy:
        self._next_seed += 1
        return make_policy(self.opponent, self.ckpt_dir, self.ckpt_step,
                           seed=self._next_seed, deck=deck)

    def persist_replay(self, record):
        if not self.replay_path:
            return
        with open(self.replay_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    async def _handle(self, reader, writer):
        try:
            transport = await open_transport(reader, writer)
        except (ConnectionClosed, ConnectionError):
            writer.close()
            return
        session = Session(self, transport)
        try:
            await session.run()
        except (ConnectionClosed, ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            try:
                await transport.close()
            except (ConnectionError, RuntimeError):
                pass

    async def start(self):
        self._server = await asyncio.start_server(
            self._handle, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        return self

    async def serve_forever(self):
        async with self._server:
            await self._server.serve_forever()

    async def stop(self):
        self._server.close()
        await self._server.wait_closed()
