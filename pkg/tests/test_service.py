import asyncio
import base64
import hashlib
import json
import os
import struct

import pytest

from ddzlab.cards import cards_from_str
from ddzlab.game import read_replays, replay_record
from ddzlab.cards import REDUCED_DECK
from ddzlab.service import PROTOCOL_VERSION, Server, Session, WS_GUID

FIXTURE = os.path.join(os.path.dirname(__file__), "fixtures",
                       "golden_trace.json")


class TcpClient:
    """Length-prefixed JSON client used by the tests."""

    @classmethod
    async def connect(cls, port):
        self = cls()
        self.reader, self.writer = await asyncio.open_connection(
            "127.0.0.1", port)
        return self

    async def send(self, message):
        payload = json.dumps(message, separators=(",", ":")).encode()
        self.writer.write(struct.pack(">I", len(payload)) + payload)
        await self.writer.drain()

    async def recv(self, timeout=5.0):
        header = await asyncio.wait_for(self.reader.readexactly(4), timeout)
        (n,) = struct.unpack(">I", header)
        payload = await asyncio.wait_for(self.reader.readexactly(n), timeout)
        return json.loads(payload.decode())

    async def recv_until(self, wanted, timeout=5.0, collect=None):
        while True:
            msg = await self.recv(timeout)
            if collect is not None:
                collect.append(msg)
            if msg["type"] in wanted:
                return msg

    async def close(self):
        self.writer.close()


def run(coro):
    return asyncio.run(asyncio.wait_for(coro, 30))


async def with_server(fn, **kw):
    kw.setdefault("turn_timeout", None)
    server = Server(port=0, **kw)
    await server.start()
    try:
        return await fn(server)
    finally:
        await server.stop()


async def drive_game(client, seed=5, deck="reduced", collect=None):
    """Play a full reduced game choosing the first legal move each turn."""
    await client.send({"type": "new_game", "seed": seed, "deck": deck,
                       "seat": 0})
    while True:
        msg = await client.recv_until({"your_turn", "game_over"},
                                      collect=collect)
        if msg["type"] == "game_over":
            return msg
        await client.send({"type": "move",
                           "cards": msg["legal_moves"][0]})


class TestHandshake:
    def test_hello(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            await client.send({"type": "hello", "name": "tester"})
            msg = await client.recv()
            assert msg == {"type": "hello", "protocol": PROTOCOL_VERSION,
                           "name": "tester"}
            await client.close()
        run(with_server(body))

    def test_unknown_type_is_isolated(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            await client.send({"type": "bogus"})
            assert (await client.recv())["code"] == "unknown_type"
            await client.send({"not_a_type": 1})
            assert (await client.recv())["code"] == "bad_message"
            await client.send({"type": "hello"})
            assert (await client.recv())["type"] == "hello"
            await client.close()
        run(with_server(body))

    def test_ping_health_probe(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            await client.send({"type": "ping"})
            msg = await client.recv()
            assert msg["type"] == "pong"
            assert msg["status"] == "ready" and msg["in_game"] is False
            await client.send({"type": "new_game", "seed": 1,
                               "deck": "reduced", "seat": 0})
            await client.recv_until({"your_turn", "game_over"})
            await client.send({"type": "ping"})
            msg = await client.recv_until({"pong"})
            assert msg["in_game"] is True
            await client.close()
        run(with_server(body))

    def test_handler_crash_is_isolated(self, monkeypatch):
        async def boom(session, msg):
            raise RuntimeError("injected fault")

        monkeypatch.setitem(Session.HANDLERS, "hello", boom)

        async def body(server):
            client = await TcpClient.connect(server.port)
            await client.send({"type": "hello"})
            msg = await client.recv()
            assert msg["type"] == "error" and msg["code"] == "internal"
            # the connection survives and other handlers still work
            await client.send({"type": "ping"})
            assert (await client.recv())["type"] == "pong"
            await client.close()
        run(with_server(body))


class TestGamePlay:
    def test_full_reduced_game(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            seen = []
            over = await drive_game(client, seed=5, collect=seen)
            assert over["winner_side"] in ("landlord", "peasants")
            assert len(over["points"]) == 3
            await client.close()
            return seen
        run(with_server(body, opponent="rule"))

    def test_state_hides_opponent_hands(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            seen = []
            await drive_game(client, seed=7, collect=seen)
            states = [m for m in seen if m["type"] == "state"]
            assert states
            for st in states:
                assert st["seat"] == 0
                assert set(st) <= {"type", "phase", "seat", "current",
                                   "hand", "counts", "landlord", "bids",
                                   "multiplier", "bombs", "history",
                                   "settlement"}
                # the own hand must stay consistent with its count
                assert len(cards_from_str(st["hand"]) and st["hand"]) >= 0
                assert sum(cards_from_str(st["hand"])) == st["counts"][0]
            await client.close()
        run(with_server(body, opponent="rule"))

    def test_illegal_move_reprompts(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            await client.send({"type": "new_game", "seed": 5,
                               "deck": "reduced", "seat": 0})
            turn = await client.recv_until({"your_turn"})
            await client.send({"type": "move", "cards": "ZZZ"})
            err = await client.recv()
            assert err["type"] == "error" and err["code"] == "illegal_move"
            again = await client.recv()
            assert again["type"] == "your_turn"
            assert again["legal_moves"] == turn["legal_moves"]
            await client.close()
        run(with_server(body, opponent="rule"))

    def test_move_out_of_turn_rejected(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            await client.send({"type": "move", "cards": "3"})
            assert (await client.recv())["code"] == "wrong_phase"
            await client.close()
        run(with_server(body))

    def test_full_deck_auction_flow(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            await client.send({"type": "new_game", "seed": 2, "deck": "full",
                               "seat": 0, "first_bidder": 0,
                               "auction": True})
            turn = await client.recv_until({"your_turn"})
            assert turn["phase"] == "bidding"
            assert turn["legal_bids"] == [0, 1, 2, 3]
            await client.send({"type": "bid", "value": 3})
            msg = await client.recv_until({"your_turn"})
            assert msg["phase"] == "play"
            await client.close()
        run(with_server(body, opponent="rule"))

    def test_timeout_autoplays(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            await client.send({"type": "new_game", "seed": 5,
                               "deck": "reduced", "seat": 0})
            await client.recv_until({"your_turn"})
            # say nothing: the server must time out and finish the game
            msg = await client.recv_until({"game_over"}, timeout=20.0)
            assert msg["type"] == "game_over"
            await client.close()
        run(with_server(body, opponent="rule", turn_timeout=0.05))


class TestReplayPersistence:
    def test_replay_written_and_verifiable(self, tmp_path):
        path = tmp_path / "replays.jsonl"

        async def body(server):
            client = await TcpClient.connect(server.port)
            await drive_game(client, seed=9)
            await drive_game(client, seed=10)
            await client.close()
        run(with_server(body, opponent="rule", replay_path=str(path)))
        records = read_replays(path)
        assert len(records) == 2
        for rec in records:
            replay_record(rec, REDUCED_DECK)


class TestWebSocket:
    @staticmethod
    async def ws_connect(port):
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        key = base64.b64encode(os.urandom(16)).decode()
        writer.write((
            f"GET /play HTTP/1.1\r\nHost: localhost:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n\r\n").encode())
        await writer.drain()
        head = await reader.readuntil(b"\r\n\r\n")
        assert b"101" in head.split(b"\r\n")[0]
        expect = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()).decode()
        assert expect.encode() in head
        return reader, writer

    @staticmethod
    async def ws_send(writer, message):
        payload = json.dumps(message).encode()
        mask = os.urandom(4)
        masked = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
        header = bytearray([0x81])
        if len(payload) < 126:
            header.append(0x80 | len(payload))
        else:
            header.append(0x80 | 126)
            header += struct.pack(">H", len(payload))
        writer.write(bytes(header) + mask + masked)
        await writer.drain()

    @staticmethod
    async def ws_recv(reader):
        b0, b1 = await reader.readexactly(2)
        length = b1 & 0x7F
        if length == 126:
            (length,) = struct.unpack(">H", await reader.readexactly(2))
        elif length == 127:
            (length,) = struct.unpack(">Q", await reader.readexactly(8))
        payload = await reader.readexactly(length)
        if (b0 & 0x0F) == 0x8:
            raise ConnectionError("closed")
        return json.loads(payload.decode())

    def test_hello_over_websocket(self):
        async def body(server):
            reader, writer = await self.ws_connect(server.port)
            await self.ws_send(writer, {"type": "hello", "name": "ws"})
            msg = await asyncio.wait_for(self.ws_recv(reader), 5)
            assert msg["type"] == "hello" and msg["name"] == "ws"
            writer.close()
        run(with_server(body))

    def test_game_over_websocket(self):
        async def body(server):
            reader, writer = await self.ws_connect(server.port)
            await self.ws_send(writer, {"type": "new_game", "seed": 4,
                                        "deck": "reduced", "seat": 0})
            while True:
                msg = await asyncio.wait_for(self.ws_recv(reader), 5)
                if msg["type"] == "game_over":
                    break
                if msg["type"] == "your_turn":
                    await self.ws_send(writer, {
                        "type": "move", "cards": msg["legal_moves"][0]})
            writer.close()
        run(with_server(body, opponent="rule"))


class TestGoldenTrace:
    def test_matches_fixture(self):
        async def body(server):
            client = await TcpClient.connect(server.port)
            seen = []
            await client.send({"type": "hello", "name": "golden"})
            seen.append(await client.recv())
            await drive_game(client, seed=5, collect=seen)
            await client.close()
            return seen
        seen = run(with_server(body, opponent="rule"))
        with open(FIXTURE, encoding="utf-8") as fh:
            golden = json.load(fh)
        assert seen == golden["messages"]
