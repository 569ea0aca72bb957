import { describe, expect, it } from 'vitest';
import { GameClient } from '../src/client';
import { FakeTransport } from '../src/transport';

function connectedClient(): { client: GameClient; fake: FakeTransport } {
  const fake = new FakeTransport();
  const client = new GameClient(fake);
  fake.deliver({ type: 'hello', protocol: 1, name: 'x' });
  return { client, fake };
}

describe('GameClient', () => {
  it('sends hello and new_game payloads', () => {
    const { client, fake } = connectedClient();
    client.hello('me');
    client.newGame({ seed: 5, deck: 'reduced', seat: 0 });
    expect(fake.sent[0]).toEqual({ type: 'hello', name: 'me' });
    expect(fake.sent[1]).toMatchObject({ type: 'new_game', seed: 5, deck: 'reduced', seat: 0 });
  });

  it('refuses moves the server did not offer', () => {
    const { client, fake } = connectedClient();
    fake.deliver({ type: 'your_turn', phase: 'play', legal_moves: ['', '33'], timeout: null });
    expect(client.play('44')).toBe(false);
    expect(fake.sent.length).toBe(0);
    expect(client.play('33')).toBe(true);
    expect(fake.sent[0]).toEqual({ type: 'move', cards: '33' });
  });

  it('refuses bids outside the legal set', () => {
    const { client, fake } = connectedClient();
    fake.deliver({ type: 'your_turn', phase: 'bidding', legal_bids: [0, 2, 3], timeout: null });
    expect(client.bid(1)).toBe(false);
    expect(client.bid(2)).toBe(true);
    expect(fake.sent[0]).toEqual({ type: 'bid', value: 2 });
  });

  it('refuses to play when it is not our turn', () => {
    const { client, fake } = connectedClient();
    expect(client.play('')).toBe(false);
    expect(fake.sent.length).toBe(0);
  });

  it('notifies subscribers and clears turn on close', () => {
    const { client, fake } = connectedClient();
    const seen: boolean[] = [];
    client.subscribe((s) => seen.push(s.connected));
    fake.deliver({ type: 'your_turn', phase: 'play', legal_moves: [''], timeout: null });
    expect(client.state.turn).not.toBeNull();
    client.close();
    expect(client.state.connected).toBe(false);
    expect(client.state.turn).toBeNull();
    expect(seen.length).toBe(2);
  });

  it('tracks a bid and a move in the log', () => {
    const { client, fake } = connectedClient();
    fake.deliver({ type: 'bid_made', seat: 1, value: 3 });
    fake.deliver({ type: 'move_made', seat: 1, cards: '55' });
    expect(client.state.bids).toEqual([[1, 3]]);
    expect(client.state.history).toEqual([{ seat: 1, cards: '55' }]);
  });
});
