import { describe, expect, it } from 'vitest';
import {
  cardsFromString,
  cardsToString,
  containedIn,
  parseServerMessage,
} from '../src/protocol';

describe('parseServerMessage', () => {
  it('accepts well-formed messages', () => {
    expect(parseServerMessage({ type: 'hello', protocol: 1, name: '' })).not.toBeNull();
    expect(
      parseServerMessage({
        type: 'state',
        phase: 'play',
        seat: 0,
        current: 1,
        hand: '334',
        counts: [3, 8, 8],
        landlord: 0,
        bids: [],
        multiplier: 1,
        bombs: 0,
        history: [],
      }),
    ).not.toBeNull();
    expect(
      parseServerMessage({ type: 'your_turn', phase: 'play', legal_moves: ['', '3'], timeout: null }),
    ).not.toBeNull();
  });

  it('rejects non-objects and unknown types', () => {
    expect(parseServerMessage(null)).toBeNull();
    expect(parseServerMessage(42)).toBeNull();
    expect(parseServerMessage('state')).toBeNull();
    expect(parseServerMessage({ type: 'launch_missiles' })).toBeNull();
    expect(parseServerMessage({ no_type: true })).toBeNull();
  });

  it('rejects malformed known types', () => {
    expect(parseServerMessage({ type: 'state', hand: 7 })).toBeNull();
    expect(parseServerMessage({ type: 'your_turn', phase: 'nope' })).toBeNull();
    expect(parseServerMessage({ type: 'your_turn', phase: 'play' })).toBeNull();
    expect(parseServerMessage({ type: 'game_over', winner_side: 'me' })).toBeNull();
    expect(parseServerMessage({ type: 'error' })).toBeNull();
    expect(parseServerMessage({ type: 'bid_made', value: 'two' })).toBeNull();
  });
});

describe('card strings', () => {
  it('round-trips counts', () => {
    const counts = cardsFromString('33345TTBR');
    expect(counts[0]).toBe(3);
    expect(cardsToString(counts)).toBe('33345TTBR');
  });

  it('rejects unknown ranks', () => {
    expect(() => cardsFromString('3X')).toThrow();
  });

  it('checks containment', () => {
    expect(containedIn('33', '3345')).toBe(true);
    expect(containedIn('333', '3345')).toBe(false);
    expect(containedIn('', '3345')).toBe(true);
  });
});
