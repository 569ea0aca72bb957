// Wire protocol shared with the Python service: JSON messages over a
// WebSocket (the server also speaks length-prefixed TCP, which the
// browser never uses). Every server message carries a "type" field.

export type Settlement = {
  winner_side: 'landlord' | 'peasants';
  points: [number, number, number];
};

export type HistoryEntry = { seat: number; cards: string };

export type ServerHello = { type: 'hello'; protocol: number; name: string };

export type GameStarted = {
  type: 'game_started';
  seed: number;
  seat: number;
  deck: 'full' | 'reduced';
};

export type StateMessage = {
  type: 'state';
  phase: 'bidding' | 'play' | 'terminal';
  seat: number;
  current: number;
  hand: string;
  counts: [number, number, number];
  landlord: number | null;
  bids: [number, number][];
  multiplier: number;
  bombs: number;
  history: HistoryEntry[];
  settlement?: Settlement;
};

export type YourTurn =
  | { type: 'your_turn'; phase: 'bidding'; legal_bids: number[]; timeout: number | null }
  | { type: 'your_turn'; phase: 'play'; legal_moves: string[]; timeout: number | null };

export type BidMade = { type: 'bid_made'; seat: number; value: number };
export type MoveMade = { type: 'move_made'; seat: number; cards: string };
export type GameOver = { type: 'game_over' } & Settlement;
export type ErrorMessage = { type: 'error'; code: string; message: string };
export type Redeal = { type: 'redeal' };
export type Timeout = { type: 'timeout' };

export type ServerMessage =
  | ServerHello
  | GameStarted
  | StateMessage
  | YourTurn
  | BidMade
  | MoveMade
  | GameOver
  | ErrorMessage
  | Redeal
  | Timeout;

export type ClientMessage =
  | { type: 'hello'; name: string }
  | {
      type: 'new_game';
      seed?: number;
      seat: number;
      deck: 'full' | 'reduced';
      auction?: boolean;
      first_bidder?: number;
    }
  | { type: 'bid'; value: number }
  | { type: 'move'; cards: string };

const SERVER_TYPES = new Set([
  'hello',
  'game_started',
  'state',
  'your_turn',
  'bid_made',
  'move_made',
  'game_over',
  'error',
  'redeal',
  'timeout',
]);

// Narrow an arbitrary decoded JSON value to a ServerMessage, or null if
// it is not one. Unknown types are rejected here so the reducer only
// ever sees messages it understands.
export function parseServerMessage(raw: unknown): ServerMessage | null {
  if (typeof raw !== 'object' || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  if (typeof msg.type !== 'string' || !SERVER_TYPES.has(msg.type)) return null;
  switch (msg.type) {
    case 'state':
      if (typeof msg.hand !== 'string' || !Array.isArray(msg.counts)) return null;
      if (!Array.isArray(msg.history)) return null;
      break;
    case 'your_turn':
      if (msg.phase !== 'bidding' && msg.phase !== 'play') return null;
      if (msg.phase === 'bidding' && !Array.isArray(msg.legal_bids)) return null;
      if (msg.phase === 'play' && !Array.isArray(msg.legal_moves)) return null;
      break;
    case 'game_over':
      if (msg.winner_side !== 'landlord' && msg.winner_side !== 'peasants') return null;
      break;
    case 'error':
      if (typeof msg.code !== 'string') return null;
      break;
    case 'bid_made':
      if (typeof msg.value !== 'number') return null;
      break;
    case 'move_made':
      if (typeof msg.cards !== 'string') return null;
      break;
  }
  return msg as unknown as ServerMessage;
}

export const RANK_CHARS = '3456789TJQKA2BR';

// Counts-per-rank representation of a card string such as "334TT".
export function cardsFromString(text: string): number[] {
  const counts = new Array(15).fill(0);
  for (const ch of text) {
    const r = RANK_CHARS.indexOf(ch);
    if (r < 0) throw new Error(`unknown rank character ${ch}`);
    counts[r] += 1;
  }
  return counts;
}

export function cardsToString(counts: number[]): string {
  let out = '';
  for (let r = 0; r < counts.length; r++) {
    out += (RANK_CHARS[r] ?? '').repeat(counts[r] ?? 0);
  }
  return out;
}

// True when `cards` can be taken out of `hand` (both as card strings).
export function containedIn(cards: string, hand: string): boolean {
  const need = cardsFromString(cards);
  const have = cardsFromString(hand);
  return need.every((n, r) => n <= (have[r] ?? 0));
}
