// Client-side game state: a pure reducer over server messages. The UI
// renders from this snapshot only, so every rule about what the player
// may click lives here, mirroring the server's your_turn payloads.

import type { ServerMessage, Settlement, HistoryEntry } from './protocol';

export type TurnInfo =
  | { phase: 'bidding'; legalBids: number[] }
  | { phase: 'play'; legalMoves: string[] };

export type ClientState = {
  connected: boolean;
  protocol: number | null;
  seat: number;
  phase: 'idle' | 'bidding' | 'play' | 'terminal';
  deck: 'full' | 'reduced';
  hand: string;
  counts: [number, number, number];
  landlord: number | null;
  current: number | null;
  multiplier: number;
  bombs: number;
  bids: [number, number][];
  history: HistoryEntry[];
  turn: TurnInfo | null;
  settlement: Settlement | null;
  lastError: { code: string; message: string } | null;
  timedOut: boolean;
  redeal: boolean;
};

export function initialState(): ClientState {
  return {
    connected: false,
    protocol: null,
    seat: 0,
    phase: 'idle',
    deck: 'full',
    hand: '',
    counts: [0, 0, 0],
    landlord: null,
    current: null,
    multiplier: 1,
    bombs: 0,
    bids: [],
    history: [],
    turn: null,
    settlement: null,
    lastError: null,
    timedOut: false,
    redeal: false,
  };
}

export function reduce(state: ClientState, msg: ServerMessage): ClientState {
  switch (msg.type) {
    case 'hello':
      return { ...state, connected: true, protocol: msg.protocol };
    case 'game_started':
      return {
        ...initialState(),
        connected: state.connected,
        protocol: state.protocol,
        seat: msg.seat,
        deck: msg.deck,
        phase: 'bidding',
      };
    case 'state':
      return {
        ...state,
        phase: msg.phase,
        seat: msg.seat,
        current: msg.current,
        hand: msg.hand,
        counts: msg.counts,
        landlord: msg.landlord,
        bids: msg.bids,
        multiplier: msg.multiplier,
        bombs: msg.bombs,
        history: msg.history,
        settlement: msg.settlement ?? state.settlement,
        turn: null,
      };
    case 'your_turn':
      return {
        ...state,
        timedOut: false,
        turn:
          msg.phase === 'bidding'
            ? { phase: 'bidding', legalBids: msg.legal_bids }
            : { phase: 'play', legalMoves: msg.legal_moves },
      };
    case 'bid_made':
      return { ...state, bids: [...state.bids, [msg.seat, msg.value]] };
    case 'move_made':
      // authoritative history arrives with the next state message; this
      // keeps the log responsive in between
      return {
        ...state,
        history: [...state.history, { seat: msg.seat, cards: msg.cards }],
      };
    case 'game_over':
      return {
        ...state,
        phase: 'terminal',
        turn: null,
        settlement: { winner_side: msg.winner_side, points: msg.points },
      };
    case 'error':
      return { ...state, lastError: { code: msg.code, message: msg.message } };
    case 'redeal':
      return { ...state, redeal: true, turn: null };
    case 'timeout':
      return { ...state, timedOut: true };
  }
}

// The card strings the player may legally submit right now; empty
// string stands for Pass. This is exactly what the move buttons render.
export function playableMoves(state: ClientState): string[] {
  if (state.turn === null || state.turn.phase !== 'play') return [];
  return state.turn.legalMoves;
}

export function availableBids(state: ClientState): number[] {
  if (state.turn === null || state.turn.phase !== 'bidding') return [];
  return state.turn.legalBids;
}

export function isMyTurn(state: ClientState): boolean {
  return state.turn !== null;
}

// Order-independent multiset lookup of a tapped card selection among
// the offered moves. Returns the server's spelling of the matching move
// so it can be submitted verbatim, or null when the selection forms no
// offered move. The empty selection never matches; Pass is explicit.
export function matchSelection(selected: string, legal: string[]): string | null {
  if (selected === '') return null;
  const key = sortCards(selected);
  for (const cards of legal) {
    if (cards !== '' && sortCards(cards) === key) return cards;
  }
  return null;
}

function sortCards(cards: string): string {
  return [...cards].sort().join('');
}
