// GameClient: owns the transport and the reduced state, notifies the UI
// on every change. All outgoing messages are validated against the
// current snapshot so an out-of-sync UI cannot send illegal input.

import type { Transport } from './transport';
import type { ClientState } from './state';
import { initialState, reduce, availableBids, playableMoves } from './state';

export class GameClient {
  state: ClientState = initialState();
  private listeners: ((state: ClientState) => void)[] = [];

  constructor(private transport: Transport) {
    transport.onMessage((msg) => {
      this.state = reduce(this.state, msg);
      this.notify();
    });
    transport.onClose(() => {
      this.state = { ...this.state, connected: false, turn: null };
      this.notify();
    });
  }

  subscribe(listener: (state: ClientState) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  hello(name: string): void {
    this.transport.send({ type: 'hello', name });
  }

  newGame(opts: { seed?: number; seat?: number; deck?: 'full' | 'reduced'; auction?: boolean }): void {
    this.transport.send({
      type: 'new_game',
      seed: opts.seed,
      seat: opts.seat ?? 0,
      deck: opts.deck ?? 'full',
      auction: opts.auction,
    });
  }

  bid(value: number): boolean {
    if (!availableBids(this.state).includes(value)) return false;
    this.transport.send({ type: 'bid', value });
    return true;
  }

  // `cards` is a card string; '' means Pass. Refused when not listed in
  // the server's legal moves for this turn.
  play(cards: string): boolean {
    if (!playableMoves(this.state).includes(cards)) return false;
    this.transport.send({ type: 'move', cards });
    return true;
  }

  close(): void {
    this.transport.close();
  }
}
