// Transport abstraction: the browser uses a WebSocket; tests drive the
// client with a fake that records sends and replays scripted messages.

import type { ClientMessage } from './protocol';
import { parseServerMessage } from './protocol';
import type { ServerMessage } from './protocol';

export interface Transport {
  send(message: ClientMessage): void;
  onMessage(handler: (msg: ServerMessage) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

export class WebSocketTransport implements Transport {
  private ws: WebSocket;
  private messageHandler: ((msg: ServerMessage) => void) | null = null;
  private closeHandler: (() => void) | null = null;
  private pending: ClientMessage[] = [];
  private open = false;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => {
      this.open = true;
      for (const msg of this.pending) this.send(msg);
      this.pending = [];
    };
    this.ws.onmessage = (ev) => {
      let raw: unknown;
      try {
        raw = JSON.parse(String(ev.data));
      } catch {
        return; // ignore frames that are not JSON
      }
      const msg = parseServerMessage(raw);
      if (msg !== null && this.messageHandler) this.messageHandler(msg);
    };
    this.ws.onclose = () => {
      if (this.closeHandler) this.closeHandler();
    };
  }

  send(message: ClientMessage): void {
    if (!this.open) {
      this.pending.push(message);
      return;
    }
    this.ws.send(JSON.stringify(message));
  }

  onMessage(handler: (msg: ServerMessage) => void): void {
    this.messageHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.ws.close();
  }
}

export class FakeTransport implements Transport {
  sent: ClientMessage[] = [];
  closed = false;
  private messageHandler: ((msg: ServerMessage) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  send(message: ClientMessage): void {
    this.sent.push(message);
  }

  onMessage(handler: (msg: ServerMessage) => void): void {
    this.messageHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.closed = true;
    if (this.closeHandler) this.closeHandler();
  }

  // Test hook: push a raw value through the same validation path the
  // WebSocket transport uses.
  deliver(raw: unknown): void {
    const msg = parseServerMessage(raw);
    if (msg !== null && this.messageHandler) this.messageHandler(msg);
  }
}
