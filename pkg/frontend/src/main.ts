// Browser entry point: connect, say hello, start a game, render on
// every state change.

import { GameClient } from './client';
import { WebSocketTransport } from './transport';
import { render } from './ui';

const params = new URLSearchParams(window.location.search);
const host = params.get('host') ?? window.location.hostname ?? '127.0.0.1';
const port = params.get('port') ?? '4780';
const deck = params.get('deck') === 'reduced' ? 'reduced' : 'full';

const transport = new WebSocketTransport(`ws://${host}:${port}/play`);
const client = new GameClient(transport);
const root = document.getElementById('app');
if (root === null) throw new Error('missing #app element');

// local tap-to-select state; reset whenever the hand changes
let selection = new Set<number>();
let lastHand = '';

client.subscribe((state) => {
  if (state.hand !== lastHand) {
    lastHand = state.hand;
    selection = new Set();
  }
  const rerender = () => render(root, state, client, picker);
  const picker = {
    selected: selection,
    onToggle: (i: number) => {
      if (selection.has(i)) selection.delete(i);
      else selection.add(i);
      rerender();
    },
    onSubmitted: () => {
      selection = new Set();
    },
  };
  rerender();
});
client.hello('browser');
client.newGame({ deck });

const again = document.getElementById('new-game');
if (again !== null) {
  again.onclick = () => client.newGame({ deck });
}
