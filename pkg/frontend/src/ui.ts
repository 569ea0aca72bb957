// Plain-DOM rendering of the client state: the hand, move buttons for
// every legal action, the bid panel, a play log, and the result banner.

import type { ClientState } from './state';
import { availableBids, matchSelection, playableMoves } from './state';
import type { GameClient } from './client';

const SEAT_LABELS = ['you', 'left', 'right'];

function el(tag: string, className: string, text = ''): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function renderHand(hand: string): HTMLElement {
  const row = el('div', 'hand');
  for (const ch of hand) {
    row.appendChild(el('span', 'card', ch));
  }
  return row;
}

// Tap-to-select picker: each card toggles in and out of the selection
// (tracked by hand index so duplicate ranks stay distinguishable).
export function renderSelectableHand(
  hand: string,
  selected: Set<number>,
  onToggle: (index: number) => void,
): HTMLElement {
  const row = el('div', 'hand');
  for (let i = 0; i < hand.length; i++) {
    const card = el('span', selected.has(i) ? 'card selected' : 'card', hand[i]);
    card.dataset.index = String(i);
    card.onclick = () => onToggle(i);
    row.appendChild(card);
  }
  return row;
}

// Submit button for the current selection. It stays disabled, with a
// hint, while the selected cards form no move the server offered.
export function renderSubmitControls(
  state: ClientState,
  hand: string,
  selected: Set<number>,
  client: GameClient,
  onSubmitted: () => void,
): HTMLElement {
  const panel = el('div', 'submit-panel');
  const cards = [...selected].sort((a, b) => a - b).map((i) => hand[i]).join('');
  const match = matchSelection(cards, playableMoves(state));
  const btn = el('button', 'submit-btn', 'Play selected') as HTMLButtonElement;
  btn.disabled = match === null;
  btn.onclick = () => {
    if (match !== null && client.play(match)) onSubmitted();
  };
  panel.appendChild(btn);
  if (match === null && selected.size > 0) {
    panel.appendChild(el('div', 'hint', 'Selected cards do not form a playable move'));
  }
  return panel;
}

export function renderMoveButtons(state: ClientState, client: GameClient): HTMLElement {
  const panel = el('div', 'moves');
  for (const cards of playableMoves(state)) {
    const btn = el('button', 'move-btn', cards === '' ? 'Pass' : cards) as HTMLButtonElement;
    btn.dataset.cards = cards;
    btn.onclick = () => client.play(cards);
    panel.appendChild(btn);
  }
  return panel;
}

export function renderBidButtons(state: ClientState, client: GameClient): HTMLElement {
  const panel = el('div', 'bids');
  for (const value of availableBids(state)) {
    const btn = el('button', 'bid-btn', value === 0 ? 'Pass' : `Bid ${value}`) as HTMLButtonElement;
    btn.dataset.value = String(value);
    btn.onclick = () => client.bid(value);
    panel.appendChild(btn);
  }
  return panel;
}

export function renderStatus(state: ClientState): HTMLElement {
  const box = el('div', 'status');
  if (state.settlement) {
    const side = state.settlement.winner_side;
    const mine =
      (state.seat === state.landlord) === (side === 'landlord') ? 'You win!' : 'You lose.';
    box.appendChild(el('div', 'result', `${mine} (${side}, points ${state.settlement.points.join('/')})`));
  } else if (state.turn) {
    box.appendChild(el('div', 'turn', state.turn.phase === 'bidding' ? 'Your bid' : 'Your move'));
  } else if (state.phase !== 'idle') {
    box.appendChild(el('div', 'waiting', 'Waiting…'));
  }
  if (state.lastError) {
    box.appendChild(el('div', 'error', state.lastError.message));
  }
  if (state.timedOut) {
    box.appendChild(el('div', 'timeout', 'Turn timed out, auto-played'));
  }
  return box;
}

export function renderLog(state: ClientState): HTMLElement {
  const log = el('ul', 'log');
  for (const entry of state.history) {
    const who = SEAT_LABELS[(entry.seat - state.seat + 3) % 3] ?? String(entry.seat);
    log.appendChild(el('li', 'log-entry', `${who}: ${entry.cards === '' ? 'pass' : entry.cards}`));
  }
  return log;
}

export function renderCounts(state: ClientState): HTMLElement {
  const row = el('div', 'counts');
  for (let s = 0; s < 3; s++) {
    const seat = (state.seat + s) % 3;
    const tag = seat === state.landlord ? ' (landlord)' : '';
    row.appendChild(el('span', 'count', `${SEAT_LABELS[s]}${tag}: ${state.counts[seat] ?? 0}`));
  }
  return row;
}

export type Picker = {
  selected: Set<number>;
  onToggle: (index: number) => void;
  onSubmitted: () => void;
};

export function render(
  root: HTMLElement,
  state: ClientState,
  client: GameClient,
  picker?: Picker,
): void {
  const inPlay = state.turn?.phase === 'play';
  const hand =
    picker !== undefined && inPlay
      ? renderSelectableHand(state.hand, picker.selected, picker.onToggle)
      : renderHand(state.hand);
  const children = [renderStatus(state), renderCounts(state), hand];
  if (state.turn?.phase === 'bidding') {
    children.push(renderBidButtons(state, client));
  } else {
    if (picker !== undefined && inPlay) {
      children.push(renderSubmitControls(state, state.hand, picker.selected, client, picker.onSubmitted));
    }
    children.push(renderMoveButtons(state, client));
  }
  children.push(renderLog(state));
  root.replaceChildren(...children);
}
