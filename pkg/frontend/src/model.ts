// Pure client-side view model: selection state, gesture handling and the
// derived display sets. Legality is never computed here; every decision
// reads the server-provided legal action list, and every accepted gesture
// resolves to exactly one of its entries.

import type {
  CardView,
  LegalAction,
  LegalTargets,
  Outcome,
  SeatView,
} from "./types.js";

export interface Selection {
  card: number | null;
  hint: number | null;
  confirmingEnd: boolean;
}

export const emptySelection: Selection = { card: null, hint: null, confirmingEnd: false };

export type Gesture =
  | { type: "card"; id: number }
  | { type: "cell"; row: number; col: number }
  | { type: "hintStack" }
  | { type: "revealedHint"; id: number }
  | { type: "endGame" }
  | { type: "confirmEnd" }
  | { type: "cancel" };

export interface GestureResult {
  selection: Selection;
  submit?: LegalAction;
}

function cardAt(view: SeatView, row: number, col: number): CardView | undefined {
  return view.board.cards.find((c) => c.row === row && c.col === col);
}

/** Legal landing cells for one card at the move substep. */
export function moveTargets(legal: LegalTargets, card: number): Array<[number, number]> {
  return legal.actions
    .filter((a) => a.kind === "move_card" && a.card === card && a.cell)
    .map((a) => a.cell as [number, number]);
}

/** Card ids a selected revealed hint may be placed on. Handles both hint
 * target indexings: cell entries are resolved through card positions. */
export function placeTargets(view: SeatView, legal: LegalTargets, hint: number): number[] {
  const out = new Set<number>();
  for (const action of legal.actions) {
    if (action.kind !== "place_hint" || action.hint !== hint) continue;
    if (action.card !== undefined) {
      out.add(action.card);
    } else if (action.cell) {
      const target = cardAt(view, action.cell[0], action.cell[1]);
      if (target) out.add(target.id);
    }
  }
  return [...out].sort((a, b) => a - b);
}

export function peekableCards(legal: LegalTargets): number[] {
  return legal.actions
    .filter((a) => a.kind === "observe_card" && a.card !== undefined)
    .map((a) => a.card as number)
    .sort((a, b) => a - b);
}

export function endGameAvailable(legal: LegalTargets): boolean {
  return legal.actions.some((a) => a.kind === "end_game");
}

function findPlacement(
  view: SeatView,
  legal: LegalTargets,
  hint: number,
  card: CardView,
): LegalAction | undefined {
  return legal.actions.find(
    (a) =>
      a.kind === "place_hint" &&
      a.hint === hint &&
      (a.card === card.id || (a.cell !== undefined && a.cell[0] === card.row && a.cell[1] === card.col)),
  );
}

/** Resolve one user gesture against the current view and legal set. */
export function handleGesture(
  view: SeatView,
  legal: LegalTargets,
  selection: Selection,
  gesture: Gesture,
): GestureResult {
  const substep = view.substep_name;

  switch (gesture.type) {
    case "card": {
      const card = view.board.cards.find((c) => c.id === gesture.id);
      if (!card) return { selection };
      if (substep === "peek1" || substep === "peek2") {
        const peek = legal.actions.find(
          (a) => a.kind === "observe_card" && a.card === gesture.id,
        );
        return peek ? { selection: emptySelection, submit: peek } : { selection };
      }
      if (substep === "move") {
        const next = selection.card === gesture.id ? null : gesture.id;
        return { selection: { ...selection, card: next, confirmingEnd: false } };
      }
      if (substep === "hint" && selection.hint !== null) {
        const placement = findPlacement(view, legal, selection.hint, card);
        return placement ? { selection: emptySelection, submit: placement } : { selection };
      }
      return { selection };
    }

    case "cell": {
      if (substep !== "move" || selection.card === null) return { selection };
      const move = legal.actions.find(
        (a) =>
          a.kind === "move_card" &&
          a.card === selection.card &&
          a.cell !== undefined &&
          a.cell[0] === gesture.row &&
          a.cell[1] === gesture.col,
      );
      return move ? { selection: emptySelection, submit: move } : { selection };
    }

    case "hintStack": {
      const reveals = legal.actions
        .filter((a) => a.kind === "reveal_hint")
        .sort((a, b) => (a.hint ?? 0) - (b.hint ?? 0));
      return reveals.length
        ? { selection: emptySelection, submit: reveals[0] }
        : { selection };
    }

    case "revealedHint": {
      if (substep !== "hint") return { selection };
      const next = selection.hint === gesture.id ? null : gesture.id;
      return { selection: { ...selection, hint: next, confirmingEnd: false } };
    }

    case "endGame":
      return endGameAvailable(legal)
        ? { selection: { ...selection, confirmingEnd: true } }
        : { selection };

    case "confirmEnd": {
      if (!selection.confirmingEnd) return { selection };
      const end = legal.actions.find((a) => a.kind === "end_game");
      return end ? { selection: emptySelection, submit: end } : { selection: emptySelection };
    }

    case "cancel":
      return { selection: emptySelection };
  }
}

/** Cards whose public inspection marks grew since the previous view; the
 * renderer pulses these without ever learning the colours behind them. */
export function newlyInspected(previous: SeatView | null, next: SeatView): number[] {
  if (!previous) return [];
  const before = new Map(previous.board.cards.map((c) => [c.id, c.inspected_by.length]));
  return next.board.cards
    .filter((c) => c.inspected_by.length > (before.get(c.id) ?? 0))
    .map((c) => c.id);
}

/** Server-confirmed transitions only: accept a pushed view when it is
 * strictly newer than what the client holds. */
export function shouldReplaceView(current: SeatView | null, incoming: SeatView): boolean {
  if (!current) return true;
  if (incoming.session !== current.session) return false;
  return incoming.version > current.version;
}

export interface WinBreakdown {
  kind: "win";
  faceDown: number;
  revealedUnplaced: number;
  correct: number;
  wrong: number;
  total: number;
}

export interface LossBreakdown {
  kind: "loss";
  endedEarly: number;
  incompleteColours: number;
  wrongHints: number;
  total: number;
}

/** Reconstruct the score terms from a finished view so the game-over panel
 * can show the decomposition next to the server's total. */
export function scoreBreakdown(view: SeatView): WinBreakdown | LossBreakdown | null {
  const outcome: Outcome | null = view.outcome;
  if (!outcome || !view.reveal) return null;
  const truth = view.reveal.colours;
  let correct = 0;
  let wrong = 0;
  for (const hint of view.hints) {
    if (hint.status !== "placed" || hint.placed_on === null || !hint.colours) continue;
    if (hint.colours.includes(truth[hint.placed_on])) correct += 1;
    else wrong += 1;
  }
  if (outcome.won) {
    const { face_down, revealed } = view.hint_counts;
    return {
      kind: "win",
      faceDown: face_down,
      revealedUnplaced: revealed,
      correct,
      wrong,
      total: 5 * face_down + 2 * revealed + correct - wrong,
    };
  }
  const incomplete = view.config.num_colours - outcome.complete_clusters;
  const endedEarly = outcome.ended_early ? 1 : 0;
  return {
    kind: "loss",
    endedEarly,
    incompleteColours: incomplete,
    wrongHints: wrong,
    total: -endedEarly - incomplete - wrong,
  };
}

/** Colour this seat may currently show for a card: own knowledge while the
 * game runs, ground truth once finished. Null means face-down/unknown. */
export function displayColour(view: SeatView, card: CardView): number | null {
  if (card.colour !== null) return card.colour;
  const known = view.you.known_colours[String(card.id)];
  return known === undefined ? null : known;
}
