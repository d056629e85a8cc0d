// Message shapes of the session API ("yle-svc/1"). Mirrors only: nothing
// here exists that the server does not send.

export type SubstepName = "peek1" | "peek2" | "move" | "hint";
export type SessionStatus = "waiting" | "active" | "finished";
export type ActionKindName =
  | "end_game"
  | "observe_card"
  | "move_card"
  | "reveal_hint"
  | "place_hint"
  | "noop";

export interface GameConfig {
  variant: string;
  num_players: number;
  num_cards: number;
  num_colours: number;
  grid_side: number;
  hint_deck_spec: [number, number, number];
  hint_target_indexing: string;
  seed: number;
}

export interface CardView {
  id: number;
  row: number;
  col: number;
  locked: boolean;
  inspected_by: number[];
  colour: number | null;
  hint: { id: number; colours: number[] } | null;
}

export interface HintView {
  id: number;
  status: "face_down" | "revealed" | "placed";
  colours: number[] | null;
  placed_on: number | null;
}

export interface SeatInfo {
  seat: number;
  kind: string;
  policy: string | null;
  joined: boolean;
}

export interface LogEntry {
  version: number;
  seat: number;
  substep: SubstepName;
  turn_player: number;
  kind: ActionKindName;
  card?: number;
  cell?: [number, number];
  hint?: number;
  describe: string;
}

export interface Outcome {
  won: boolean;
  score: number;
  ended_early: boolean;
  complete_clusters: number;
}

export interface SeatView {
  schema: string;
  session: string;
  version: number;
  status: SessionStatus;
  config: GameConfig;
  casual_memory: boolean;
  seats: SeatInfo[];
  you: {
    seat: number;
    is_current: boolean;
    known_colours: Record<string, number>;
  };
  current_player: number;
  substep: number;
  substep_name: SubstepName;
  step_count: number;
  max_steps: number;
  board: { grid_side: number; cards: CardView[] };
  hints: HintView[];
  hint_counts: { face_down: number; revealed: number; placed: number };
  log: LogEntry[];
  outcome: Outcome | null;
  reveal?: { colours: number[] };
}

export interface LegalAction {
  index: number;
  kind: ActionKindName;
  card?: number;
  cell?: [number, number];
  hint?: number;
}

export interface LegalTargets {
  version: number;
  seat: number;
  is_current: boolean;
  actions: LegalAction[];
}

export interface JoinReply {
  seat: number;
  token: string;
  view: SeatView;
}

export interface CreateReply {
  schema: string;
  session: string;
  status: SessionStatus;
  seats: SeatInfo[];
}

export interface ActReply {
  applied: LogEntry;
  view: SeatView;
}

export interface ApiError {
  error: { code: string; message: string };
}

export interface ViewPush {
  type: "view";
  view: SeatView;
}
