/** Prompt canvas state: pending moves/stops on the patch grid, overlay
 * selection, and the append-only history of submitted prompts.
 *
 * All readouts (flow, segments, depth) come back from the service as
 * rendered images plus raw payloads; nothing is computed client-side. */

import type {
  Cell,
  CounterfactualRequest,
  HistoryEntry,
  Move,
  OverlayMode,
  SessionExport,
} from "./types.js";

const cellKey = (c: Cell) => `${c.row},${c.col}`;

/** Snap a canvas pixel position to the patch cell containing it. */
export function snapToCell(
  xPx: number,
  yPx: number,
  canvasSize: number,
  grid: number,
): Cell {
  const cellPx = canvasSize / grid;
  const clamp = (v: number) => Math.min(grid - 1, Math.max(0, v));
  return {
    row: clamp(Math.floor(yPx / cellPx)),
    col: clamp(Math.floor(xPx / cellPx)),
  };
}

export class PromptCanvasState {
  readonly grid: number;
  frameId: string | null = null;
  checkpoint = "";
  moves: Move[] = [];
  stops: Cell[] = [];
  /** When true the request carries head_motion [0, 0] explicitly. */
  zeroHeadMotion = false;
  overlay: OverlayMode = "prediction";
  private readonly _history: HistoryEntry[] = [];
  /** Inline service error message, if the last submission failed. */
  lastError: string | null = null;

  constructor(grid: number) {
    if (!Number.isInteger(grid) || grid < 1) {
      throw new Error(`grid must be a positive integer, got ${grid}`);
    }
    this.grid = grid;
  }

  get history(): readonly HistoryEntry[] {
    return this._history;
  }

  setFrame(frameId: string, checkpoint: string): void {
    this.frameId = frameId;
    this.checkpoint = checkpoint;
    this.moves = [];
    this.stops = [];
    this.lastError = null;
  }

  private inGrid(c: Cell): boolean {
    return (
      Number.isInteger(c.row) && Number.isInteger(c.col) &&
      c.row >= 0 && c.row < this.grid && c.col >= 0 && c.col < this.grid
    );
  }

  /** Add a drag from src to dst (already grid-snapped). Enforces the
   * same disjointness rules the service checks, so malformed prompts
   * never leave the client. */
  addMove(src: Cell, dst: Cell): void {
    if (!this.inGrid(src) || !this.inGrid(dst)) {
      throw new Error("move out of grid bounds");
    }
    const dests = new Set(this.moves.map((m) => cellKey(m.dst)));
    if (dests.has(cellKey(dst))) {
      throw new Error(`destination collision at ${cellKey(dst)}`);
    }
    if (this.stops.some((s) => cellKey(s) === cellKey(dst))) {
      throw new Error(`destination collides with stop at ${cellKey(dst)}`);
    }
    if (this.stops.some((s) => cellKey(s) === cellKey(src))) {
      throw new Error(`patch ${cellKey(src)} is already stopped`);
    }
    this.moves.push({ src: { ...src }, dst: { ...dst } });
  }

  addStop(cell: Cell): void {
    if (!this.inGrid(cell)) throw new Error("stop out of grid bounds");
    const key = cellKey(cell);
    if (this.moves.some((m) => cellKey(m.src) === key)) {
      throw new Error(`patch ${key} is already moved`);
    }
    if (this.moves.some((m) => cellKey(m.dst) === key)) {
      throw new Error(`stop collides with a move destination at ${key}`);
    }
    if (this.stops.some((s) => cellKey(s) === key)) return; // idempotent
    this.stops.push({ ...cell });
  }

  removeMove(index: number): void {
    this.moves.splice(index, 1);
  }

  removeStop(index: number): void {
    this.stops.splice(index, 1);
  }

  clearPrompt(): void {
    this.moves = [];
    this.stops = [];
  }

  setOverlay(mode: OverlayMode): void {
    this.overlay = mode;
  }

  /** The exact JSON body for POST /api/counterfactual. */
  toRequest(): CounterfactualRequest {
    if (this.frameId === null) throw new Error("no frame loaded");
    return {
      frame_id: this.frameId,
      moves: this.moves.map((m) => ({
        src: [m.src.row, m.src.col] as [number, number],
        dst: [m.dst.row, m.dst.col] as [number, number],
      })),
      stops: this.stops.map((s) => [s.row, s.col] as [number, number]),
      head_motion: this.zeroHeadMotion ? [0, 0] : null,
    };
  }

  /** History is append-only; entries are recorded, never edited. */
  appendHistory(entry: HistoryEntry): void {
    this._history.push(Object.freeze({ ...entry }));
  }

  toSessionExport(): SessionExport {
    return {
      checkpoint: this.checkpoint,
      frame_id: this.frameId,
      history: this._history.map((h) => ({
        kind: h.kind,
        request: h.request,
        responseHash: h.responseHash,
      })),
    };
  }
}
