/** Canvas rendering: base frame, toggleable overlay layer, grid lines,
 * green move arrows and red stop markers. Geometry helpers are pure so
 * they can be unit-tested without a DOM. */

import { PromptCanvasState } from "./state.js";
import type { Cell, HistoryEntry, OverlayMode } from "./types.js";

export interface ArrowGeometry {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/** Center-to-center arrow for a move, in canvas pixels. */
export function arrowForMove(
  src: Cell,
  dst: Cell,
  canvasSize: number,
  grid: number,
): ArrowGeometry {
  const cellPx = canvasSize / grid;
  return {
    x0: (src.col + 0.5) * cellPx,
    y0: (src.row + 0.5) * cellPx,
    x1: (dst.col + 0.5) * cellPx,
    y1: (dst.row + 0.5) * cellPx,
  };
}

/** Which returned image backs the selected overlay, if the entry has it. */
export function overlaySource(
  entry: HistoryEntry,
  mode: OverlayMode,
): string | null {
  const r = entry.response as unknown as Record<string, unknown>;
  const key = {
    prediction: "prediction_png",
    flow: "flow_png",
    segment: "segment_png",
    depth: "depth_png",
  }[mode];
  const value = r[key];
  return typeof value === "string" ? value : null;
}

export function drawPromptLayer(
  ctx: CanvasRenderingContext2D,
  state: PromptCanvasState,
  canvasSize: number,
): void {
  const grid = state.grid;
  const cellPx = canvasSize / grid;
  ctx.clearRect(0, 0, canvasSize, canvasSize);

  ctx.strokeStyle = "rgba(255,255,255,0.25)";
  ctx.lineWidth = 1;
  for (let i = 1; i < grid; i++) {
    ctx.beginPath();
    ctx.moveTo(i * cellPx, 0);
    ctx.lineTo(i * cellPx, canvasSize);
    ctx.moveTo(0, i * cellPx);
    ctx.lineTo(canvasSize, i * cellPx);
    ctx.stroke();
  }

  ctx.strokeStyle = "#2ecc40";
  ctx.fillStyle = "rgba(46,204,64,0.35)";
  ctx.lineWidth = 2;
  for (const move of state.moves) {
    ctx.fillRect(move.src.col * cellPx, move.src.row * cellPx, cellPx, cellPx);
    const a = arrowForMove(move.src, move.dst, canvasSize, grid);
    ctx.beginPath();
    ctx.moveTo(a.x0, a.y0);
    ctx.lineTo(a.x1, a.y1);
    ctx.stroke();
    const angle = Math.atan2(a.y1 - a.y0, a.x1 - a.x0);
    const head = 6;
    ctx.beginPath();
    ctx.moveTo(a.x1, a.y1);
    ctx.lineTo(
      a.x1 - head * Math.cos(angle - 0.5),
      a.y1 - head * Math.sin(angle - 0.5),
    );
    ctx.lineTo(
      a.x1 - head * Math.cos(angle + 0.5),
      a.y1 - head * Math.sin(angle + 0.5),
    );
    ctx.closePath();
    ctx.fill();
  }

  ctx.fillStyle = "rgba(255,65,54,0.55)";
  for (const stop of state.stops) {
    ctx.fillRect(stop.col * cellPx, stop.row * cellPx, cellPx, cellPx);
  }
}

/** Paint a base64 PNG into the overlay canvas, scaled to fit. */
export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  pngBase64: string,
  canvasSize: number,
): Promise<void> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => {
      ctx.imageSmoothingEnabled = false;
      ctx.clearRect(0, 0, canvasSize, canvasSize);
      ctx.drawImage(img, 0, 0, canvasSize, canvasSize);
      resolve();
    };
    img.onerror = () => reject(new Error("overlay image failed to decode"));
    img.src = `data:image/png;base64,${pngBase64}`;
  });
}
