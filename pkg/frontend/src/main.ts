/** Page wiring: connect the prompt canvas, overlay toggles and history
 * list to the local engine service. */

import { ApiClient } from "./api.js";
import { drawOverlay, drawPromptLayer, overlaySource } from "./canvas.js";
import { PromptCanvasState, snapToCell } from "./state.js";
import { submitDepth, submitPrompt } from "./session.js";
import type { OverlayMode } from "./types.js";

const CANVAS_SIZE = 512;
const SERVICE_URL = "http://127.0.0.1:8089";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const client = new ApiClient(SERVICE_URL);
  const health = (await client.health()).body;
  el<HTMLSpanElement>("status").textContent =
    `engine ${health.version} · checkpoint ${health.checkpoint}`;

  const frame = (await client.loadFrameFromClip(0)).body;
  const state = new PromptCanvasState(frame.grid.rows);
  state.setFrame(frame.frame_id, health.checkpoint);

  const base = el<HTMLCanvasElement>("base-layer");
  const overlay = el<HTMLCanvasElement>("overlay-layer");
  const prompt = el<HTMLCanvasElement>("prompt-layer");
  for (const c of [base, overlay, prompt]) {
    c.width = CANVAS_SIZE;
    c.height = CANVAS_SIZE;
  }
  const promptCtx = prompt.getContext("2d")!;
  const overlayCtx = overlay.getContext("2d")!;

  const redraw = () => drawPromptLayer(promptCtx, state, CANVAS_SIZE);

  const showLatest = async () => {
    const latest = state.history[state.history.length - 1];
    if (!latest) return;
    const png = overlaySource(latest, state.overlay);
    if (png) await drawOverlay(overlayCtx, png, CANVAS_SIZE);
    const list = el<HTMLUListElement>("history");
    list.innerHTML = "";
    for (const entry of state.history) {
      const li = document.createElement("li");
      li.textContent = `${entry.kind} · ${entry.responseHash.slice(0, 12)}`;
      list.appendChild(li);
    }
  };

  let dragStart: { x: number; y: number } | null = null;
  prompt.addEventListener("mousedown", (e) => {
    dragStart = { x: e.offsetX, y: e.offsetY };
  });
  prompt.addEventListener("mouseup", (e) => {
    if (!dragStart) return;
    const src = snapToCell(dragStart.x, dragStart.y, CANVAS_SIZE, state.grid);
    const dst = snapToCell(e.offsetX, e.offsetY, CANVAS_SIZE, state.grid);
    dragStart = null;
    try {
      if (src.row === dst.row && src.col === dst.col) {
        if (e.shiftKey) state.addStop(src);
        else return;
      } else {
        state.addMove(src, dst);
      }
    } catch (err) {
      el<HTMLSpanElement>("error").textContent = String(err);
      return;
    }
    el<HTMLSpanElement>("error").textContent = "";
    redraw();
  });

  for (const mode of ["prediction", "flow", "segment", "depth"] as const) {
    el<HTMLButtonElement>(`mode-${mode}`).addEventListener("click", () => {
      state.setOverlay(mode as OverlayMode);
      void showLatest();
    });
  }

  el<HTMLInputElement>("zero-head-motion").addEventListener("change", (e) => {
    state.zeroHeadMotion = (e.target as HTMLInputElement).checked;
  });

  el<HTMLButtonElement>("submit").addEventListener("click", async () => {
    try {
      if (state.overlay === "depth") {
        await submitDepth(state, client, [0, 1]);
      } else {
        await submitPrompt(state, client);
      }
      el<HTMLSpanElement>("error").textContent = "";
    } catch (err) {
      el<HTMLSpanElement>("error").textContent =
        state.lastError ?? String(err);
      return;
    }
    await showLatest();
  });

  el<HTMLButtonElement>("clear").addEventListener("click", () => {
    state.clearPrompt();
    redraw();
  });

  el<HTMLButtonElement>("export").addEventListener("click", () => {
    const blob = new Blob(
      [JSON.stringify(state.toSessionExport(), null, 2)],
      { type: "application/json" },
    );
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "session.json";
    a.click();
  });

  redraw();
}

boot().catch((err) => {
  el<HTMLSpanElement>("error").textContent =
    `service unreachable at ${SERVICE_URL}: ${err}`;
});
