/**
 * DOM wiring for the remix console.
 *
 * Pick a mixture plus stems (or a mask-set file), get one slider per
 * source, and hear gain changes as the service re-renders. All state lives
 * in one ConsoleState object; every event handler computes the next state
 * and repaints from it.
 */
import { RemixApi } from "./api.js";
import { swapAudioSource } from "./playback.js";
import { RenderScheduler } from "./scheduler.js";
import {
  type ConsoleState,
  describeSlider,
  emptyConsole,
  gainVector,
  loadSession,
  markRendered,
  setError,
  setPlaying,
  setSlider,
  setThumbnail,
} from "./state.js";

const api = new RemixApi("");
let state: ConsoleState = emptyConsole();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const banner = $<HTMLDivElement>("error-banner");
const sliderBox = $<HTMLDivElement>("sliders");
const player = $<HTMLAudioElement>("player");
const thumbCanvas = $<HTMLCanvasElement>("thumbnail");
const status = $<HTMLSpanElement>("status");

const scheduler = new RenderScheduler(
  (gains) => {
    if (!state.sessionId) return Promise.reject(new Error("no session"));
    return api.renderRemix(state.sessionId, gains);
  },
  (blob, requestedAt) => {
    swapAudioSource(player, URL.createObjectURL(blob), (old) =>
      URL.revokeObjectURL(old),
    );
    update(markRendered(state, requestedAt));
  },
  (err) => update(setError(state, err instanceof Error ? err.message : String(err))),
);

function update(next: ConsoleState): void {
  state = next;
  banner.textContent = state.error ?? "";
  banner.hidden = state.error === null;
  status.textContent = state.sessionId
    ? `session ${state.sessionId.slice(0, 8)} · ${state.labels.length} sources`
    : "no session loaded";
  paintSliders();
}

function paintSliders(): void {
  const rows = sliderBox.querySelectorAll<HTMLInputElement>("input[type=range]");
  if (rows.length !== state.sliders.length) {
    rebuildSliders();
    return;
  }
  state.sliders.forEach((v, i) => {
    rows[i].value = String(v);
    const readout = sliderBox.querySelector<HTMLSpanElement>(`#readout-${i}`);
    if (readout) readout.textContent = describeSlider(v);
  });
}

function rebuildSliders(): void {
  sliderBox.replaceChildren();
  state.labels.forEach((label, i) => {
    const row = document.createElement("div");
    row.className = "slider-row";

    const name = document.createElement("label");
    name.textContent = label;

    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.01";
    input.value = String(state.sliders[i]);
    input.addEventListener("input", () => {
      update(setSlider(state, i, Number(input.value)));
      scheduler.request(gainVector(state));
    });

    const readout = document.createElement("span");
    readout.id = `readout-${i}`;
    readout.textContent = describeSlider(state.sliders[i]);

    row.append(name, input, readout);
    sliderBox.append(row);
  });
}

function paintThumbnail(rows: number[][]): void {
  const ctx = thumbCanvas.getContext("2d");
  if (!ctx || rows.length === 0) return;
  const h = rows.length;
  const w = rows[0].length;
  thumbCanvas.width = w;
  thumbCanvas.height = h;
  const peak = Math.max(1e-12, ...rows.map((r) => Math.max(...r)));
  const img = ctx.createImageData(w, h);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      // low bins at the bottom, log-ish brightness
      const v = Math.sqrt(rows[h - 1 - y][x] / peak);
      const px = 4 * (y * w + x);
      img.data[px] = 24 + 200 * v;
      img.data[px + 1] = 16 + 120 * v;
      img.data[px + 2] = 64 + 160 * v;
      img.data[px + 3] = 255;
    }
  }
  ctx.putImageData(img, 0, 0);
}

async function onLoadClicked(): Promise<void> {
  const mixFile = $<HTMLInputElement>("mix-file").files?.[0];
  const stemFiles = Array.from($<HTMLInputElement>("stem-files").files ?? []);
  const maskFile = $<HTMLInputElement>("mask-file").files?.[0];
  if (!mixFile) {
    update(setError(state, "choose a mixture file first"));
    return;
  }
  try {
    const meta = await api.createSession(mixFile, {
      masks: maskFile,
      stems: stemFiles.map((f) => ({ name: f.name, data: f })),
    });
    update(loadSession(state, meta));
    const detail = await api.getSession(meta.id);
    update(setThumbnail(state, detail.thumbnail));
    paintThumbnail(detail.thumbnail);
    scheduler.requestNow(gainVector(state)); // first render: everything neutral
  } catch (err) {
    update(setError(state, err instanceof Error ? err.message : String(err)));
  }
}

$<HTMLButtonElement>("load-button").addEventListener("click", () => {
  void onLoadClicked();
});
player.addEventListener("play", () => update(setPlaying(state, true)));
player.addEventListener("pause", () => update(setPlaying(state, false)));

update(state);
