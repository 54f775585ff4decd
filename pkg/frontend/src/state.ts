/**
 * Console state and its pure update functions.
 *
 * The UI renders from this object alone; every transition returns a fresh
 * state so views never chase hidden mutation. No audio math happens here --
 * the server owns the DSP, the browser just plays what comes back.
 */
import type { SessionMeta } from "./types.js";

export const NEUTRAL = 0.5; // slider midpoint = "leave this source alone"

export interface ConsoleState {
  sessionId: string | null;
  labels: string[];
  /** One slider per source, each in [0, 1]. */
  sliders: number[];
  playing: boolean;
  /** Reserved A/B toggle; the service currently renders one route. */
  abMode: "remix";
  /** Wall-clock ms of the last render actually applied, or null. */
  lastRenderAt: number | null;
  error: string | null;
  thumbnail: number[][] | null;
}

export function emptyConsole(): ConsoleState {
  return {
    sessionId: null,
    labels: [],
    sliders: [],
    playing: false,
    abMode: "remix",
    lastRenderAt: null,
    error: null,
    thumbnail: null,
  };
}

const clamp01 = (v: number): number =>
  Number.isFinite(v) ? Math.min(1, Math.max(0, v)) : NEUTRAL;

/** Populate the console from freshly-created session metadata. */
export function loadSession(state: ConsoleState, meta: SessionMeta): ConsoleState {
  const sliders =
    meta.last_gains.length === meta.n_sources
      ? meta.last_gains.map(clamp01)
      : new Array<number>(meta.n_sources).fill(NEUTRAL);
  return {
    ...emptyConsole(),
    sessionId: meta.id,
    labels: [...meta.labels],
    sliders,
    playing: state.playing,
  };
}

/** Move one slider; out-of-range indices are ignored, values clamp to [0,1]. */
export function setSlider(state: ConsoleState, index: number, v: number): ConsoleState {
  if (!Number.isInteger(index) || index < 0 || index >= state.sliders.length) {
    return state;
  }
  const sliders = [...state.sliders];
  sliders[index] = clamp01(v);
  return { ...state, sliders };
}

/** The complete gain vector to send -- renders never patch single sources. */
export function gainVector(state: ConsoleState): number[] {
  return [...state.sliders];
}

export function setThumbnail(state: ConsoleState, thumbnail: number[][]): ConsoleState {
  return { ...state, thumbnail };
}

export function setPlaying(state: ConsoleState, playing: boolean): ConsoleState {
  return { ...state, playing };
}

export function markRendered(state: ConsoleState, at: number): ConsoleState {
  return { ...state, lastRenderAt: at, error: null };
}

export function setError(state: ConsoleState, message: string): ConsoleState {
  return { ...state, error: message };
}

export function clearError(state: ConsoleState): ConsoleState {
  return state.error === null ? state : { ...state, error: null };
}

/** Human label for a slider position: "muted", "-3.1 dB", "+6.0 dB". */
export function describeSlider(v: number): string {
  const s = 2 * clamp01(v) - 1;
  if (s <= -1) return "muted";
  const db = 20 * Math.log10(1 + s);
  return `${db >= 0 ? "+" : ""}${db.toFixed(1)} dB`;
}
