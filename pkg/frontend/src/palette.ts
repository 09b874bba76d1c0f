/**
 * Event palette: composes the service's event and config payloads from
 * designer input.  Only input construction lives here; all behavior
 * comes back from the engine.
 */

import { EventSpec, WordSpec } from "./protocol.js";

const WORD_MS = 300;
const PAUSE_MS = 1000;

/** Word timings for freehand text; "..." becomes a long pause. */
export function composeWords(text: string): { words: WordSpec[]; utterance: string } {
  const tokens = text.split(/\s+/).filter((t) => t.length > 0);
  const words: WordSpec[] = [];
  let t = 0;
  for (const token of tokens) {
    if (/^\.{3,}$/.test(token)) {
      t += PAUSE_MS;
      continue;
    }
    words.push({ text: token, start_ms: t, end_ms: t + WORD_MS });
    t += WORD_MS;
  }
  return { words, utterance: tokens.join(" ") };
}

/** Robot utterance with optional turn-yielding, from plain text. */
export function robotUtterance(
  text: string,
  options: { yielding?: boolean; addressees?: string[] } = {},
): EventSpec {
  const { words, utterance } = composeWords(text);
  if (words.length === 0) throw new Error("utterance needs at least one word");
  const ev: EventSpec = {
    type: "robot_speaking",
    utterance,
    words,
    yielding: options.yielding ?? false,
  };
  if (options.addressees && options.addressees.length > 0) {
    ev.addressees = options.addressees;
  }
  return ev;
}

/** User speech with simulated recognition timings. */
export function userSpeaks(speaker: string, text: string): EventSpec {
  const { words } = composeWords(text);
  const duration = Math.max(WORD_MS, words.length > 0 ? words[words.length - 1].end_ms : 0);
  return {
    type: "user_speaking",
    speaker,
    duration_ms: duration,
    recognized_words: words,
  };
}

export function robotListens(addressees: string[], durationMs: number): EventSpec {
  return { type: "robot_listening", addressees, duration_ms: durationMs };
}

/** Card drag along a path of map points, evenly spaced in time. */
export function moveCard(
  cardId: string,
  path: Array<[number, number, number]>,
  durationMs: number,
): EventSpec {
  if (path.length < 2) throw new Error("a drag needs at least two points");
  const last = path.length - 1;
  const waypoints = path.map((p, i) => [Math.round((durationMs * i) / last), p]);
  return { type: "target_moved", target: cardId, waypoints };
}

/** Replay path: a scenario timeline entry as an injectable action. */
export function fromTimelineEntry(entry: Record<string, unknown>): EventSpec {
  const ev = { ...entry } as EventSpec & { t_ms?: unknown };
  delete ev.t_ms;
  return ev;
}

const PRIORITY_FIELDS = new Set([
  "p_speaking_addressee", "p_listening", "p_user_speaking", "p_yield",
  "p_referential", "p_moved", "p_rja_verbal",
]);
const DURATION_FIELDS = new Set([
  "pause_threshold_ms", "yield_lead_ms", "hold_lead_ms", "ref_lead_ms",
  "moved_hold_ms", "rja_delay_ms", "rja_hold_ms", "intimacy_min_ms",
  "intimacy_max_ms", "aversion_ms",
]);
const CONTROLLER_FIELDS = new Set([
  "neck_max_speed", "slack_base", "slack_step", "summary_window",
  "rapid_shift_min_alternations",
]);

/** Slider-side validation; the server re-checks on its end. */
export function validateConfigValues(values: Record<string, number>): string | null {
  for (const [key, value] of Object.entries(values)) {
    if (PRIORITY_FIELDS.has(key)) {
      if (value < 0 || value > 1) return `${key} must be in [0, 1]`;
    } else if (DURATION_FIELDS.has(key) || CONTROLLER_FIELDS.has(key)) {
      if (value <= 0) return `${key} must be positive`;
    } else {
      return `unknown config field ${key}`;
    }
  }
  const min = values.intimacy_min_ms;
  const max = values.intimacy_max_ms;
  if (min !== undefined && max !== undefined && min > max) {
    return "intimacy_min_ms must not exceed intimacy_max_ms";
  }
  return null;
}
