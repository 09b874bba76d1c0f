import { describe, expect, it } from "vitest";
import {
  composeWords,
  fromTimelineEntry,
  moveCard,
  robotUtterance,
  userSpeaks,
  validateConfigValues,
} from "../src/palette.js";
import { WordSpec } from "../src/protocol.js";

describe("utterance composer", () => {
  it("lays out words sequentially", () => {
    const { words, utterance } = composeWords("look at this");
    expect(utterance).toBe("look at this");
    expect(words.map((w) => w.text)).toEqual(["look", "at", "this"]);
    expect(words[1].start_ms).toBe(words[0].end_ms);
  });

  it("turns an ellipsis token into a pause", () => {
    const { words } = composeWords("well ... maybe");
    expect(words.map((w) => w.text)).toEqual(["well", "maybe"]);
    expect(words[1].start_ms - words[0].end_ms).toBe(1000);
  });

  it("builds a yielding robot utterance", () => {
    const ev = robotUtterance("is the zebra faster", { yielding: true, addressees: ["u1"] });
    expect(ev.type).toBe("robot_speaking");
    expect(ev.yielding).toBe(true);
    expect(ev.addressees).toEqual(["u1"]);
    const words = ev.words as WordSpec[];
    expect((ev.utterance as string).split(" ")).toHaveLength(words.length);
  });

  it("builds user speech with recognition timings", () => {
    const ev = userSpeaks("u1", "the zebra");
    expect(ev.type).toBe("user_speaking");
    expect(ev.speaker).toBe("u1");
    expect(ev.duration_ms).toBe(600);
  });
});

describe("card drag", () => {
  it("spreads waypoints evenly over the duration", () => {
    const ev = moveCard("c1", [[0, 0, 1], [0.1, 0, 1], [0.2, 0, 1]], 1000);
    expect(ev.waypoints).toEqual([
      [0, [0, 0, 1]],
      [500, [0.1, 0, 1]],
      [1000, [0.2, 0, 1]],
    ]);
  });

  it("rejects a single-point drag", () => {
    expect(() => moveCard("c1", [[0, 0, 1]], 500)).toThrow();
  });
});

describe("timeline replay adapter", () => {
  it("strips the timestamp and keeps the rest", () => {
    const entry = { t_ms: 400, type: "robot_listening", addressees: ["u1"], duration_ms: 1200 };
    expect(fromTimelineEntry(entry)).toEqual({
      type: "robot_listening",
      addressees: ["u1"],
      duration_ms: 1200,
    });
  });
});

describe("config slider validation", () => {
  it("accepts in-range values", () => {
    expect(validateConfigValues({ p_listening: 0.5, slack_base: 24 })).toBeNull();
  });

  it("rejects a priority above one", () => {
    expect(validateConfigValues({ p_listening: 1.2 })).toMatch(/p_listening/);
  });

  it("rejects unknown fields and inverted intimacy bounds", () => {
    expect(validateConfigValues({ p_shiny: 0.5 })).toMatch(/unknown/);
    expect(
      validateConfigValues({ intimacy_min_ms: 6000, intimacy_max_ms: 4000 }),
    ).toMatch(/intimacy/);
  });
});
