/**
 * Console entry point.
 *
 *   node dist/main.js replay --port N --scenario file.json   stepped replay
 *   node dist/main.js live   --port N [--scenario file.json] interactive session
 *
 * In live mode a small prompt drives the palette:
 *   say <user> <text...>     inject user speech (keywords trigger glances)
 *   robot <0|1> <text...>    robot utterance, first arg = yielding
 *   listen <user> <ms>       robot listening span
 *   move <card> <dx> <dy>    drag a card by map offsets over 1 s
 *   set <field> <value>      tune a config field
 *   step [n]                 advance (stepped mode)
 *   quit
 */

import * as fs from "node:fs";
import * as readline from "node:readline";
import { SessionClient } from "./client.js";
import {
  fromTimelineEntry,
  moveCard,
  robotListens,
  robotUtterance,
  userSpeaks,
  validateConfigValues,
} from "./palette.js";
import { TargetSpec } from "./protocol.js";
import { ViewModel } from "./viewmodel.js";

interface ScenarioDoc {
  seed: number;
  targets: TargetSpec[];
  timeline: Array<Record<string, unknown> & { t_ms: number }>;
}

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 1) {
    if (argv[i].startsWith("--")) {
      out[argv[i].slice(2)] = argv[i + 1] ?? "";
      i += 1;
    }
  }
  return out;
}

function renderFrame(view: ViewModel): string {
  return [
    view.renderPoseText(),
    view.renderTimelineText(),
    view.renderHeatmapText(),
    view.renderMetricsText(),
    "",
  ].join("\n");
}

async function replay(port: number, scenarioPath: string): Promise<number> {
  const doc = JSON.parse(fs.readFileSync(scenarioPath, "utf-8")) as ScenarioDoc;
  const client = new SessionClient();
  await client.connect(port);
  await client.open({ mode: "stepped", seed: doc.seed, targets: doc.targets });

  const view = new ViewModel();
  view.setTargets(doc.targets);
  client.onState((s) => view.update(s));

  const byTick = new Map<number, Array<Record<string, unknown>>>();
  let lastEnd = 0;
  for (const entry of doc.timeline) {
    const tick = Math.floor(entry.t_ms / 200);
    if (!byTick.has(tick)) byTick.set(tick, []);
    byTick.get(tick)!.push(entry);
    const dur = typeof entry.duration_ms === "number" ? entry.duration_ms : 2000;
    lastEnd = Math.max(lastEnd, entry.t_ms + dur);
  }
  const totalTicks = Math.ceil((lastEnd + 2000) / 200);

  for (let tick = 0; tick < totalTicks; tick += 1) {
    for (const entry of byTick.get(tick) ?? []) {
      const result = await client.inject(fromTimelineEntry(entry));
      if (!result.ok) {
        console.error(`inject failed at tick ${tick}: ${result.error}`);
        client.close();
        return 1;
      }
    }
    const states = client.collectStates(1);
    client.step(1);
    await states;
    console.log(renderFrame(view));
  }
  console.log(
    `replay done: ${view.metrics.ticks} ticks, ` +
    `${client.stats.sent} actions, ${client.stats.acked} acked, ${client.stats.errored} errors`,
  );
  client.close();
  return client.stats.errored === 0 ? 0 : 1;
}

async function live(port: number, scenarioPath?: string): Promise<number> {
  const doc = scenarioPath
    ? (JSON.parse(fs.readFileSync(scenarioPath, "utf-8")) as ScenarioDoc)
    : null;
  const client = new SessionClient();
  await client.connect(port);
  await client.open({
    mode: "realtime",
    seed: doc?.seed ?? 0,
    targets: doc?.targets ?? [],
  });
  const view = new ViewModel();
  if (doc) view.setTargets(doc.targets);
  client.onState((s) => view.update(s));

  const staleTimer = setInterval(() => {
    if (view.isStale()) console.error("[stale] no state for more than 1 s");
  }, 500);

  const rl = readline.createInterface({ input: process.stdin, output: process.stdout });
  rl.setPrompt("gaze> ");
  rl.prompt();
  for await (const line of rl) {
    const [cmd, ...rest] = line.trim().split(/\s+/);
    try {
      if (cmd === "quit" || cmd === "exit") break;
      else if (cmd === "say") {
        const [speaker, ...words] = rest;
        report(await client.inject(userSpeaks(speaker, words.join(" "))));
      } else if (cmd === "robot") {
        const [flag, ...words] = rest;
        report(await client.inject(robotUtterance(words.join(" "), { yielding: flag === "1" })));
      } else if (cmd === "listen") {
        report(await client.inject(robotListens([rest[0]], Number(rest[1] ?? 4000))));
      } else if (cmd === "move") {
        const [card, dx, dy] = rest;
        const t = view.targets.get(card);
        if (!t) throw new Error(`unknown card ${card}`);
        const from = t.position;
        const to: [number, number, number] = [from[0] + Number(dx), from[1] + Number(dy), from[2]];
        const result = await client.inject(moveCard(card, [from, to], 1000));
        if (result.ok) view.moveTarget(card, to);
        report(result);
      } else if (cmd === "set") {
        const values = { [rest[0]]: Number(rest[1]) };
        const problem = validateConfigValues(values);
        if (problem) console.error(`rejected: ${problem}`);
        else report(await client.updateConfig(values));
      } else if (cmd === "step") {
        client.step(Number(rest[0] ?? 1));
      } else if (cmd === "show") {
        console.log(renderFrame(view));
      } else if (cmd !== "") {
        console.error(`unknown command ${cmd}`);
      }
    } catch (err) {
      console.error(String(err));
    }
    rl.prompt();
  }
  clearInterval(staleTimer);
  client.close();
  return 0;
}

function report(result: { ok: boolean; appliesAtTick?: number; error?: string }): void {
  if (result.ok) console.log(`ack (applies at tick ${result.appliesAtTick})`);
  else console.error(`rejected: ${result.error}`);
}

async function main(): Promise<number> {
  const [mode, ...rest] = process.argv.slice(2);
  const args = parseArgs(rest);
  const port = Number(args.port);
  if (!port || !mode) {
    console.error("usage: main.js replay|live --port N [--scenario file.json]");
    return 2;
  }
  if (mode === "replay") {
    if (!args.scenario) {
      console.error("replay needs --scenario");
      return 2;
    }
    return replay(port, args.scenario);
  }
  if (mode === "live") return live(port, args.scenario);
  console.error(`unknown mode ${mode}`);
  return 2;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(String(err));
    process.exit(1);
  },
);
