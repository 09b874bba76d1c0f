/**
 * Session client: one socket, one engine session on the other end.
 *
 * Every palette action (inject / config) is correlated by id and resolves
 * with exactly one ack or error; STATE messages stream to the registered
 * handler in arrival order.
 */

import * as net from "node:net";
import {
  EventSpec,
  FrameDecoder,
  ServerMessage,
  StatePayload,
  TargetSpec,
  encodeMessage,
} from "./protocol.js";

export interface OpenOptions {
  mode: "stepped" | "realtime";
  seed?: number;
  targets?: TargetSpec[];
  scenario?: unknown;
  config?: Record<string, number>;
}

export interface ActionResult {
  ok: boolean;
  appliesAtTick?: number;
  error?: string;
}

export interface AckStats {
  sent: number;
  acked: number;
  errored: number;
}

interface Pending {
  resolve: (r: ActionResult) => void;
}

export class SessionClient {
  private socket: net.Socket | null = null;
  private decoder = new FrameDecoder();
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private stateHandlers: Array<(s: StatePayload) => void> = [];
  private closedHandlers: Array<() => void> = [];
  readonly stats: AckStats = { sent: 0, acked: 0, errored: 0 };
  sessionId: string | null = null;

  async connect(port: number, host = "127.0.0.1"): Promise<void> {
    await new Promise<void>((resolve, reject) => {
      const sock = net.createConnection({ port, host }, () => resolve());
      sock.once("error", reject);
      sock.on("data", (chunk) => this.onData(chunk));
      sock.on("close", () => this.closedHandlers.forEach((h) => h()));
      this.socket = sock;
    });
  }

  private onData(chunk: Buffer): void {
    for (const msg of this.decoder.push(chunk)) {
      this.dispatch(msg);
    }
  }

  private dispatch(msg: ServerMessage): void {
    switch (msg.kind) {
      case "state":
        if (msg.payload) this.stateHandlers.forEach((h) => h(msg.payload!));
        break;
      case "event_ack":
      case "config_ack": {
        const p = msg.id !== undefined ? this.pending.get(msg.id) : undefined;
        if (p && msg.id !== undefined) {
          this.pending.delete(msg.id);
          this.stats.acked += 1;
          p.resolve({ ok: true, appliesAtTick: msg.applies_at_tick });
        }
        break;
      }
      case "error": {
        const p = msg.id !== undefined ? this.pending.get(msg.id) : undefined;
        if (p && msg.id !== undefined) {
          this.pending.delete(msg.id);
          this.stats.errored += 1;
          p.resolve({ ok: false, error: msg.message });
        }
        break;
      }
      case "opened":
        this.sessionId = msg.session ?? null;
        break;
      case "heartbeat":
        break;
    }
  }

  private send(obj: unknown): void {
    if (!this.socket) throw new Error("not connected");
    this.socket.write(encodeMessage(obj));
  }

  async open(options: OpenOptions): Promise<void> {
    const id = this.nextId++;
    this.send({ kind: "open", id, ...options });
    await new Promise<void>((resolve, reject) => {
      const probe = setInterval(() => {
        if (this.sessionId !== null) {
          clearInterval(probe);
          resolve();
        }
      }, 5);
      setTimeout(() => {
        clearInterval(probe);
        if (this.sessionId === null) reject(new Error("open timed out"));
      }, 5000);
    });
  }

  /** Inject one event; resolves with its single ack or error. */
  inject(event: EventSpec): Promise<ActionResult> {
    const id = this.nextId++;
    this.stats.sent += 1;
    return new Promise((resolve) => {
      this.pending.set(id, { resolve });
      this.send({ kind: "inject", id, event });
    });
  }

  /** Update planner/controller fields; resolves with its single ack or error. */
  updateConfig(values: Record<string, number>): Promise<ActionResult> {
    const id = this.nextId++;
    this.stats.sent += 1;
    return new Promise((resolve) => {
      this.pending.set(id, { resolve });
      this.send({ kind: "config", id, values });
    });
  }

  step(n = 1): void {
    this.send({ kind: "step", n });
  }

  onState(handler: (s: StatePayload) => void): void {
    this.stateHandlers.push(handler);
  }

  onClosed(handler: () => void): void {
    this.closedHandlers.push(handler);
  }

  /** Collect the next `n` STATE messages. */
  collectStates(n: number, timeoutMs = 10000): Promise<StatePayload[]> {
    return new Promise((resolve, reject) => {
      const got: StatePayload[] = [];
      const handler = (s: StatePayload) => {
        got.push(s);
        if (got.length >= n) {
          this.stateHandlers = this.stateHandlers.filter((h) => h !== handler);
          resolve(got);
        }
      };
      this.onState(handler);
      setTimeout(() => {
        if (got.length < n) reject(new Error(`got ${got.length}/${n} states`));
      }, timeoutMs);
    });
  }

  close(): void {
    try {
      this.send({ kind: "close" });
    } catch {
      // already gone
    }
    this.socket?.end();
  }
}
