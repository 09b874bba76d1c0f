/**
 * Wire protocol: 4-byte big-endian length prefix + UTF-8 JSON, both ways.
 */

export interface TraceRecord {
  schema_version: number;
  tick_index: number;
  t_ms: number;
  system: string;
  current_target: string;
  current_kind: string;
  slack: number;
  gaze_direction: { yaw: number; pitch: number };
  head_direction: { yaw: number; pitch: number };
  gaze_error_deg: number;
  plan_summary: string[] | null;
  active_events: string[];
  references: Array<{ target: string; word_start_ms: number; word_end_ms: number }>;
}

export interface StatePayload {
  record: TraceRecord;
  plan: Record<string, number[]>;
}

export interface ServerMessage {
  kind: "opened" | "state" | "event_ack" | "config_ack" | "error" | "heartbeat";
  id?: number;
  session?: string;
  protocol_version?: number;
  mode?: string;
  payload?: StatePayload;
  applies_at_tick?: number;
  message?: string;
  t_ms?: number;
}

export interface TargetSpec {
  id: string;
  kind: "user" | "task_object" | "environment";
  position: [number, number, number];
  label: string;
  aliases: string[];
}

export interface WordSpec {
  text: string;
  start_ms: number;
  end_ms: number;
}

/** Timeline-entry-shaped event, without t_ms (injected events apply next tick). */
export type EventSpec = Record<string, unknown> & { type: string };

export function encodeMessage(obj: unknown): Buffer {
  const body = Buffer.from(JSON.stringify(obj), "utf-8");
  const frame = Buffer.alloc(4 + body.length);
  frame.writeUInt32BE(body.length, 0);
  body.copy(frame, 4);
  return frame;
}

/** Incremental decoder for a length-prefixed JSON stream. */
export class FrameDecoder {
  private buffer: Buffer = Buffer.alloc(0);

  push(chunk: Buffer): ServerMessage[] {
    this.buffer = Buffer.concat([this.buffer, chunk]);
    const out: ServerMessage[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const length = this.buffer.readUInt32BE(0);
      if (this.buffer.length < 4 + length) break;
      const body = this.buffer.subarray(4, 4 + length).toString("utf-8");
      this.buffer = this.buffer.subarray(4 + length);
      out.push(JSON.parse(body) as ServerMessage);
    }
    return out;
  }

  get pendingBytes(): number {
    return this.buffer.length;
  }
}
