/**
 * View model for the console: everything derived from the STATE stream,
 * nothing computed that the engine already computed.
 */

import { StatePayload, TargetSpec, TraceRecord } from "./protocol.js";

const HISTORY = 25;
const STALE_MS = 1000;
const SHADES = " .:-=+*#%@";

export interface PoseView {
  headYaw: number;
  headPitch: number;
  eyeYaw: number; // relative to the head
  eyePitch: number;
  gazeYaw: number;
  gazePitch: number;
  slack: number;
  currentTarget: string;
}

export interface MetricsStrip {
  ticks: number;
  gazeShifts: number;
  headRotationDeg: number;
  lastGazeErrorDeg: number;
}

function angularDelta(aYaw: number, aPitch: number, bYaw: number, bPitch: number): number {
  // great-circle angle between two yaw/pitch directions
  const toVec = (yawDeg: number, pitchDeg: number): [number, number, number] => {
    const yaw = (yawDeg * Math.PI) / 180;
    const pitch = (pitchDeg * Math.PI) / 180;
    return [-Math.cos(pitch) * Math.sin(yaw), Math.sin(pitch), Math.cos(pitch) * Math.cos(yaw)];
  };
  const a = toVec(aYaw, aPitch);
  const b = toVec(bYaw, bPitch);
  const dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  const cx = a[1] * b[2] - a[2] * b[1];
  const cy = a[2] * b[0] - a[0] * b[2];
  const cz = a[0] * b[1] - a[1] * b[0];
  return (Math.atan2(Math.hypot(cx, cy, cz), dot) * 180) / Math.PI;
}

export class ViewModel {
  private lastStateAt: number | null = null;
  private record: TraceRecord | null = null;
  private plan: Record<string, number[]> = {};
  private executed: string[] = [];
  private prevRecord: TraceRecord | null = null;
  readonly targets = new Map<string, TargetSpec>();
  readonly metrics: MetricsStrip = {
    ticks: 0,
    gazeShifts: 0,
    headRotationDeg: 0,
    lastGazeErrorDeg: 0,
  };

  setTargets(targets: TargetSpec[]): void {
    this.targets.clear();
    for (const t of targets) this.targets.set(t.id, t);
  }

  moveTarget(id: string, position: [number, number, number]): void {
    const t = this.targets.get(id);
    if (t) t.position = position;
  }

  /** Apply one STATE message; keeps history, pose, and the metrics strip current. */
  update(state: StatePayload, now: number = Date.now()): void {
    const rec = state.record;
    if (this.record && rec.tick_index <= this.record.tick_index) {
      return; // stale or duplicate frame
    }
    if (this.record) {
      this.prevRecord = this.record;
      if (this.prevRecord.current_target !== rec.current_target) {
        this.metrics.gazeShifts += 1;
      }
      this.metrics.headRotationDeg += angularDelta(
        this.prevRecord.head_direction.yaw,
        this.prevRecord.head_direction.pitch,
        rec.head_direction.yaw,
        rec.head_direction.pitch,
      );
    }
    this.record = rec;
    this.plan = state.plan;
    this.executed.push(rec.current_target);
    if (this.executed.length > HISTORY) this.executed.shift();
    this.metrics.ticks += 1;
    this.metrics.lastGazeErrorDeg = rec.gaze_error_deg;
    this.lastStateAt = now;
  }

  isStale(now: number = Date.now()): boolean {
    return this.lastStateAt !== null && now - this.lastStateAt > STALE_MS;
  }

  get currentRecord(): TraceRecord | null {
    return this.record;
  }

  /** Heatmap model: one row per target, ten future frames of priority. */
  heatmap(): { targets: string[]; rows: number[][] } {
    const targets = Object.keys(this.plan).sort();
    return { targets, rows: targets.map((t) => this.plan[t]) };
  }

  /** Executed history (left of the cursor) and the planned summary (right). */
  timeline(): { executed: string[]; planned: string[] } {
    return {
      executed: [...this.executed],
      planned: this.record?.plan_summary ? [...this.record.plan_summary] : [],
    };
  }

  pose(): PoseView | null {
    if (!this.record) return null;
    const r = this.record;
    return {
      headYaw: r.head_direction.yaw,
      headPitch: r.head_direction.pitch,
      eyeYaw: r.gaze_direction.yaw - r.head_direction.yaw,
      eyePitch: r.gaze_direction.pitch - r.head_direction.pitch,
      gazeYaw: r.gaze_direction.yaw,
      gazePitch: r.gaze_direction.pitch,
      slack: r.slack,
      currentTarget: r.current_target,
    };
  }

  renderHeatmapText(): string {
    const { targets, rows } = this.heatmap();
    const width = Math.max(4, ...targets.map((t) => t.length));
    const lines = targets.map((t, i) => {
      const cells = rows[i]
        .map((v) => SHADES[Math.min(SHADES.length - 1, Math.round(v * (SHADES.length - 1)))])
        .join("");
      return `${t.padEnd(width)} |${cells}|`;
    });
    return lines.join("\n");
  }

  renderTimelineText(): string {
    const { executed, planned } = this.timeline();
    const short = (t: string) => t.slice(0, 6).padEnd(6);
    return `${executed.map(short).join("")}>NOW>${planned.map(short).join("")}`.trimEnd();
  }

  renderPoseText(): string {
    const p = this.pose();
    if (!p) return "(no state yet)";
    return (
      `tick ${this.record?.tick_index} target=${p.currentTarget} slack=${p.slack}` +
      ` head=(${p.headYaw.toFixed(1)},${p.headPitch.toFixed(1)})` +
      ` eye=(${p.eyeYaw.toFixed(1)},${p.eyePitch.toFixed(1)})` +
      ` gaze=(${p.gazeYaw.toFixed(1)},${p.gazePitch.toFixed(1)})`
    );
  }

  renderMetricsText(): string {
    const m = this.metrics;
    return (
      `ticks=${m.ticks} shifts=${m.gazeShifts}` +
      ` headRot=${m.headRotationDeg.toFixed(1)}deg gazeErr=${m.lastGazeErrorDeg.toFixed(2)}deg`
    );
  }
}
