/**
 * Wire protocol of the wristcue session service.
 * The engine is the single source of cue truth: the client only renders
 * what arrives on this channel and streams raw inputs back.
 */

export type Condition = 'ar' | 'haptic' | 'multi';

export interface TargetSpec {
  x: number;
  y: number;
  z: number;
  visual_radius: number;
  tolerance_radius: number;
}

export interface FrameMessage {
  type: 'frame';
  t_us: number;
  seq: number;
  intensity: number[];
}

export interface CueMessage {
  type: 'cue';
  t_us: number;
  cue: string;
  kind: 'start' | 'stop' | 'burst';
}

export interface TrialStateMessage {
  type: 'trial_state';
  phase: string;
  t_us: number;
  protocol?: string;
  condition?: Condition;
  target?: TargetSpec;
  band?: { motor_angles_deg: number[] };
  frames_delivered?: boolean;
  trial?: number;
  total?: number;
  trials?: number;
  outcome?: Record<string, unknown>;
  metrics?: Record<string, unknown>;
  log_path?: string;
}

export interface PoseEchoMessage {
  type: 'pose';
  t_us: number;
  x: number;
  y: number;
  z: number;
}

export interface WarningMessage {
  type: 'warning';
  message: string;
}

export interface ErrorMessage {
  type: 'error';
  message: string;
}

export type ServerMessage =
  | FrameMessage
  | CueMessage
  | TrialStateMessage
  | PoseEchoMessage
  | WarningMessage
  | ErrorMessage;

const SERVER_TYPES = new Set(['frame', 'cue', 'trial_state', 'pose', 'warning', 'error']);

/** Parse one server message; throws on anything malformed. */
export function parseServerMessage(raw: string): ServerMessage {
  let value: unknown;
  try {
    value = JSON.parse(raw);
  } catch {
    throw new Error(`unparseable server message: ${raw.slice(0, 80)}`);
  }
  if (typeof value !== 'object' || value === null) {
    throw new Error('server message is not an object');
  }
  const type = (value as { type?: unknown }).type;
  if (typeof type !== 'string' || !SERVER_TYPES.has(type)) {
    throw new Error(`unknown server message type: ${String(type)}`);
  }
  return value as ServerMessage;
}

export interface StartOptions {
  session: string;
  protocol: 'guidance' | 'cue-id';
  mode?: 'interactive' | 'simulated';
  condition?: Condition;
  depth_mm?: number;
  lateral_offset_mm?: number;
  seed?: number;
  pace?: boolean;
}

export function startMessage(opts: StartOptions): string {
  return JSON.stringify({ type: 'control', action: 'start', ...opts });
}

export function poseMessage(t_us: number, x: number, y: number, z: number): string {
  return JSON.stringify({ type: 'pose', t_us, x, y, z });
}

export function declareMessage(t_us: number): string {
  return JSON.stringify({ type: 'control', action: 'declare', t_us });
}

export function abortMessage(t_us: number): string {
  return JSON.stringify({ type: 'control', action: 'abort', t_us });
}

export function respondMessage(cue: string, rt_s: number): string {
  return JSON.stringify({ type: 'control', action: 'respond', cue, rt_s });
}

export function nextTrialMessage(): string {
  return JSON.stringify({ type: 'control', action: 'next' });
}
