/**
 * Session client: a thin, testable wrapper over a WebSocket that enforces
 * the two client-side contracts — pose timestamps are monotone, and the
 * pose rate never exceeds 120 Hz.
 */

import {
  ServerMessage,
  StartOptions,
  abortMessage,
  declareMessage,
  nextTrialMessage,
  parseServerMessage,
  poseMessage,
  respondMessage,
  startMessage,
} from './protocol.js';

export const MIN_POSE_SPACING_US = 8333; // 120 Hz cap

/** Minimal browser-style socket: the `ws` package satisfies this in node. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onopen: ((ev: unknown) => void) | null;
  onclose: ((ev: unknown) => void) | null;
}

export class PoseThrottle {
  private lastSent: number | null = null;

  /** True when a pose at t_us may be sent (monotone, <= 120 Hz). */
  accept(t_us: number): boolean {
    if (this.lastSent !== null && t_us - this.lastSent < MIN_POSE_SPACING_US) {
      return false;
    }
    this.lastSent = t_us;
    return true;
  }
}

export class SessionClient {
  private readonly socket: SocketLike;
  private readonly throttle = new PoseThrottle();
  private handlers: ((msg: ServerMessage) => void)[] = [];
  sent = 0;
  dropped = 0;

  constructor(socket: SocketLike) {
    this.socket = socket;
    socket.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      for (const handler of this.handlers) {
        handler(msg);
      }
    };
  }

  onMessage(handler: (msg: ServerMessage) => void): void {
    this.handlers.push(handler);
  }

  start(opts: StartOptions): void {
    this.socket.send(startMessage(opts));
  }

  /** Streams a pose; silently drops anything that would exceed 120 Hz or
   * run time backwards. Returns whether the pose went out. */
  sendPose(t_us: number, x: number, y: number, z: number): boolean {
    if (!this.throttle.accept(t_us)) {
      this.dropped += 1;
      return false;
    }
    this.socket.send(poseMessage(t_us, x, y, z));
    this.sent += 1;
    return true;
  }

  declare(t_us: number): void {
    this.socket.send(declareMessage(t_us));
  }

  abort(t_us: number): void {
    this.socket.send(abortMessage(t_us));
  }

  respond(cue: string, rt_s: number): void {
    this.socket.send(respondMessage(cue, rt_s));
  }

  nextTrial(): void {
    this.socket.send(nextTrialMessage());
  }

  close(): void {
    this.socket.close();
  }
}
