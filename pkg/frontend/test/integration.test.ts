/**
 * End-to-end against the real engine: spawns the session service, drives
 * interactive guidance trials with scripted cursor trajectories (the test
 * harness standing in for the human), and verifies the dwell/success loop,
 * live-vs-persisted metric equality, and byte-identical replay through the
 * primary `replay` command.
 */

import { execFile, spawn, ChildProcess } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { promisify } from 'node:util';
import WebSocket from 'ws';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { BandModel } from '../src/band.js';
import {
  CueMessage,
  ServerMessage,
  TargetSpec,
  TrialStateMessage,
} from '../src/protocol.js';
import { SessionClient, SocketLike } from '../src/session.js';
import { approachAndHold, endTime, holdAtOffset, PosePoint } from '../src/trajectory.js';

const execFileAsync = promisify(execFile);
const PYTHON = process.env.WRISTCUE_PYTHON ?? 'python3';
const PORT = 8600 + Math.floor(Math.random() * 200);
const OUT_DIR = mkdtempSync(join(tmpdir(), 'wristcue-ui-'));

let server: ChildProcess;

async function waitForHealth(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`http://127.0.0.1:${PORT}/health`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error('session service never became healthy');
}

beforeAll(async () => {
  server = spawn(PYTHON, ['-m', 'wristcue.cli', 'serve', '--port', String(PORT),
                          '--out', OUT_DIR],
                 { stdio: 'ignore' });
  await waitForHealth();
}, 40_000);

afterAll(() => {
  server?.kill();
});

class MessagePump {
  private queue: ServerMessage[] = [];
  private waiters: ((msg: ServerMessage) => void)[] = [];

  push(msg: ServerMessage): void {
    const waiter = this.waiters.shift();
    if (waiter) waiter(msg);
    else this.queue.push(msg);
  }

  async next(timeoutMs = 10_000): Promise<ServerMessage> {
    const queued = this.queue.shift();
    if (queued) return queued;
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error('message timeout')), timeoutMs);
      this.waiters.push((msg) => {
        clearTimeout(timer);
        resolve(msg);
      });
    });
  }

  async until<T extends ServerMessage>(
    predicate: (msg: ServerMessage) => msg is T,
    timeoutMs = 20_000,
  ): Promise<{ match: T; seen: ServerMessage[] }> {
    const seen: ServerMessage[] = [];
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const msg = await this.next(Math.max(1, deadline - Date.now()));
      seen.push(msg);
      if (predicate(msg)) return { match: msg, seen };
    }
  }
}

function connectSession(): Promise<{ client: SessionClient; pump: MessagePump; ws: WebSocket }> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
    ws.onerror = (err) => reject(err);
    ws.onopen = () => {
      const client = new SessionClient(ws as unknown as SocketLike);
      const pump = new MessagePump();
      client.onMessage((msg) => pump.push(msg));
      resolve({ client, pump, ws });
    };
  });
}

const isRunning = (m: ServerMessage): m is TrialStateMessage =>
  m.type === 'trial_state' && m.phase === 'running';
const isDone = (m: ServerMessage): m is TrialStateMessage =>
  m.type === 'trial_state' && (m.phase === 'done' || m.phase === 'aborted');

async function runScripted(
  session: string,
  makePath: (target: TargetSpec) => PosePoint[],
): Promise<{ done: TrialStateMessage; seen: ServerMessage[]; target: TargetSpec }> {
  const { client, pump, ws } = await connectSession();
  client.start({
    session,
    protocol: 'guidance',
    mode: 'interactive',
    condition: 'multi',
    depth_mm: 350,
    lateral_offset_mm: 10,
  });
  const { match: running } = await pump.until(isRunning);
  const target = running.target!;
  const path = makePath(target);
  for (const p of path) {
    client.sendPose(p.t_us, p.x, p.y, p.z);
  }
  client.declare(endTime(path));
  const { match: done, seen } = await pump.until(isDone, 30_000);
  ws.close();
  return { done, seen, target };
}

describe('interactive loop against the live engine', () => {
  it(
    'dwell inside tolerance fires exactly one success and the band flashes',
    async () => {
      const { done, seen } = await runScripted('itest-dwell', (target) =>
        approachAndHold(target, { holdMs: 800 }),
      );
      const cues = seen.filter((m): m is CueMessage => m.type === 'cue');
      const successes = cues.filter((c) => c.cue === 'Success');
      expect(successes).toHaveLength(1);
      expect(successes[0].kind).toBe('burst');

      // Replaying the frames through the band model shows the all-motor flash.
      const band = new BandModel();
      let sawFullBurst = false;
      for (const msg of seen) {
        if (msg.type === 'frame') {
          band.applyFrame(msg);
          if (band.isFullBurst()) sawFullBurst = true;
        }
      }
      expect(sawFullBurst).toBe(true);
      expect(done.outcome?.success_cue_fired).toBe(true);
      expect(done.outcome?.final_error_mm).toBe(0);
    },
    60_000,
  );

  it(
    'live metrics equal compute_metrics on the uploaded log, exactly',
    async () => {
      const { done } = await runScripted('itest-metrics', (target) => [
        ...approachAndHold(target, { approachTicks: 100, holdMs: 0 }),
        ...holdAtOffset(target, { x: 5.0 }, 400, 100 * 8333),
      ]);
      const logPath = done.log_path!;
      const script =
        'import json,sys\n' +
        'from wristcue.logio import load_log\n' +
        'from wristcue.metrics import compute_metrics\n' +
        'log,_ = load_log(sys.argv[1])\n' +
        'print(json.dumps(compute_metrics([log]).as_dict(), sort_keys=True))\n';
      const { stdout } = await execFileAsync(PYTHON, ['-c', script, logPath]);
      const recomputed = JSON.parse(stdout);
      // Exact structural equality (key order is not semantic in JSON).
      expect(recomputed).toEqual(done.metrics);
      // Declared at a known 5 mm offset: the log's final error says the same.
      expect(done.outcome?.final_error_mm).toBeCloseTo(5.0, 6);
    },
    60_000,
  );

  it(
    'a scripted-trajectory log replays byte-identically through `replay`',
    async () => {
      const { done } = await runScripted('itest-replay', (target) =>
        approachAndHold(target, { holdMs: 650 }),
      );
      const logPath = done.log_path!;
      const { stdout } = await execFileAsync(PYTHON, ['-m', 'wristcue.cli', 'replay', logPath]);
      expect(stdout).toContain('1 ok, 0 mismatched');
    },
    60_000,
  );
});
