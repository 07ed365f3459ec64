/**
 * Page wiring: connect to the session service, run interactive guidance or
 * cue-identification trials, and keep the scene and band views in sync with
 * the live message stream.
 */

import { BandModel, drawBand } from './band.js';
import { makeDistractorGrid, responseForKey, ResponseTimer } from './cueid.js';
import { GuidanceController } from './guidance.js';
import {
  Condition,
  CueMessage,
  ServerMessage,
  TargetSpec,
  TrialStateMessage,
} from './protocol.js';
import { rumbleFromFrame } from './rumble.js';
import { DEFAULT_LAYOUT, drawScene } from './scene.js';
import { SessionClient } from './session.js';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const sceneCanvas = $('scene') as unknown as HTMLCanvasElement;
const bandCanvas = $('band') as unknown as HTMLCanvasElement;
const statusEl = $('status');
const metricsEl = $('metrics');
const distractorEl = $('distractor');
const sceneCtx = sceneCanvas.getContext('2d')!;
const bandCtx = bandCanvas.getContext('2d')!;

let client: SessionClient | null = null;
let controller: GuidanceController | null = null;
let band = new BandModel();
let target: TargetSpec | null = null;
let condition: Condition = 'multi';
let protocol: 'guidance' | 'cue-id' = 'guidance';
let cueIdPhase = '';
const rumbleEnabled = () => ($('rumble') as unknown as HTMLInputElement).checked;
const responseTimer = new ResponseTimer();

function setStatus(text: string): void {
  statusEl.textContent = text;
}

function wsUrl(): string {
  const host = ($('server') as unknown as HTMLInputElement).value || 'localhost:8473';
  return `ws://${host}/ws`;
}

function connect(): void {
  protocol = ($('protocol') as unknown as HTMLSelectElement).value as 'guidance' | 'cue-id';
  condition = ($('condition') as unknown as HTMLSelectElement).value as Condition;
  const socket = new WebSocket(wsUrl());
  socket.onopen = () => {
    client = new SessionClient(socket as never);
    client.onMessage(onServerMessage);
    const session = `ui-${Date.now().toString(36)}`;
    if (protocol === 'guidance') {
      controller = new GuidanceController(client);
      client.start({
        session,
        protocol: 'guidance',
        mode: 'interactive',
        condition,
        depth_mm: Number(($('depth') as unknown as HTMLInputElement).value) || 350,
        lateral_offset_mm: Number(($('lateral') as unknown as HTMLInputElement).value) || 10,
      });
      requestAnimationFrame(loop);
      setStatus(`guidance (${condition}): move the pointer, wheel = depth, Enter = declare`);
    } else {
      client.start({ session, protocol: 'cue-id', seed: Date.now() & 0x7fffffff });
      setStatus('cue-id: count the letters, feel the cue, answer with arrows / space');
    }
  };
  socket.onclose = () => setStatus('disconnected');
}

function onServerMessage(msg: ServerMessage): void {
  switch (msg.type) {
    case 'frame':
      band.applyFrame(msg);
      if (rumbleEnabled()) rumbleFromFrame(msg.intensity);
      drawBand(bandCtx, band, bandCanvas.width / 2, bandCanvas.height / 2, 70);
      break;
    case 'cue':
      onCue(msg);
      break;
    case 'trial_state':
      onTrialState(msg);
      break;
    case 'warning':
      setStatus(`warning: ${msg.message}`);
      break;
    case 'error':
      setStatus(`error: ${msg.message}`);
      break;
    default:
      break;
  }
}

function onCue(msg: CueMessage): void {
  if (protocol === 'cue-id' && msg.kind !== 'stop') {
    responseTimer.markCueOnset(performance.now());
  }
}

function onTrialState(msg: TrialStateMessage): void {
  if (msg.band) band = new BandModel(msg.band.motor_angles_deg);
  if (msg.target) target = msg.target;
  if (msg.phase === 'distractor') {
    cueIdPhase = 'distractor';
    const grid = makeDistractorGrid((msg.trial ?? 0) + 1);
    distractorEl.textContent =
      `count the letter ${grid.targetLetter}:  ` + grid.letters.join(' ');
    responseTimer.reset();
  } else if (msg.phase === 'respond') {
    cueIdPhase = 'respond';
    distractorEl.textContent = 'respond: arrows = direction, space = success';
  } else if (msg.phase === 'trial-done' || msg.phase === 'session-done') {
    cueIdPhase = 'idle';
    distractorEl.textContent = '';
    metricsEl.textContent = JSON.stringify(msg.outcome ?? {}, null, 2);
    if (msg.phase === 'session-done') {
      setStatus('cue-id session complete');
      metricsEl.textContent = JSON.stringify(msg.metrics ?? {}, null, 2);
    } else {
      client?.nextTrial();
    }
  } else if (msg.phase === 'done' || msg.phase === 'aborted') {
    setStatus(`trial ${msg.phase}; log: ${msg.log_path ?? '?'}`);
    metricsEl.textContent = JSON.stringify(msg.metrics ?? msg.outcome ?? {}, null, 2);
    if (controller) controller.done = true;
  }
}

function loop(nowMs: number): void {
  if (!client || !controller || controller.done) return;
  controller.tick(nowMs);
  if (target) {
    drawScene(sceneCtx, condition, target, controller.tool, DEFAULT_LAYOUT);
  }
  requestAnimationFrame(loop);
}

sceneCanvas.addEventListener('pointermove', (ev) => {
  const rect = sceneCanvas.getBoundingClientRect();
  controller?.pointerMoved(ev.clientX - rect.left, ev.clientY - rect.top);
});
sceneCanvas.addEventListener('wheel', (ev) => {
  ev.preventDefault();
  controller?.wheel(ev.deltaY);
});

window.addEventListener('keydown', (ev) => {
  if (protocol === 'guidance') {
    if (ev.key === 'Enter') controller?.declare(performance.now());
    if (ev.key === 'w' || ev.key === 'W') controller?.depthKey(true);
    if (ev.key === 's' || ev.key === 'S') controller?.depthKey(false);
    if (ev.key === 'Escape') controller?.abort(performance.now());
  } else if (cueIdPhase === 'respond' || cueIdPhase === 'distractor') {
    const cue = responseForKey(ev.key);
    if (cue && client) {
      const rt = responseTimer.rtSeconds(performance.now());
      client.respond(cue, rt ?? 0);
      ev.preventDefault();
    }
  }
});

$('connect').addEventListener('click', connect);
drawBand(bandCtx, band, bandCanvas.width / 2, bandCanvas.height / 2, 70);
setStatus('not connected');
