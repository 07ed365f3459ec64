/**
 * Cue-identification trial flow on the client: the letter-count distractor
 * grid and the keyed response mapping (arrows for directions, space for the
 * success burst). Trial composition and scoring live server-side.
 */

export const RESPONSE_KEYS: Record<string, string> = {
  ArrowLeft: 'Left',
  ArrowRight: 'Right',
  ArrowUp: 'Up',
  ArrowDown: 'Down',
  ' ': 'Success',
  Space: 'Success',
};

export function responseForKey(key: string): string | null {
  return RESPONSE_KEYS[key] ?? null;
}

export interface DistractorGrid {
  letters: string[];
  targetLetter: string;
  targetCount: number;
}

const LETTERS = 'ABCDEFGHJKLMNPRSTUVWXYZ';

/** Deterministic letter grid for the 2 s visual-search distractor.
 * A simple LCG keeps the grid reproducible per (session, trial). */
export function makeDistractorGrid(seed: number, size = 36): DistractorGrid {
  let state = (seed >>> 0) || 1;
  const next = () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
  const letters: string[] = [];
  for (let i = 0; i < size; i++) {
    letters.push(LETTERS[Math.floor(next() * LETTERS.length)]);
  }
  const targetLetter = LETTERS[Math.floor(next() * LETTERS.length)];
  const targetCount = letters.filter((l) => l === targetLetter).length;
  return { letters, targetLetter, targetCount };
}

export class ResponseTimer {
  private cueOnsetMs: number | null = null;

  markCueOnset(nowMs: number): void {
    this.cueOnsetMs = nowMs;
  }

  /** Seconds since cue onset; null before any cue played. Keyed responses
   * are not comparable to spoken-response times and are reported as their
   * own measure. */
  rtSeconds(nowMs: number): number | null {
    if (this.cueOnsetMs === null) return null;
    return Math.max(0, (nowMs - this.cueOnsetMs) / 1000);
  }

  reset(): void {
    this.cueOnsetMs = null;
  }
}
