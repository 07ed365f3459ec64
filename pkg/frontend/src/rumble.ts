/**
 * Best-effort physical stand-in: forwards the frame stream to a connected
 * gamepad's rumble actuator. One rumble channel cannot reproduce six
 * motors, so magnitude is the max over channels; the authoritative record
 * stays the 6-channel frame log on the server.
 */

export function rumbleFromFrame(intensity: number[]): void {
  if (typeof navigator === 'undefined' || !navigator.getGamepads) return;
  const magnitude = Math.max(...intensity) / 255;
  for (const pad of navigator.getGamepads()) {
    if (!pad) continue;
    const actuator = (pad as unknown as { vibrationActuator?: { playEffect?: Function } })
      .vibrationActuator;
    if (actuator && typeof actuator.playEffect === 'function') {
      try {
        actuator.playEffect('dual-rumble', {
          startDelay: 0,
          duration: 20,
          weakMagnitude: magnitude,
          strongMagnitude: magnitude,
        });
      } catch {
        // Rumble unavailable; the on-screen band is the fallback.
      }
    }
  }
}
