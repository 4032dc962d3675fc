// Outbound command pacing. 20 Hz is the protocol cap and must hold no
// matter how fast key-repeat events or timers fire.

export class CommandPacer {
  private lastMs = -Infinity;

  constructor(readonly minIntervalMs: number) {}

  due(nowMs: number): boolean {
    if (nowMs - this.lastMs < this.minIntervalMs) {
      return false;
    }
    this.lastMs = nowMs;
    return true;
  }
}
