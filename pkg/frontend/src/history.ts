// Score history behind the strip chart. The buffer is a fixed-size ring so
// a long session can never grow the client's memory.

export class RingBuffer<T> {
  private slots: (T | undefined)[];
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (!Number.isInteger(capacity) || capacity <= 0) {
      throw new Error("capacity must be a positive integer");
    }
    this.slots = new Array(capacity);
  }

  get length(): number {
    return this.count;
  }

  push(item: T): void {
    this.slots[this.head] = item;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) {
      this.count += 1;
    }
  }

  // Oldest to newest.
  toArray(): T[] {
    const out: T[] = [];
    const start = (this.head - this.count + this.capacity) % this.capacity;
    for (let i = 0; i < this.count; i++) {
      out.push(this.slots[(start + i) % this.capacity] as T);
    }
    return out;
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }
}

export interface ScoreSample {
  t: number;
  w: number | null;
  wHat: number | null;
  hMin: Record<string, number | null>;
}

// State frames arrive at 30 Hz, so 1200 slots comfortably cover 30 s.
export class ScoreHistory {
  private ring: RingBuffer<ScoreSample>;
  private lastT = -Infinity;

  constructor(readonly windowSeconds = 30, capacity = 1200) {
    this.ring = new RingBuffer(capacity);
  }

  push(sample: ScoreSample): void {
    // Sim time running backwards means the server restarted; stale samples
    // from the old session would otherwise sit in the window forever.
    if (sample.t < this.lastT) {
      this.ring.clear();
    }
    this.lastT = sample.t;
    this.ring.push(sample);
  }

  // Samples inside the trailing window, oldest first.
  samples(): ScoreSample[] {
    const all = this.ring.toArray();
    if (all.length === 0) {
      return all;
    }
    const cutoff = all[all.length - 1].t - this.windowSeconds;
    return all.filter((s) => s.t >= cutoff);
  }

  get length(): number {
    return this.ring.length;
  }
}
