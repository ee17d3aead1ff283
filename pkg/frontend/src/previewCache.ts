/**
 * Per-frame preview bytes keyed by (frame, revision).
 *
 * The contract: a lookup hands back bytes only when they were fetched under
 * exactly the revision the caller believes in, so a displayed preview can
 * never be staler than the latest acknowledged server revision. Stores keep
 * the newest revision per frame and silently refuse to regress.
 */

export class PreviewCache {
  private readonly entries = new Map<
    number,
    { revision: number; bytes: Uint8Array }
  >();

  get(frame: number, revision: number): Uint8Array | undefined {
    const entry = this.entries.get(frame);
    if (entry === undefined || entry.revision !== revision) {
      return undefined;
    }
    return entry.bytes;
  }

  put(frame: number, revision: number, bytes: Uint8Array): void {
    const entry = this.entries.get(frame);
    if (entry !== undefined && entry.revision > revision) {
      return; // a newer fetch already landed; never regress
    }
    this.entries.set(frame, { revision, bytes });
  }

  has(frame: number, revision: number): boolean {
    return this.get(frame, revision) !== undefined;
  }

  clear(): void {
    this.entries.clear();
  }

  get size(): number {
    return this.entries.size;
  }
}
