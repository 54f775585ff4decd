/**
 * Debounced render scheduling with last-write-wins.
 *
 * Slider scrubbing fires dozens of change events; we wait for the hand to
 * settle (default 150 ms), then send one render with the full gain vector.
 * Responses carry a monotonic request id -- a result is applied only while
 * it is still the newest request, so a slow early render can never stomp
 * a newer one.
 */
export class RenderScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private newestId = 0;
  private pending = 0;

  constructor(
    private readonly render: (gains: number[]) => Promise<Blob>,
    private readonly apply: (blob: Blob, requestedAt: number) => void,
    private readonly onError: (err: unknown) => void = () => {},
    private readonly delayMs: number = 150,
  ) {}

  /** Schedule a render; supersedes any render still waiting to fire. */
  request(gains: number[]): void {
    const snapshot = [...gains];
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(snapshot);
    }, this.delayMs);
  }

  /** Skip the debounce wait -- used for the first render after load. */
  requestNow(gains: number[]): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    void this.fire([...gains]);
  }

  /** True while a request is debouncing or in flight. */
  get busy(): boolean {
    return this.timer !== null || this.pending > 0;
  }

  private async fire(gains: number[]): Promise<void> {
    const id = ++this.newestId;
    const requestedAt = Date.now();
    this.pending += 1;
    try {
      const blob = await this.render(gains);
      if (id === this.newestId) this.apply(blob, requestedAt);
    } catch (err) {
      if (id === this.newestId) this.onError(err);
    } finally {
      this.pending -= 1;
    }
  }
}
