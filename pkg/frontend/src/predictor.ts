// Debounced live prediction with at most one request in flight and
// sequence-numbered responses so an out-of-order reply can never
// overwrite a newer one.

import type { ApiClient, Offsets, PredictResponse } from './api.js';

export class LivePredictor {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;
  private inFlight = false;
  private queued: Offsets | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onResult: (x: Offsets, r: PredictResponse) => void,
    private readonly onError: (err: unknown) => void,
    private readonly delayMs = 150,
  ) {}

  /** Schedule a prediction for the latest offsets; earlier pending ones collapse. */
  request(x: Offsets): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.dispatch(x);
    }, this.delayMs);
  }

  private dispatch(x: Offsets): void {
    if (this.inFlight) {
      this.queued = x;
      return;
    }
    const mySeq = ++this.seq;
    this.inFlight = true;
    this.api
      .predict(x)
      .then((r) => {
        if (mySeq === this.seq) {
          this.onResult(x, r);
        }
        // a stale reply (mySeq < this.seq) is silently dropped
      })
      .catch((err) => {
        if (mySeq === this.seq) {
          this.onError(err);
        }
      })
      .finally(() => {
        this.inFlight = false;
        if (this.queued !== null) {
          const next = this.queued;
          this.queued = null;
          this.dispatch(next);
        }
      });
  }
}
