/**
 * Idiomatic adapter over the mask-session protocol.
 *
 * A {@link MaskSession} is a per-sequence score processor: `processScores`
 * masks a score vector to the grammar-allowed set without touching session
 * state, and `commitToken` advances the state with whatever token the caller
 * selected.  Keeping those two calls separate lets generation stacks that
 * sample (rather than argmax) commit their own choice.
 *
 * Sessions are not shareable across concurrent callers; the compiled grammar
 * behind them is immutable and shared inside the engine.
 */

import { EngineError, Transport, type TransportOptions } from "./protocol.js";

export class ClosedSessionError extends Error {
  constructor() {
    super("session is closed");
    this.name = "ClosedSessionError";
  }
}

export class MaskSession {
  private live = true;

  constructor(
    private readonly transport: Transport,
    readonly handle: number,
  ) {}

  private assertLive(): void {
    if (!this.live) throw new ClosedSessionError();
  }

  /** Mask one score vector; does NOT advance the session. */
  async processScores(scores: readonly number[]): Promise<number[]> {
    this.assertLive();
    const response = await this.transport.call({
      op: "process",
      handle: this.handle,
      scores: [...scores],
    });
    return response.scores ?? [];
  }

  /** Advance with the caller-selected token; resolves to the terminal flag. */
  async commitToken(token: number): Promise<boolean> {
    this.assertLive();
    const response = await this.transport.call({
      op: "commit",
      handle: this.handle,
      token,
    });
    return response.terminal ?? false;
  }

  async close(): Promise<void> {
    if (!this.live) return;
    this.live = false;
    await this.transport.call({ op: "close", handle: this.handle });
  }
}

export interface EngineOptions extends TransportOptions {}

/**
 * One engine process with a fixed vocabulary, handing out mask sessions.
 */
export class Engine {
  private constructor(private readonly transport: Transport) {}

  static launch(vocabPath: string, options: EngineOptions = {}): Engine {
    return new Engine(new Transport(vocabPath, options));
  }

  /** Open a decode session for one sentence against the given type labels. */
  async openSession(sentence: readonly number[], types: readonly string[]): Promise<MaskSession> {
    const response = await this.transport.call({
      op: "open",
      sentence: [...sentence],
      types: [...types],
    });
    if (typeof response.handle !== "number") {
      throw new EngineError(2, "engine returned no session handle");
    }
    return new MaskSession(this.transport, response.handle);
  }

  async shutdown(): Promise<void> {
    await this.transport.shutdown();
  }
}
