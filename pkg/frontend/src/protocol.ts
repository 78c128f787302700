/**
 * Wire protocol for the mask-session service.
 *
 * The engine side speaks newline-delimited JSON on stdin/stdout: flat score
 * arrays, integer session handles, integer error codes.  Responses arrive in
 * request order, so requests may be pipelined over one FIFO.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

export const ERROR_CODES = {
  badRequest: 1,
  engine: 2,
  unknownHandle: 3,
  lengthMismatch: 4,
  disallowedToken: 5,
} as const;

export type Request =
  | { op: "open"; sentence: number[]; types: string[] }
  | { op: "process"; handle: number; scores: number[] }
  | { op: "commit"; handle: number; token: number }
  | { op: "close"; handle: number }
  | { op: "shutdown" };

export interface OkResponse {
  ok: true;
  handle?: number;
  scores?: number[];
  terminal?: boolean;
  bye?: boolean;
}

export interface ErrResponse {
  ok: false;
  code: number;
  error: string;
}

export type Response = OkResponse | ErrResponse;

/** Engine-reported failure, carrying the protocol's integer error code. */
export class EngineError extends Error {
  readonly code: number;

  constructor(code: number, message: string) {
    super(message);
    this.name = "EngineError";
    this.code = code;
  }
}

export interface TransportOptions {
  /** Interpreter used to launch the engine (default: `python3`). */
  python?: string;
  /** Extra arguments placed before `-m inerd serve`. */
  pythonArgs?: string[];
}

/**
 * Owns the engine child process and matches responses to requests by order.
 */
export class Transport {
  private readonly child: ChildProcessWithoutNullStreams;
  private readonly lines: Interface;
  private readonly pending: Array<{
    resolve: (response: Response) => void;
    reject: (error: Error) => void;
  }> = [];
  private closed = false;
  private stderrTail = "";

  constructor(vocabPath: string, options: TransportOptions = {}) {
    const python = options.python ?? process.env["INERD_PYTHON"] ?? "python3";
    const args = [
      ...(options.pythonArgs ?? []),
      "-m",
      "inerd",
      "serve",
      "--vocab",
      vocabPath,
    ];
    this.child = spawn(python, args, { stdio: ["pipe", "pipe", "pipe"] });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    this.child.stderr.on("data", (chunk: Buffer) => {
      this.stderrTail = (this.stderrTail + chunk.toString()).slice(-2000);
    });
    this.child.on("exit", () => this.failPending());
    this.child.on("error", () => this.failPending());
  }

  private onLine(line: string): void {
    const waiter = this.pending.shift();
    if (!waiter) return; // unsolicited output; nothing to pair it with
    try {
      waiter.resolve(JSON.parse(line) as Response);
    } catch (error) {
      waiter.reject(new Error(`unparseable engine response: ${line}`));
    }
  }

  private failPending(): void {
    this.closed = true;
    const reason = new Error(
      `engine process ended${this.stderrTail ? `: ${this.stderrTail.trim()}` : ""}`,
    );
    while (this.pending.length > 0) {
      this.pending.shift()?.reject(reason);
    }
  }

  /** Send one request; resolves with the paired response (ok or error). */
  request(request: Request): Promise<Response> {
    if (this.closed) {
      return Promise.reject(new Error("transport is closed"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.child.stdin.write(JSON.stringify(request) + "\n");
    });
  }

  /** Send a request and unwrap it, throwing {@link EngineError} on failure. */
  async call(request: Request): Promise<OkResponse> {
    const response = await this.request(request);
    if (!response.ok) {
      throw new EngineError(response.code, response.error);
    }
    return response;
  }

  async shutdown(): Promise<void> {
    if (this.closed) return;
    try {
      await this.call({ op: "shutdown" });
    } catch {
      // already going down; the kill below is the backstop
    }
    this.closed = true;
    this.lines.close();
    this.child.stdin.end();
    this.child.kill();
  }
}
