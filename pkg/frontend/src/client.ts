/**
 * Session client: a strictly sequential state machine mirroring the
 * server's single in-flight query.  Answers only ever come from an
 * explicit selection (human or scripted policy); the client never
 * fabricates one.  Duplicate submissions for the same query are blocked,
 * and a dropped connection can be resumed by session id — the server
 * re-issues the pending query.
 */

import * as net from "node:net";
import {
  AnswerMessage,
  FrameDecoder,
  PROTOCOL,
  QueryMessage,
  ServerMessage,
  SessionMessage,
  encodeFrame,
} from "./protocol.js";

export interface ClientEvents {
  onMessage?: (message: ServerMessage) => void;
  onClose?: () => void;
}

export class SessionClient {
  private socket: net.Socket | null = null;
  private decoder = new FrameDecoder();
  private queue: ServerMessage[] = [];
  private waiters: Array<(m: ServerMessage | null) => void> = [];
  private closed = false;
  private answeredRounds = new Set<string>();
  sessionInfo: SessionMessage | null = null;
  pendingQuery: QueryMessage | null = null;

  constructor(private events: ClientEvents = {}) {}

  async connect(host: string, port: number, session: string | null = null): Promise<SessionMessage> {
    await this.dial(host, port, session);
    const first = await this.next();
    if (!first || first.type !== "session") {
      const detail = first && first.type === "error" ? `${first.code}: ${first.message}` : "connection closed";
      throw new Error(`handshake failed: ${detail}`);
    }
    this.sessionInfo = first;
    return first;
  }

  private dial(host: string, port: number, session: string | null): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port, noDelay: true }, () => {
        socket.write(encodeFrame({ type: "hello", protocol: PROTOCOL, session }));
        resolve();
      });
      socket.on("data", (chunk) => {
        for (const message of this.decoder.push(chunk)) {
          if (message.type === "query") {
            this.pendingQuery = message;
          }
          this.events.onMessage?.(message);
          const waiter = this.waiters.shift();
          if (waiter) {
            waiter(message);
          } else {
            this.queue.push(message);
          }
        }
      });
      socket.on("error", (err) => {
        if (!this.closed) reject(err);
        this.teardown();
      });
      socket.on("close", () => this.teardown());
      this.socket = socket;
    });
  }

  private teardown(): void {
    if (this.closed) return;
    this.closed = true;
    this.events.onClose?.();
    for (const waiter of this.waiters.splice(0)) {
      waiter(null);
    }
  }

  /** Next server message, or null once the connection is gone. */
  next(): Promise<ServerMessage | null> {
    const queued = this.queue.shift();
    if (queued !== undefined) {
      return Promise.resolve(queued);
    }
    if (this.closed) {
      return Promise.resolve(null);
    }
    return new Promise((resolve) => this.waiters.push(resolve));
  }

  /**
   * Submit the human's (or policy's) selection for the pending query.
   * Rejects empty selections and repeated submissions for the same round.
   */
  answer(query: QueryMessage, rooms: string[]): void {
    if (!this.socket || this.closed) {
      throw new Error("not connected");
    }
    if (rooms.length === 0) {
      throw new Error("select at least one room before submitting");
    }
    const key = `${query.agent}#${query.round}`;
    if (this.answeredRounds.has(key)) {
      throw new Error(`round ${query.round} for ${query.agent} was already submitted`);
    }
    this.answeredRounds.add(key);
    const message: AnswerMessage = {
      type: "answer",
      session: query.session,
      agent: query.agent,
      round: query.round,
      rooms: [...rooms].sort(),
    };
    this.socket.write(encodeFrame(message));
    if (this.pendingQuery === query) {
      this.pendingQuery = null;
    }
  }

  /** A rejected answer lets the same round be resubmitted. */
  allowResubmit(query: QueryMessage): void {
    this.answeredRounds.delete(`${query.agent}#${query.round}`);
  }

  canSubmit(query: QueryMessage, selection: string[]): boolean {
    return (
      selection.length > 0 && !this.answeredRounds.has(`${query.agent}#${query.round}`)
    );
  }

  abort(): void {
    if (this.socket && !this.closed && this.sessionInfo) {
      this.socket.write(encodeFrame({ type: "abort", session: this.sessionInfo.session }));
    }
  }

  close(): void {
    this.socket?.destroy();
    this.teardown();
  }

  get isClosed(): boolean {
    return this.closed;
  }
}
