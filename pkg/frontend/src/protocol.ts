/**
 * Wire protocol: length-prefixed JSON frames (4-byte big-endian size
 * header) and the session message vocabulary.  Mirrors the server's
 * contract exactly; every inbound message passes a structural guard
 * before the client acts on it.
 */

export const PROTOCOL = "fairrent-session/1";

export interface PriceEntry {
  rational: string;
  decimal: number;
  per_unit_rational: string;
  per_unit_decimal: number;
}

export interface SessionMessage {
  type: "session";
  session: string;
  protocol: string;
  variant: string;
  total_rent: string;
  rooms: Array<{ name: string; capacity: number }>;
  agents: string[];
  interactive_agents: string[];
}

export interface QueryMessage {
  type: "query";
  session: string;
  agent: string;
  round: number;
  prices: Record<string, PriceEntry>;
  auto_added: string[];
}

export interface ProgressMessage {
  type: "progress";
  session: string;
  mesh: number;
  cells: number;
  queries: number;
}

export interface ResultMessage {
  type: "result";
  session: string;
  solution: SolutionPayload;
}

export interface SolutionPayload {
  status: "exact" | "eps" | "failed";
  variant: string;
  prices: Record<string, { rational: string; decimal: number }> | null;
  per_unit_prices: Record<string, { rational: string; decimal: number }> | null;
  assignment: Record<string, string> | null;
  rooms: Array<{ name: string; capacity: number }>;
  certificate: {
    space: string;
    witnesses: Record<string, { room: string; price: Record<string, string> }>;
  } | null;
  diameter: { squared_rational: string; approx: number } | null;
  stats: Record<string, unknown>;
  [extra: string]: unknown;
}

export interface AbortedMessage {
  type: "aborted";
  session: string;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
  session?: string;
}

export type ServerMessage =
  | SessionMessage
  | QueryMessage
  | ProgressMessage
  | ResultMessage
  | AbortedMessage
  | ErrorMessage;

export interface AnswerMessage {
  type: "answer";
  session: string;
  agent: string;
  round: number;
  rooms: string[];
}

export interface HelloMessage {
  type: "hello";
  protocol: string;
  session: string | null;
}

export interface AbortMessage {
  type: "abort";
  session: string;
}

export type ClientMessage = HelloMessage | AnswerMessage | AbortMessage;

export function encodeFrame(message: object): Buffer {
  const body = Buffer.from(JSON.stringify(message), "utf8");
  const header = Buffer.alloc(4);
  header.writeUInt32BE(body.length, 0);
  return Buffer.concat([header, body]);
}

/** Incremental decoder: feed arbitrary chunks, collect whole messages. */
export class FrameDecoder {
  private buffer = Buffer.alloc(0);

  push(chunk: Buffer): ServerMessage[] {
    this.buffer = Buffer.concat([this.buffer, chunk]);
    const out: ServerMessage[] = [];
    for (;;) {
      if (this.buffer.length < 4) {
        return out;
      }
      const size = this.buffer.readUInt32BE(0);
      if (this.buffer.length < 4 + size) {
        return out;
      }
      const body = this.buffer.subarray(4, 4 + size).toString("utf8");
      this.buffer = this.buffer.subarray(4 + size);
      out.push(parseServerMessage(body));
    }
  }
}

export function parseServerMessage(body: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(body);
  } catch (e) {
    throw new Error(`undecodable frame: ${String(e)}`);
  }
  if (typeof data !== "object" || data === null || !("type" in data)) {
    throw new Error("message must be an object with a 'type'");
  }
  const message = data as Record<string, unknown>;
  switch (message.type) {
    case "session":
      expectFields(message, ["session", "rooms", "agents", "interactive_agents"]);
      break;
    case "query":
      expectFields(message, ["session", "agent", "round", "prices", "auto_added"]);
      break;
    case "progress":
      expectFields(message, ["session", "mesh", "cells", "queries"]);
      break;
    case "result":
      expectFields(message, ["session", "solution"]);
      break;
    case "aborted":
      expectFields(message, ["session"]);
      break;
    case "error":
      expectFields(message, ["code", "message"]);
      break;
    default:
      throw new Error(`unsupported message type ${JSON.stringify(message.type)}`);
  }
  return message as unknown as ServerMessage;
}

function expectFields(message: Record<string, unknown>, fields: string[]): void {
  for (const field of fields) {
    if (!(field in message)) {
      throw new Error(`${String(message.type)} message lacks '${field}'`);
    }
  }
}
