/**
 * Drive a full elicitation session: connect, render each query, submit
 * the selection produced by an answer source (scripted policy or human
 * prompt), render progress and the final result.  Reconnects by session
 * id when the connection drops mid-run; a query re-issued after a resume
 * is answered but recorded and rendered only once.
 */

import { QueryMessage, ServerMessage, SolutionPayload } from "./protocol.js";
import { SessionClient } from "./client.js";
import {
  QueryView,
  View,
  buildProgressView,
  buildQueryView,
  buildResultView,
} from "./views.js";

export type AnswerSource = (view: QueryView, query: QueryMessage) => Promise<string[]> | string[];

/** Thrown by an answer source when the human asks to abandon the session. */
export class AbortRequested extends Error {
  constructor() {
    super("abort requested");
  }
}

export interface RunOptions {
  host: string;
  port: number;
  answerSource: AnswerSource;
  /** Resume an existing session instead of opening a new one. */
  resume?: string;
  /** Reconnect attempts after an unexpected connection loss. */
  reconnectAttempts?: number;
  onView?: (view: View) => void;
}

export interface RunOutcome {
  transcript: ServerMessage[];
  views: View[];
  solution: SolutionPayload | null;
  aborted: boolean;
  sessionId: string;
}

export async function runSession(options: RunOptions): Promise<RunOutcome> {
  const transcript: ServerMessage[] = [];
  const views: View[] = [];
  const answeredQueries = new Set<string>();
  let solution: SolutionPayload | null = null;
  let aborted = false;
  let sessionId: string | null = options.resume ?? null;
  let firstConnection = true;
  let attemptsLeft = options.reconnectAttempts ?? 2;

  const emit = (view: View) => {
    views.push(view);
    options.onView?.(view);
  };

  connection: for (;;) {
    const client = new SessionClient();
    const info = await client.connect(options.host, options.port, sessionId);
    if (firstConnection) {
      transcript.push(info);
      firstConnection = false;
    }
    sessionId = info.session;

    for (;;) {
      const message = await client.next();
      if (message === null) {
        if (solution || aborted || attemptsLeft-- <= 0) {
          break connection;
        }
        continue connection; // resume by session id
      }
      switch (message.type) {
        case "query": {
          const key = `${message.agent}#${message.round}`;
          const view = buildQueryView(info, message);
          if (!answeredQueries.has(key)) {
            transcript.push(message);
            emit(view);
          }
          let rooms: string[];
          try {
            rooms = await options.answerSource(view, message);
          } catch (err) {
            if (err instanceof AbortRequested) {
              client.abort();
              break; // stay in the loop until the server confirms
            }
            throw err;
          }
          if (rooms.length === 0) {
            // the submit control stays disabled for an empty selection;
            // an empty answer is never sent
            throw new Error("answer source produced an empty selection");
          }
          client.answer(message, rooms);
          answeredQueries.add(key);
          break;
        }
        case "progress":
          transcript.push(message);
          emit(buildProgressView(message));
          break;
        case "result":
          transcript.push(message);
          solution = message.solution;
          emit(buildResultView(info, message));
          client.close();
          break connection;
        case "aborted":
          transcript.push(message);
          aborted = true;
          client.close();
          break connection;
        case "error":
          transcript.push(message);
          if (message.code === "empty-answer" || message.code === "invalid-rooms") {
            if (client.pendingQuery) {
              client.allowResubmit(client.pendingQuery);
            }
          }
          break;
        default:
          break;
      }
    }
  }
  return { transcript, views, solution, aborted, sessionId: sessionId ?? "" };
}
