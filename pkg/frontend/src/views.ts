/**
 * Pure view construction: protocol messages in, render-ready view models
 * out.  Nothing here touches sockets or state, so replaying a transcript
 * rebuilds byte-identical views — that property is load-bearing for the
 * tests and for reconnect (the re-issued query renders exactly as the
 * lost one did).
 */

import {
  QueryMessage,
  ResultMessage,
  SessionMessage,
  ServerMessage,
  SolutionPayload,
} from "./protocol.js";
import { ONE, ZERO, add, equals, parseRational } from "./rational.js";

export interface RoomCard {
  room: string;
  capacity: number;
  totalPrice: string;
  totalPriceDecimal: number;
  perUnitPrice: string;
  perUnitPriceDecimal: number;
  autoAdded: boolean;
}

export interface QueryView {
  kind: "query";
  agent: string;
  round: number;
  cards: RoomCard[];
  autoAddedRooms: string[];
  selectableRooms: string[];
}

export interface ResultView {
  kind: "result";
  status: "exact" | "eps" | "failed";
  statusBadge: string;
  prices: Array<{ room: string; price: string; decimal: number }>;
  roomsTable: Array<{ room: string; capacity: number; occupants: string[] }>;
  certificateSummary: string;
}

export interface ProgressView {
  kind: "progress";
  mesh: number;
  cells: number;
  queries: number;
}

export type View = QueryView | ResultView | ProgressView;

export function buildQueryView(session: SessionMessage, query: QueryMessage): QueryView {
  let total = ZERO;
  const cards: RoomCard[] = session.rooms.map(({ name, capacity }) => {
    const entry = query.prices[name];
    if (!entry) {
      throw new Error(`query lacks a price for room ${name}`);
    }
    total = add(total, parseRational(entry.rational));
    return {
      room: name,
      capacity,
      totalPrice: entry.rational,
      totalPriceDecimal: entry.decimal,
      perUnitPrice: entry.per_unit_rational,
      perUnitPriceDecimal: entry.per_unit_decimal,
      autoAdded: query.auto_added.includes(name),
    };
  });
  if (!equals(total, ONE)) {
    throw new Error(`queried prices sum to ${total.num}/${total.den}, not the whole rent`);
  }
  if (cards.length === 0) {
    throw new Error("no rooms to select");
  }
  return {
    kind: "query",
    agent: query.agent,
    round: query.round,
    cards,
    autoAddedRooms: [...query.auto_added].sort(),
    selectableRooms: cards.map((c) => c.room),
  };
}

export function buildResultView(session: SessionMessage, result: ResultMessage): ResultView {
  const solution = result.solution;
  const status = solution.status;
  const roomsTable = session.rooms.map(({ name, capacity }) => ({
    room: name,
    capacity,
    occupants: occupantsOf(solution, name),
  }));
  for (const row of roomsTable) {
    if (solution.assignment && row.occupants.length !== row.capacity) {
      throw new Error(
        `room ${row.room} shows ${row.occupants.length} occupants for capacity ${row.capacity}`,
      );
    }
  }
  return {
    kind: "result",
    status,
    statusBadge: badge(solution),
    prices: session.rooms.map(({ name }) => ({
      room: name,
      price: solution.prices ? solution.prices[name]!.rational : "-",
      decimal: solution.prices ? solution.prices[name]!.decimal : NaN,
    })),
    roomsTable,
    certificateSummary: certificateSummary(solution),
  };
}

function occupantsOf(solution: SolutionPayload, room: string): string[] {
  if (!solution.assignment) {
    return [];
  }
  return Object.entries(solution.assignment)
    .filter(([, r]) => r === room)
    .map(([agent]) => agent)
    .sort();
}

function badge(solution: SolutionPayload): string {
  if (solution.status === "exact") {
    return "exact";
  }
  if (solution.status === "eps") {
    const approx = solution.diameter ? solution.diameter.approx : NaN;
    return `ε-certificate (cell diameter ≤ ${approx})`;
  }
  return "failed";
}

function certificateSummary(solution: SolutionPayload): string {
  if (!solution.certificate) {
    return "no certificate";
  }
  const witnesses = Object.keys(solution.certificate.witnesses).length;
  return `${witnesses} agents witnessed in ${solution.certificate.space} coordinates`;
}

export function buildProgressView(message: { mesh: number; cells: number; queries: number }): ProgressView {
  return { kind: "progress", mesh: message.mesh, cells: message.cells, queries: message.queries };
}

/** Rebuild every view a client would have rendered for a transcript. */
export function replayViews(transcript: ServerMessage[]): View[] {
  let session: SessionMessage | null = null;
  const views: View[] = [];
  for (const message of transcript) {
    switch (message.type) {
      case "session":
        session = message;
        break;
      case "query":
        if (!session) throw new Error("query before session info");
        views.push(buildQueryView(session, message));
        break;
      case "progress":
        views.push(buildProgressView(message));
        break;
      case "result":
        if (!session) throw new Error("result before session info");
        views.push(buildResultView(session, message));
        break;
      default:
        break;
    }
  }
  return views;
}

export function renderQueryText(view: QueryView): string {
  const lines = [
    `Round ${view.round} — ${view.agent}, which room(s) do you like best?`,
  ];
  for (const card of view.cards) {
    const auto = card.autoAdded ? "  [free — added automatically]" : "";
    const unit =
      card.capacity > 1
        ? `  (${card.perUnitPrice} ≈ ${card.perUnitPriceDecimal.toFixed(4)} each for ${card.capacity} people)`
        : "";
    lines.push(
      `  ${card.room}: rent ${card.totalPrice} ≈ ${card.totalPriceDecimal.toFixed(4)}${unit}${auto}`,
    );
  }
  lines.push("Pick at least one room (ties welcome).");
  return lines.join("\n");
}

export function renderResultText(view: ResultView): string {
  const lines = [`Status: ${view.statusBadge}`];
  for (const { room, price, decimal } of view.prices) {
    lines.push(`  ${room}: ${price}${Number.isNaN(decimal) ? "" : ` ≈ ${decimal.toFixed(4)}`}`);
  }
  for (const row of view.roomsTable) {
    lines.push(
      `  ${row.room} [${row.occupants.length}/${row.capacity}]: ${row.occupants.join(", ") || "-"}`,
    );
  }
  lines.push(`Certificate: ${view.certificateSummary}`);
  return lines.join("\n");
}
