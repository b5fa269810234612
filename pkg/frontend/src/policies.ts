/**
 * Scripted answer policies for headless runs and tests.  A policy is an
 * AnswerSource: it sees the rendered view (never raw sockets) and returns
 * an explicit selection, so scripted runs exercise the same path a human
 * submission takes.
 */

import { QueryView } from "./views.js";
import { compare, parseRational } from "./rational.js";

/** Always pick the single cheapest room (by total price, name-tiebreak). */
export function cheapestRoom(view: QueryView): string[] {
  const best = [...view.cards].sort((a, b) => {
    const byPrice = compare(parseRational(a.totalPrice), parseRational(b.totalPrice));
    return byPrice !== 0 ? byPrice : a.room.localeCompare(b.room);
  })[0]!;
  return [best.room];
}

/** Pick the cheapest per-unit room — what a roommate actually pays. */
export function cheapestPerUnit(view: QueryView): string[] {
  const best = [...view.cards].sort((a, b) => {
    const byPrice = compare(parseRational(a.perUnitPrice), parseRational(b.perUnitPrice));
    return byPrice !== 0 ? byPrice : a.room.localeCompare(b.room);
  })[0]!;
  return [best.room];
}

/**
 * Quasilinear taste: fixed room values (rationals as strings), demand is
 * the set of rooms maximizing value minus per-unit price, ties included.
 */
export function quasilinearTaste(values: Record<string, string>): (view: QueryView) => string[] {
  return (view) => {
    const utilities = view.cards.map((card) => {
      const value = parseRational(values[card.room] ?? "0");
      const price = parseRational(card.perUnitPrice);
      return {
        room: card.room,
        utility: { num: value.num * price.den - price.num * value.den, den: value.den * price.den },
      };
    });
    let best = utilities[0]!;
    for (const u of utilities) {
      if (compare(u.utility, best.utility) > 0) {
        best = u;
      }
    }
    return utilities
      .filter((u) => compare(u.utility, best.utility) === 0)
      .map((u) => u.room)
      .sort();
  };
}
