/**
 * Minimal exact rational arithmetic over the protocol's "a/b" strings.
 * Prices must be compared and summed exactly — the server normalizes the
 * total rent to 1 and the views assert that invariant, so float rounding
 * is not acceptable here.
 */

export interface Rational {
  num: bigint;
  den: bigint;
}

function gcd(a: bigint, b: bigint): bigint {
  a = a < 0n ? -a : a;
  b = b < 0n ? -b : b;
  while (b) {
    [a, b] = [b, a % b];
  }
  return a;
}

export function parseRational(text: string): Rational {
  const match = /^(-?\d+)(?:\/(\d+))?$/.exec(text.trim());
  if (!match) {
    throw new Error(`not a rational: ${JSON.stringify(text)}`);
  }
  const num = BigInt(match[1]!);
  const den = match[2] === undefined ? 1n : BigInt(match[2]);
  if (den === 0n) {
    throw new Error(`zero denominator in ${text}`);
  }
  return normalize({ num, den });
}

function normalize(r: Rational): Rational {
  const g = gcd(r.num, r.den) || 1n;
  return { num: r.num / g, den: r.den / g };
}

export function add(a: Rational, b: Rational): Rational {
  return normalize({ num: a.num * b.den + b.num * a.den, den: a.den * b.den });
}

export function compare(a: Rational, b: Rational): number {
  const diff = a.num * b.den - b.num * a.den;
  return diff < 0n ? -1 : diff > 0n ? 1 : 0;
}

export function equals(a: Rational, b: Rational): boolean {
  return compare(a, b) === 0;
}

export const ZERO: Rational = { num: 0n, den: 1n };
export const ONE: Rational = { num: 1n, den: 1n };

export function formatRational(r: Rational): string {
  return r.den === 1n ? `${r.num}` : `${r.num}/${r.den}`;
}

export function toNumber(r: Rational): number {
  return Number(r.num) / Number(r.den);
}
