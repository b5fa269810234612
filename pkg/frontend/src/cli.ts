#!/usr/bin/env node
/**
 * Terminal client for an elicitation session.
 *
 *   node dist/cli.js --host 127.0.0.1 --port 7777              # human mode
 *   node dist/cli.js --port 7777 --policy cheapest             # scripted
 *   node dist/cli.js --port 7777 --resume s1                   # reattach
 */

import * as readline from "node:readline/promises";
import { stdin, stdout } from "node:process";
import { AbortRequested, runSession } from "./runSession.js";
import { cheapestRoom, cheapestPerUnit } from "./policies.js";
import { QueryView, renderQueryText, renderResultText } from "./views.js";

function argValue(flag: string): string | undefined {
  const index = process.argv.indexOf(flag);
  return index >= 0 ? process.argv[index + 1] : undefined;
}

async function promptHuman(view: QueryView): Promise<string[]> {
  const rl = readline.createInterface({ input: stdin, output: stdout });
  try {
    for (;;) {
      stdout.write(renderQueryText(view) + "\n");
      const raw = await rl.question("rooms (comma-separated, or 'abort')> ");
      if (raw.trim() === "abort") {
        throw new AbortRequested();
      }
      const picked = raw
        .split(",")
        .map((s) => s.trim())
        .filter(Boolean);
      const valid = picked.every((room) => view.selectableRooms.includes(room));
      if (picked.length > 0 && valid) {
        return picked;
      }
      stdout.write("pick at least one of the listed rooms\n");
    }
  } finally {
    rl.close();
  }
}

async function main(): Promise<void> {
  const host = argValue("--host") ?? "127.0.0.1";
  const port = Number(argValue("--port") ?? "7777");
  const policy = argValue("--policy");
  const answerSource =
    policy === "cheapest"
      ? cheapestRoom
      : policy === "cheapest-per-unit"
        ? cheapestPerUnit
        : promptHuman;

  const outcome = await runSession({
    host,
    port,
    answerSource,
    resume: argValue("--resume"),
    onView: (view) => {
      if (view.kind === "progress") {
        stdout.write(`  ... mesh ${view.mesh}, ${view.cells} cells, ${view.queries} queries\n`);
      } else if (view.kind === "result") {
        stdout.write("\n" + renderResultText(view) + "\n");
      }
    },
  });
  if (outcome.aborted) {
    stdout.write("session aborted\n");
    process.exitCode = 1;
  } else if (!outcome.solution) {
    stdout.write("connection lost without a result\n");
    process.exitCode = 1;
  }
}

main().catch((err) => {
  console.error(String(err));
  process.exitCode = 1;
});
