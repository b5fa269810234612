#!/usr/bin/env python3
"""Run the session server against a scripted client that always picks the
cheapest room, printing the protocol transcript.

Usage: python scripts/scripted_session_demo.py [--problem sample_problems/interactive_demo.json]
"""

import argparse
import json
import threading

from fairrent.problems import load_problem, resolve_config
from fairrent.session import SessionClient, SessionServer, cheapest_room_policy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="sample_problems/interactive_demo.json")
    args = ap.parse_args()

    spec = load_problem(args.problem)
    server = SessionServer(spec, resolve_config(spec), port=0, once=True)
    server.start()
    print(f"server on port {server.port}")

    client = SessionClient("127.0.0.1", server.port)
    shown = 0

    def chatty(query):
        nonlocal shown
        rooms = cheapest_room_policy(query)
        if shown < 5:
            prices = {r: e["decimal"] for r, e in query["prices"].items()}
            print(f"  round {query['round']}: {query['agent']} sees {prices} -> picks {rooms}")
        elif shown == 5:
            print("  ...")
        shown += 1
        return rooms

    transcript, solution = client.run(chatty)
    client.close()
    server.shutdown()

    queries = sum(1 for m in transcript if m["type"] == "query")
    print(f"\n{queries} human queries, status {solution['status']}")
    print("prices:", {r: e["decimal"] for r, e in solution["prices"].items()})
    print("assignment:", json.dumps(solution["assignment"], sort_keys=True))


if __name__ == "__main__":
    main()
