"""Socket session server driving interactive preference elicitation.

Transport: length-prefixed JSON frames (4-byte big-endian size, then the
UTF-8 body) over TCP, so any client stack can speak it.

    client -> server   hello {protocol, session?}        attach or resume
                       answer {session, agent, round, rooms[>=1]}
                       abort {session}
    server -> client   session {session, variant, rooms, agents, ...}
                       query {session, agent, round, prices, auto_added}
                       progress {session, mesh, cells, queries}
                       result {session, solution}
                       aborted {session}
                       error {code, message, ...}

One solver runs per session, strictly sequentially: at most one query is
pending at a time, and the answer cache inside each interactive oracle
guarantees the same (agent, price) is never asked twice.  Sessions are
numbered deterministically and survive reconnects: a client that lost
its connection sends hello with the session id and the pending query is
re-issued.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import struct
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from fairrent.problems import (
    ProblemSpec,
    collect_elicited,
    point_rationals,
    solution_to_dict,
    solve_spec,
)
from fairrent.simplex import PriceVector
from fairrent.solver import SolverConfig

log = logging.getLogger("fairrent.session")

PROTOCOL = "fairrent-session/1"
_HEADER = struct.Struct(">I")
MAX_FRAME = 4 * 1024 * 1024


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def send_frame(sock: socket.socket, payload: dict) -> None:
    body = json.dumps(payload, sort_keys=True).encode("utf-8")
    sock.sendall(_HEADER.pack(len(body)) + body)


def recv_frame(sock: socket.socket) -> Optional[dict]:
    header = _recv_exact(sock, _HEADER.size)
    if header is None:
        return None
    (size,) = _HEADER.unpack(header)
    if size > MAX_FRAME:
        raise ProtocolError("bad-frame", f"frame of {size} bytes exceeds the limit")
    body = _recv_exact(sock, size)
    if body is None:
        return None
    try:
        data = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError("bad-frame", f"undecodable frame: {e}")
    if not isinstance(data, dict) or "type" not in data:
        raise ProtocolError("bad-message", "message must be an object with a 'type'")
    return data


def _recv_exact(sock: socket.socket, size: int) -> Optional[bytes]:
    chunks = b""
    while len(chunks) < size:
        try:
            part = sock.recv(size - len(chunks))
        except OSError:
            return None
        if not part:
            return None
        chunks += part
    return chunks


class SessionAborted(Exception):
    pass


@dataclass
class SessionState:
    """Bookkeeping mirrored to clients: the pending query, the append-only
    answer cache, and the latest solver progress snapshot."""

    session_id: str
    pending: Optional[dict] = None
    progress: Optional[dict] = None
    rounds: int = 0
    cache_size: int = 0
    done: bool = False


class Session:
    def __init__(self, server: "SessionServer", session_id: str):
        self.server = server
        self.spec: ProblemSpec = server.spec
        self.config: SolverConfig = server.config
        self.id = session_id
        self.state = SessionState(session_id)
        self.answers: "queue.Queue[object]" = queue.Queue()
        self.sock: Optional[socket.socket] = None
        self.sock_lock = threading.Lock()
        self.aborted = threading.Event()
        self.final: Optional[dict] = None
        self.thread = threading.Thread(target=self._run, name=f"solver-{session_id}", daemon=True)

    # -- transport ---------------------------------------------------------

    def attach(self, sock: socket.socket) -> None:
        with self.sock_lock:
            self.sock = sock
        self.send(self._session_message())
        # re-send whatever the client may have missed while detached
        if self.final is not None:
            self.send(self.final)
        elif self.state.pending is not None:
            self.send(self.state.pending)
        elif self.state.progress is not None:
            self.send(self.state.progress)

    def send(self, payload: dict) -> None:
        with self.sock_lock:
            if self.sock is None:
                return
            try:
                send_frame(self.sock, payload)
            except OSError:
                self.sock = None  # client went away; resume will re-send

    def _session_message(self) -> dict:
        return {
            "type": "session",
            "session": self.id,
            "protocol": PROTOCOL,
            "variant": self.spec.variant,
            "total_rent": "1",
            "rooms": [
                {"name": r, "capacity": self.spec.capacities[r]} for r in self.spec.rooms
            ],
            "agents": [a.name for a in self.spec.agents],
            "interactive_agents": list(self.spec.interactive_agents),
        }

    # -- elicitation bridge --------------------------------------------------

    def _ask_factory(self, agent: str):
        def ask(p: PriceVector):
            if self.aborted.is_set():
                raise SessionAborted
            self.state.rounds += 1
            round_no = self.state.rounds
            auto = sorted(p.free_rooms()) if (
                self.spec.variant == "rental" and self.spec.apply_free_room_closure
            ) else []
            prices = {
                r: {
                    "rational": s,
                    "decimal": float(Fraction(s)),
                    "per_unit_rational": str(Fraction(s) / self.spec.capacities[r]),
                    "per_unit_decimal": float(Fraction(s) / self.spec.capacities[r]),
                }
                for r, s in point_rationals(p).items()
            }
            self.state.pending = {
                "type": "query",
                "session": self.id,
                "agent": agent,
                "round": round_no,
                "prices": prices,
                "auto_added": auto,
            }
            self.send(self.state.pending)
            while True:
                item = self.answers.get()
                if item is SessionAborted:
                    raise SessionAborted
                got_agent, got_round, rooms = item
                if got_agent == agent and got_round == round_no:
                    self.state.pending = None
                    self.state.cache_size += 1
                    return rooms

        return ask

    def deliver_answer(self, message: dict) -> None:
        pending = self.state.pending
        if pending is None:
            raise ProtocolError("out-of-turn", "no query is pending")
        agent = message.get("agent")
        round_no = message.get("round")
        rooms = message.get("rooms")
        if agent != pending["agent"] or round_no != pending["round"]:
            raise ProtocolError(
                "out-of-turn",
                f"pending query is round {pending['round']} for {pending['agent']!r}",
            )
        if not isinstance(rooms, list) or not rooms:
            raise ProtocolError("empty-answer", "answer must name at least one room")
        unknown = set(rooms) - set(self.spec.rooms)
        if unknown:
            raise ProtocolError("invalid-rooms", f"unknown rooms {sorted(unknown)}")
        self.answers.put((agent, round_no, frozenset(rooms)))

    def abort(self) -> None:
        self.aborted.set()
        self.answers.put(SessionAborted)

    def reissue_pending(self) -> None:
        if self.state.pending is not None:
            self.send(self.state.pending)

    # -- solver thread -------------------------------------------------------

    def start(self) -> None:
        self.thread.start()

    def _progress(self, mesh: int, cells: int, queries: int) -> None:
        self.state.progress = {
            "type": "progress",
            "session": self.id,
            "mesh": mesh,
            "cells": cells,
            "queries": queries,
        }
        self.send(self.state.progress)

    def _run(self) -> None:
        try:
            solution, oracles = solve_spec(
                self.spec,
                self.config,
                ask_factory=self._ask_factory,
                progress=self._progress,
            )
            payload = solution_to_dict(
                solution, self.spec, self.config, elicited=collect_elicited(oracles) or None
            )
            self.final = {"type": "result", "session": self.id, "solution": payload}
        except SessionAborted:
            self.final = {"type": "aborted", "session": self.id}
        except Exception as e:  # report, don't kill the server
            log.exception("session %s crashed", self.id)
            self.final = {
                "type": "error", "code": "server-error", "session": self.id, "message": str(e)
            }
        finally:
            self.send(self.final)
            self.state.done = True
            self.server._session_finished(self)


class SessionServer:
    """Accepts connections, routes frames to sessions, runs one solver per
    session.  `once=True` shuts the server down after the first session
    finishes (handy for scripted runs and tests)."""

    def __init__(self, spec: ProblemSpec, config: SolverConfig, host: str = "127.0.0.1",
                 port: int = 0, once: bool = False):
        self.spec = spec
        self.config = config
        self.host = host
        self.port = port
        self.once = once
        self.sessions: dict[str, Session] = {}
        self._counter = 0
        self._lock = threading.Lock()
        self._listener: Optional[socket.socket] = None
        self._accept_thread: Optional[threading.Thread] = None
        self._stopped = threading.Event()

    def start(self) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(8)
        self.port = listener.getsockname()[1]
        self._listener = listener
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()
        log.info("session server on %s:%d", self.host, self.port)

    def wait(self) -> None:
        self._stopped.wait()

    def shutdown(self) -> None:
        if self._stopped.is_set():
            return
        self._stopped.set()
        for session in list(self.sessions.values()):
            session.abort()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass

    def _session_finished(self, session: Session) -> None:
        if self.once:
            # give the final frame a moment to flush before closing shop
            threading.Timer(0.2, self.shutdown).start()

    def _accept_loop(self) -> None:
        while not self._stopped.is_set():
            try:
                sock, addr = self._listener.accept()
            except OSError:
                break
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            threading.Thread(
                target=self._serve_connection, args=(sock,), daemon=True
            ).start()

    def _new_session(self) -> Session:
        with self._lock:
            self._counter += 1
            session = Session(self, f"s{self._counter}")
            self.sessions[session.id] = session
        session.start()
        return session

    def _serve_connection(self, sock: socket.socket) -> None:
        session: Optional[Session] = None
        try:
            try:
                hello = recv_frame(sock)
            except ProtocolError as e:
                send_frame(sock, {"type": "error", "code": e.code, "message": str(e)})
                return
            if hello is None:
                return
            if hello.get("type") != "hello":
                send_frame(
                    sock,
                    {"type": "error", "code": "bad-message", "message": "expected hello"},
                )
                return
            wanted = hello.get("session")
            if wanted is not None:
                # finished sessions stay resumable: attach re-sends the result
                session = self.sessions.get(wanted)
                if session is None:
                    send_frame(
                        sock,
                        {
                            "type": "error",
                            "code": "unknown-session",
                            "message": f"no session {wanted!r}",
                        },
                    )
                    return
            else:
                session = self._new_session()
            session.attach(sock)
            self._read_loop(session, sock)
        finally:
            try:
                sock.close()
            except OSError:
                pass

    def _read_loop(self, session: Session, sock: socket.socket) -> None:
        while not self._stopped.is_set():
            try:
                message = recv_frame(sock)
            except ProtocolError as e:
                session.send({"type": "error", "code": e.code, "message": str(e)})
                continue
            if message is None:
                return
            kind = message.get("type")
            if message.get("session") != session.id:
                session.send(
                    {
                        "type": "error",
                        "code": "unknown-session",
                        "message": "message addressed to a different session",
                    }
                )
                continue
            if kind == "answer":
                try:
                    session.deliver_answer(message)
                except ProtocolError as e:
                    session.send({"type": "error", "code": e.code, "message": str(e)})
                    session.reissue_pending()
            elif kind == "abort":
                session.abort()
            else:
                session.send(
                    {
                        "type": "error",
                        "code": "bad-message",
                        "message": f"unsupported message type {kind!r}",
                    }
                )


class SessionClient:
    """Minimal client used by scripts and tests: connect, iterate server
    messages, push answers."""

    def __init__(self, host: str, port: int, session: Optional[str] = None, timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        send_frame(self.sock, {"type": "hello", "protocol": PROTOCOL, "session": session})
        self.session_info = recv_frame(self.sock)
        if self.session_info is None or self.session_info.get("type") == "error":
            raise ProtocolError(
                (self.session_info or {}).get("code", "bad-frame"),
                (self.session_info or {}).get("message", "connection closed during hello"),
            )
        self.session_id = self.session_info["session"]

    def messages(self):
        while True:
            message = recv_frame(self.sock)
            if message is None:
                return
            yield message

    def answer(self, agent: str, round_no: int, rooms) -> None:
        send_frame(
            self.sock,
            {
                "type": "answer",
                "session": self.session_id,
                "agent": agent,
                "round": round_no,
                "rooms": sorted(rooms),
            },
        )

    def abort(self) -> None:
        send_frame(self.sock, {"type": "abort", "session": self.session_id})

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def run(self, policy) -> tuple[list[dict], Optional[dict]]:
        """Drive a session with a policy(query_message) -> room list.

        Errors are recorded in the transcript and the loop continues (the
        server re-issues the pending query after a rejected answer).
        Returns (transcript of server messages, final solution dict)."""
        transcript = [self.session_info]
        solution = None
        for message in self.messages():
            transcript.append(message)
            kind = message["type"]
            if kind == "query":
                rooms = policy(message)
                self.answer(message["agent"], message["round"], rooms)
            elif kind == "result":
                solution = message["solution"]
                break
            elif kind == "aborted":
                break
        return transcript, solution


def cheapest_room_policy(message: dict) -> list[str]:
    prices = message["prices"]
    cheapest = min(prices, key=lambda r: (Fraction(prices[r]["rational"]), r))
    return [cheapest]
