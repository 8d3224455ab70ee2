"""Newline-delimited JSON request loop.

Handshake first: {"op": "hello", "version": 1} is answered with the model's
dimensions; any other version is rejected. Then one request at a time:
loss_and_grad and predict, ids echoed verbatim. Every problem with a request
becomes an {"id": ..., "error": "..."} reply; malformed lines never kill the
session. Inputs must be length input_dim with every pixel in [0, 1].
"""

import json
import socket
import sys

import numpy as np

from .model import HostedModel

PROTOCOL_VERSION = 1


class ProviderSession:
    def __init__(self, model: HostedModel):
        self.model = model
        self.handshaken = False

    def handle_line(self, line: str) -> dict | None:
        line = line.strip()
        if not line:
            return None
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return {"id": None, "error": f"malformed JSON: {exc}"}
        if not isinstance(request, dict):
            return {"id": None, "error": "request must be a JSON object"}
        op = request.get("op")
        if op == "hello":
            return self._hello(request)
        request_id = request.get("id")
        if not self.handshaken:
            return {"id": request_id, "error": "handshake required before requests"}
        if op == "loss_and_grad":
            return self._loss_and_grad(request_id, request)
        if op == "predict":
            return self._predict(request_id, request)
        return {"id": request_id, "error": f"unknown op {op!r}"}

    def _hello(self, request: dict) -> dict:
        version = request.get("version")
        if version != PROTOCOL_VERSION:
            return {"error": f"unsupported protocol version {version!r}, "
                             f"this provider speaks {PROTOCOL_VERSION}"}
        self.handshaken = True
        return {
            "op": "hello",
            "version": PROTOCOL_VERSION,
            "input_dim": self.model.input_dim,
            "num_classes": self.model.num_classes,
        }

    def _parse_x(self, request: dict) -> np.ndarray:
        if "x" not in request:
            raise ValueError("missing field 'x'")
        x = np.asarray(request["x"], dtype=np.float64)
        if x.ndim != 1 or x.size != self.model.input_dim:
            raise ValueError(
                f"x has length {x.size}, expected input_dim {self.model.input_dim}"
            )
        if not np.isfinite(x).all():
            raise ValueError("x contains non-finite values")
        if (x < 0.0).any() or (x > 1.0).any():
            raise ValueError("x has pixels outside [0, 1]")
        return x

    def _loss_and_grad(self, request_id, request: dict) -> dict:
        try:
            x = self._parse_x(request)
            y = request.get("y")
            if not isinstance(y, int) or not 0 <= y < self.model.num_classes:
                raise ValueError(
                    f"y must be an integer in [0, {self.model.num_classes}), got {y!r}"
                )
            loss, grad = self.model.loss_and_grad(x, y)
        except (ValueError, TypeError) as exc:
            return {"id": request_id, "error": str(exc)}
        return {"id": request_id, "loss": loss, "grad": grad.tolist()}

    def _predict(self, request_id, request: dict) -> dict:
        try:
            x = self._parse_x(request)
            label = self.model.predict(x)
        except (ValueError, TypeError) as exc:
            return {"id": request_id, "error": str(exc)}
        return {"id": request_id, "label": label}


def _pump(session: ProviderSession, lines, write) -> None:
    for line in lines:
        reply = session.handle_line(line)
        if reply is not None:
            write(json.dumps(reply) + "\n")


def serve_stdio(model: HostedModel) -> None:
    session = ProviderSession(model)

    def write(text: str) -> None:
        sys.stdout.write(text)
        sys.stdout.flush()

    _pump(session, sys.stdin, write)


def serve_tcp(model: HostedModel, host: str, port: int, max_connections=None) -> None:
    """Accept one connection at a time; each gets a fresh session."""
    server = socket.create_server((host, port))
    print(f"listening on {host}:{server.getsockname()[1]}", file=sys.stderr, flush=True)
    served = 0
    try:
        while max_connections is None or served < max_connections:
            conn, _ = server.accept()
            served += 1
            with conn, conn.makefile("r", encoding="utf-8", newline="\n") as reader:
                session = ProviderSession(model)
                try:
                    _pump(session, reader,
                          lambda text: conn.sendall(text.encode("utf-8")))
                except (BrokenPipeError, ConnectionResetError):
                    pass
    finally:
        server.close()
