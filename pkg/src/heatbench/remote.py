"""Client for the out-of-process gradient provider.

Wire format: newline-delimited JSON over a subprocess's stdio or a TCP
socket, one request in flight per connection. Handshake:
    -> {"op": "hello", "version": 1}
    <- {"op": "hello", "version": 1, "input_dim": D, "num_classes": K}
Requests:
    {"id": n, "op": "loss_and_grad", "x": [...], "y": k}
        -> {"id": n, "loss": float, "grad": [...]}
    {"id": n, "op": "predict", "x": [...]} -> {"id": n, "label": k}
Errors come back as {"id": n, "error": "message"}.
"""

import json
import shlex
import socket
import subprocess

import numpy as np

from .errors import (
    ConnectFailureError,
    HandshakeMismatchError,
    RemoteFailureError,
)
from .linalg import ImageTensor
from .models import Classifier, KIND_REMOTE

PROTOCOL_VERSION = 1

# Transport-level failures are retried this many times after the first
# attempt; a well-formed {"error": ...} reply is deterministic and is not.
MAX_RETRIES = 3


class _SubprocessTransport:
    def __init__(self, argv):
        try:
            self.proc = subprocess.Popen(
                list(argv),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ConnectFailureError(f"cannot spawn provider {argv!r}: {exc}") from exc

    def send_line(self, line: str) -> None:
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise RemoteFailureError(f"provider stdin closed: {exc}") from exc

    def recv_line(self) -> str:
        line = self.proc.stdout.readline()
        if line == "":
            raise RemoteFailureError("provider closed the connection")
        return line

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:  # pragma: no cover
                self.proc.kill()
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                stream.close()
            except OSError:  # pragma: no cover
                pass


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ConnectFailureError(f"cannot connect to {host}:{port}: {exc}") from exc
        self.reader = self.sock.makefile("r", encoding="utf-8", newline="\n")

    def send_line(self, line: str) -> None:
        try:
            self.sock.sendall((line + "\n").encode("utf-8"))
        except OSError as exc:
            raise RemoteFailureError(f"provider socket closed: {exc}") from exc

    def recv_line(self) -> str:
        try:
            line = self.reader.readline()
        except OSError as exc:
            raise RemoteFailureError(f"provider socket error: {exc}") from exc
        if line == "":
            raise RemoteFailureError("provider closed the connection")
        return line

    def close(self) -> None:
        try:
            self.reader.close()
        finally:
            self.sock.close()


def _open_transport(endpoint):
    if isinstance(endpoint, (list, tuple)):
        return _SubprocessTransport(endpoint)
    if isinstance(endpoint, str):
        if endpoint.startswith("tcp://"):
            rest = endpoint[len("tcp://"):]
            host, _, port = rest.rpartition(":")
            if not host or not port.isdigit():
                raise ConnectFailureError(f"bad tcp endpoint '{endpoint}'")
            return _TcpTransport(host, int(port))
        return _SubprocessTransport(shlex.split(endpoint))
    raise ConnectFailureError(f"unsupported endpoint {endpoint!r}")


class RemoteClassifier(Classifier):
    """Classifier proxy speaking the provider protocol.

    One request in flight per connection; concurrent workers should each
    connect their own provider. Requests hit by transport failures are
    retried up to MAX_RETRIES times, then raise RemoteFailureError.
    """

    kind = KIND_REMOTE

    def __init__(self, transport, input_dim: int, num_classes: int, name: str):
        self._transport = transport
        self.input_dim = input_dim
        self.num_classes = num_classes
        self.name = name
        self._next_id = 0

    def _roundtrip(self, payload: dict) -> dict:
        last_error = None
        for _ in range(1 + MAX_RETRIES):
            request_id = self._next_id
            self._next_id += 1
            message = dict(payload)
            message["id"] = request_id
            try:
                self._transport.send_line(json.dumps(message))
                raw = self._transport.recv_line()
                reply = json.loads(raw)
                if not isinstance(reply, dict) or reply.get("id") != request_id:
                    raise RemoteFailureError(f"reply id mismatch: {raw[:200]!r}")
            except (RemoteFailureError, json.JSONDecodeError) as exc:
                last_error = exc
                continue
            if "error" in reply:
                raise RemoteFailureError(f"provider error: {reply['error']}")
            return reply
        raise RemoteFailureError(
            f"request failed after {MAX_RETRIES} retries: {last_error}"
        )

    def loss_and_input_grad(self, x: ImageTensor, y: int) -> tuple[float, np.ndarray]:
        self._check_input(x)
        y = self._check_label(y)
        reply = self._roundtrip(
            {"op": "loss_and_grad", "x": x.data.tolist(), "y": y}
        )
        try:
            loss = float(reply["loss"])
            grad = np.asarray(reply["grad"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise RemoteFailureError(f"malformed loss_and_grad reply: {exc}") from exc
        if grad.size != self.input_dim:
            raise RemoteFailureError(
                f"gradient length {grad.size} != input_dim {self.input_dim}"
            )
        return loss, grad

    def loss(self, x: ImageTensor, y: int) -> float:
        return self.loss_and_input_grad(x, y)[0]

    def predict(self, x: ImageTensor) -> int:
        self._check_input(x)
        reply = self._roundtrip({"op": "predict", "x": x.data.tolist()})
        try:
            return int(reply["label"])
        except (KeyError, TypeError, ValueError) as exc:
            raise RemoteFailureError(f"malformed predict reply: {exc}") from exc

    def close(self) -> None:
        self._transport.close()

    def __enter__(self) -> "RemoteClassifier":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def connect_provider(
    endpoint,
    expected_input_dim: int | None = None,
    expected_num_classes: int | None = None,
    name: str = "remote",
) -> RemoteClassifier:
    """Open a provider connection and run the handshake.

    endpoint is an argv list (subprocess), a command string, or
    "tcp://host:port". The advertised input_dim/num_classes are checked
    against the expected values when given; mismatches (and version
    mismatches) raise HandshakeMismatchError.
    """
    transport = _open_transport(endpoint)
    try:
        transport.send_line(json.dumps({"op": "hello", "version": PROTOCOL_VERSION}))
        raw = transport.recv_line()
        try:
            reply = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise RemoteFailureError(f"malformed handshake reply: {raw[:200]!r}") from exc
        if not isinstance(reply, dict) or "error" in reply:
            raise HandshakeMismatchError(f"handshake rejected: {reply!r}")
        if reply.get("op") != "hello" or reply.get("version") != PROTOCOL_VERSION:
            raise HandshakeMismatchError(
                f"provider speaks version {reply.get('version')!r}, "
                f"expected {PROTOCOL_VERSION}"
            )
        try:
            input_dim = int(reply["input_dim"])
            num_classes = int(reply["num_classes"])
        except (KeyError, TypeError, ValueError) as exc:
            raise HandshakeMismatchError(f"handshake missing dimensions: {reply!r}") from exc
        if expected_input_dim is not None and input_dim != expected_input_dim:
            raise HandshakeMismatchError(
                f"provider input_dim {input_dim} != expected {expected_input_dim}"
            )
        if expected_num_classes is not None and num_classes != expected_num_classes:
            raise HandshakeMismatchError(
                f"provider num_classes {num_classes} != expected {expected_num_classes}"
            )
    except Exception:
        transport.close()
        raise
    return RemoteClassifier(transport, input_dim, num_classes, name)
