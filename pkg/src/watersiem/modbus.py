"""Modbus/TCP frame codec plus a minimal read-only server and client.

Only function 0x03 (read holding registers) is served; any other function
draws exception 0x01. Frames follow the standard MBAP layout: transaction
id, protocol id (always 0), byte length of the rest, unit id, then the PDU.
"""
from __future__ import annotations

import socket
import socketserver
import struct
import threading
from dataclasses import dataclass

from .errors import ModbusExceptionResponse, ProtocolError
from .registers import REG_COUNT, RegisterFile

FUNC_READ_HOLDING = 0x03
EXC_ILLEGAL_FUNCTION = 0x01
EXC_ILLEGAL_ADDRESS = 0x02
DEFAULT_PORT = 1502

_MBAP = struct.Struct(">HHHB")  # transaction, protocol, length, unit


@dataclass(frozen=True)
class ReadRequest:
    transaction_id: int
    unit_id: int
    start_addr: int
    quantity: int


@dataclass(frozen=True)
class ReadResponse:
    transaction_id: int
    unit_id: int
    values: tuple[int, ...]


@dataclass(frozen=True)
class ExceptionResponse:
    transaction_id: int
    unit_id: int
    function: int
    code: int


def build_request(txn: int, unit: int, start: int, qty: int) -> bytes:
    if qty < 1:
        raise ValueError(f"quantity must be >= 1, got {qty}")
    pdu = struct.pack(">BHH", FUNC_READ_HOLDING, start, qty)
    return _MBAP.pack(txn, 0, 1 + len(pdu), unit) + pdu


def build_response(txn: int, unit: int, values: tuple[int, ...] | list[int]) -> bytes:
    data = struct.pack(f">{len(values)}H", *values)
    pdu = struct.pack(">BB", FUNC_READ_HOLDING, len(data)) + data
    return _MBAP.pack(txn, 0, 1 + len(pdu), unit) + pdu


def build_exception(txn: int, unit: int, function: int, code: int) -> bytes:
    pdu = struct.pack(">BB", function | 0x80, code)
    return _MBAP.pack(txn, 0, 1 + len(pdu), unit) + pdu


def parse_mbap(frame: bytes) -> tuple[int, int, bytes]:
    """Split a frame into (transaction, unit, pdu); validates header fields."""
    if len(frame) < _MBAP.size + 1:
        raise ProtocolError("truncated", f"frame of {len(frame)} bytes has no PDU")
    txn, proto, length, unit = _MBAP.unpack_from(frame)
    if proto != 0:
        raise ProtocolError("bad_protocol_id", f"expected 0, got {proto}")
    if length != len(frame) - 6:
        raise ProtocolError("bad_length", f"header says {length}, frame carries {len(frame) - 6}")
    return txn, unit, frame[_MBAP.size:]


def parse_request(frame: bytes) -> ReadRequest:
    txn, unit, pdu = parse_mbap(frame)
    if pdu[0] != FUNC_READ_HOLDING:
        raise ProtocolError("unsupported_function", f"function 0x{pdu[0]:02X}")
    if len(pdu) != 5:
        raise ProtocolError("truncated", f"read request PDU must be 5 bytes, got {len(pdu)}")
    _, start, qty = struct.unpack(">BHH", pdu)
    if qty < 1:
        raise ProtocolError("bad_quantity", "quantity must be >= 1")
    return ReadRequest(transaction_id=txn, unit_id=unit, start_addr=start, quantity=qty)


def parse_response(frame: bytes) -> ReadResponse | ExceptionResponse:
    txn, unit, pdu = parse_mbap(frame)
    function = pdu[0]
    if function & 0x80:
        if len(pdu) != 2:
            raise ProtocolError("truncated", "exception PDU must be 2 bytes")
        return ExceptionResponse(transaction_id=txn, unit_id=unit,
                                 function=function & 0x7F, code=pdu[1])
    if function != FUNC_READ_HOLDING:
        raise ProtocolError("unsupported_function", f"function 0x{function:02X}")
    if len(pdu) < 2:
        raise ProtocolError("truncated", "response PDU missing byte count")
    byte_count = pdu[1]
    data = pdu[2:]
    if byte_count != len(data) or byte_count % 2:
        raise ProtocolError("bad_byte_count", f"byte count {byte_count} vs {len(data)} data bytes")
    values = struct.unpack(f">{byte_count // 2}H", data)
    return ReadResponse(transaction_id=txn, unit_id=unit, values=values)


class SnapshotBus:
    """Atomic handoff of the latest immutable register snapshot."""

    def __init__(self, initial: RegisterFile | None = None):
        self._lock = threading.Lock()
        self._snapshot = initial

    def publish(self, snapshot: RegisterFile) -> None:
        with self._lock:
            self._snapshot = snapshot

    def latest(self) -> RegisterFile | None:
        with self._lock:
            return self._snapshot


def _recv_frame(sock: socket.socket) -> bytes | None:
    header = b""
    while len(header) < 6:
        chunk = sock.recv(6 - len(header))
        if not chunk:
            return None
        header += chunk
    (length,) = struct.unpack(">H", header[4:6])
    body = b""
    while len(body) < length:
        chunk = sock.recv(length - len(body))
        if not chunk:
            return None
        body += chunk
    return header + body


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        server: RegisterServer = self.server.owner  # type: ignore[attr-defined]
        while True:
            try:
                frame = _recv_frame(self.request)
            except (ConnectionError, OSError):
                return
            if frame is None:
                return
            if server.drop_requests:
                continue  # denial of service: swallow the request, never answer
            reply = server.answer(frame)
            if reply is not None:
                try:
                    self.request.sendall(reply)
                except (ConnectionError, OSError):
                    return


class _TCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class RegisterServer:
    """Serves the latest snapshot over Modbus/TCP; one thread per connection."""

    def __init__(self, bus: SnapshotBus, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 unit_id: int = 1):
        self.bus = bus
        self.unit_id = unit_id
        self.drop_requests = False
        try:
            self._server = _TCPServer((host, port), _Handler)
        except OSError as exc:
            raise ProtocolError("bind_failed", f"{host}:{port}: {exc}") from exc
        self._server.owner = self  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address  # type: ignore[return-value]

    def answer(self, frame: bytes) -> bytes | None:
        try:
            txn, unit, pdu = parse_mbap(frame)
        except ProtocolError:
            return None  # unframeable garbage: nothing sane to answer
        function = pdu[0]
        if function != FUNC_READ_HOLDING:
            return build_exception(txn, unit, function, EXC_ILLEGAL_FUNCTION)
        try:
            request = parse_request(frame)
        except ProtocolError:
            return build_exception(txn, unit, function, EXC_ILLEGAL_ADDRESS)
        if request.start_addr + request.quantity > REG_COUNT or request.quantity > REG_COUNT:
            return build_exception(txn, unit, function, EXC_ILLEGAL_ADDRESS)
        snapshot = self.bus.latest()
        regs = snapshot.regs if snapshot is not None else (0,) * REG_COUNT
        values = regs[request.start_addr:request.start_addr + request.quantity]
        return build_response(txn, unit, values)

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="modbus-server", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2)

    def __enter__(self) -> "RegisterServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


class ModbusClient:
    """Blocking client issuing read-holding-register requests over one connection."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 unit_id: int = 1, timeout_s: float = 1.0):
        self.host = host
        self.port = port
        self.unit_id = unit_id
        self.timeout_s = timeout_s
        self._txn = 0
        self._sock: socket.socket | None = None

    def connect(self) -> None:
        self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout_s)

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self) -> "ModbusClient":
        self.connect()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def read_holding(self, start: int = 0, qty: int = REG_COUNT) -> tuple[int, ...]:
        """Read registers or raise: TimeoutError on silence, ModbusExceptionResponse on refusal."""
        if self._sock is None:
            self.connect()
        assert self._sock is not None
        self._txn = (self._txn + 1) & 0xFFFF
        self._sock.sendall(build_request(self._txn, self.unit_id, start, qty))
        try:
            frame = _recv_frame(self._sock)
        except socket.timeout as exc:
            raise TimeoutError("modbus request timed out") from exc
        if frame is None:
            raise ProtocolError("connection_closed", "server closed the connection")
        reply = parse_response(frame)
        if isinstance(reply, ExceptionResponse):
            raise ModbusExceptionResponse(reply.function, reply.code)
        if reply.transaction_id != self._txn:
            raise ProtocolError("bad_transaction", f"sent {self._txn}, got {reply.transaction_id}")
        return reply.values
