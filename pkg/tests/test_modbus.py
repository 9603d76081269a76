import socket
import struct
import time

import pytest
from hypothesis import given, strategies as st

from watersiem.errors import ModbusExceptionResponse, ProtocolError
from watersiem.modbus import (EXC_ILLEGAL_ADDRESS, EXC_ILLEGAL_FUNCTION, ExceptionResponse,
                              ModbusClient, ReadRequest, ReadResponse, RegisterServer,
                              SnapshotBus, build_exception, build_request, build_response,
                              parse_request, parse_response)
from watersiem.registers import RegisterFile

GOLDEN = bytes.fromhex("00010000000601030000000A")


def test_golden_request_bytes():
    assert build_request(txn=1, unit=1, start=0, qty=10) == GOLDEN
    parsed = parse_request(GOLDEN)
    assert parsed == ReadRequest(transaction_id=1, unit_id=1, start_addr=0, quantity=10)


def test_response_for_ten_registers_has_byte_count_20():
    frame = build_response(1, 1, (0, 0, 192, 18, 3000, 0, 0, 0, 0, 0))
    assert frame[8] == 20
    assert struct.unpack(">H", frame[4:6])[0] == len(frame) - 6 == 23


u16 = st.integers(0, 0xFFFF)
u8 = st.integers(0, 0xFF)


@given(txn=u16, unit=u8, start=u16, qty=st.integers(1, 125))
def test_request_round_trip(txn, unit, start, qty):
    parsed = parse_request(build_request(txn, unit, start, qty))
    assert parsed == ReadRequest(txn, unit, start, qty)


@given(txn=u16, unit=u8, values=st.lists(u16, min_size=1, max_size=20))
def test_response_round_trip(txn, unit, values):
    parsed = parse_response(build_response(txn, unit, values))
    assert parsed == ReadResponse(txn, unit, tuple(values))


@given(txn=u16, unit=u8, function=st.integers(0, 0x7F), code=st.integers(1, 0x0B))
def test_exception_round_trip(txn, unit, function, code):
    parsed = parse_response(build_exception(txn, unit, function, code))
    assert parsed == ExceptionResponse(txn, unit, function, code)


class TestMalformedFrames:
    def test_truncated(self):
        with pytest.raises(ProtocolError) as err:
            parse_request(GOLDEN[:5])
        assert err.value.reason == "truncated"

    def test_bad_protocol_id(self):
        bad = bytearray(GOLDEN)
        bad[3] = 7
        with pytest.raises(ProtocolError) as err:
            parse_request(bytes(bad))
        assert err.value.reason == "bad_protocol_id"

    def test_bad_length(self):
        bad = bytearray(GOLDEN)
        bad[5] = 99
        with pytest.raises(ProtocolError) as err:
            parse_request(bytes(bad))
        assert err.value.reason == "bad_length"

    def test_unsupported_function(self):
        bad = bytearray(GOLDEN)
        bad[7] = 0x06
        with pytest.raises(ProtocolError) as err:
            parse_request(bytes(bad))
        assert err.value.reason == "unsupported_function"

    def test_zero_quantity(self):
        with pytest.raises(ValueError):
            build_request(1, 1, 0, 0)


@pytest.fixture()
def server():
    bus = SnapshotBus(RegisterFile(regs=(0, 0, 192, 18, 3000, 0, 0, 0, 0, 0),
                                   snapshot_time_s=1.0))
    srv = RegisterServer(bus, host="127.0.0.1", port=0)
    with srv:
        yield srv


class TestOverTcp:
    def test_read_holding_registers(self, server):
        host, port = server.address
        with ModbusClient(host, port) as client:
            values = client.read_holding(0, 10)
        assert values == (0, 0, 192, 18, 3000, 0, 0, 0, 0, 0)

    def test_partial_read(self, server):
        host, port = server.address
        with ModbusClient(host, port) as client:
            assert client.read_holding(2, 3) == (192, 18, 3000)

    def test_unsupported_function_answers_exception_0x01(self, server):
        host, port = server.address
        frame = bytearray(build_request(5, 1, 0, 1))
        frame[7] = 0x10  # write multiple registers: not served
        with socket.create_connection((host, port), timeout=2) as sock:
            sock.sendall(bytes(frame))
            reply = sock.recv(1024)
        parsed = parse_response(reply)
        assert isinstance(parsed, ExceptionResponse)
        assert parsed.code == EXC_ILLEGAL_FUNCTION
        assert parsed.function == 0x10

    def test_out_of_range_read_answers_exception_0x02(self, server):
        host, port = server.address
        with ModbusClient(host, port) as client:
            with pytest.raises(ModbusExceptionResponse) as err:
                client.read_holding(8, 5)
        assert err.value.code == EXC_ILLEGAL_ADDRESS

    def test_snapshot_swap_visible_to_clients(self, server):
        host, port = server.address
        with ModbusClient(host, port) as client:
            assert client.read_holding(4, 1) == (3000,)
            server.bus.publish(RegisterFile(regs=(0, 0, 192, 18, 4500, 0, 0, 0, 0, 0),
                                            snapshot_time_s=2.0))
            assert client.read_holding(4, 1) == (4500,)

    def test_dos_drop_makes_requests_time_out(self, server):
        host, port = server.address
        server.drop_requests = True
        with ModbusClient(host, port, timeout_s=0.2) as client:
            started = time.monotonic()
            with pytest.raises(TimeoutError):
                client.read_holding(0, 10)
            assert time.monotonic() - started >= 0.15
        server.drop_requests = False

    def test_concurrent_clients_see_consistent_snapshots(self, server):
        host, port = server.address
        with ModbusClient(host, port) as a, ModbusClient(host, port) as b:
            for _ in range(20):
                assert a.read_holding(0, 10) == b.read_holding(0, 10)
