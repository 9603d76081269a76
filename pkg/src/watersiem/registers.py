"""PLC holding-register layout and bit-level encode/decode.

Register 2 carries the four discrete level sensors (bit 7 is sensor 0 down
to bit 4 for sensor 3), register 3 the pump and pump-valve states (bits 0,
1, 4, 5), register 4 the 16-bit ultrasound step. Registers 0, 1 and 5..9
exist in the log layout but are reserved and stay zero in generated data.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import RegisterValidationError
from .plant import ActuatorCommand, SensorReading, ULTRASOUND_FULL_SCALE

REG_COUNT = 10

REG2_BIT_S0 = 7
REG2_BIT_S1 = 6
REG2_BIT_S2 = 5
REG2_BIT_S3 = 4
REG3_BIT_PUMP2 = 0
REG3_BIT_PUMP1 = 1
REG3_BIT_PUMP1_VALVE = 4
REG3_BIT_PUMP2_VALVE = 5

REG2_MASK = 0b1111_0000
REG3_MASK = 0b0011_0011


@dataclass(frozen=True)
class RegisterFile:
    """Immutable snapshot of the 10 holding registers at one poll."""

    regs: tuple[int, ...]
    snapshot_time_s: float

    def __post_init__(self):
        if len(self.regs) != REG_COUNT:
            raise RegisterValidationError(f"expected {REG_COUNT} registers, got {len(self.regs)}")
        for i, v in enumerate(self.regs):
            if not 0 <= v <= 0xFFFF:
                raise RegisterValidationError(f"register {i} value {v} outside u16 range")


@dataclass(frozen=True)
class DecodedSample:
    s0: int
    s1: int
    s2: int
    s3: int
    pump1: int
    pump2: int
    pump1_valve: int
    pump2_valve: int
    ultrasound_step: int
    timestamp_s: float


def pack_reg2(s0: int, s1: int, s2: int, s3: int) -> int:
    return (s0 << REG2_BIT_S0) | (s1 << REG2_BIT_S1) | (s2 << REG2_BIT_S2) | (s3 << REG2_BIT_S3)


def unpack_reg2(value: int) -> tuple[int, int, int, int]:
    return (
        (value >> REG2_BIT_S0) & 1,
        (value >> REG2_BIT_S1) & 1,
        (value >> REG2_BIT_S2) & 1,
        (value >> REG2_BIT_S3) & 1,
    )


def pack_reg3(pump1: int, pump2: int, pump1_valve: int, pump2_valve: int) -> int:
    return (
        (pump2 << REG3_BIT_PUMP2)
        | (pump1 << REG3_BIT_PUMP1)
        | (pump1_valve << REG3_BIT_PUMP1_VALVE)
        | (pump2_valve << REG3_BIT_PUMP2_VALVE)
    )


def unpack_reg3(value: int) -> tuple[int, int, int, int]:
    """Returns (pump1, pump2, pump1_valve, pump2_valve)."""
    return (
        (value >> REG3_BIT_PUMP1) & 1,
        (value >> REG3_BIT_PUMP2) & 1,
        (value >> REG3_BIT_PUMP1_VALVE) & 1,
        (value >> REG3_BIT_PUMP2_VALVE) & 1,
    )


def encode_registers(reading: SensorReading, cmd: ActuatorCommand) -> RegisterFile:
    regs = [0] * REG_COUNT
    regs[2] = pack_reg2(reading.s0, reading.s1, reading.s2, reading.s3)
    regs[3] = pack_reg3(int(cmd.pump1_on), int(cmd.pump2_on),
                        int(cmd.pump1_valve_open), int(cmd.pump2_valve_open))
    regs[4] = reading.ultrasound_step
    return RegisterFile(regs=tuple(regs), snapshot_time_s=reading.timestamp_s)


def decode_registers(rf: RegisterFile, strict: bool = True) -> DecodedSample:
    """Inverse of :func:`encode_registers`; rejects layouts the device cannot produce."""
    if strict:
        for i in (0, 1, 5, 6, 7, 8, 9):
            if rf.regs[i] != 0:
                raise RegisterValidationError(f"register {i} is reserved but holds {rf.regs[i]}")
        if rf.regs[2] & ~REG2_MASK:
            raise RegisterValidationError(f"register 2 uses bits outside 4..7: {rf.regs[2]:#06x}")
        if rf.regs[3] & ~REG3_MASK:
            raise RegisterValidationError(f"register 3 uses bits outside 0,1,4,5: {rf.regs[3]:#06x}")
    if rf.regs[4] > ULTRASOUND_FULL_SCALE:
        raise RegisterValidationError(
            f"register 4 value {rf.regs[4]} outside 0..{ULTRASOUND_FULL_SCALE}")
    s0, s1, s2, s3 = unpack_reg2(rf.regs[2])
    pump1, pump2, p1v, p2v = unpack_reg3(rf.regs[3])
    return DecodedSample(s0=s0, s1=s1, s2=s2, s3=s3,
                         pump1=pump1, pump2=pump2, pump1_valve=p1v, pump2_valve=p2v,
                         ultrasound_step=rf.regs[4], timestamp_s=rf.snapshot_time_s)
