"""Shared domain vocabulary: identifiers, capabilities, rights, operations,
quorum arithmetic and the canonical wire encoding of operations.

Everything in this module is an immutable value type; instances can be
shared or copied freely.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Union

# Identifiers are plain ints; the aliases document intent at call sites.
ReplicaId = int
TileId = int
ClientId = int

DEFAULT_ADDR_BITS = 32
DEFAULT_REG_ADDR_BITS = 8  # top bits of a guest-physical address naming the register

WIRE_VERSION = 1

NO_LABEL = 0xFF


class FrameError(ValueError):
    """Raised when decoding rejects truncated, over-long or malformed input."""


class CapabilityTypeError(TypeError):
    """An operation was checked against a capability of the wrong kind."""


# ---------------------------------------------------------------------------
# Quorum arithmetic


@dataclass(frozen=True)
class QuorumParams:
    """Fault threshold f, replica count n = 2f+1, hardware bound f_max."""

    f: int
    n: int
    f_max: int = 3

    def __post_init__(self):
        if not (0 <= self.f <= self.f_max):
            raise ValueError(f"fault threshold {self.f} outside [0, {self.f_max}]")
        if self.n != 2 * self.f + 1:
            raise ValueError(f"replica count {self.n} != 2*{self.f}+1")

    @classmethod
    def for_f(cls, f: int, f_max: int = 3) -> "QuorumParams":
        return cls(f=f, n=2 * f + 1, f_max=max(f, f_max))


def quorum_size(q: QuorumParams) -> int:
    """Minimum number of matching votes for an operation to be applied."""
    return q.f + 1


def replica_count(f: int) -> int:
    """Replicas needed to tolerate f faults."""
    if f < 0:
        raise ValueError("fault threshold must be non-negative")
    return 2 * f + 1


# ---------------------------------------------------------------------------
# Capabilities


@dataclass(frozen=True)
class MemRegion:
    """Host-physical byte range [base, base+size)."""

    base: int
    size: int

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("region size must be positive")
        if self.base < 0:
            raise ValueError("region base must be non-negative")

    @property
    def end(self) -> int:
        return self.base + self.size

    def fits_address_space(self, addr_bits: int = DEFAULT_ADDR_BITS) -> bool:
        return self.end <= (1 << addr_bits)

    def contains(self, addr: int, length: int) -> bool:
        return self.base <= addr and addr + length <= self.end

    def overlaps(self, other: "MemRegion") -> bool:
        return self.base < other.end and other.base < self.end


@dataclass(frozen=True)
class Rights:
    readable: bool = False
    writable: bool = False

    def __post_init__(self):
        if not (self.readable or self.writable):
            raise ValueError("a memory capability needs at least one right")


@dataclass(frozen=True)
class MemoryCap:
    region: MemRegion
    rights: Rights


@dataclass(frozen=True)
class VoterRef:
    """Stable identity of a voter instance; placement lives in the topology."""

    voter_id: int


@dataclass(frozen=True)
class VoterCap:
    """Authorizes vote operations at one voter under exactly one replica label."""

    voter: VoterRef
    label: ReplicaId


Capability = Union[MemoryCap, VoterCap]


def region_authorizes(cap: Capability, offset: int, length: int, need_write: bool) -> bool:
    """Privilege check for a memory access at [offset, offset+length) of the
    capability's region."""
    if not isinstance(cap, MemoryCap):
        raise CapabilityTypeError(f"expected a memory capability, got {type(cap).__name__}")
    if length < 0 or offset < 0:
        return False
    if offset + length > cap.region.size:
        return False
    if need_write:
        return cap.rights.writable
    return cap.rights.readable


def split_guest_address(addr: int, addr_bits: int = DEFAULT_ADDR_BITS,
                        reg_bits: int = DEFAULT_REG_ADDR_BITS) -> tuple[int, int]:
    """Split a tile-internal address into (register index, offset).

    The register index rides in the top reg_bits of the guest-physical
    address; both widths are scenario parameters.
    """
    if addr < 0 or addr >= (1 << addr_bits):
        raise ValueError("guest address outside address space")
    shift = addr_bits - reg_bits
    return addr >> shift, addr & ((1 << shift) - 1)


# ---------------------------------------------------------------------------
# Operations

class PayloadKind(IntEnum):
    WRITE = 1
    READ = 2
    SET_CAP = 3


@dataclass(frozen=True)
class WriteOp:
    dest: int
    data: bytes


@dataclass(frozen=True)
class ReadOp:
    dest: int
    length: int


@dataclass(frozen=True)
class SetCapOp:
    """Install `cap` into `register` of `tile`'s capability unit.

    Only ever effective as the applied output of a voter; the config port
    it targets is not addressable by memory capabilities.
    """

    tile: TileId
    register: int
    cap: Capability


PayloadOp = Union[WriteOp, ReadOp, SetCapOp]


class VoteKind(IntEnum):
    PROPOSE = 1
    CONFIRM = 2
    DECLINE = 3
    TIMEOUT_MARK = 4
    RESET_VOTE = 5


@dataclass(frozen=True)
class VoteAction:
    """A vote-protocol message addressed to one voter.

    `payload` is the encoded PayloadOp being voted on (propose only); the
    other kinds carry just the expected sequence number.
    """

    kind: VoteKind
    seq: int
    payload: bytes = b""


class MsgKind(IntEnum):
    DIRECT = 1
    VOTE = 2


@dataclass(frozen=True)
class OperationMsg:
    """A wire-level operation traversing the NoC.

    `label` is present iff the message was produced by invoking a voter
    capability; only the capability unit constructs labeled messages.
    """

    body: Union[PayloadOp, VoteAction]
    origin_tile: TileId
    target: Union[int, VoterRef]
    label: Optional[ReplicaId] = None


# ---------------------------------------------------------------------------
# Wire codec: length-prefixed, little-endian, 1-byte version tag.
# Byte layouts are documented in docs/wire.md.

_U8 = struct.Struct("<B")
_U16 = struct.Struct("<H")
_U64 = struct.Struct("<Q")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FrameError("truncated input")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return _U8.unpack(self.take(1))[0]

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def done(self):
        if self.pos != len(self.data):
            raise FrameError("trailing bytes after message")


def encode_capability(cap: Capability) -> bytes:
    if isinstance(cap, MemoryCap):
        rights = (1 if cap.rights.readable else 0) | (2 if cap.rights.writable else 0)
        return b"\x01" + _U64.pack(cap.region.base) + _U64.pack(cap.region.size) + _U8.pack(rights)
    if isinstance(cap, VoterCap):
        return b"\x02" + _U16.pack(cap.voter.voter_id) + _U8.pack(cap.label)
    raise CapabilityTypeError(f"cannot encode {type(cap).__name__}")


def _decode_capability(r: _Reader) -> Capability:
    kind = r.u8()
    if kind == 1:
        base, size, rights = r.u64(), r.u64(), r.u8()
        if size == 0 or rights == 0 or rights > 3:
            raise FrameError("malformed memory capability")
        return MemoryCap(MemRegion(base, size), Rights(bool(rights & 1), bool(rights & 2)))
    if kind == 2:
        voter_id, label = r.u16(), r.u8()
        return VoterCap(VoterRef(voter_id), label)
    raise FrameError(f"unknown capability kind {kind}")


def decode_capability(data: bytes) -> Capability:
    r = _Reader(data)
    cap = _decode_capability(r)
    r.done()
    return cap


def encode_payload(op: PayloadOp) -> bytes:
    if isinstance(op, WriteOp):
        if len(op.data) > 0xFFFF:
            raise ValueError("write payload too long")
        return (_U8.pack(PayloadKind.WRITE) + _U64.pack(op.dest)
                + _U16.pack(len(op.data)) + op.data)
    if isinstance(op, ReadOp):
        return _U8.pack(PayloadKind.READ) + _U64.pack(op.dest) + _U16.pack(op.length)
    if isinstance(op, SetCapOp):
        return (_U8.pack(PayloadKind.SET_CAP) + _U16.pack(op.tile)
                + _U8.pack(op.register) + encode_capability(op.cap))
    raise TypeError(f"cannot encode {type(op).__name__}")


def _decode_payload(r: _Reader) -> PayloadOp:
    kind = r.u8()
    if kind == PayloadKind.WRITE:
        dest = r.u64()
        n = r.u16()
        return WriteOp(dest, bytes(r.take(n)))
    if kind == PayloadKind.READ:
        return ReadOp(r.u64(), r.u16())
    if kind == PayloadKind.SET_CAP:
        tile = r.u16()
        register = r.u8()
        return SetCapOp(tile, register, _decode_capability(r))
    raise FrameError(f"unknown payload kind {kind}")


def decode_payload(data: bytes) -> PayloadOp:
    r = _Reader(data)
    op = _decode_payload(r)
    r.done()
    return op


def encode_op(msg: OperationMsg) -> bytes:
    """Length-prefixed, versioned encoding of a complete OperationMsg."""
    label = NO_LABEL if msg.label is None else msg.label
    head = _U8.pack(WIRE_VERSION)
    if isinstance(msg.body, VoteAction):
        if not isinstance(msg.target, VoterRef):
            raise ValueError("vote actions must target a voter")
        body = (_U8.pack(MsgKind.VOTE) + _U16.pack(msg.origin_tile) + _U8.pack(label)
                + _U16.pack(msg.target.voter_id) + _U8.pack(msg.body.kind)
                + _U64.pack(msg.body.seq) + _U16.pack(len(msg.body.payload))
                + msg.body.payload)
    else:
        if not isinstance(msg.target, int):
            raise ValueError("direct operations must target an address")
        body = (_U8.pack(MsgKind.DIRECT) + _U16.pack(msg.origin_tile) + _U8.pack(label)
                + _U64.pack(msg.target) + encode_payload(msg.body))
    frame = head + body
    if len(frame) > 0xFFFF:
        raise ValueError("message too long")
    return _U16.pack(len(frame)) + frame


def decode_op(data: bytes) -> OperationMsg:
    r = _Reader(data)
    length = r.u16()
    if length != len(data) - 2:
        raise FrameError("length prefix mismatch")
    version = r.u8()
    if version != WIRE_VERSION:
        raise FrameError(f"unsupported wire version {version}")
    kind = r.u8()
    if kind == MsgKind.VOTE:
        origin = r.u16()
        label = r.u8()
        voter_id = r.u16()
        vkind = r.u8()
        if vkind not in (v.value for v in VoteKind):
            raise FrameError(f"unknown vote kind {vkind}")
        seq = r.u64()
        n = r.u16()
        payload = bytes(r.take(n))
        r.done()
        return OperationMsg(
            body=VoteAction(VoteKind(vkind), seq, payload),
            origin_tile=origin,
            target=VoterRef(voter_id),
            label=None if label == NO_LABEL else label,
        )
    if kind == MsgKind.DIRECT:
        origin = r.u16()
        label = r.u8()
        target = r.u64()
        op = _decode_payload(r)
        r.done()
        return OperationMsg(
            body=op,
            origin_tile=origin,
            target=target,
            label=None if label == NO_LABEL else label,
        )
    raise FrameError(f"unknown message kind {kind}")
