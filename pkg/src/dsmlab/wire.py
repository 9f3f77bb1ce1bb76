"""Binary payloads carried in control-plane APP messages between the spectrum
manager and sub-network controllers.

Frame layout: one length byte covering everything after it, one kind byte,
then the big-endian fields. Band edges travel as offsets from the low edge of
the managed band (3700 MHz)."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .spectrum import BAND_LOW_MHZ, QosClass, SpectrumBand

KIND_REGISTER = 1
KIND_GRANT = 2
KIND_HEARTBEAT = 3
KIND_RECONFIGURE = 4
KIND_ACK = 5
KIND_DEREGISTER = 6


class WireError(ValueError):
    pass


@dataclass(frozen=True)
class Register:
    subnet: int
    qos: QosClass
    requested_mhz: int
    priority: int


@dataclass(frozen=True)
class Grant:
    version: int
    band: SpectrumBand


@dataclass(frozen=True)
class Heartbeat:
    subnet: int
    version: int


@dataclass(frozen=True)
class Reconfigure:
    version: int
    band: SpectrumBand


@dataclass(frozen=True)
class Ack:
    version: int


@dataclass(frozen=True)
class Deregister:
    subnet: int


Payload = Register | Grant | Heartbeat | Reconfigure | Ack | Deregister


def _band_offsets(band: SpectrumBand) -> tuple[int, int]:
    return band.low_mhz - BAND_LOW_MHZ, band.high_mhz - BAND_LOW_MHZ


def _band_from_offsets(low: int, high: int) -> SpectrumBand:
    return SpectrumBand(BAND_LOW_MHZ + low, BAND_LOW_MHZ + high)


def encode(payload: Payload) -> bytes:
    if isinstance(payload, Register):
        body = struct.pack(">BHBBB", KIND_REGISTER, payload.subnet,
                           payload.qos.value, payload.requested_mhz,
                           payload.priority)
    elif isinstance(payload, Grant):
        low, high = _band_offsets(payload.band)
        body = struct.pack(">BIHH", KIND_GRANT, payload.version, low, high)
    elif isinstance(payload, Heartbeat):
        body = struct.pack(">BHI", KIND_HEARTBEAT, payload.subnet, payload.version)
    elif isinstance(payload, Reconfigure):
        low, high = _band_offsets(payload.band)
        body = struct.pack(">BIHH", KIND_RECONFIGURE, payload.version, low, high)
    elif isinstance(payload, Ack):
        body = struct.pack(">BI", KIND_ACK, payload.version)
    elif isinstance(payload, Deregister):
        body = struct.pack(">BH", KIND_DEREGISTER, payload.subnet)
    else:
        raise WireError(f"unencodable payload {payload!r}")
    return bytes([len(body)]) + body


def decode(data: bytes) -> Payload:
    if len(data) < 2:
        raise WireError("frame too short")
    length = data[0]
    if length != len(data) - 1:
        raise WireError(f"length byte {length} does not match body {len(data) - 1}")
    kind = data[1]
    body = data[1:]
    try:
        if kind == KIND_REGISTER:
            _, subnet, qos, requested, priority = struct.unpack(">BHBBB", body)
            return Register(subnet, QosClass(qos), requested, priority)
        if kind == KIND_GRANT:
            _, version, low, high = struct.unpack(">BIHH", body)
            return Grant(version, _band_from_offsets(low, high))
        if kind == KIND_HEARTBEAT:
            _, subnet, version = struct.unpack(">BHI", body)
            return Heartbeat(subnet, version)
        if kind == KIND_RECONFIGURE:
            _, version, low, high = struct.unpack(">BIHH", body)
            return Reconfigure(version, _band_from_offsets(low, high))
        if kind == KIND_ACK:
            (_, version) = struct.unpack(">BI", body)
            return Ack(version)
        if kind == KIND_DEREGISTER:
            (_, subnet) = struct.unpack(">BH", body)
            return Deregister(subnet)
    except struct.error as exc:
        raise WireError(str(exc)) from exc
    raise WireError(f"unknown payload kind {kind}")
