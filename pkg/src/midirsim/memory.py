"""Flat host-physical memory with a purpose-annotated region registry.

The registry drives three things: scenario layout, the bypass-prevention
predicate (which purposes are consensual-update-only), and the trace
auditor's provenance checks.  Memory itself enforces nothing; privilege
checks happen in the capability units and voters.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

# purposes whose backing memory may only be written through a voter
CONSENSUAL_PURPOSES = {
    "response", "syscall_log", "error_log", "journal", "cspace", "regmap",
}

# reserved: not ordinary memory at all; never legally addressable
RESERVED_PURPOSES = {"config_port"}


@dataclass(frozen=True)
class Region:
    name: str
    base: int
    size: int
    purpose: str
    owner: Optional[int] = None  # client or tile the region belongs to

    @property
    def end(self) -> int:
        return self.base + self.size

    def contains(self, addr: int, length: int = 1) -> bool:
        return self.base <= addr and addr + length <= self.end


class Memory:
    def __init__(self, size: int):
        self.size = size
        self.data = bytearray(size)
        self.regions: dict[str, Region] = {}
        self._watchers: list = []

    # -- layout -------------------------------------------------------------

    def add_region(self, region: Region):
        if region.end > self.size:
            raise ValueError(f"region {region.name} exceeds memory size")
        for other in self.regions.values():
            if region.base < other.end and other.base < region.end:
                raise ValueError(f"region {region.name} overlaps {other.name}")
        self.regions[region.name] = region

    def region(self, name: str) -> Region:
        return self.regions[name]

    def region_at(self, addr: int, length: int = 1) -> Optional[Region]:
        for r in self.regions.values():
            if r.contains(addr, length):
                return r
        return None

    def consensual_only(self, addr: int, length: int = 1) -> bool:
        r = self.region_at(addr, length)
        return r is not None and r.purpose in CONSENSUAL_PURPOSES

    # -- access ---------------------------------------------------------------

    def read(self, addr: int, length: int) -> bytes:
        if addr < 0 or addr + length > self.size:
            raise ValueError("read outside memory")
        return bytes(self.data[addr:addr + length])

    def read_region(self, name: str) -> bytes:
        r = self.regions[name]
        return self.read(r.base, r.size)

    def write(self, addr: int, data: bytes):
        if addr < 0 or addr + len(data) > self.size:
            raise ValueError("write outside memory")
        self.data[addr:addr + len(data)] = data
        for watcher in list(self._watchers):
            lo, hi, fn = watcher
            if lo < addr + len(data) and addr < hi:
                fn()

    # -- watchers (simulation plumbing, not architectural state) -----------

    def watch(self, base: int, size: int, fn: Callable[[], None]):
        entry = (base, base + size, fn)
        self._watchers.append(entry)
        return lambda: self._watchers.remove(entry)
