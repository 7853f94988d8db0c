"""State machines for the two T2H2 voter variants.

A voter collects labeled proposals and applies an operation once f+1 of
them match; recorded divergence suspends voting and freezes the evidence
for software-side diagnosis.  The voter itself never fails in-model.

Semantics:

* ``seq`` advances by exactly one per cleanly completed vote and per
  completed reset, never otherwise.
* Single-buffer: one buffer written by the current leader (seq mod n),
  immutable once ready; an agreement vector of per-replica cells with
  non-destructive transitions Empty -> {Agree, Disagree, Timeout} and
  Timeout -> {Agree, Disagree}.  The leader's proposal counts as its own
  agreement.  The operation is applied as soon as f+1 cells agree, even
  if the voter suspended in the meantime; a vote completes cleanly (seq
  advance without reset) only when all n cells are Agree.
* Suspension (single-buffer, sticky until reset): on any recorded
  disagreement; on a quorum of recorded timeouts; and on any timeout
  recorded alongside an applied operation.  A lone timeout before the
  quorum does not suspend, so a late leader proposal can still win and
  timed-out replicas can upgrade their cell.
* N-buffer: one buffer per replica; applied once f+1 ready buffers are
  byte-equal; any pair of mismatching ready buffers suspends; clean
  completion requires all n buffers ready and equal.  Empty buffers
  accept late fills while suspended, but an already-applied vote is not
  re-evaluated by them.
* Reset: one sticky bit per replica; at f+1 bits the voter clears all
  buffers and vectors, resumes, and advances seq.  An applied operation
  is never re-applied by a reset.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Callable, Optional

from .core import ReplicaId


class VoterVariant(str, Enum):
    SINGLE = "single"
    NBUFFER = "nbuffer"


class Cell(IntEnum):
    EMPTY = 0
    AGREE = 1
    DISAGREE = 2
    TIMEOUT = 3


# Exactly the non-destructive writes; everything else is rejected.
LEGAL_CELL_TRANSITIONS = {
    (Cell.EMPTY, Cell.AGREE),
    (Cell.EMPTY, Cell.DISAGREE),
    (Cell.EMPTY, Cell.TIMEOUT),
    (Cell.TIMEOUT, Cell.AGREE),
    (Cell.TIMEOUT, Cell.DISAGREE),
}


class OutcomeKind(Enum):
    PENDING = "pending"
    REJECTED = "rejected"
    APPLIED = "applied"
    APPLIED_THEN_SUSPENDED = "applied_then_suspended"
    SUSPENDED_NO_APPLY = "suspended_no_apply"
    RESET_COMPLETED = "reset_completed"


@dataclass(frozen=True)
class VoteOutcome:
    kind: OutcomeKind
    op: Optional[bytes] = None
    reason: str = ""

    @property
    def accepted(self) -> bool:
        return self.kind is not OutcomeKind.REJECTED


_PENDING = VoteOutcome(OutcomeKind.PENDING)


def _rejected(reason: str) -> VoteOutcome:
    return VoteOutcome(OutcomeKind.REJECTED, reason=reason)


@dataclass(frozen=True)
class IntrospectionView:
    """Read-only snapshot of one consistent instant of the state machine."""

    voter_id: int
    variant: VoterVariant
    f: int
    n: int
    seq: int
    suspended: bool
    buffers: tuple
    ready: tuple
    cells: tuple
    reset_bits: tuple
    applied: bool
    applied_value: Optional[bytes]

    @property
    def quorum(self) -> int:
        return self.f + 1

    def agree_count(self) -> int:
        return sum(1 for c in self.cells if c == Cell.AGREE)

    def disagree_count(self) -> int:
        return sum(1 for c in self.cells if c == Cell.DISAGREE)

    def timeout_count(self) -> int:
        return sum(1 for c in self.cells if c == Cell.TIMEOUT)

    def decided(self) -> bool:
        """Whether the current vote carries a quorum-level result."""
        if self.applied:
            return True
        if self.variant is VoterVariant.SINGLE:
            return (self.disagree_count() >= self.quorum
                    or self.timeout_count() >= self.quorum)
        return all(self.ready)

    def divergent_replicas(self) -> tuple:
        """Replicas whose recorded stance deviates from the majority;
        meaningful for diagnosis once the vote is decided."""
        if self.variant is VoterVariant.SINGLE:
            if self.applied:
                return tuple(i for i, c in enumerate(self.cells)
                             if c in (Cell.DISAGREE, Cell.TIMEOUT))
            if (self.disagree_count() >= self.quorum
                    or self.timeout_count() >= self.quorum):
                # a declined or absent leader proposal was outvoted
                return (self.seq % self.n,)
            return tuple(i for i, c in enumerate(self.cells) if c == Cell.DISAGREE)
        if self.applied_value is None:
            return ()
        return tuple(i for i, b in enumerate(self.buffers)
                     if b is not None and b != self.applied_value)


class Voter:
    """Common machinery for both variants.

    One voter is a single serialized state machine; the event loop is the
    only caller.  ``apply_sink(payload, supporters)`` receives each applied
    operation exactly once per vote.
    """

    variant: VoterVariant

    def __init__(self, voter_id: int, f: int, host_tile: int = 0,
                 slot_size: int = 64,
                 apply_sink: Optional[Callable[[bytes, tuple], None]] = None,
                 on_event: Optional[Callable[..., None]] = None):
        self.voter_id = voter_id
        self.f = f
        self.n = 2 * f + 1
        self.quorum = f + 1
        self.host_tile = host_tile
        self.slot_size = slot_size
        self.apply_sink = apply_sink
        self.on_event = on_event
        self.seq = 0
        self.suspended = False
        self.reset_bits = [False] * self.n
        self.applied_this_vote = False
        self.applied_value: Optional[bytes] = None
        self.last_applied: Optional[bytes] = None
        self.apply_count = 0

    # -- helpers -----------------------------------------------------------

    def _emit(self, event: str, outcome: VoteOutcome, replica=None):
        if self.on_event is not None:
            self.on_event(self, event, outcome, replica)

    def _apply(self, value: bytes, supporters: tuple):
        self.applied_this_vote = True
        self.applied_value = value
        self.last_applied = value
        self.apply_count += 1
        if self.apply_sink is not None:
            self.apply_sink(value, supporters)

    def _clear_vote_state(self):
        self.reset_bits = [False] * self.n
        self.applied_this_vote = False
        self.applied_value = None

    def _check_label(self, replica: ReplicaId) -> bool:
        return 0 <= replica < self.n

    # -- operations shared by both variants --------------------------------

    def vote_for_reset(self, replica: ReplicaId, seq: int) -> VoteOutcome:
        if not self._check_label(replica):
            out = _rejected("bad-label")
        elif seq != self.seq:
            out = _rejected("stale-seq")
        elif self.reset_bits[replica]:
            out = _PENDING  # duplicate bit-set is idempotent
        else:
            self.reset_bits[replica] = True
            if sum(self.reset_bits) >= self.quorum:
                self._clear_buffers()
                self._clear_vote_state()
                self.suspended = False
                self.seq += 1
                out = VoteOutcome(OutcomeKind.RESET_COMPLETED)
            else:
                out = _PENDING
        self._emit("reset_vote", out, replica)
        return out

    def introspect(self) -> IntrospectionView:
        return IntrospectionView(
            voter_id=self.voter_id,
            variant=self.variant,
            f=self.f,
            n=self.n,
            seq=self.seq,
            suspended=self.suspended,
            buffers=self._buffer_view(),
            ready=self._ready_view(),
            cells=self._cell_view(),
            reset_bits=tuple(self.reset_bits),
            applied=self.applied_this_vote,
            applied_value=self.applied_value,
        )

    # -- variant hooks ------------------------------------------------------

    def _clear_buffers(self):
        raise NotImplementedError

    def _buffer_view(self) -> tuple:
        raise NotImplementedError

    def _ready_view(self) -> tuple:
        raise NotImplementedError

    def _cell_view(self) -> tuple:
        return ()

    def propose(self, replica: ReplicaId, payload: bytes, seq: int) -> VoteOutcome:
        raise NotImplementedError

    def confirm(self, replica: ReplicaId, seq: int) -> VoteOutcome:
        out = _rejected("unsupported-variant")
        self._emit("confirm", out, replica)
        return out

    def decline(self, replica: ReplicaId, seq: int) -> VoteOutcome:
        out = _rejected("unsupported-variant")
        self._emit("decline", out, replica)
        return out

    def record_timeout(self, replica: ReplicaId, seq: int) -> VoteOutcome:
        out = _rejected("unsupported-variant")
        self._emit("timeout_mark", out, replica)
        return out


class SingleBufferVoter(Voter):
    variant = VoterVariant.SINGLE

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.buffer: Optional[bytes] = None
        self.ready = False
        self.cells = [Cell.EMPTY] * self.n

    def leader(self) -> ReplicaId:
        return self.seq % self.n

    def _clear_buffers(self):
        self.buffer = None
        self.ready = False
        self.cells = [Cell.EMPTY] * self.n

    def _buffer_view(self):
        return (self.buffer,)

    def _ready_view(self):
        return (self.ready,)

    def _cell_view(self):
        return tuple(self.cells)

    def propose(self, replica: ReplicaId, payload: bytes, seq: int) -> VoteOutcome:
        if not self._check_label(replica):
            out = _rejected("bad-label")
        elif seq != self.seq:
            out = _rejected("stale-seq")
        elif self.suspended:
            out = _rejected("suspended")
        elif replica != self.leader():
            out = _rejected("not-leader")
        elif self.ready:
            out = _rejected("buffer-ready")
        elif len(payload) > self.slot_size:
            out = _rejected("oversize")
        else:
            self.buffer = bytes(payload)
            self.ready = True
            # proposing is the leader's vote
            if (self.cells[replica], Cell.AGREE) in LEGAL_CELL_TRANSITIONS:
                self.cells[replica] = Cell.AGREE
            out = self._evaluate(Cell.AGREE)
        self._emit("propose", out, replica)
        return out

    def confirm(self, replica, seq):
        out = self._set_cell(replica, Cell.AGREE, seq)
        self._emit("confirm", out, replica)
        return out

    def decline(self, replica, seq):
        out = self._set_cell(replica, Cell.DISAGREE, seq)
        self._emit("decline", out, replica)
        return out

    def record_timeout(self, replica, seq):
        out = self._set_cell(replica, Cell.TIMEOUT, seq)
        self._emit("timeout_mark", out, replica)
        return out

    def _set_cell(self, replica: ReplicaId, value: Cell, seq: int) -> VoteOutcome:
        if not self._check_label(replica):
            return _rejected("bad-label")
        if seq != self.seq:
            return _rejected("stale-seq")
        if value in (Cell.AGREE, Cell.DISAGREE) and not self.ready:
            return _rejected("no-proposal")
        if (self.cells[replica], value) not in LEGAL_CELL_TRANSITIONS:
            return _rejected("destructive-cell")
        self.cells[replica] = value
        return self._evaluate(value)

    def _evaluate(self, wrote: Cell) -> VoteOutcome:
        agrees = self.cells.count(Cell.AGREE)
        disagrees = self.cells.count(Cell.DISAGREE)
        timeouts = self.cells.count(Cell.TIMEOUT)
        empties = self.cells.count(Cell.EMPTY)

        applied_now = False
        if not self.applied_this_vote and self.ready and agrees >= self.quorum:
            supporters = tuple(i for i, c in enumerate(self.cells) if c == Cell.AGREE)
            self._apply(self.buffer, supporters)
            applied_now = True

        was_suspended = self.suspended
        if not self.suspended and (disagrees >= 1
                                   or timeouts >= self.quorum
                                   or (self.applied_this_vote and timeouts >= 1)):
            self.suspended = True
        newly_suspended = self.suspended and not was_suspended

        if (not self.suspended and self.applied_this_vote
                and empties == 0 and disagrees == 0 and timeouts == 0):
            op = self.applied_value
            self.seq += 1
            self._clear_buffers()
            self._clear_vote_state()
            return VoteOutcome(OutcomeKind.APPLIED, op=op)

        if applied_now:
            if self.suspended:
                return VoteOutcome(OutcomeKind.APPLIED_THEN_SUSPENDED,
                                   op=self.applied_value)
            return VoteOutcome(OutcomeKind.APPLIED, op=self.applied_value)
        if newly_suspended and self.applied_this_vote:
            # divergence recorded after the operation was already applied
            return VoteOutcome(OutcomeKind.APPLIED_THEN_SUSPENDED,
                               op=self.applied_value)
        if not self.applied_this_vote and (
                (wrote == Cell.DISAGREE and disagrees == self.quorum)
                or (wrote == Cell.TIMEOUT and timeouts == self.quorum)):
            return VoteOutcome(OutcomeKind.SUSPENDED_NO_APPLY)
        return _PENDING


class NBufferVoter(Voter):
    variant = VoterVariant.NBUFFER

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.buffers: list = [None] * self.n

    def _clear_buffers(self):
        self.buffers = [None] * self.n

    def _buffer_view(self):
        return tuple(self.buffers)

    def _ready_view(self):
        return tuple(b is not None for b in self.buffers)

    def propose(self, replica: ReplicaId, payload: bytes, seq: int) -> VoteOutcome:
        if not self._check_label(replica):
            out = _rejected("bad-label")
        elif seq != self.seq:
            out = _rejected("stale-seq")
        elif self.buffers[replica] is not None:
            out = _rejected("buffer-ready")
        elif len(payload) > self.slot_size:
            out = _rejected("oversize")
        else:
            self.buffers[replica] = bytes(payload)
            out = self._evaluate()
        self._emit("propose", out, replica)
        return out

    def _evaluate(self) -> VoteOutcome:
        if self.suspended and self.applied_this_vote:
            # late fill of an already-applied vote: kept for diagnosis only
            return _PENDING

        ready = [(i, b) for i, b in enumerate(self.buffers) if b is not None]
        groups: dict = {}
        for i, b in ready:
            groups.setdefault(b, []).append(i)
        best = max(groups.values(), key=len) if groups else []

        applied_now = False
        if not self.applied_this_vote and len(best) >= self.quorum:
            value = self.buffers[best[0]]
            self._apply(value, tuple(best))
            applied_now = True

        was_suspended = self.suspended
        if not self.suspended and len(groups) >= 2:
            self.suspended = True
        newly_suspended = self.suspended and not was_suspended

        if (not self.suspended and self.applied_this_vote
                and len(ready) == self.n and len(groups) == 1):
            op = self.applied_value
            self.seq += 1
            self._clear_buffers()
            self._clear_vote_state()
            return VoteOutcome(OutcomeKind.APPLIED, op=op)

        if applied_now:
            if self.suspended:
                return VoteOutcome(OutcomeKind.APPLIED_THEN_SUSPENDED,
                                   op=self.applied_value)
            return VoteOutcome(OutcomeKind.APPLIED, op=self.applied_value)
        if newly_suspended and self.applied_this_vote:
            # divergent proposal recorded after the operation was applied
            return VoteOutcome(OutcomeKind.APPLIED_THEN_SUSPENDED,
                               op=self.applied_value)
        if (not self.applied_this_vote and len(ready) == self.n
                and len(best) < self.quorum):
            # all inputs are in and no quorum can form
            return VoteOutcome(OutcomeKind.SUSPENDED_NO_APPLY)
        return _PENDING


def make_voter(variant: VoterVariant, voter_id: int, f: int, **kwargs) -> Voter:
    if variant in (VoterVariant.SINGLE, "single"):
        return SingleBufferVoter(voter_id, f, **kwargs)
    if variant in (VoterVariant.NBUFFER, "nbuffer"):
        return NBufferVoter(voter_id, f, **kwargs)
    raise ValueError(f"unknown voter variant {variant!r}")
