"""Exhaustive cross-check of the voter state machines against the
independent truth-table oracles, for n=3 and n=5."""
import itertools
import random
import zlib

import pytest

from midirsim.voter import (
    NBufferVoter,
    OutcomeKind,
    SingleBufferVoter,
)

from oracle import NBufferOracle, SingleOracle

# follower behaviours enumerated per replica; two-step stances exercise the
# timeout -> agree/disagree upgrades
STANCES = {
    "confirm": [("confirm",)],
    "decline": [("decline",)],
    "timeout": [("timeout",)],
    "timeout_confirm": [("timeout",), ("confirm",)],
    "timeout_decline": [("timeout",), ("decline",)],
    "absent": [],
}


def interleavings(per_replica_events, limit=None, seed=0):
    """All shuffles of the per-replica event lists that preserve each
    replica's own order; optionally a deterministic sample."""
    items = [ev for evs in per_replica_events for ev in evs]
    if not items:
        yield ()
        return
    key_seqs = [tuple(evs) for evs in per_replica_events]
    seen = set()
    orders = itertools.permutations(range(len(items)))
    if limit is not None:
        rng = random.Random(seed)
        idx = list(range(len(items)))
        sampled = {tuple(idx), tuple(reversed(idx))}
        for _ in range(limit * 8):
            if len(sampled) >= limit:
                break
            rng.shuffle(idx)
            sampled.add(tuple(idx))
        orders = sorted(sampled)
    for order in orders:
        seq = tuple(items[i] for i in order)
        # keep only orderings that preserve per-replica event order
        ok = True
        for evs in key_seqs:
            pos = [seq.index(e) for e in evs]  # events are unique per replica
            if pos != sorted(pos):
                ok = False
                break
        if not ok:
            continue
        if seq not in seen:
            seen.add(seq)
            yield seq


def run_pair(f, events, variant, leader=0):
    """Drive the real voter and the oracle with one event sequence and
    compare every step plus the final state."""
    applied_log = []
    if variant == "single":
        voter = SingleBufferVoter(0, f, apply_sink=lambda v, s: applied_log.append(v))
        ora = SingleOracle(f, leader=leader)
    else:
        voter = NBufferVoter(0, f, apply_sink=lambda v, s: applied_log.append(v))
        ora = NBufferOracle(f)
    base_seq = voter.seq
    for ev in events:
        kind = ev[0]
        if kind == "propose":
            out = voter.propose(ev[1], ev[2], base_seq)
        elif kind == "confirm":
            out = voter.confirm(ev[1], base_seq)
        elif kind == "decline":
            out = voter.decline(ev[1], base_seq)
        elif kind == "timeout":
            out = voter.record_timeout(ev[1], base_seq)
        elif kind == "reset":
            out = voter.vote_for_reset(ev[1], base_seq)
        expected = ora.step(ev)
        assert out.kind.value == expected, (
            f"{variant} f={f} events={events} at {ev}: "
            f"voter={out.kind.value} oracle={expected}")
    assert voter.seq - base_seq == ora.seq_delta
    assert voter.suspended == ora.suspended
    assert voter.apply_count == ora.apply_count == len(applied_log)
    if ora.apply_count:
        assert applied_log == [ora.last_applied]
    return voter, ora


def stance_events(replica, stance, proposal_value):
    out = []
    for step in STANCES[stance]:
        out.append((step[0], replica))
    return out


def enumerate_single_cases(f, order_limit=None):
    """Leader proposes (or stays absent); every follower stance combination."""
    n = 2 * f + 1
    followers = [r for r in range(n) if r != 0]
    for leader_mode in ("proposes", "absent"):
        stance_space = (
            itertools.product(STANCES, repeat=len(followers))
            if leader_mode == "proposes"
            else itertools.product(["timeout", "absent"], repeat=len(followers))
        )
        for stances in stance_space:
            per_replica = []
            if leader_mode == "proposes":
                per_replica.append([("propose", 0, b"op-x")])
            for r, st in zip(followers, stances):
                per_replica.append(stance_events(r, st, b"op-x"))
            seed = zlib.crc32(repr((f, leader_mode, stances)).encode())
            for seq in interleavings(per_replica, limit=order_limit, seed=seed):
                yield seq


@pytest.mark.parametrize("f", [1])
def test_single_buffer_exhaustive_n3(f):
    cases = 0
    for events in enumerate_single_cases(f):
        voter, ora = run_pair(f, events, "single")
        # reset tail: quorum of reset bits closes any non-closed vote
        if not ora.closed:
            tail = [("reset", r) for r in range(f + 1)]
            run_pair(f, list(events) + tail, "single")
        cases += 1
    assert cases >= 3 ** 3


def test_single_buffer_sampled_orderings_n5():
    cases = 0
    for events in enumerate_single_cases(2, order_limit=4):
        run_pair(2, events, "single")
        cases += 1
    assert cases >= 3 ** 5


def test_single_buffer_full_orderings_core_n5():
    """Full permutations for the one-step stances at n=5."""
    f = 2
    followers = [1, 2, 3, 4]
    cases = 0
    for stances in itertools.product(["confirm", "decline", "absent"], repeat=4):
        per_replica = [[("propose", 0, b"op-x")]]
        for r, st in zip(followers, stances):
            per_replica.append(stance_events(r, st, b"op-x"))
        for seq in interleavings(per_replica, limit=24, seed=17):
            run_pair(f, seq, "single")
            cases += 1
    assert cases >= 3 ** 4


def enumerate_nbuffer_cases(f, order_limit=None):
    n = 2 * f + 1
    for values in itertools.product([b"op-x", b"op-y", None], repeat=n):
        per_replica = [[("propose", r, v)] for r, v in enumerate(values)
                       if v is not None]
        seed = zlib.crc32(repr((f, values)).encode())
        for seq in interleavings(per_replica, limit=order_limit, seed=seed):
            yield seq


@pytest.mark.parametrize("f,order_limit", [(1, None), (2, 6)])
def test_nbuffer_exhaustive(f, order_limit):
    cases = 0
    for events in enumerate_nbuffer_cases(f, order_limit=order_limit):
        voter, ora = run_pair(f, events, "nbuffer")
        if not ora.closed:
            tail = [("reset", r) for r in range(f + 1)]
            run_pair(f, list(events) + tail, "nbuffer")
        cases += 1
    assert cases >= 3 ** (2 * f + 1)


def test_reset_never_reapplies():
    """A reset after an applied-then-suspended vote must not forward the
    operation a second time (checked across the whole enumeration too)."""
    applied = []
    voter = SingleBufferVoter(0, 1, apply_sink=lambda v, s: applied.append(v))
    voter.propose(0, b"val", 0)
    voter.decline(1, 0)
    out = voter.confirm(2, 0)
    assert out.kind == OutcomeKind.APPLIED_THEN_SUSPENDED
    assert applied == [b"val"]
    voter.vote_for_reset(0, 0)
    out = voter.vote_for_reset(2, 0)
    assert out.kind == OutcomeKind.RESET_COMPLETED
    assert voter.seq == 1
    assert applied == [b"val"]
