"""Property tests: safety, seq soundness, frozen evidence and no-replay
under arbitrary operation streams."""
from hypothesis import given, settings, strategies as st

from midirsim.voter import Cell, OutcomeKind, make_voter

N = 3
VALUES = [b"alpha", b"bravo", b"charlie"]


def op_stream(draw_ops):
    return st.lists(
        st.tuples(
            st.sampled_from(["propose", "confirm", "decline", "timeout", "reset"]),
            st.integers(min_value=0, max_value=N - 1),
            st.sampled_from(VALUES),
            st.booleans(),  # use current seq (True) or a stale one
        ),
        max_size=draw_ops,
    )


def drive(variant, ops):
    applies = []
    v = make_voter(variant, 0, 1,
                   apply_sink=lambda val, sup: applies.append((val, sup, v.seq)))
    resets = 0
    clean_closes = 0
    frozen = None
    for kind, replica, value, fresh in ops:
        seq = v.seq if fresh else v.seq + 3
        if kind == "propose":
            out = v.propose(replica, value, seq)
        elif kind == "confirm":
            out = v.confirm(replica, seq)
        elif kind == "decline":
            out = v.decline(replica, seq)
        elif kind == "timeout":
            out = v.record_timeout(replica, seq)
        else:
            out = v.vote_for_reset(replica, seq)
        if out.kind == OutcomeKind.RESET_COMPLETED:
            resets += 1
            frozen = None
        elif out.kind == OutcomeKind.APPLIED and v.seq > 0 and not v.applied_this_vote \
                and not v.suspended:
            # an APPLIED outcome coinciding with a cleared vote is a clean close
            clean_closes += 1

        view = v.introspect()
        if view.suspended:
            if frozen is None:
                frozen = view
            else:
                # frozen evidence: ready buffers byte-identical, cells never weaken
                for old, new in zip(frozen.buffers, view.buffers):
                    if old is not None:
                        assert new == old
                for old, new in zip(frozen.cells, view.cells):
                    if old in (Cell.AGREE, Cell.DISAGREE):
                        assert new == old
                    if old == Cell.TIMEOUT:
                        assert new != Cell.EMPTY
                assert view.seq == frozen.seq
                frozen = view
    return v, applies, resets, clean_closes


@settings(max_examples=300, deadline=None)
@given(op_stream(40), st.sampled_from(["single", "nbuffer"]))
def test_voter_invariants(ops, variant):
    v, applies, resets, clean_closes = drive(variant, ops)
    # safety: every applied operation had a quorum of matching inputs
    for value, supporters, _ in applies:
        assert len(supporters) >= v.quorum
    # seq soundness: advances exactly with clean completions plus resets
    assert v.seq == clean_closes + resets
    # at most one application per vote window (seq value at apply time unique)
    seq_at_apply = [s for _, _, s in applies]
    assert len(seq_at_apply) == len(set(seq_at_apply))
