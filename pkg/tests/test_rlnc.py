import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncrest.errors import EmptyWindow, ProtocolError
from ncrest.gf256 import gf_add, gf_mul
from ncrest.rlnc import (
    CodingWindow,
    Combination,
    DecoderState,
    InsertOutcome,
    NativeMessage,
    RandomCoefficients,
    ScriptedCoefficients,
    classify_seen,
    decoder_insert,
    encode,
    extract_decoded,
    prune_below,
)

IND, DEP = InsertOutcome.INDEPENDENT, InsertOutcome.DEPENDENT


def msgs(*lengths, start=1, seed=0):
    rng = random.Random(seed)
    return [NativeMessage(start + i, rng.randbytes(n)) for i, n in enumerate(lengths)]


@pytest.fixture
def retx():
    """p1..p4 and the four combinations of the retransmission scenario."""
    p = msgs(200, 201, 204, 199)
    d1 = encode(p[:2], coefficients=[1, 2])
    d2 = encode(p, coefficients=[1, 4, 5, 1])
    r1 = encode(p[2:], coefficients=[2, 3])
    r2 = encode(p[2:], coefficients=[5, 6])
    return p, (d1, d2, r1, r2)


class TestWindow:
    def test_cap_and_contiguity(self):
        p = msgs(3, 3, 3)
        assert CodingWindow(p, 3).ids == [1, 2, 3]
        with pytest.raises(ValueError):
            CodingWindow(p, 2)
        with pytest.raises(ValueError):
            CodingWindow([p[0], p[2]], 5)


class TestEncode:
    def test_identity_combination(self):
        p3 = NativeMessage(3, b"hello")
        c = encode([p3], coefficients=[1])
        assert c.payload == p3.payload
        assert (c.id_oldest, c.id_newest, c.lengths, c.coefficients) == (3, 3, (5,), (1,))

    def test_repair_combination(self, retx):
        p, (_, _, r1, _) = retx
        assert (r1.id_oldest, r1.id_newest, r1.coefficients) == (3, 4, (2, 3))
        want = bytes(gf_add(gf_mul(2, a), gf_mul(3, b))
                     for a, b in zip(p[2].payload, p[3].payload.ljust(204, b"\0")))
        assert r1.payload == want

    def test_zero_padding(self):
        a, b = NativeMessage(1, bytes([7, 8, 9])), NativeMessage(2, bytes([1, 2]))
        c = encode([a, b], coefficients=[1, 1])
        assert len(c.payload) == 3
        assert c.payload[2] == a.payload[2]
        assert c.payload[:2] == bytes([7 ^ 1, 8 ^ 2])

    def test_empty_window(self):
        with pytest.raises(EmptyWindow):
            encode([])

    def test_random_coefficients_nonzero(self):
        src = RandomCoefficients(random.Random(3))
        draws = [c for _ in range(2000) for c in src(5)]
        assert min(draws) == 1 and max(draws) == 255

    def test_scripted_coefficients(self):
        src = ScriptedCoefficients([[1, 2]], fallback=lambda n: [9] * n)
        assert src(2) == [1, 2]
        assert src(3) == [9, 9, 9]
        with pytest.raises(ValueError):
            ScriptedCoefficients([[1]])(2)

    def test_validate_rejects_bad_payload(self):
        with pytest.raises(ProtocolError):
            Combination(1, 2, (3, 3), (1, 1), b"ab").validate()


class TestDecoder:
    def test_first_row(self, retx):
        _, (d1, *_rest) = retx
        st_ = DecoderState()
        assert decoder_insert(st_, d1) is IND
        assert st_.rank == 1
        assert decoder_insert(st_, d1) is DEP

    def test_two_rows_seen_unseen(self, retx):
        _, (d1, d2, _, _) = retx
        st_ = DecoderState()
        decoder_insert(st_, d1)
        decoder_insert(st_, d2)
        assert classify_seen(st_) == (2, 4)
        assert st_.pivot_ids == [1, 2]
        # answered before anything is decodable
        assert extract_decoded(st_) == []

    def test_full_scenario_roundtrip(self, retx):
        p, combos = retx
        st_ = DecoderState()
        assert [decoder_insert(st_, c) for c in combos] == [IND] * 4
        assert classify_seen(st_) == (4, 4)
        assert extract_decoded(st_) == p
        assert extract_decoded(st_) == []

    def test_empty_state(self):
        assert classify_seen(DecoderState()) == (0, 0)

    def test_singleton(self):
        p1 = NativeMessage(1, b"abc")
        st_ = DecoderState()
        decoder_insert(st_, encode([p1], coefficients=[7]))
        assert extract_decoded(st_) == [p1]
        assert classify_seen(st_) == (1, 1)

    def test_dependent_leaves_state(self, retx):
        _, (d1, d2, _, _) = retx
        st_ = DecoderState()
        decoder_insert(st_, d1)
        decoder_insert(st_, d2)
        rows, pays, seen = list(st_.rows), list(st_.payloads), classify_seen(st_)
        combo = Combination(1, 4, d2.lengths, tuple(gf_mul(9, x) for x in d2.coefficients),
                            bytes(gf_mul(9, x) for x in d2.payload))
        assert decoder_insert(st_, combo) is DEP
        assert (st_.rows, st_.payloads, classify_seen(st_)) == (rows, pays, seen)

    def test_length_change_rejected(self, retx):
        _, (d1, *_r) = retx
        st_ = DecoderState()
        decoder_insert(st_, d1)
        bad = Combination(1, 2, (200, 202), (1, 1), bytes(202))
        with pytest.raises(ProtocolError):
            decoder_insert(st_, bad)

    def test_non_prefix_pivots(self):
        # only p2 resolved: seen prefix stays at 0 even though ID 2 is a pivot
        p = msgs(4, 4)
        st_ = DecoderState()
        decoder_insert(st_, encode([p[1]], coefficients=[1]))
        assert st_.is_seen(2)
        assert classify_seen(st_) == (0, 2)
        decoder_insert(st_, encode(p, coefficients=[1, 1]))
        assert classify_seen(st_) == (2, 2)


class TestPrune:
    def test_prune_delivered_prefix(self, retx):
        p, _ = retx
        st_ = DecoderState()
        decoder_insert(st_, encode(p[:2], coefficients=[1, 2]))
        decoder_insert(st_, encode(p[:2], coefficients=[1, 3]))
        extract_decoded(st_)
        prune_below(st_, 3)
        assert st_.live_floor == 3 and st_.n_cols == 0 and st_.rank == 0
        prune_below(st_, 3)
        assert st_.live_floor == 3

    def test_prune_noop(self):
        st_ = DecoderState()
        prune_below(st_, 1)
        assert st_.live_floor == 1

    def test_undelivered_never_pruned(self):
        p = msgs(5, 6, 7)
        st_ = DecoderState()
        decoder_insert(st_, encode(p[:1], coefficients=[1]))
        decoder_insert(st_, encode(p[1:3], coefficients=[1, 1]))
        assert [m.id for m in extract_decoded(st_)] == [1]
        prune_below(st_, 3)
        assert st_.live_floor == 2
        decoder_insert(st_, encode(p[1:3], coefficients=[1, 2]))
        assert extract_decoded(st_) == p[1:3]

    def test_fully_pruned_span_is_dependent(self):
        p = msgs(5)
        st_ = DecoderState()
        decoder_insert(st_, encode(p, coefficients=[1]))
        extract_decoded(st_)
        prune_below(st_, 2)
        assert decoder_insert(st_, encode(p, coefficients=[4])) is DEP

    def test_straddling_pruned_span_rejected(self):
        p = msgs(5, 5)
        st_ = DecoderState()
        decoder_insert(st_, encode(p[:1], coefficients=[1]))
        extract_decoded(st_)
        prune_below(st_, 2)
        with pytest.raises(ProtocolError):
            decoder_insert(st_, encode(p, coefficients=[1, 1]))


@st.composite
def message_sets(draw):
    k = draw(st.integers(1, 8))
    lengths = draw(st.lists(st.integers(1, 300), min_size=k, max_size=k))
    seed = draw(st.integers(0, 2 ** 32))
    return msgs(*lengths, seed=seed), seed


@settings(max_examples=200, deadline=None)
@given(message_sets())
def test_roundtrip_random_windows(data):
    p, seed = data
    rng = random.Random(seed)
    st_ = DecoderState()
    got = []
    while len(got) < len(p):
        st_.insert(encode(p, rng))
        got += st_.extract_decoded()
    assert sorted(got, key=lambda m: m.id) == p


def test_roundtrip_1000_windows():
    rng = random.Random(2024)
    for _ in range(1000):
        k = rng.randint(1, 8)
        p = [NativeMessage(i + 1, rng.randbytes(rng.randint(1, 300))) for i in range(k)]
        st_ = DecoderState()
        got = []
        while len(got) < k:
            st_.insert(encode(p, rng))
            got += st_.extract_decoded()
        assert sorted(got, key=lambda m: m.id) == p


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(2, 6), st.integers(1, 12))
def test_monotone_acks_and_invariants(seed, scb, steps):
    """Sliding-window stream: acks never regress; pivot count equals rank."""
    rng = random.Random(seed)
    p = [NativeMessage(i + 1, rng.randbytes(rng.randint(1, 20))) for i in range(40)]
    st_ = DecoderState()
    last = (0, 0)
    lo = 1
    for _ in range(steps * 3):
        hi = min(len(p), lo + rng.randint(0, scb - 1))
        c = encode(p[lo - 1:hi], rng)
        before = (list(st_.rows), st_.rank)
        span_delivered = all(i in st_.delivered for i in c.ids)
        outcome = st_.insert(c)
        if span_delivered:
            assert outcome is DEP and (list(st_.rows), st_.rank) == before
        st_.extract_decoded()
        st_.prune_below(c.id_oldest)
        s, u = st_.classify_seen()
        assert s <= u
        assert s >= last[0] and u >= last[1]
        assert len(set(st_.pivot_ids)) == st_.rank
        assert sum(st_.is_seen(i) for i in range(st_.live_floor, st_.max_id + 1)) == st_.rank
        assert all(st_.is_seen(i) for i in st_.delivered)
        last = (s, u)
        if rng.random() < 0.5:
            lo = min(s + 1, len(p))


def test_two_combination_dependence_rate():
    trials = 10_000
    rng = random.Random(99)
    p = msgs(10, 10)
    dependent = 0
    for _ in range(trials):
        st_ = DecoderState()
        st_.insert(encode(p, rng))
        dependent += st_.insert(encode(p, rng)) is DEP
    # second row is a multiple of the first with probability exactly 1/255
    q = 1 / 255
    sigma = math.sqrt(trials * q * (1 - q))
    assert dependent <= trials * q + 3 * sigma
