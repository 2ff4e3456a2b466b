import json
import random

import pytest

from ncrest.client import Client
from ncrest.protocol import WireRequest, coded_request, native_request, parse_response
from ncrest.rlnc import NativeMessage, encode
from ncrest.server import REFUSED, Server


@pytest.fixture
def p():
    rng = random.Random(3)
    return [NativeMessage(i, rng.randbytes(199 + i)) for i in range(1, 5)]


def ack(reply):
    return parse_response(reply.body)


class TestCoded:
    def test_first_request(self, p):
        srv = Server("coded")
        r = srv.handle_request(coded_request(encode(p[:2], coefficients=[1, 2])))
        assert r.status == 200 and ack(r) == (1, 2)

    def test_scenario_acks(self, p):
        srv = Server("coded")
        srv.handle_request(coded_request(encode(p[:2], coefficients=[1, 2])))
        r = srv.handle_request(coded_request(encode(p, coefficients=[1, 4, 5, 1])))
        assert ack(r) == (2, 4)
        assert r.body == b'{"Number": "2,4"}'
        # acknowledged before any message could be decoded
        assert srv.sink == []
        srv.handle_request(coded_request(encode(p[2:], coefficients=[2, 3])))
        r = srv.handle_request(coded_request(encode(p[2:], coefficients=[5, 6])))
        assert r.body == b'{"Number": "4"}'
        assert srv.sink == p and srv.completion_check(4)
        assert srv.decoder.live_floor == 3  # p1, p2 pruned after delivery

    def test_dependent_changes_nothing(self, p):
        srv = Server("coded")
        req = coded_request(encode(p[:2], coefficients=[1, 2]))
        first = ack(srv.handle_request(req))
        assert ack(srv.handle_request(req)) == first
        assert srv.stats.dependent == 1 and srv.sink == []

    def test_malformed(self):
        srv = Server("coded")
        r = srv.handle_request(WireRequest(b"x", {"X-NC": "1,1;9;1"}))
        assert r.status == 400 and r.ack is None and "error" in json.loads(r.body)
        assert srv.stats.errors == 1 and srv.sink == []

    def test_wrong_mode(self, p):
        assert Server("coded").handle_request(native_request(p[0])).status == 400
        assert Server("uncoded").handle_request(
            coded_request(encode(p[:1], coefficients=[1]))).status == 400


class TestUncoded:
    def test_duplicate(self, p):
        srv = Server("uncoded")
        r1 = srv.handle_request(native_request(p[0]))
        r2 = srv.handle_request(native_request(p[0]))
        assert ack(r1) == ack(r2) == (1, 1)
        assert srv.sink == [p[0]] and srv.stats.duplicates == 1
        assert srv.stats.wasted_bytes == p[0].length

    def test_in_order_delivery(self, p):
        srv = Server("uncoded")
        srv.handle_request(native_request(p[1]))
        assert srv.sink == []
        srv.handle_request(native_request(p[0]))
        assert srv.sink == p[:2]


class TestBusy:
    def test_flag(self, p):
        srv = Server("uncoded")
        srv.set_busy(True)
        assert srv.handle_request(native_request(p[0])) is REFUSED
        assert srv.sink == [] and srv.received_ids == set()
        srv.set_busy(False)
        assert srv.handle_request(native_request(p[0])).status == 200

    def test_injected_index(self, p):
        srv = Server("coded", busy_on=[2])
        c = coded_request(encode(p[:1], coefficients=[1]))
        assert srv.handle_request(c).status == 200
        assert srv.handle_request(c) is REFUSED
        assert srv.stats.refused == 1
        assert not REFUSED


class TestCompletion:
    def test_examples(self):
        srv = Server("uncoded")
        assert srv.completion_check(0)
        for k in range(1, 100):
            srv.handle_request(native_request(NativeMessage(k, b"x")))
        assert not srv.completion_check(100)
        srv.handle_request(native_request(NativeMessage(100, b"x")))
        assert srv.completion_check(100)


def test_client_server_lossless_loop():
    """Direct wiring without a channel: every message delivered byte-exact."""
    rng = random.Random(8)
    for mode in ("coded", "uncoded"):
        cli, srv = Client(mode, scb=3, coefficients=random.Random(1)), Server(mode)
        sent = [cli.on_new_message(rng.randbytes(rng.randint(1, 50))) for _ in range(20)]
        while not cli.finished(20):
            d = cli.next_send()
            cli.on_response(*srv.handle_request(cli.transmit(d)).ack)
        assert srv.sink == sent
