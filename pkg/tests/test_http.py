import http.client
import time

import pytest

from ncrest.client import Client
from ncrest.errors import TransportError
from ncrest.harness.experiment import ExperimentConfig, run_experiment, run_simulated
from ncrest.harness.payloads import PayloadSource
from ncrest.protocol import native_request
from ncrest.rlnc import NativeMessage
from ncrest.server import Server
from ncrest.transport.http import HttpChannel, HttpEndpoint, run_http_session
from ncrest.transport.sim import LossSchedule


def counters(m):
    return (m.additional_messages, m.additional_bytes, m.transmissions, m.timeouts,
            m.repairs, m.response_bytes)


def test_lossless_ten_messages():
    server = Server("uncoded")
    payloads = PayloadSource(0)
    with HttpEndpoint(server, LossSchedule(), n_messages=10) as ep:
        client = Client("uncoded")
        run_http_session(client, HttpChannel(ep.address, LossSchedule(), 2000), 10, payloads,
                         arrival_interval_ms=0)
    assert server.completion_check(10)
    assert [m.payload for m in server.sink] == [payloads(k) for k in range(1, 11)]
    assert client.stats.acks == 10 and client.stats.transmissions == 10


@pytest.mark.parametrize("mode", ["coded", "uncoded"])
def test_matches_simulation(mode):
    cfg = ExperimentConfig(mode=mode, n_messages=10, p=0.3, alpha=0.5, scb=3, seed=5,
                           timeout_ms=300, arrival_interval_ms=0)
    sim = run_simulated(cfg)[0]
    real = run_experiment(cfg.with_(transport="http"))
    assert counters(real) == counters(sim)
    assert sim.timeouts > 0


def test_withheld_response_times_out():
    server = Server("uncoded")
    schedule = LossSchedule.scripted(response=[1])
    with HttpEndpoint(server, schedule, hold_s=5) as ep:
        ch = HttpChannel(ep.address, schedule, timeout_ms=300)
        t0 = time.monotonic()
        assert ch.exchange(native_request(NativeMessage(1, b"{}"))) is None
        assert 0.25 <= time.monotonic() - t0 < 2.0
    # the server still processed it: only the ack was lost
    assert len(server.sink) == 1


def test_lost_request_never_arrives():
    server = Server("uncoded")
    schedule = LossSchedule.scripted(request=[1])
    with HttpEndpoint(server, schedule) as ep:
        slept = []
        ch = HttpChannel(ep.address, schedule, timeout_ms=300, sleep=slept.append)
        assert ch.exchange(native_request(NativeMessage(1, b"{}"))) is None
    assert slept == [0.3] and server.stats.requests == 0


def test_raw_http_interface():
    server = Server("coded")
    with HttpEndpoint(server, LossSchedule()) as ep:
        conn = http.client.HTTPConnection(*ep.address, timeout=5)
        conn.request("POST", "/api/sensors", body=b"hello", headers={"x-nc": "1,1;5;1"})
        resp = conn.getresponse()
        assert resp.status == 200 and resp.read() == b'{"Number": "1"}'
        assert resp.getheader("Content-Type") == "application/json"
        conn.request("POST", "/api/sensors", body=b"hi", headers={"X-NC": "2,2;5;1"})
        resp = conn.getresponse()
        assert resp.status == 400
        resp.read()
        conn.request("POST", "/elsewhere", body=b"")
        assert conn.getresponse().status == 404
        conn.close()
    assert server.sink[0].payload == b"hello"


def test_bind_failure_is_transport_error():
    with HttpEndpoint(Server(), LossSchedule()) as ep:
        with pytest.raises(TransportError):
            HttpEndpoint(Server(), LossSchedule(), port=ep.address[1]).stop()


def test_connection_refused_is_transport_error():
    with HttpEndpoint(Server(), LossSchedule()) as ep:
        addr = ep.address
    ch = HttpChannel(addr, LossSchedule(), timeout_ms=500)
    with pytest.raises(TransportError):
        ch.exchange(native_request(NativeMessage(1, b"{}")))
