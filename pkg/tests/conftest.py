import random

import pytest

from ncrest.client import Client
from ncrest.harness.payloads import PayloadSource
from ncrest.rlnc import ScriptedCoefficients
from ncrest.server import Server
from ncrest.transport.sim import LossSchedule, SimulatedChannel, SimulatedSession


def scripted_retransmission_run():
    """p1,p2 at t=0 and p3,p4 at t=1 s; responses 1 and 3 lost.

    The first combination (p1+2p2) reaches the server but its ack is lost, so
    after the timeout the client codes p1..p4; the server answers (2,4) and the
    client repairs over {p3,p4} twice, the first repair's ack being lost.
    """
    payloads = PayloadSource(seed=42)
    client = Client("coded", scb=5, coefficients=ScriptedCoefficients(
        [[1, 2], [1, 4, 5, 1], [2, 3], [5, 6]], fallback=random.Random(0)))
    server = Server("coded")
    channel = SimulatedChannel(LossSchedule.scripted(response=[1, 0, 1, 0]))
    session = SimulatedSession(client, server, channel, 4, payloads,
                               arrival_times=[0, 0, 1000, 1000])
    return client, server, session, session.run(), payloads


@pytest.fixture
def retx_run():
    return scripted_retransmission_run()
