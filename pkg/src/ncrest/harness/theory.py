"""Closed-form expected number of additional request messages."""

from __future__ import annotations

from ..errors import DomainError


def theory_additional_uncoded(n: float, p: float) -> float:
    """``N/(1-p) - N``: every loss, in either direction, costs one resend."""
    if not 0.0 <= p < 1.0:
        raise DomainError(f"loss probability must lie in [0, 1), got {p}")
    return n / (1.0 - p) - n


def theory_additional_coded(n: float, p: float, alpha: float) -> float:
    """``N/(1-alpha*p) - N``: only request-direction losses cost a resend."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    q = alpha * p
    if not 0.0 <= q < 1.0 or p < 0.0:
        raise DomainError(f"alpha*p must lie in [0, 1), got {q}")
    return n / (1.0 - q) - n
