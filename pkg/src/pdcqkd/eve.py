"""Photon-number-splitting attack: interception, blocking policy solving and
information accounting.

The interceptor is an event-level channel interposer on Bob's arm: it counts
photons nondestructively, stores one photon from multi-photon signals,
forwards the rest over a lossless line with guaranteed detection, and blocks
single-photon signals with a tunable probability chosen so that the delivered
sifted rate matches the unattacked one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from . import analytics
from .detection import ChannelParams, compose_bob_efficiency
from .source import Scheme, SourceParams


class _Saturated:
    """Sentinel: even blocking every single-photon signal cannot push the
    delivered rate down to the unattacked one."""

    def __repr__(self) -> str:  # pragma: no cover
        return "SATURATED"


SATURATED = _Saturated()

AUTO = "auto"


class KnowledgeClass(enum.Enum):
    CERTAIN = "certain"
    HALF = "half"
    NONE = "none"


@dataclass(frozen=True)
class PnsConfig:
    """Attack policy: single-photon blocking probability (or AUTO to solve
    for rate matching) and whether forwarded photons bypass Bob's loss."""

    block_probability: Union[float, str] = AUTO
    guarantee_delivery: bool = True

    def __post_init__(self) -> None:
        p = self.block_probability
        if isinstance(p, str):
            if p != AUTO:
                raise ValueError(f"block_probability must be a float or {AUTO!r}")
        elif not 0.0 <= p <= 1.0:
            raise ValueError(f"block_probability must lie in [0, 1], got {p!r}")


@dataclass(frozen=True)
class EveRecord:
    intercepted: bool = False
    photons_seen: int = 0
    stored_polarization: Optional[int] = None
    blocked: bool = False
    guess_bit_alice: Optional[int] = None
    guess_bit_on_bob: Optional[int] = None
    knowledge_class: KnowledgeClass = KnowledgeClass.NONE


def pns_intercept(
    rng: np.random.Generator,
    arm_counts: tuple[int, int],
    cfg: PnsConfig,
    block_probability: Optional[float] = None,
) -> tuple[EveRecord, tuple[int, int]]:
    """Intercept one signal on Bob's arm.

    ``block_probability`` overrides the config value (used after AUTO has
    been solved).  Multi-photon signals lose one photon chosen uniformly
    among the physical photons; its polarization (mode index) is stored.
    """
    n0, n1 = arm_counts
    if n0 < 0 or n1 < 0:
        raise ValueError("photon counts must be >= 0")
    p_block = block_probability
    if p_block is None:
        p_block = cfg.block_probability
        if p_block == AUTO:
            raise ValueError("AUTO block probability must be solved first")
    total = n0 + n1
    if total == 0:
        return EveRecord(photons_seen=0), (0, 0)
    if total == 1:
        if rng.random() < p_block:
            return EveRecord(photons_seen=1, blocked=True), (0, 0)
        return EveRecord(photons_seen=1), (n0, n1)
    stored = 1 if rng.random() * total < n1 else 0
    forwarded = (n0 - (stored == 0), n1 - (stored == 1))
    record = EveRecord(
        intercepted=True,
        photons_seen=total,
        stored_polarization=stored,
        knowledge_class=KnowledgeClass.CERTAIN if n0 == 0 or n1 == 0 else KnowledgeClass.HALF,
    )
    return record, forwarded


def eve_measure_stored(
    rng: np.random.Generator,
    record: EveRecord,
    announced_basis,
    preparation_basis,
) -> int:
    """Measure the stored photon after the basis announcement."""
    if record.stored_polarization is None:
        raise ValueError("no stored photon to measure")
    if announced_basis == preparation_basis:
        return record.stored_polarization
    return int(rng.integers(0, 2))


def _unattacked_rate(source: SourceParams, channel: ChannelParams) -> float:
    eta_bl = compose_bob_efficiency(channel)
    if source.scheme is Scheme.ENTANGLED_PAIRS:
        return analytics.exact_rates_oracle(
            source.g, channel.eta_a, eta_bl, source.truncation_order
        ).r_key
    if source.scheme is Scheme.WEAK_COHERENT:
        return analytics.wcs_leakage(source.mu_prime, eta_bl).r_exp
    return analytics.pdc_rates_closed(source.g, channel.eta_a, eta_bl)[0]


def _delivered_rate(
    source: SourceParams, channel: ChannelParams, pass_probability: float
) -> float:
    if source.scheme is Scheme.ENTANGLED_PAIRS:
        return analytics.ep_attack_delivered(
            source.g, channel.eta_a, pass_probability, source.truncation_order
        )
    if source.scheme is Scheme.WEAK_COHERENT:
        return analytics.wcs_attack_delivered(source.mu_prime, pass_probability)
    return analytics.pdc_attack_delivered(source.g, channel.eta_a, pass_probability)


def solve_block_probability(
    source: SourceParams, channel: ChannelParams
) -> Union[float, _Saturated]:
    """Blocking probability that matches the delivered sifted rate to the
    unattacked one, or SATURATED when blocking all singles still over-delivers.

    The delivered rate is monotone decreasing in the blocking probability, so
    plain bisection converges; it is run to 1e-10.
    """
    target = _unattacked_rate(source, channel)
    if target <= 0.0:
        raise ValueError("unattacked sifted rate is zero; nothing to match")
    if _delivered_rate(source, channel, 0.0) >= target:
        return SATURATED
    lo, hi = 0.0, 1.0  # pass probability bracket
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _delivered_rate(source, channel, mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    return 1.0 - 0.5 * (lo + hi)


def resolve_block_probability(
    cfg: PnsConfig, source: SourceParams, channel: ChannelParams
) -> float:
    """Concrete blocking probability for a run: explicit value, or the solved
    rate-matching one (1.0 when saturated)."""
    if cfg.block_probability == AUTO:
        solved = solve_block_probability(source, channel)
        return 1.0 if solved is SATURATED else float(solved)
    return float(cfg.block_probability)


@dataclass(frozen=True)
class EveInformation:
    i_ae: float
    i_eb: float
    p_ae_hat: Optional[float]
    p_eb_hat: Optional[float]
    touched_fraction: float


def empirical_eve_information(records: Iterable) -> EveInformation:
    """Fold sifted round records into the adversary's empirical information.

    Each record must expose ``sifted``, ``bit_a``, ``bit_b`` and an ``eve``
    EveRecord.  Untouched bits contribute with hit probability 1/2.
    """
    sifted = touched = hits_a = hits_b = 0
    for rec in records:
        if not rec.sifted:
            continue
        sifted += 1
        ev = rec.eve
        if ev is None or not ev.intercepted:
            continue
        touched += 1
        if ev.guess_bit_alice == rec.bit_a:
            hits_a += 1
        if ev.guess_bit_on_bob == rec.bit_b:
            hits_b += 1
    if sifted == 0:
        raise ValueError("no sifted bits; Eve information is undefined")
    frac = touched / sifted
    if touched == 0:
        return EveInformation(0.0, 0.0, None, None, 0.0)
    p_ae = hits_a / touched
    p_eb = hits_b / touched
    groups_a = [(frac, p_ae), (1.0 - frac, 0.5)]
    groups_b = [(frac, p_eb), (1.0 - frac, 0.5)]
    return EveInformation(
        i_ae=analytics.eq10_information(groups_a),
        i_eb=analytics.eq10_information(groups_b),
        p_ae_hat=p_ae,
        p_eb_hat=p_eb,
        touched_fraction=frac,
    )
