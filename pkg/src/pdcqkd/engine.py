"""Monte Carlo protocol engine for the three key-distribution schemes.

Trials are partitioned into fixed-size batches; batch ``i`` of a run draws
from its own counter-based Philox stream keyed by (master seed, i), so the
aggregated integer counts -- and therefore the whole report -- are
bit-identical for a fixed seed regardless of how batches are spread over
workers.  Changing BATCH_SIZE changes the streams and is part of the
reproducibility contract.

Matched-basis rounds of the entangled-pair scheme use the classical
per-photon model, which is exact because the source state keeps its form
under an identical basis change on both sides.  Mismatched-basis rounds
draw the four-mode photon counts from the sector-conditioned Fock
distributions, which carry the two-photon interference the classical model
misses.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .detection import (
    ChannelParams,
    ClickOutcome,
    classify,
    compose_bob_efficiency,
    detect_side,
)
from .eve import EveRecord, PnsConfig, eve_measure_stored, pns_intercept, resolve_block_probability
from . import fock
from .source import (
    PairConfiguration,
    PairDistribution,
    Scheme,
    SourceParams,
    pair_distribution,
    sample_pair_config,
    sample_pdc_single_arm,
    sample_wcs_photons,
)

BATCH_SIZE = 1 << 16
_SEED_MASK = (1 << 64) - 1


# ---------------------------------------------------------------------------
# Round records (scalar path)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    scheme: Scheme
    basis_a: int
    basis_b: int
    pair_config: Optional[PairConfiguration] = None
    photon_count: Optional[int] = None
    outcome_a: Optional[ClickOutcome] = None
    outcome_b: Optional[ClickOutcome] = None
    sifted: bool = False
    bit_a: Optional[int] = None
    bit_b: Optional[int] = None
    error: bool = False
    eve: Optional[EveRecord] = None
    truncation_exceeded: bool = False
    triggered: Optional[bool] = None


def _finish_eve(
    rng: np.random.Generator,
    record: Optional[EveRecord],
    basis_a: int,
    basis_b: int,
) -> Optional[EveRecord]:
    """Post-announcement measurement of the stored photon; the Bob-side guess
    is the measured value itself (the interceptor cannot tell split pairs of
    identical polarization from split one-of-each pairs)."""
    if record is None or record.stored_polarization is None:
        return record
    measured = eve_measure_stored(rng, record, basis_a, basis_b)
    return replace(record, guess_bit_alice=measured, guess_bit_on_bob=measured)


def run_ep_round(
    rng: np.random.Generator,
    source: SourceParams,
    channel: ChannelParams,
    attack: Optional[PnsConfig] = None,
    block_probability: Optional[float] = None,
    dist: Optional[PairDistribution] = None,
) -> RoundRecord:
    """One entangled-pair round.  ``block_probability`` must be the resolved
    value when the attack config says AUTO."""
    if dist is None:
        dist = pair_distribution(source)
    basis_a = int(rng.integers(0, 2))
    basis_b = int(rng.integers(0, 2))
    cfg = sample_pair_config(rng, dist)
    if cfg is None:
        return RoundRecord(
            scheme=Scheme.ENTANGLED_PAIRS,
            basis_a=basis_a,
            basis_b=basis_b,
            truncation_exceeded=True,
        )
    if basis_a == basis_b:
        a0, a1, b0, b1 = cfg.m, cfg.n, cfg.m, cfg.n
    else:
        ba = fock.Basis.PLUS if basis_a == 0 else fock.Basis.CROSS
        bb = fock.Basis.PLUS if basis_b == 0 else fock.Basis.CROSS
        occs, probs = fock.sector_distribution(cfg.total, ba, bb)
        u = rng.random()
        acc = 0.0
        occ = occs[-1]
        for candidate, p in zip(occs, probs):
            acc += p
            if u < acc:
                occ = candidate
                break
        a0, a1, b0, b1 = occ
    eve_rec: Optional[EveRecord] = None
    if attack is not None:
        eve_rec, (b0, b1) = pns_intercept(
            rng, (b0, b1), attack, block_probability=block_probability
        )
        bob_eta = 1.0 if attack.guarantee_delivery else channel.eta_b
    else:
        bob_eta = compose_bob_efficiency(channel)
    outcome_a = detect_side(rng, a0, a1, channel.eta_a, channel.dark_click_probability)
    outcome_b = detect_side(rng, b0, b1, bob_eta, channel.dark_click_probability)
    sifted = basis_a == basis_b and outcome_a.is_single and outcome_b.is_single
    bit_a = outcome_a.bit if outcome_a.is_single else None
    bit_b = outcome_b.bit if outcome_b.is_single else None
    eve_rec = _finish_eve(rng, eve_rec, basis_a, basis_b)
    return RoundRecord(
        scheme=Scheme.ENTANGLED_PAIRS,
        basis_a=basis_a,
        basis_b=basis_b,
        pair_config=cfg,
        outcome_a=outcome_a,
        outcome_b=outcome_b,
        sifted=sifted,
        bit_a=bit_a,
        bit_b=bit_b,
        error=sifted and bit_a != bit_b,
        eve=eve_rec,
    )


def _run_prepared_round(
    rng: np.random.Generator,
    scheme: Scheme,
    photons: int,
    triggered: Optional[bool],
    channel: ChannelParams,
    attack: Optional[PnsConfig],
    block_probability: Optional[float],
) -> RoundRecord:
    """Shared Bob-side pipeline of the prepare-and-measure schemes: all
    photons of one signal carry Alice's bit in Alice's basis."""
    bit_a = int(rng.integers(0, 2))
    basis_a = int(rng.integers(0, 2))
    basis_b = int(rng.integers(0, 2))
    arm = (photons, 0) if bit_a == 0 else (0, photons)
    eve_rec: Optional[EveRecord] = None
    if attack is not None:
        eve_rec, arm = pns_intercept(rng, arm, attack, block_probability=block_probability)
        bob_eta = 1.0 if attack.guarantee_delivery else channel.eta_b
    else:
        bob_eta = compose_bob_efficiency(channel)
    if basis_a == basis_b:
        b0, b1 = arm
    else:
        total = arm[0] + arm[1]
        s = int(rng.binomial(total, 0.5))
        b0, b1 = s, total - s
    outcome_b = detect_side(rng, b0, b1, bob_eta, channel.dark_click_probability)
    announced = triggered is not False
    sifted = announced and basis_a == basis_b and outcome_b.is_single
    bit_b = outcome_b.bit if outcome_b.is_single else None
    eve_rec = _finish_eve(rng, eve_rec, basis_a, basis_a)
    return RoundRecord(
        scheme=scheme,
        basis_a=basis_a,
        basis_b=basis_b,
        photon_count=photons,
        outcome_b=outcome_b,
        sifted=sifted,
        bit_a=bit_a,
        bit_b=bit_b,
        error=sifted and bit_a != bit_b,
        eve=eve_rec,
        triggered=triggered,
    )


def run_wcs_round(
    rng: np.random.Generator,
    source: SourceParams,
    channel: ChannelParams,
    attack: Optional[PnsConfig] = None,
    block_probability: Optional[float] = None,
) -> RoundRecord:
    photons = sample_wcs_photons(rng, source.mu_prime)
    return _run_prepared_round(
        rng, Scheme.WEAK_COHERENT, photons, None, channel, attack, block_probability
    )


def run_pdc_round(
    rng: np.random.Generator,
    source: SourceParams,
    channel: ChannelParams,
    attack: Optional[PnsConfig] = None,
    block_probability: Optional[float] = None,
) -> RoundRecord:
    pairs = sample_pdc_single_arm(rng, source.g)
    triggered = rng.binomial(pairs, channel.eta_a) >= 1 if pairs else False
    return _run_prepared_round(
        rng, Scheme.TRIGGERED_PDC, pairs, bool(triggered), channel, attack, block_probability
    )


# ---------------------------------------------------------------------------
# Vectorized batch kernels
# ---------------------------------------------------------------------------


@dataclass
class _Counts:
    trials: int = 0
    excluded: int = 0
    matched: int = 0
    sifted: int = 0
    errors: int = 0
    dc_matched: int = 0
    dc_mismatched: int = 0
    bob_no_click: int = 0
    triggered: int = 0
    touched_sifted: int = 0
    eve_alice_hits: int = 0
    eve_bob_hits: int = 0
    blocked: int = 0

    def __add__(self, other: "_Counts") -> "_Counts":
        return _Counts(
            **{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)}
        )


@dataclass(frozen=True)
class _RunParams:
    """Picklable, fully resolved parameters of one Monte Carlo run."""

    scheme: Scheme
    g: float
    mu_prime: float
    eta_a: float
    eta_b: float
    eta_l: float
    truncation: int
    block_probability: Optional[float]  # None means no attack
    guarantee_delivery: bool = True


class _EpContext:
    def __init__(self, params: _RunParams):
        source = SourceParams(
            Scheme.ENTANGLED_PAIRS, params.g, params.truncation
        )
        dist = pair_distribution(source)
        self.cdf = dist.cdf
        self.n_configs = len(dist.configs)
        self.m_of = np.array([c.m for c in dist.configs], dtype=np.int64)
        self.n_of = np.array([c.n for c in dist.configs], dtype=np.int64)
        self.sector_tables = {}
        for combo, pair in (
            (0, (fock.Basis.PLUS, fock.Basis.CROSS)),
            (1, (fock.Basis.CROSS, fock.Basis.PLUS)),
        ):
            for total in range(1, params.truncation + 1):
                occs, probs = fock.sector_distribution(total, *pair)
                arr = np.array(occs, dtype=np.int64)
                self.sector_tables[(combo, total)] = (
                    np.cumsum(np.asarray(probs)),
                    arr[:, 0],
                    arr[:, 1],
                    arr[:, 2],
                    arr[:, 3],
                )


def _ep_batch(rng: np.random.Generator, size: int, p: _RunParams, ctx: _EpContext) -> _Counts:
    u = rng.random(size)
    idx = np.searchsorted(ctx.cdf, u, side="right")
    exceeded = idx >= ctx.n_configs
    valid = ~exceeded
    idx = np.where(exceeded, 0, idx)
    m = np.where(valid, ctx.m_of[idx], 0)
    n = np.where(valid, ctx.n_of[idx], 0)
    basis_a = rng.integers(0, 2, size=size, dtype=np.int8)
    basis_b = rng.integers(0, 2, size=size, dtype=np.int8)
    matched = valid & (basis_a == basis_b)
    mismatched = valid & (basis_a != basis_b)

    a0 = np.where(matched, m, 0)
    a1 = np.where(matched, n, 0)
    b0 = a0.copy()
    b1 = a1.copy()
    sector = m + n
    u_sector = rng.random(size)
    for combo in (0, 1):
        for total in range(1, p.truncation + 1):
            sel = mismatched & (basis_a == combo) & (sector == total)
            if not sel.any():
                continue
            cdf, t_a0, t_a1, t_b0, t_b1 = ctx.sector_tables[(combo, total)]
            j = np.searchsorted(cdf, u_sector[sel], side="right")
            j = np.minimum(j, len(t_a0) - 1)
            a0[sel] = t_a0[j]
            a1[sel] = t_a1[j]
            b0[sel] = t_b0[j]
            b1[sel] = t_b1[j]

    counts = _Counts(trials=size, excluded=int(exceeded.sum()))
    attacked = p.block_probability is not None
    multi = np.zeros(size, dtype=bool)
    blocked = np.zeros(size, dtype=bool)
    stored = np.zeros(size, dtype=np.int8)
    if attacked:
        tot = b0 + b1
        u_store = rng.random(size)
        multi = valid & (tot >= 2)
        stored = np.where(u_store * tot < b1, 1, 0).astype(np.int8)
        b0 = b0 - (multi & (stored == 0))
        b1 = b1 - (multi & (stored == 1))
        u_block = rng.random(size)
        blocked = valid & (tot == 1) & (u_block < p.block_probability)
        b0 = np.where(blocked, 0, b0)
        b1 = np.where(blocked, 0, b1)
        bob_eta = 1.0 if p.guarantee_delivery else p.eta_b
    else:
        bob_eta = p.eta_b * p.eta_l

    fa0 = rng.binomial(a0, p.eta_a) > 0
    fa1 = rng.binomial(a1, p.eta_a) > 0
    fb0 = rng.binomial(b0, bob_eta) > 0
    fb1 = rng.binomial(b1, bob_eta) > 0

    a_single = fa0 ^ fa1
    b_single = fb0 ^ fb1
    b_double = fb0 & fb1
    sifted = matched & a_single & b_single
    bit_a = fa1
    bit_b = fb1
    errors = sifted & (bit_a != bit_b)

    counts.matched = int(matched.sum())
    counts.sifted = int(sifted.sum())
    counts.errors = int(errors.sum())
    counts.dc_matched = int((matched & b_double).sum())
    counts.dc_mismatched = int((mismatched & b_double).sum())
    counts.bob_no_click = int((valid & ~fb0 & ~fb1).sum())
    if attacked:
        touched = sifted & multi
        counts.touched_sifted = int(touched.sum())
        counts.eve_alice_hits = int((touched & (stored == bit_a)).sum())
        counts.eve_bob_hits = int((touched & (stored == bit_b)).sum())
        counts.blocked = int(blocked.sum())
    return counts


def _prepared_batch(rng: np.random.Generator, size: int, p: _RunParams) -> _Counts:
    if p.scheme is Scheme.WEAK_COHERENT:
        photons = rng.poisson(p.mu_prime, size)
        triggered = np.ones(size, dtype=bool)
    else:
        if p.g > 0.0:
            photons = rng.geometric(1.0 - p.g * p.g, size=size) - 1
        else:
            photons = np.zeros(size, dtype=np.int64)
        u_trig = rng.random(size)
        triggered = u_trig < 1.0 - (1.0 - p.eta_a) ** photons
    bit_a = rng.integers(0, 2, size=size, dtype=np.int8)
    basis_a = rng.integers(0, 2, size=size, dtype=np.int8)
    basis_b = rng.integers(0, 2, size=size, dtype=np.int8)
    matched = basis_a == basis_b

    counts = _Counts(trials=size)
    attacked = p.block_probability is not None
    multi = np.zeros(size, dtype=bool)
    blocked = np.zeros(size, dtype=bool)
    forwarded = photons
    if attacked:
        multi = photons >= 2
        forwarded = photons - multi
        u_block = rng.random(size)
        blocked = (photons == 1) & (u_block < p.block_probability)
        forwarded = np.where(blocked, 0, forwarded)
        bob_eta = 1.0 if p.guarantee_delivery else p.eta_b
    else:
        bob_eta = p.eta_b * p.eta_l

    surv = rng.binomial(forwarded, bob_eta)
    split0 = rng.binomial(surv, 0.5)
    in0 = np.where(bit_a == 0, surv, 0)
    b0 = np.where(matched, in0, split0)
    b1 = np.where(matched, surv - in0, surv - split0)
    fb0 = b0 > 0
    fb1 = b1 > 0
    b_single = fb0 ^ fb1
    b_double = fb0 & fb1
    sifted = triggered & matched & b_single
    bit_b = fb1
    errors = sifted & (bit_b != bit_a)

    counts.matched = int(matched.sum())
    counts.triggered = int(triggered.sum())
    counts.sifted = int(sifted.sum())
    counts.errors = int(errors.sum())
    counts.dc_matched = int((triggered & matched & b_double).sum())
    counts.dc_mismatched = int((triggered & ~matched & b_double).sum())
    counts.bob_no_click = int((~fb0 & ~fb1).sum())
    if attacked:
        touched = sifted & multi
        counts.touched_sifted = int(touched.sum())
        # the stored photon carries Alice's encoded bit
        counts.eve_alice_hits = int(touched.sum())
        counts.eve_bob_hits = int((touched & (bit_b == bit_a)).sum())
        counts.blocked = int(blocked.sum())
    return counts


def _batch_rng(master_seed: int, batch_index: int) -> np.random.Generator:
    key = ((master_seed & _SEED_MASK) << 64) | batch_index
    return np.random.Generator(np.random.Philox(key=key))


def _run_batch_range(
    params: _RunParams, master_seed: int, trials: int, start: int, stop: int
) -> _Counts:
    ctx = _EpContext(params) if params.scheme is Scheme.ENTANGLED_PAIRS else None
    counts = _Counts()
    for b in range(start, stop):
        size = min(BATCH_SIZE, trials - b * BATCH_SIZE)
        rng = _batch_rng(master_seed, b)
        if ctx is not None:
            counts = counts + _ep_batch(rng, size, params, ctx)
        else:
            counts = counts + _prepared_batch(rng, size, params)
    return counts


# ---------------------------------------------------------------------------
# Aggregated report
# ---------------------------------------------------------------------------


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n > 0 else float("nan")


@dataclass(frozen=True)
class RateReport:
    scheme: Scheme
    trials: int
    valid_trials: int
    truncation_exceeded_count: int
    sifted_count: int
    error_count: int
    r_key: Optional[float]
    r_key_se: Optional[float]
    r_err: Optional[float]
    r_err_se: Optional[float]
    epsilon: Optional[float]
    epsilon_se: Optional[float]
    double_click_matched: Optional[float]
    double_click_mismatched: Optional[float]
    double_click_matched_count: int
    bob_no_click_rate: Optional[float]
    triggered_count: int
    eve_touched_fraction: Optional[float]
    p_ae_hat: Optional[float]
    p_eb_hat: Optional[float]
    i_ae: Optional[float]
    i_eb: Optional[float]
    eve_blocked_count: int
    block_probability: Optional[float]
    master_seed: int

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "trials": self.trials,
            "valid_trials": self.valid_trials,
            "truncation_exceeded_count": self.truncation_exceeded_count,
            "sifted_count": self.sifted_count,
            "error_count": self.error_count,
            "r_key": self.r_key,
            "r_key_se": self.r_key_se,
            "r_err": self.r_err,
            "r_err_se": self.r_err_se,
            "epsilon": self.epsilon,
            "epsilon_se": self.epsilon_se,
            "double_click_matched": self.double_click_matched,
            "double_click_mismatched": self.double_click_mismatched,
            "double_click_matched_count": self.double_click_matched_count,
            "bob_no_click_rate": self.bob_no_click_rate,
            "triggered_count": self.triggered_count,
            "eve_touched_fraction": self.eve_touched_fraction,
            "p_ae_hat": self.p_ae_hat,
            "p_eb_hat": self.p_eb_hat,
            "i_ae": self.i_ae,
            "i_eb": self.i_eb,
            "eve_blocked_count": self.eve_blocked_count,
            "block_probability": self.block_probability,
            "master_seed": self.master_seed,
        }


def _build_report(
    counts: _Counts, config: ExperimentConfig, block_probability: Optional[float]
) -> RateReport:
    from .analytics import binary_information

    valid = counts.trials - counts.excluded
    if valid > 0:
        r_key = counts.sifted / valid
        r_err = counts.errors / valid
        dc_m = counts.dc_matched / valid
        dc_x = counts.dc_mismatched / valid
        no_click = counts.bob_no_click / valid
        r_key_se = _binomial_se(r_key, valid)
        r_err_se = _binomial_se(r_err, valid)
    else:
        r_key = r_err = dc_m = dc_x = no_click = None
        r_key_se = r_err_se = None
    if counts.sifted > 0:
        epsilon = counts.errors / counts.sifted
        epsilon_se = _binomial_se(epsilon, counts.sifted)
        touched = counts.touched_sifted / counts.sifted
    else:
        epsilon = epsilon_se = None
        touched = None
    if counts.touched_sifted > 0:
        p_ae = counts.eve_alice_hits / counts.touched_sifted
        p_eb = counts.eve_bob_hits / counts.touched_sifted
        i_ae = touched * binary_information(p_ae)
        i_eb = touched * binary_information(p_eb)
    else:
        p_ae = p_eb = None
        i_ae = i_eb = (0.0 if counts.sifted > 0 and block_probability is not None else None)
    return RateReport(
        scheme=config.scheme,
        trials=counts.trials,
        valid_trials=valid,
        truncation_exceeded_count=counts.excluded,
        sifted_count=counts.sifted,
        error_count=counts.errors,
        r_key=r_key,
        r_key_se=r_key_se,
        r_err=r_err,
        r_err_se=r_err_se,
        epsilon=epsilon,
        epsilon_se=epsilon_se,
        double_click_matched=dc_m,
        double_click_mismatched=dc_x,
        double_click_matched_count=counts.dc_matched,
        bob_no_click_rate=no_click,
        triggered_count=counts.triggered,
        eve_touched_fraction=touched,
        p_ae_hat=p_ae,
        p_eb_hat=p_eb,
        i_ae=i_ae,
        i_eb=i_eb,
        eve_blocked_count=counts.blocked,
        block_probability=block_probability,
        master_seed=config.master_seed,
    )


def _resolve_run_params(config: ExperimentConfig) -> tuple[_RunParams, Optional[float]]:
    scheme = config.scheme
    g = config.resolved_gain() if scheme is not Scheme.WEAK_COHERENT else 0.0
    source = SourceParams(
        scheme,
        g=g,
        truncation_order=config.truncation_order,
        mu_prime=config.mu_prime or 0.0,
    )
    channel = ChannelParams(config.eta_a, config.eta_b, config.eta_l)
    block = None
    guarantee = True
    if config.attack is not None:
        block = resolve_block_probability(config.attack, source, channel)
        guarantee = config.attack.guarantee_delivery
    params = _RunParams(
        scheme=scheme,
        g=g,
        mu_prime=config.mu_prime or 0.0,
        eta_a=config.eta_a,
        eta_b=config.eta_b,
        eta_l=config.eta_l,
        truncation=config.truncation_order,
        block_probability=block,
        guarantee_delivery=guarantee,
    )
    return params, block


def run_experiment(config: ExperimentConfig) -> RateReport:
    """Aggregate ``config.trials`` rounds into a RateReport.

    Bit-identical for a fixed master seed regardless of worker count.
    """
    config.validated()
    params, block = _resolve_run_params(config)
    trials = config.trials
    n_batches = (trials + BATCH_SIZE - 1) // BATCH_SIZE
    if config.workers <= 1 or n_batches <= 1:
        counts = _run_batch_range(params, config.master_seed, trials, 0, n_batches)
    else:
        workers = min(config.workers, n_batches)
        bounds = [round(i * n_batches / workers) for i in range(workers + 1)]
        counts = _Counts()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _run_batch_range, params, config.master_seed, trials, lo, hi
                )
                for lo, hi in zip(bounds, bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                counts = counts + fut.result()
    return _build_report(counts, config, block)
