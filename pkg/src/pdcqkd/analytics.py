"""Closed-form rate and leakage evaluators plus exact enumeration oracles.

Two evaluation routes are kept deliberately separate:

* the printed leading-order formulas (sifted-key rate, error count, error
  rate, leakage branches), evaluated verbatim;
* exact enumeration oracles that sum every click pattern of the truncated
  source without leading-order drops.

The oracles are the ground truth for the Monte Carlo engine; the formulas
are validated against them as approximations with an explicit O(g^2)
relative tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from . import fock

__all__ = [
    "binary_information",
    "eq10_information",
    "ep_rates_approx",
    "exact_rates_oracle",
    "OracleRates",
    "wcs_leakage",
    "pdc_leakage",
    "pdc_rates_closed",
    "pdc_rates_series",
    "ep_pns_quantities",
    "ep_pns_oracle",
    "EpAttackOracle",
    "wcs_attack_delivered",
    "pdc_attack_delivered",
    "ep_attack_delivered",
]


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def _check_gain(g: float) -> None:
    if not 0.0 <= g < 1.0:
        raise ValueError(f"gain g must satisfy 0 <= g < 1, got {g!r}")


def binary_information(p: float) -> float:
    """1 + p log2 p + (1-p) log2 (1-p), with the 0 log 0 := 0 convention.

    Equals 1 minus the binary entropy of p; symmetric under p -> 1-p.
    """
    _check_unit("p", p)
    out = 1.0
    if 0.0 < p < 1.0:
        out += p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p)
    return out


def eq10_information(groups: Iterable[tuple[float, float]]) -> float:
    """Average adversary information over bit groups of weight r_i known with
    hit probability p_i; the weights must sum to 1."""
    groups = list(groups)
    total = 0.0
    for r, _ in groups:
        if r < 0:
            raise ValueError(f"group weight must be >= 0, got {r!r}")
        total += r
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"group weights must sum to 1, got {total!r}")
    return sum(r * binary_information(p) for r, p in groups)


# ---------------------------------------------------------------------------
# Entangled-pair scheme, no eavesdropper
# ---------------------------------------------------------------------------


def ep_rates_approx(
    g: float, eta_a: float, eta_bl: float
) -> tuple[float, float, Optional[float]]:
    """Printed leading-order sifted-key rate, error count and error rate for
    the entangled-pair scheme; ``eta_bl`` is the product of line transmittance
    and Bob's detector efficiency."""
    _check_gain(g)
    _check_unit("eta_a", eta_a)
    _check_unit("eta_bl", eta_bl)
    xi2 = 1.0 - g * g
    g2 = g * g
    r_key = (
        xi2
        * g2
        * (
            eta_a * eta_bl
            + g2 * (1.0 - (1.0 - eta_a) ** 2) * (1.0 - (1.0 - eta_bl) ** 2)
            + 2.0 * g2 * eta_a * (1.0 - eta_a) * eta_bl * (1.0 - eta_bl)
        )
    )
    r_err = xi2 * g2 * g2 * eta_a * (1.0 - eta_a) * eta_bl * (1.0 - eta_bl)
    if r_key > 0.0:
        num = g2 * (1.0 - eta_a - eta_bl + eta_a * eta_bl)
        den = 1.0 + g2 * (6.0 - 4.0 * eta_a - 4.0 * eta_bl + 3.0 * eta_a * eta_bl)
        epsilon: Optional[float] = num / den
    else:
        epsilon = None
    return r_key, r_err, epsilon


def _fire(eta: float, count: int) -> float:
    return 1.0 - (1.0 - eta) ** count


def _pair_weights(g: float, truncation: int) -> tuple[list[tuple[int, int, float]], float]:
    """Retained (m, n, weight) triples and the retained probability mass."""
    xi4 = (1.0 - g * g) ** 2
    rows = []
    retained = 0.0
    for total in range(truncation + 1):
        w = xi4 * g ** (2 * total)
        for m in range(total + 1):
            rows.append((m, total - m, w))
            retained += w
    return rows, retained


@dataclass(frozen=True)
class OracleRates:
    """Exact per-emitted-event rates of the unattacked entangled-pair scheme,
    normalized over the retained (non-truncation-exceeded) mass."""

    r_key: float
    r_err: float
    epsilon: Optional[float]
    r_double: float
    dc_matched: float
    dc_mismatched: float
    bob_no_click: float
    retained_mass: float


def exact_rates_oracle(
    g: float, eta_a: float, eta_bl: float, truncation: int = 2
) -> OracleRates:
    """Enumerate every retained pair configuration and click pattern exactly.

    Matched-basis rounds use per-photon thinning of the pair counts (exact by
    basis invariance of the source state); mismatched-basis statistics come
    from the sector-conditioned Fock count distributions.  The 1/2 basis
    coincidence factor is included in every rate.
    """
    _check_gain(g)
    _check_unit("eta_a", eta_a)
    _check_unit("eta_bl", eta_bl)
    if truncation < 2:
        raise ValueError(f"truncation must be >= 2, got {truncation!r}")
    rows, retained = _pair_weights(g, truncation)

    sift = err = dc_m = bob_none_m = 0.0
    for m, n, w in rows:
        pa0, pa1 = _fire(eta_a, m), _fire(eta_a, n)
        pb0, pb1 = _fire(eta_bl, m), _fire(eta_bl, n)
        a_only0, a_only1 = pa0 * (1.0 - pa1), pa1 * (1.0 - pa0)
        b_only0, b_only1 = pb0 * (1.0 - pb1), pb1 * (1.0 - pb0)
        sift += w * (a_only0 + a_only1) * (b_only0 + b_only1)
        err += w * (a_only0 * b_only1 + a_only1 * b_only0)
        dc_m += w * pb0 * pb1
        bob_none_m += w * (1.0 - pb0) * (1.0 - pb1)

    xi4 = (1.0 - g * g) ** 2
    dc_x = bob_none_x = 0.0
    for pair in ((fock.Basis.PLUS, fock.Basis.CROSS), (fock.Basis.CROSS, fock.Basis.PLUS)):
        for total in range(truncation + 1):
            sector_w = (total + 1) * xi4 * g ** (2 * total)
            occs, probs = fock.sector_distribution(total, *pair)
            for (a0, a1, b0, b1), q in zip(occs, probs):
                pb0, pb1 = _fire(eta_bl, b0), _fire(eta_bl, b1)
                dc_x += 0.5 * sector_w * q * pb0 * pb1
                bob_none_x += 0.5 * sector_w * q * (1.0 - pb0) * (1.0 - pb1)

    r_key = 0.5 * sift / retained
    r_err = 0.5 * err / retained
    dc_matched = 0.5 * dc_m / retained
    dc_mismatched = 0.5 * dc_x / retained
    bob_no_click = (0.5 * bob_none_m + 0.5 * bob_none_x) / retained
    epsilon = (r_err / r_key) if r_key > 0.0 else None
    r_double = ep_attack_delivered(g, eta_a, 0.0, truncation)
    return OracleRates(
        r_key=r_key,
        r_err=r_err,
        epsilon=epsilon,
        r_double=r_double,
        dc_matched=dc_matched,
        dc_mismatched=dc_mismatched,
        bob_no_click=bob_no_click,
        retained_mass=retained,
    )


# ---------------------------------------------------------------------------
# Weak-coherent and triggered-PDC leakage
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeakageReport:
    r_exp: float
    r_multi: float
    i_e: Optional[float]
    i_e_leading: float
    saturated: bool


def wcs_leakage(mu_prime: float, eta_lb: float) -> LeakageReport:
    """Delivered-rate and multi-photon fractions for weak coherent states and
    the resulting adversary information branch."""
    if mu_prime < 0:
        raise ValueError(f"mu_prime must be >= 0, got {mu_prime!r}")
    _check_unit("eta_lb", eta_lb)
    r_exp = 0.5 * (1.0 - math.exp(-eta_lb * mu_prime))
    r_multi = 0.5 * (1.0 - (1.0 + mu_prime) * math.exp(-mu_prime))
    leading = mu_prime / (2.0 * eta_lb) if eta_lb > 0 else math.inf
    if r_exp <= 0.0:
        return LeakageReport(r_exp, r_multi, None, leading, False)
    saturated = r_exp <= r_multi
    i_e = 1.0 if saturated else r_multi / r_exp
    return LeakageReport(r_exp, r_multi, i_e, leading, saturated)


def pdc_rates_closed(g: float, eta_a: float, eta_lb: float) -> tuple[float, float]:
    """Closed-form geometric-series evaluation of the triggered-PDC sifted
    rate and multi-photon rate."""
    _check_gain(g)
    _check_unit("eta_a", eta_a)
    _check_unit("eta_lb", eta_lb)
    xi2 = 1.0 - g * g
    g2 = g * g

    def geom_all(a: float) -> float:
        return 1.0 / (1.0 - g2 * a)

    def geom_from2(a: float) -> float:
        return (g2 * a) ** 2 / (1.0 - g2 * a)

    r_exp = 0.5 * xi2 * (
        geom_all(1.0)
        - geom_all(1.0 - eta_a)
        - geom_all(1.0 - eta_lb)
        + geom_all((1.0 - eta_a) * (1.0 - eta_lb))
    )
    r_multi = 0.5 * xi2 * (geom_from2(1.0) - geom_from2(1.0 - eta_a))
    return r_exp, r_multi


def pdc_rates_series(
    g: float, eta_a: float, eta_lb: float, tail_bound: float = 1e-15
) -> tuple[float, float]:
    """Direct numeric summation of the same two series, used as an internal
    cross-check of the closed forms.  Terms are summed until the geometric
    tail bound drops below ``tail_bound``."""
    _check_gain(g)
    _check_unit("eta_a", eta_a)
    _check_unit("eta_lb", eta_lb)
    xi2 = 1.0 - g * g
    g2 = g * g
    r_exp = r_multi = 0.0
    n = 0
    while True:
        w = g2**n
        r_exp += 0.5 * xi2 * w * _fire(eta_a, n) * _fire(eta_lb, n)
        if n >= 2:
            r_multi += 0.5 * xi2 * w * _fire(eta_a, n)
        n += 1
        if g2 == 0.0 or 0.5 * xi2 * g2**n / (1.0 - g2) < tail_bound:
            break
    return r_exp, r_multi


def pdc_leakage(g: float, eta_a: float, eta_lb: float) -> LeakageReport:
    """Adversary information branch for the triggered single-crystal source."""
    r_exp, r_multi = pdc_rates_closed(g, eta_a, eta_lb)
    mu2 = g * g / (1.0 - g * g)
    leading = (2.0 - eta_a) / eta_lb * mu2 if eta_lb > 0 else math.inf
    if r_exp <= 0.0:
        return LeakageReport(r_exp, r_multi, None, leading, False)
    saturated = r_exp <= r_multi
    i_e = 1.0 if saturated else r_multi / r_exp
    return LeakageReport(r_exp, r_multi, i_e, leading, saturated)


# ---------------------------------------------------------------------------
# Photon-number-splitting attack on the entangled-pair scheme
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpAttackOracle:
    """Exact per-emitted-event statistics of the number-splitting attack on
    the entangled-pair scheme with a given single-photon pass probability."""

    delivered_rate: float
    error_rate: Optional[float]
    p_ae: Optional[float]
    p_eb: Optional[float]
    touched_fraction: Optional[float]
    i_ae: Optional[float]
    i_eb: Optional[float]
    dc_matched: float


def ep_pns_oracle(
    g: float,
    eta_a: float,
    pass_probability: float,
    truncation: int = 2,
) -> EpAttackOracle:
    """Enumerate the attacked matched-basis rounds exactly.

    The interceptor removes one photon uniformly from multi-photon arms,
    blocks singles with probability 1 - ``pass_probability`` and forwards the
    rest over a lossless, guaranteed-detection channel.
    """
    _check_gain(g)
    _check_unit("eta_a", eta_a)
    _check_unit("pass_probability", pass_probability)
    rows, retained = _pair_weights(g, truncation)

    sift = err = touched = hits_a = hits_b = dc = 0.0
    for m, n, w in rows:
        total = m + n
        pa0, pa1 = _fire(eta_a, m), _fire(eta_a, n)
        a_only0, a_only1 = pa0 * (1.0 - pa1), pa1 * (1.0 - pa0)
        a_single = a_only0 + a_only1
        if total == 0:
            continue
        if total == 1:
            # passed untouched; exactly one Bob mode is occupied
            bit_b = 0 if m == 1 else 1
            p = w * pass_probability * a_single
            sift += p
            wrong = a_only1 if bit_b == 0 else a_only0
            err += w * pass_probability * wrong
            continue
        # multi-photon arm: enumerate the stored mode
        for stored, p_store in ((0, m / total), (1, n / total)):
            if p_store == 0.0:
                continue
            f0 = m - (stored == 0)
            f1 = n - (stored == 1)
            b_fire0, b_fire1 = f0 > 0, f1 > 0
            if b_fire0 and b_fire1:
                dc += w * p_store
                continue
            if not (b_fire0 or b_fire1):
                continue
            bit_b = 0 if b_fire0 else 1
            p_sift = w * p_store * a_single
            sift += p_sift
            touched += p_sift
            wrong = a_only1 if bit_b == 0 else a_only0
            err += w * p_store * wrong
            hit_a = a_only0 if stored == 0 else a_only1
            hits_a += w * p_store * hit_a
            if bit_b == stored:
                hits_b += p_sift

    delivered = 0.5 * sift / retained
    dc_matched = 0.5 * dc / retained
    if delivered <= 0.0:
        return EpAttackOracle(delivered, None, None, None, None, None, None, dc_matched)
    error_rate = (0.5 * err / retained) / delivered
    touched_fraction = touched / sift
    p_ae = hits_a / touched if touched > 0 else None
    p_eb = hits_b / touched if touched > 0 else None
    i_ae = touched_fraction * binary_information(p_ae) if p_ae is not None else None
    i_eb = touched_fraction * binary_information(p_eb) if p_eb is not None else None
    return EpAttackOracle(
        delivered_rate=delivered,
        error_rate=error_rate,
        p_ae=p_ae,
        p_eb=p_eb,
        touched_fraction=touched_fraction,
        i_ae=i_ae,
        i_eb=i_eb,
        dc_matched=dc_matched,
    )


def ep_attack_delivered(
    g: float, eta_a: float, pass_probability: float, truncation: int = 2
) -> float:
    """Delivered sifted rate of the attacked entangled-pair scheme as a
    function of the single-photon pass probability (monotone increasing)."""
    return ep_pns_oracle(g, eta_a, pass_probability, truncation).delivered_rate


def wcs_attack_delivered(mu_prime: float, pass_probability: float) -> float:
    """Delivered sifted rate of the attacked weak-coherent scheme."""
    if mu_prime < 0:
        raise ValueError(f"mu_prime must be >= 0, got {mu_prime!r}")
    _check_unit("pass_probability", pass_probability)
    p1 = mu_prime * math.exp(-mu_prime)
    p_multi = 1.0 - (1.0 + mu_prime) * math.exp(-mu_prime)
    return 0.5 * (p_multi + pass_probability * p1)


def pdc_attack_delivered(g: float, eta_a: float, pass_probability: float) -> float:
    """Delivered sifted rate of the attacked triggered-PDC scheme."""
    _check_gain(g)
    _check_unit("eta_a", eta_a)
    _check_unit("pass_probability", pass_probability)
    _, r_multi = pdc_rates_closed(g, eta_a, 1.0)
    xi2 = 1.0 - g * g
    return r_multi + pass_probability * 0.5 * xi2 * g * g * eta_a


@dataclass(frozen=True)
class EpPnsQuantities:
    """Printed-formula symbols of the entangled-pair attack, with the branch
    chosen by the exact oracle rates."""

    r_exp: float
    r_double: float
    r_double_formula: float
    p_ae: float
    p_eb: float
    i_ae: Optional[float]
    i_eb: Optional[float]
    eps_prime: Optional[float]
    eps_prime_leading: float
    r_err_e_formula: float
    i_ab: Optional[float]
    saturated: bool


def ep_pns_quantities(g: float, eta_a: float, eta_bl: float) -> EpPnsQuantities:
    """Evaluate the attack-side quantities of the entangled-pair scheme:
    hit probabilities, information branches and the attack-raised error rate."""
    _check_gain(g)
    _check_unit("eta_a", eta_a)
    _check_unit("eta_bl", eta_bl)
    xi2 = 1.0 - g * g
    g4 = g**4
    p_ae = (5.0 - 3.0 * eta_a) / (6.0 - 4.0 * eta_a)
    p_eb = (2.0 - eta_a) / (3.0 - 2.0 * eta_a)
    r_double_formula = xi2 * g4 * (
        (1.0 - (1.0 - eta_a) ** 2) + eta_a * (1.0 - eta_a)
    )
    r_err_e_formula = xi2 * g4 * eta_a * (1.0 - eta_a) / 2.0
    oracle = exact_rates_oracle(g, eta_a, eta_bl) if g > 0 else None
    if oracle is None or oracle.r_key <= 0.0:
        mu = 2.0 * g * g / (1.0 - g * g)
        leading = (1.0 - eta_a) * mu / (4.0 * eta_bl) if eta_bl > 0 else math.inf
        return EpPnsQuantities(
            r_exp=0.0,
            r_double=0.0,
            r_double_formula=r_double_formula,
            p_ae=p_ae,
            p_eb=p_eb,
            i_ae=None,
            i_eb=None,
            eps_prime=None,
            eps_prime_leading=leading,
            r_err_e_formula=r_err_e_formula,
            i_ab=None,
            saturated=False,
        )
    r_exp = oracle.r_key
    attack = ep_pns_oracle(g, eta_a, 0.0)
    r_double = attack.delivered_rate
    saturated = r_exp <= r_double
    mu = 2.0 * g * g / (1.0 - g * g)
    eps_prime_leading = (
        (1.0 - eta_a) * mu / (4.0 * eta_bl) if eta_bl > 0 else math.inf
    )
    if saturated:
        i_ae = binary_information(p_ae)
        i_eb = binary_information(p_eb)
        eps_prime = (1.0 - eta_a) / (6.0 - 4.0 * eta_a)
    else:
        ratio = r_double / r_exp
        i_ae = ratio * binary_information(p_ae)
        i_eb = ratio * binary_information(p_eb)
        retained = attack_err = None
        # delivered errors come only from the split one-of-each-pair signals
        rows, retained = _pair_weights(g, 2)
        xi4 = (1.0 - g * g) ** 2
        attack_err = 0.5 * xi4 * g4 * eta_a * (1.0 - eta_a) / retained
        eps_prime = attack_err / r_exp
    i_ab = binary_information(eps_prime)
    return EpPnsQuantities(
        r_exp=r_exp,
        r_double=r_double,
        r_double_formula=r_double_formula,
        p_ae=p_ae,
        p_eb=p_eb,
        i_ae=i_ae,
        i_eb=i_eb,
        eps_prime=eps_prime,
        eps_prime_leading=eps_prime_leading,
        r_err_e_formula=r_err_e_formula,
        i_ab=i_ab,
        saturated=saturated,
    )
