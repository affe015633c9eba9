"""Closed-form achievable rates and degrees of freedom for the layered
lattice scheme, plus the Han-Kobayashi style Gaussian baseline.

All rates are in bits (log base 2) per real dimension. The degrees-of-
freedom ratio is base-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix3

STRONG_MIN_A2 = 2.0
WEAK_MAX_A2 = 1.0 / 3.0


class AllocationError(ValueError):
    """A layered power allocation does not exist for the requested inputs."""


@dataclass(frozen=True)
class LayeredAllocation:
    """Per-stage powers and rates for one scheme instance.

    For the symmetric regimes `powers`/`rates` have shape (N,); for the
    nonsymmetric regime they have shape (3, N) indexed (user, stage), with
    stage 1 carrying the largest power.
    """

    regime: str  # "strong" | "weak" | "nonsymmetric"
    N: int
    powers: np.ndarray
    rates: np.ndarray
    total_power: float | np.ndarray
    decode_order: str  # "interference-first" | "message-first"


@dataclass(frozen=True)
class RateReport:
    per_user_rates: tuple[float, float, float]
    sum_rate: float
    dof_lower_bound: float
    binding_constraint: str
    scheme: str  # "lattice-layered" | "HK" | "very-strong" | "time-sharing"

    def to_json_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "rates_bits_per_dim": list(self.per_user_rates),
            "sum_rate": self.sum_rate,
            "dof": self.dof_lower_bound,
            "binding_constraint": self.binding_constraint,
        }


@dataclass(frozen=True)
class SigmaLadder:
    """Effective noise powers per (user, stage): when decoding the aggregate
    interference and when decoding the own sub-message. Includes the unit
    receiver noise floor, so every entry is >= 1."""

    sigma_int2: np.ndarray  # shape (3, N)
    sigma_msg2: np.ndarray  # shape (3, N)


def _report(rates, scheme, binding, total_power) -> RateReport:
    r = tuple(float(x) for x in rates)
    s = sum(r)
    denom = 0.5 * math.log2(1.0 + total_power) if total_power > 0 else 0.0
    dof = s / denom if denom > 0 else 0.0
    return RateReport(r, s, max(dof, 0.0), binding, scheme)


# ---------------------------------------------------------------------------
# Symmetric channel: degrees of freedom and layered allocations
# ---------------------------------------------------------------------------

def dof_symmetric(a2: float) -> float:
    """Achievable total degrees of freedom of the symmetric channel as a
    function of the squared cross gain a2 = a**2."""
    if a2 <= 0:
        raise ValueError("a2 must be positive")
    if a2 >= STRONG_MIN_A2:
        return max(1.0, 3.0 * math.log(a2 - 1.0) / math.log(2.0 * a2 * a2 - a2))
    if a2 <= WEAK_MAX_A2:
        num = math.log((1.0 - a2) / (2.0 * a2))
        den = math.log((1.0 + a2) / (2.0 * a2 * a2))
        return max(1.0, 3.0 * num / den)
    return 1.0


def _require_layered_regime(a2: float) -> str:
    if a2 >= STRONG_MIN_A2:
        return "strong"
    if 0 < a2 <= WEAK_MAX_A2:
        return "weak"
    raise AllocationError(
        f"no layered allocation for a2={a2}; supported regimes are a2 >= 2 and a2 <= 1/3"
    )


def layered_allocation_symmetric(a2: float, N: int) -> LayeredAllocation:
    """Geometric power ladder for the symmetric channel.

    Strong regime: P_i = (a2-1) * (2*a2^2 - a2)**(N-i), stage rate
    (1/2)log2(a2-1), interference decoded first. Weak regime:
    P_i = ((1-a2)/(2*a2^2)) * ((1+a2)/(2*a2^2))**(N-i), stage rate
    (1/2)log2((1-a2)/(2*a2)), message decoded first.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    regime = _require_layered_regime(a2)
    i = np.arange(1, N + 1, dtype=float)
    if regime == "strong":
        base = a2 - 1.0
        ratio = 2.0 * a2 * a2 - a2
        stage_rate = 0.5 * math.log2(a2 - 1.0)
        order = "interference-first"
    else:
        base = (1.0 - a2) / (2.0 * a2 * a2)
        ratio = (1.0 + a2) / (2.0 * a2 * a2)
        stage_rate = 0.5 * math.log2((1.0 - a2) / (2.0 * a2))
        order = "message-first"
    powers = base * ratio ** (N - i)
    rates = np.full(N, stage_rate)
    return LayeredAllocation(
        regime=regime,
        N=N,
        powers=powers,
        rates=rates,
        total_power=float(powers.sum()),
        decode_order=order,
    )


def stage_constraints_strong(a2: float, powers) -> tuple[np.ndarray, np.ndarray]:
    """Per-stage rate ceilings in the strong regime, clamped at 0.

    Stage i decodes the aggregate interference (signal power a2*P_i against
    P_i plus all lower layers plus noise) and then the own sub-message.
    """
    P = np.asarray(powers, dtype=float)
    N = len(P)
    r_int = np.zeros(N)
    r_msg = np.zeros(N)
    for i in range(N):
        below = (2.0 * a2 + 1.0) * P[i + 1 :].sum() + 1.0
        if P[i] > 0:
            r_int[i] = max(0.0, 0.5 * math.log2(a2 * P[i] / (P[i] + below)))
            r_msg[i] = max(0.0, 0.5 * math.log2(P[i] / below))
    return r_int, r_msg


def threshold_power(a2: float, N: int) -> float:
    """Total power of the N-layer allocation (geometric sum); 0 for N = 0."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N == 0:
        return 0.0
    regime = _require_layered_regime(a2)
    if regime == "strong":
        base = a2 - 1.0
        ratio = 2.0 * a2 * a2 - a2
    else:
        base = (1.0 - a2) / (2.0 * a2 * a2)
        ratio = (1.0 + a2) / (2.0 * a2 * a2)
    return base * (ratio**N - 1.0) / (ratio - 1.0)


# ---------------------------------------------------------------------------
# Han-Kobayashi style symmetric baseline (Gaussian, one private + one common)
# ---------------------------------------------------------------------------

def _max_symmetric_rate_two_var(caps: dict[tuple[int, int], float]) -> float:
    """Maximize Rp + Rc >= 0 subject to a*Rp + b*Rc <= cap per (a, b)."""
    cons = [(a, b, c) for (a, b), c in caps.items()]
    best = 0.0
    pts = [(0.0, 0.0)]
    # axis intercepts
    rp_max = min((c / a for a, b, c in cons if a > 0 and b == 0), default=math.inf)
    rc_max = min((c / b for a, b, c in cons if b > 0 and a == 0), default=math.inf)
    for a, b, c in cons:
        if a > 0:
            pts.append((c / a, 0.0))
        if b > 0:
            pts.append((0.0, c / b))
    # pairwise intersections
    for i in range(len(cons)):
        a1, b1, c1 = cons[i]
        for j in range(i + 1, len(cons)):
            a2_, b2, c2 = cons[j]
            det = a1 * b2 - a2_ * b1
            if abs(det) < 1e-15:
                continue
            rp = (c1 * b2 - c2 * b1) / det
            rc = (a1 * c2 - a2_ * c1) / det
            pts.append((rp, rc))
    for rp, rc in pts:
        if rp < -1e-12 or rc < -1e-12:
            continue
        rp, rc = max(rp, 0.0), max(rc, 0.0)
        if all(a * rp + b * rc <= c + 1e-12 for a, b, c in cons):
            best = max(best, rp + rc)
    return best


def hk_sym_rate(P: float, sigma2: float, a: float, grid_size: int = 201) -> float:
    """Maximum symmetric rate of a one-private/one-common Gaussian split,
    by grid search over the common-power fraction.

    Each receiver jointly decodes its own private and common parts and the
    two interfering common parts, treating the interferers' private signals
    as noise. This restricted split is a lower bound to the full
    common-message region.
    """
    if P <= 0 or sigma2 <= 0:
        raise ValueError("P and sigma2 must be positive")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    a2 = a * a
    best = 0.0
    for beta in np.linspace(0.0, 1.0, grid_size):
        pp = (1.0 - beta) * P  # own private power
        pc = beta * P  # own common power (gain 1)
        pi = a2 * beta * P  # each interfering common power
        eta = sigma2 + 2.0 * a2 * pp  # undecoded private interference
        # MAC-style caps over nonempty subsets of {private, own common,
        # interferer common x2}; collapse to the binding cap per signature
        # (#private msgs, #common msgs).
        caps: dict[tuple[int, int], float] = {}
        signals = [((1, 0), pp), ((0, 1), pc), ((0, 1), pi), ((0, 1), pi)]
        for mask in range(1, 16):
            np_, nc, pw = 0, 0, 0.0
            for bit in range(4):
                if mask >> bit & 1:
                    sig, power = signals[bit]
                    np_ += sig[0]
                    nc += sig[1]
                    pw += power
            cap = 0.5 * math.log2(1.0 + pw / eta)
            key = (np_, nc)
            caps[key] = min(caps.get(key, math.inf), cap)
        best = max(best, _max_symmetric_rate_two_var(caps))
    return best


# ---------------------------------------------------------------------------
# Piecewise symmetric rate of the layered lattice scheme
# ---------------------------------------------------------------------------

def sym_rate_lattice(a2: float, P: float, hk_oracle=None) -> RateReport:
    """Symmetric per-user rate at finite power P.

    Strong regime (a2 >= 2): full layers at the total-power thresholds, a
    residual top layer decoded in the common style between thresholds.
    Weak regime (a2 <= 1/3): same layering with the baseline filling the
    residual. The middle band falls back to the baseline entirely.
    """
    if P <= 0:
        raise ValueError("P must be positive")
    if hk_oracle is None:
        hk_oracle = hk_sym_rate
    a = math.sqrt(a2)
    eq_rtol = 1e-12

    if WEAK_MAX_A2 < a2 < STRONG_MIN_A2:
        r = hk_oracle(P, 1.0, a)
        return _report([r] * 3, "HK", "band-fallback", 3 * P)

    # largest N with threshold_power(N) <= P (within rounding)
    N = 0
    while threshold_power(a2, N + 1) <= P * (1 + eq_rtol):
        N += 1
    PaN = threshold_power(a2, N)

    if a2 >= STRONG_MIN_A2:
        if abs(PaN - P) <= eq_rtol * max(P, 1.0) and N >= 1:
            r = 0.5 * N * math.log2(a2 - 1.0)
            return _report([r] * 3, "lattice-layered", "case-c", 3 * P)
        if P <= a2 - 1.0:
            r = max(0.0, 0.5 * math.log2(P))
            return _report([r] * 3, "very-strong", "case-a", 3 * P)
        # P strictly between thresholds N and N+1
        top = 0.5 * math.log2(
            1.0 + (2.0 * a2 + 1.0) * (P - PaN) / (1.0 + (2.0 * a2 + 1.0) * PaN)
        )
        r = 0.5 * N * math.log2(a2 - 1.0) + top
        return _report([r] * 3, "lattice-layered", "case-b", 3 * P)

    # weak regime
    stage = 0.5 * math.log2((1.0 - a2) / (2.0 * a2))
    if abs(PaN - P) <= eq_rtol * max(P, 1.0) and N >= 1:
        r = N * stage
        return _report([r] * 3, "lattice-layered", "case-f", 3 * P)
    if N == 0:
        r = hk_oracle(P, 1.0, a)
        return _report([r] * 3, "HK", "case-d", 3 * P)
    best = -math.inf
    for i in (N - 1, N):
        Pa_i = threshold_power(a2, i)
        residual = P - Pa_i
        # unit receiver noise added to the undecoded lower-layer interference
        r_i = i * stage + hk_oracle(residual, 1.0 + (2.0 * a2 + 1.0) * Pa_i, a)
        best = max(best, r_i)
    return _report([best] * 3, "lattice-layered", "case-e", 3 * P)


# ---------------------------------------------------------------------------
# Very strong interference
# ---------------------------------------------------------------------------

def very_strong_symmetric(a2: float, P: float, sigma2: float = 1.0) -> RateReport | None:
    """Single-layer rate (1/2)log2(P/sigma2) per user when a2 >= P/sigma2 + 1."""
    if a2 <= 0 or P <= 0 or sigma2 <= 0:
        raise ValueError("inputs must be positive")
    if a2 < P / sigma2 + 1.0:
        return None
    r = max(0.0, 0.5 * math.log2(P / sigma2))
    return _report([r] * 3, "very-strong", "message-decoding", 3 * P)


def _very_strong_conditions(ch: ChannelMatrix3, P, sigma2) -> list[bool]:
    p, q = ch.h1_witness
    h = ch.h
    s = [(P[i] + sigma2[i]) for i in range(3)]
    c1 = (
        h[0, 1] ** 2 >= p * p * s[0] / sigma2[1]
        and h[0, 2] ** 2 >= s[0] / sigma2[2]
        and h[1, 0] ** 2 >= q * q * s[1] / sigma2[0]
        and h[1, 2] ** 2 >= s[1] / sigma2[2]
        and h[2, 0] ** 2 >= s[2] / sigma2[0]
        and h[2, 1] ** 2 >= s[2] / sigma2[1]
    )
    c2 = (
        h[0, 1] ** 2 >= s[0] / sigma2[1]
        and h[0, 2] ** 2 >= s[0] / sigma2[2]
        and h[1, 0] ** 2 >= s[1] / sigma2[0]
        and h[1, 2] ** 2 >= p * p * s[1] / sigma2[2]
        and h[2, 0] ** 2 >= s[2] / sigma2[0]
        and h[2, 1] ** 2 >= q * q * s[2] / sigma2[1]
    )
    c3 = (
        h[0, 1] ** 2 >= s[0] / sigma2[1]
        and h[0, 2] ** 2 >= q * q * s[0] / sigma2[2]
        and h[1, 0] ** 2 >= s[1] / sigma2[0]
        and h[1, 2] ** 2 >= s[1] / sigma2[2]
        and h[2, 0] ** 2 >= p * p * s[2] / sigma2[0]
        and h[2, 1] ** 2 >= s[2] / sigma2[1]
    )
    return [c1, c2, c3]


def very_strong_general(
    ch: ChannelMatrix3, P, sigma2
) -> tuple[RateReport, int] | None:
    """Nonsymmetric very-strong check: if one of the three gain-condition
    sets holds (witness entering as p^2 or q^2 on the designated links),
    every user gets (1/2)log2(P_i/sigma_i^2). Returns the first matching
    set index (1-based), or None."""
    if ch.h1_witness is None:
        raise ValueError("channel has no rational-ratio witness")
    P = [float(x) for x in P]
    sigma2 = [float(x) for x in sigma2]
    if any(x <= 0 for x in P + sigma2):
        raise ValueError("powers and noise variances must be positive")
    conds = _very_strong_conditions(ch, P, sigma2)
    for idx, ok in enumerate(conds, start=1):
        if ok:
            rates = [max(0.0, 0.5 * math.log2(P[i] / sigma2[i])) for i in range(3)]
            return _report(rates, "very-strong", f"condition-set-{idx}", sum(P)), idx
    return None


# ---------------------------------------------------------------------------
# Nonsymmetric layered allocation
# ---------------------------------------------------------------------------

def nonsym_layered_allocation(
    a1: float, a2: float, a3: float, N: int
) -> tuple[LayeredAllocation, SigmaLadder]:
    """Layered allocation for the channel where receiver j hears both
    interferers through gain a_j, all squared gains >= 2.

    Computed from stage N (smallest power) down to stage 1. The message-
    stage effective noise at (user j, stage i) counts the unit receiver
    noise plus everything below stage i:

        sigma_msg2[j, i] = 1 + sum_{l>i} P[j, l] + a_j^2 * sum_{l != j, k>i} P[l, k]

    which depends only on later stages, so each stage is solved in closed
    form:  P[j, i] = min_{l != j} a_j^2 * sigma_msg2[l, i] - sigma_msg2[j, i].
    """
    gains = np.array([a1, a2, a3], dtype=float)
    g2 = gains**2
    if np.any(g2 < STRONG_MIN_A2):
        raise AllocationError("all squared gains must be >= 2")
    if N < 1:
        raise ValueError("N must be >= 1")
    P = np.zeros((3, N))
    s_msg = np.zeros((3, N))
    for i in range(N - 1, -1, -1):
        for j in range(3):
            own_below = P[j, i + 1 :].sum()
            cross_below = sum(P[l, i + 1 :].sum() for l in range(3) if l != j)
            s_msg[j, i] = 1.0 + own_below + g2[j] * cross_below
        for j in range(3):
            others = [l for l in range(3) if l != j]
            P[j, i] = min(g2[j] * s_msg[l, i] for l in others) - s_msg[j, i]
            if P[j, i] <= 0:
                raise AllocationError(
                    f"nonpositive power at user {j + 1}, stage {i + 1}"
                )
    rates = 0.5 * np.log2(P / s_msg)
    s_int = s_msg + P
    alloc = LayeredAllocation(
        regime="nonsymmetric",
        N=N,
        powers=P,
        rates=rates,
        total_power=P.sum(axis=1),
        decode_order="interference-first",
    )
    return alloc, SigmaLadder(sigma_int2=s_int, sigma_msg2=s_msg)


def dof_nonsym_numeric(a1: float, a2: float, a3: float, N_max: int) -> float:
    """Numeric degrees-of-freedom estimate for the nonsymmetric allocation.

    Estimated as the growth rate of the sum rate against (1/2)log2 of the
    total power between the two deepest feasible layer counts (the
    per-layer-count rate/power ratio approaches the same limit but only as
    O(1/N)); floored at 1 by time sharing.
    """
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    sums = []
    for N in range(1, N_max + 1):
        try:
            alloc, _ = nonsym_layered_allocation(a1, a2, a3, N)
        except AllocationError:
            continue
        sums.append((float(alloc.rates.sum()), float(np.sum(alloc.total_power))))
    if not sums:
        return 1.0  # time-sharing fallback
    if len(sums) == 1:
        r, p = sums[0]
        return max(1.0, r / (0.5 * math.log2(p)))
    (r0, p0), (r1, p1) = sums[-2], sums[-1]
    slope = (r1 - r0) / (0.5 * (math.log2(p1) - math.log2(p0)))
    return max(1.0, slope)
