"""Admissible-regime validation and the closed-form exponent algebra.

Everything in this module is exact arithmetic on (d, alpha, s): the weight
exponent mu, the temporal/spatial Lebesgue exponents (a, b, p, q, lambda),
the moment order r_s, the four-branch solution-space case table, and the
two-parameter decay ladder used by the long-time diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

ENDPOINT_TOL = 1e-14
LADDER_CAP = 40


class RegimeError(ValueError):
    """Raised when (d, alpha, s) violates an admissibility bound.

    ``code`` names the violated bound (e.g. "alpha-out-of-range").
    """

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class RegimeParams:
    """Validated triple (d, alpha, s); construct via validate_regime()."""

    d: int
    alpha: float
    s: float

    @property
    def critical_alpha(self):
        return (self.d + 2) / 4.0

    @property
    def s_lower(self):
        return -self.alpha + max(1.0 - self.alpha, 0.0)

    @property
    def is_critical(self):
        return math.isclose(self.alpha, self.critical_alpha, rel_tol=0.0, abs_tol=ENDPOINT_TOL)


def validate_regime(d, alpha, s):
    """Check d >= 2, alpha in (1/2, (d+2)/4], s in (-alpha + (1-alpha)_+, 0).

    Open endpoints are rejected within ENDPOINT_TOL: the exponent algebra
    degenerates there (p -> infinity at the lower s endpoint, for instance).
    """
    if int(d) != d or d < 2:
        raise RegimeError("dimension-too-small", f"need integer d >= 2, got {d}")
    d = int(d)
    alpha = float(alpha)
    s = float(s)
    a_hi = (d + 2) / 4.0
    if not (alpha > 0.5 + ENDPOINT_TOL and alpha <= a_hi + ENDPOINT_TOL):
        raise RegimeError(
            "alpha-out-of-range",
            f"need alpha in (1/2, {a_hi}] (left endpoint open), got {alpha}",
        )
    alpha = min(alpha, a_hi)
    s_lo = -alpha + max(1.0 - alpha, 0.0)
    if not (s_lo + ENDPOINT_TOL < s < -ENDPOINT_TOL):
        raise RegimeError(
            "s-out-of-range",
            f"need s in ({s_lo}, 0), both endpoints open, got {s}",
        )
    return RegimeParams(d=d, alpha=alpha, s=s)


@dataclass(frozen=True)
class DerivedExponents:
    """Closed-form exponents attached to a regime.

    Identities (held to ~1e-15 by construction):
        1/a + 1/b = 1/2,  1/p + 1/q = 1/2,  2*alpha/a + d/p = 2*alpha - 1.
    r_s is the real-valued max; moment tests round it up to an even integer.
    """

    regime: RegimeParams
    mu: float
    a: float
    b: float
    p: float
    q: float
    lam: float
    r_s: float

    def moment_sigma(self, rho, a_time, eta):
        """Growth exponent sigma of the randomized-flow moment bound.

        sigma = (s - (eta - 2*alpha*rho - 2*alpha/a_time)) / (2*alpha),
        with the 2*alpha/a_time term dropped for a_time = inf.
        """
        al = self.regime.alpha
        inv_a = 0.0 if math.isinf(a_time) else 1.0 / a_time
        return (self.regime.s - (eta - 2.0 * al * rho - 2.0 * al * inv_a)) / (2.0 * al)

    def moment_hypotheses(self, rho, a_time, eta, p_space):
        """Return (ok, reason) for the two admissible hypothesis sets."""
        al = self.regime.alpha
        s = self.regime.s
        if math.isinf(a_time):
            if not 2.0 <= p_space <= self.r_s:
                return False, f"need 2 <= p <= r_s={self.r_s}"
            if eta - 2.0 * al * rho > s + 1e-12:
                return False, "need eta - 2*alpha*rho <= s"
            return True, ""
        if not (2.0 <= a_time <= self.r_s and 2.0 <= p_space <= self.r_s):
            return False, f"need 2 <= a', p <= r_s={self.r_s}"
        if eta - 2.0 * al * rho - 2.0 * al / a_time > s + 1e-12:
            return False, "need eta - 2*alpha*rho - 2*alpha/a' <= s"
        if rho * a_time <= -1.0:
            return False, "need rho * a' > -1"
        return True, ""


def derive_exponents(regime):
    """Populate every derived exponent for a validated regime."""
    al, s, d = regime.alpha, regime.s, regime.d
    mu = max(-s / al + 1.0 / (2.0 * al) - 1.0, 0.0)
    a = 4.0 * al / (2.0 * al * (mu + 1.0) - 1.0)
    p = 2.0 * d / (2.0 * al * (1.0 - mu) - 1.0)
    b = 4.0 * al / (1.0 - 2.0 * al * mu)
    q = 2.0 * d / (d + 1.0 - 2.0 * al * (1.0 - mu))
    lam = 2.0 * d / (d + 1.0 - 2.0 * al * (mu + 1.0))
    r_s = max(a, p)
    return DerivedExponents(regime=regime, mu=mu, a=a, b=b, p=p, q=q, lam=lam, r_s=r_s)


# --------------------------------------------------------------------------
# time-weighted mixed norms: descriptor type shared with the spectral layer


@dataclass(frozen=True)
class NormSpec:
    """Descriptor of a norm  || t^rho f(t) ||_{L^{a_time}(0,T; X)}.

    kind selects the spatial space X:
        "lp"             -> L^r
        "hom_sobolev"    -> homogeneous Sobolev, Plancherel with |xi|^order
        "inhom_sobolev"  -> (1 - Laplacian)^{order/2} then L^r
        "hom_sobolev_lp" -> |xi|^order multiplier then L^r
    """

    a_time: float
    rho: float
    kind: str
    order: float = 0.0
    r: float = 2.0

    def __post_init__(self):
        if self.kind not in ("lp", "hom_sobolev", "inhom_sobolev", "hom_sobolev_lp"):
            raise ValueError(f"unknown spatial norm kind {self.kind!r}")
        if not self.r >= 1.0:
            raise ValueError("spatial exponent r must be >= 1")
        if not math.isinf(self.a_time) and self.rho * self.a_time <= -1.0:
            raise ValueError("weight not integrable at t=0: need rho*a_time > -1")

    @classmethod
    def lp(cls, a_time, rho, r):
        return cls(a_time, rho, "lp", 0.0, r)

    @classmethod
    def hom_sobolev(cls, a_time, rho, order):
        return cls(a_time, rho, "hom_sobolev", order, 2.0)

    @classmethod
    def inhom_sobolev(cls, a_time, rho, order, r):
        return cls(a_time, rho, "inhom_sobolev", order, r)

    @classmethod
    def hom_sobolev_lp(cls, a_time, rho, order, r):
        return cls(a_time, rho, "hom_sobolev_lp", order, r)


@dataclass(frozen=True)
class YSpaceCase:
    """One of the four short-time solution-space cases, with its norm list."""

    case_id: str
    norm_components: tuple


def classify_yspace(regime, exps=None):
    """Select the unique Y-case for a regime and enumerate its norms.

    The four case predicates are pairwise disjoint and cover the admissible
    region; the Y4 auxiliary Lebesgue exponent is additionally required to
    stay in [2, 1e3].
    """
    if exps is None:
        exps = derive_exponents(regime)
    al, s, d = regime.alpha, regime.s, regime.d
    mu, a, b, p, q, lam = exps.mu, exps.a, exps.b, exps.p, exps.q, exps.lam

    lead = (
        NormSpec.lp(a, 0.0, p),
        NormSpec.lp(a, 0.0, lam),
        NormSpec.lp(a, 0.0, q),
    )
    if al <= 1.0:
        if (2.0 / 3.0 < al and s >= -al / 2.0) or al <= 2.0 / 3.0:
            m5 = 8.0 * al / (1.0 - 2.0 * al * (mu - 1.0))
            rho5 = (3.0 * mu + 1.0) / 4.0 - 1.0 / (8.0 * al)
            comps = lead + (
                NormSpec.inhom_sobolev(b, 0.0, 1.0 - al * (2.0 * mu + 1.0), p),
                NormSpec.inhom_sobolev(m5, rho5, 0.5, p),
            )
            return YSpaceCase("Y1", comps)
        comps = lead + (
            NormSpec.inhom_sobolev(a, 1.0 - 1.0 / (2.0 * al), 2.0 * al - 1.0, p),
        )
        return YSpaceCase("Y2", comps)

    comps3 = lead + (
        NormSpec.lp(b, 0.0, p),
        NormSpec.inhom_sobolev(a, 1.0 / (2.0 * al), 1.0, p),
    )
    if s >= -1.0:
        return YSpaceCase("Y3", comps3)
    denom = 2.0 * al * (1.0 - mu) - 2.0 * s - 3.0
    if denom <= 0.0:
        raise RegimeError("y4-exponent-out-of-range", f"auxiliary denominator {denom} <= 0")
    r4 = 2.0 * d / denom
    if not 2.0 <= r4 <= 1e3:
        raise RegimeError(
            "y4-exponent-out-of-range",
            f"auxiliary Lebesgue exponent {r4} outside [2, 1e3]",
        )
    return YSpaceCase("Y4", comps3 + (NormSpec.lp(a, 0.0, r4),))


def xspace_components(regime, which, exps=None):
    """Norm lists for the two auxiliary spaces X1 and X2."""
    if exps is None:
        exps = derive_exponents(regime)
    al = regime.alpha
    if which == "X1":
        m = 4.0 * al / (2.0 * al * (1.0 - exps.mu) - 1.0)
        return (NormSpec.lp(m, exps.mu, exps.p), NormSpec.lp(m, exps.mu, exps.q))
    if which == "X2":
        rho = -regime.s / (2.0 * al)
        return (
            NormSpec.lp(math.inf, rho, 2.0),
            NormSpec.inhom_sobolev(2.0, rho, al, 2.0),
        )
    raise ValueError(f"unknown X space {which!r}")


# --------------------------------------------------------------------------
# decay ladder


def ladder_sigma(n):
    """sigma_n = (2^n - 2) / (2^n - 1)."""
    return (2.0**n - 2.0) / (2.0**n - 1.0)


def ladder_eta(n):
    """eta_n = 2^(n+1) - 2."""
    return 2.0 ** (n + 1) - 2.0


@dataclass(frozen=True)
class DecayLadderClass:
    """Ladder classification of a strictly supercritical regime.

    (n, j) is the reported class: the deepest transitional rung (j = 3) when
    the regime bootstraps at least once, otherwise the terminal class
    (j in {1, 2}).  w_slope follows the reported branch: the final rate
    -(d+2)/(2*alpha) + 2 + 2s/alpha for j in {1, 2}, the n-th intermediate
    rate (2^(n+1) - 1) * (-(d+2)/(2*alpha) + 2) for j = 3.  terminal_n /
    terminal_j and final_w_slope always carry the terminal data; rungs lists
    every transitional level the regime passes through.
    """

    n: int
    j: int
    w_slope: float
    terminal_n: int
    terminal_j: int
    final_w_slope: float
    rungs: tuple


def decay_exponents(regime):
    """Predicted log-log slopes of ||u||^2 and ||w||^2: (s/alpha, final rate)."""
    al, s, d = regime.alpha, regime.s, regime.d
    u_slope = s / al
    w_slope = -(d + 2.0) / (2.0 * al) + 2.0 + 2.0 * s / al
    return u_slope, w_slope


def _alpha_band(alpha, crit):
    """Unique n with sigma_n*crit < alpha <= sigma_{n+1}*crit (capped)."""
    x = crit / (crit - alpha) + 1.0
    n = max(1, math.ceil(math.log2(x)) - 1)
    while n > 1 and not ladder_sigma(n) * crit < alpha:
        n -= 1
    while n < LADDER_CAP and not alpha <= ladder_sigma(n + 1) * crit:
        n += 1
    return n


def _s_level(s, delta, cap):
    """Smallest m >= 1 with eta_m * delta <= s, searched up to cap."""
    for m in range(1, cap + 1):
        if ladder_eta(m) * delta <= s:
            return m
    return cap + 1


def classify_decay_ladder(regime):
    """Classify a strictly supercritical regime in the decay ladder.

    The three set families overlap as written (each transitional set splits
    into the three sets one level down), so the classifier resolves a point
    to its deepest transitional rung when one exists and to the terminal
    class otherwise; ladder_memberships() is the brute-force counterpart.
    """
    crit = regime.critical_alpha
    if regime.is_critical or regime.alpha >= crit:
        raise RegimeError(
            "critical-alpha",
            "ladder applies to alpha < (d+2)/4 only; use the log-splitting path",
        )
    delta = regime.alpha - crit
    n_alpha = _alpha_band(regime.alpha, crit)
    m_s = _s_level(regime.s, delta, n_alpha)
    n_term = min(n_alpha, m_s)
    j_term = 1 if n_alpha <= m_s else 2
    u_slope, final_slope = decay_exponents(regime)
    rungs = tuple(range(1, n_term))
    if rungs:
        n_rep, j_rep = rungs[-1], 3
        base = -(regime.d + 2.0) / (2.0 * regime.alpha) + 2.0
        w_slope = (2.0 ** (n_rep + 1) - 1.0) * base
    else:
        n_rep, j_rep = n_term, j_term
        w_slope = final_slope
    return DecayLadderClass(
        n=n_rep,
        j=j_rep,
        w_slope=w_slope,
        terminal_n=n_term,
        terminal_j=j_term,
        final_w_slope=final_slope,
        rungs=rungs,
    )


def ladder_memberships(regime, cap=LADDER_CAP):
    """All (n, j) with the regime literally inside the Lemma-A set A_n^(j).

    Used as the enumeration oracle against classify_decay_ladder: the (n, j)
    with j in {1, 2} must be unique, and the j = 3 memberships must be the
    contiguous rung prefix below the terminal level.
    """
    crit = regime.critical_alpha
    al, s = regime.alpha, regime.s
    if al >= crit:
        raise RegimeError("critical-alpha", "enumeration needs alpha < (d+2)/4")
    delta = al - crit
    lower = regime.s_lower
    out = []
    for n in range(1, cap + 1):
        # A_n^(1): alpha band (sigma_n, sigma_{n+1}] * crit, s below eta_{n-1}*delta
        lo_a = ladder_sigma(n) * crit if n > 1 else 0.5
        hi_a = ladder_sigma(n + 1) * crit
        s_hi = ladder_eta(n - 1) * delta if n > 1 else 0.0
        if lo_a < al <= hi_a and lower < s < s_hi:
            out.append((n, 1))
        # A_n^(2): alpha in (sigma_{n+1}*crit, crit), s in [eta_n, eta_{n-1}) * delta
        if ladder_sigma(n + 1) * crit < al < crit:
            if ladder_eta(n) * delta <= s < ladder_eta(n - 1) * delta:
                out.append((n, 2))
            # A_n^(3): same alpha range, s below eta_n * delta
            if lower < s < ladder_eta(n) * delta:
                out.append((n, 3))
    return out
