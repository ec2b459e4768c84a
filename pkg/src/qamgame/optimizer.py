"""Energy-efficient operating points.

``gamma_star`` locates the SIR maximizing b*f(gamma)/gamma, i.e. the positive
root of f(gamma) - gamma*f'(gamma). ``invert_efficiency`` returns the smallest
SIR that delivers a required packet-success probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError, InfeasibleTargetError, SolverError
from .phy import (
    ModScheme,
    PacketConfig,
    efficiency,
    efficiency_ceiling,
    efficiency_derivative,
    q_tail_inv,
    to_db,
)

GAMMA_MAX = 1e8
# lowest SIR probed when bracketing downward from gamma = 1
GAMMA_MIN = 1e-6
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class OptimumPoint:
    b: int
    gamma_star: float
    f_at_star: float
    utility_factor: float
    residual: float

    @property
    def gamma_star_db(self) -> float:
        return to_db(self.gamma_star)


def stationarity_residual(scheme: ModScheme, pkt: PacketConfig, gamma: float) -> float:
    """f(gamma) - gamma f'(gamma); negative below the optimum, positive above."""
    return efficiency(scheme, pkt, gamma) - gamma * efficiency_derivative(scheme, pkt, gamma)


def _bracket_stationary(scheme, pkt):
    g = lambda x: stationarity_residual(scheme, pkt, x)
    x = 1.0
    gx = g(x)
    if gx >= 0 and efficiency(scheme, pkt, x) < 0.5:
        # long packets: gamma = 1 sits on the 2**-L floor, where f ~ sqrt(gamma)
        # also gives g > 0; walk up into the dip before the optimum
        y = x
        while y < GAMMA_MAX and efficiency(scheme, pkt, y) < 0.5:
            y *= 2.0
            if g(y) < 0:
                x, gx = y, g(y)
                break
    if gx < 0:
        while x < GAMMA_MAX:
            nxt = min(2.0 * x, GAMMA_MAX)
            gn = g(nxt)
            if gn > 0:
                return x, nxt
            x = nxt
    else:
        while x > GAMMA_MIN:
            nxt = x / 2.0
            gn = g(nxt)
            if gn < 0:
                return nxt, x
            x = nxt
    raise SolverError(
        f"no sign change of f - gamma f' for b={scheme.b}, L={pkt.L} in "
        f"[{GAMMA_MIN:g}, {GAMMA_MAX:g}]; efficiency curve is not S-shaped"
    )


@lru_cache(maxsize=256)
def gamma_star(scheme: ModScheme, pkt: PacketConfig = PacketConfig()) -> OptimumPoint:
    """Utility-maximizing SIR for ``scheme`` (bisection, then Newton polish)."""
    g = lambda x: stationarity_residual(scheme, pkt, x)
    lo, hi = _bracket_stationary(scheme, pkt)
    # bisection on log(gamma)
    for _ in range(200):
        if hi / lo - 1.0 < 1e-13:
            break
        mid = math.sqrt(lo * hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    x = math.sqrt(lo * hi)
    gx = g(x)
    for _ in range(3):
        h = 1e-6 * x
        slope = (g(x + h) - g(x - h)) / (2.0 * h)
        if slope == 0.0:
            break
        cand = x - gx / slope
        if not lo <= cand <= hi:
            break
        gc = g(cand)
        if abs(gc) >= abs(gx):
            break
        x, gx = cand, gc
    f = efficiency(scheme, pkt, x)
    residual = abs(gx) / f
    if residual > RESIDUAL_TOL:
        raise SolverError(f"gamma_star residual {residual:.3g} above tolerance for b={scheme.b}")
    return OptimumPoint(b=scheme.b, gamma_star=x, f_at_star=f,
                        utility_factor=scheme.b * f / x, residual=residual)


def invert_efficiency_closed_form(scheme: ModScheme, pkt: PacketConfig, eta: float) -> float:
    """Approximate inverse that ignores the 2**-L floor and any coding gain."""
    if not 0.0 < eta < 1.0:
        raise DomainError(f"closed-form inverse needs eta in (0, 1), got {eta!r}")
    x = -math.expm1(scheme.b / (2.0 * pkt.L) * math.log(eta)) / scheme.alpha
    if not 0.0 < x < 1.0:
        raise DomainError(f"closed-form inverse undefined for b={scheme.b}, eta={eta!r}")
    return q_tail_inv(x) ** 2 / scheme.beta


def _uncoded_inverse(scheme: ModScheme, pkt: PacketConfig, eta: float) -> float:
    # exact for uncoded QAM: keeps the 2**-L floor
    x = -math.expm1(scheme.b / (2.0 * pkt.L) * math.log(eta + 2.0**-pkt.L)) / scheme.alpha
    x = min(max(x, 1e-300), 0.5)
    return q_tail_inv(x) ** 2 / scheme.beta if x < 0.5 else 0.0


def invert_efficiency(scheme: ModScheme, pkt: PacketConfig, eta: float) -> float:
    """Smallest SIR with efficiency(gamma) >= eta.

    Monotone bisection, seeded by the uncoded closed form. The returned value
    satisfies efficiency(gamma) >= eta and |efficiency(gamma) - eta| <= 1e-10.
    """
    if eta < 0 or math.isnan(eta):
        raise DomainError(f"target efficiency must be >= 0, got {eta!r}")
    if eta >= efficiency_ceiling(pkt):
        raise InfeasibleTargetError(
            f"target efficiency {eta!r} is not below 1 - 2^-{pkt.L}")
    if eta == 0:
        return 0.0
    f = lambda x: efficiency(scheme, pkt, x)
    seed = _uncoded_inverse(scheme, pkt, eta)
    if scheme.coding is not None:
        seed /= scheme.coding.params_for(scheme.b).gain(seed)
    if not seed > 0 or not math.isfinite(seed):
        seed = 1.0

    lo = hi = seed
    step = 1.0 + 1e-12
    while f(hi) < eta:
        hi *= step
        step *= step
        if hi > 1e300:
            raise SolverError(f"cannot bracket efficiency {eta!r} for b={scheme.b}")
    step = 1.0 + 1e-12
    while lo > 0 and f(lo) >= eta:
        lo /= step
        step *= step
        if lo < 1e-300:
            lo = 0.0
    if lo == hi:
        return hi
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < eta:
            lo = mid
        else:
            hi = mid
    return hi


def utility_factor(scheme: ModScheme, pkt: PacketConfig, gamma: float) -> float:
    """b * f(gamma) / gamma: the utility with the B * h_eff scale removed."""
    if not gamma > 0:
        raise DomainError(f"SIR must be > 0, got {gamma!r}")
    return scheme.b * efficiency(scheme, pkt, gamma) / gamma
