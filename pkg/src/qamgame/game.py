"""Best responses and Nash equilibria of the delay-constrained uplink game.

Each user picks a constellation, a symbol rate and a transmit power to
maximize bits per joule subject to its average-delay bound. For a matched
filter receiver the equilibrium powers follow in closed form from the users'
target SIRs and symbol rates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, InfeasibleError, QosInfeasibleError
from .optimizer import gamma_star, invert_efficiency
from .phy import (ModScheme, PacketConfig, TcmConfig, default_tcm_config, efficiency,
                  load_tcm_config)
from .queueing import (LinkRate, TrafficQos, eta_threshold, feasibility_lhs,
                       omega_star, qos_feasible)

PARETO = "pareto"
MAX_RATE = "max-rate"


@dataclass(frozen=True)
class UserSpec:
    channel_gain: float
    traffic: TrafficQos

    def __post_init__(self):
        if not self.channel_gain > 0:
            raise DomainError(f"channel gain must be > 0, got {self.channel_gain!r}")


@dataclass(frozen=True)
class NetworkScene:
    bandwidth: float
    noise_power: float
    users: tuple[UserSpec, ...]
    b_max: int = 10
    p_max: float = math.inf
    tcm: TcmConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if not self.bandwidth > 0:
            raise DomainError("bandwidth must be > 0")
        if not self.noise_power > 0:
            raise DomainError("noise power must be > 0")
        if not self.users:
            raise DomainError("a scene needs at least one user")
        if self.b_max < 2 or self.b_max % 2:
            raise DomainError(f"b_max must be an even integer >= 2, got {self.b_max!r}")

    @property
    def K(self) -> int:
        return len(self.users)

    def with_user(self, user: UserSpec) -> "NetworkScene":
        return replace(self, users=self.users + (user,))


@dataclass(frozen=True)
class Strategy:
    scheme: ModScheme
    symbol_rate: float
    target_sir: float
    power: float | None = None

    @property
    def b(self) -> int:
        return self.scheme.b

    @property
    def bit_rate(self) -> float:
        return self.scheme.b * self.symbol_rate


@dataclass(frozen=True)
class EquilibriumReport:
    strategies: tuple[Strategy, ...]
    sizes: tuple[float, ...]
    total_size: float
    feasible: bool
    utilities: tuple[float, ...] | None = None
    power_limited: tuple[bool, ...] = field(default=())

    @property
    def powers(self) -> tuple[float, ...] | None:
        if not self.feasible:
            return None
        return tuple(s.power for s in self.strategies)

    @property
    def pmax_violated(self) -> bool:
        return any(self.power_limited)


def user_size(strategy: Strategy, bandwidth: float) -> float:
    """Share of the capacity region used by one user, (1 + B/(R_s gamma))^-1."""
    if not (strategy.symbol_rate > 0 and strategy.target_sir > 0):
        raise DomainError("user size needs positive symbol rate and SIR")
    return 1.0 / (1.0 + bandwidth / (strategy.symbol_rate * strategy.target_sir))


def lowest_feasible_b(traffic: TrafficQos, bandwidth: float, b_max: int = 10) -> int:
    for b in range(2, b_max + 1, 2):
        if qos_feasible(b, traffic, bandwidth):
            return b
    resid = feasibility_lhs(b_max, traffic, bandwidth)
    raise QosInfeasibleError(
        f"lambda={traffic.arrival_rate:g}/s, D={traffic.delay_bound:g}s cannot be met with "
        f"b <= {b_max} (threshold at b_max is {resid:.4g}, needs < 1)", residual=resid)


def best_response_interval(traffic: TrafficQos, bandwidth: float, b_max: int = 10,
                           tcm: TcmConfig | None = None) -> tuple[Strategy, Strategy]:
    """Both ends of the best-response set: smallest and largest symbol rate.

    The constellation is the lowest one that can meet the delay bound. If the
    optimum SIR is reachable below the bandwidth the user runs at it with any
    rate in [Omega*/b, B]; otherwise it must use R_s = B and the SIR that
    makes the delay bound tight.
    """
    b = lowest_feasible_b(traffic, bandwidth, b_max)
    scheme = ModScheme(b, tcm)
    rs_star = omega_star(scheme, traffic) / b
    if rs_star <= bandwidth:
        gamma = gamma_star(scheme, traffic.pkt).gamma_star
        low = Strategy(scheme, rs_star, gamma)
    else:
        gamma = invert_efficiency(scheme, traffic.pkt,
                                  eta_threshold(LinkRate(bandwidth, scheme), traffic))
        low = Strategy(scheme, bandwidth, gamma)
    return low, Strategy(scheme, bandwidth, gamma)


def best_response(traffic: TrafficQos, bandwidth: float, b_max: int = 10,
                  tcm: TcmConfig | None = None) -> Strategy:
    """Pareto-dominant best response (the smallest admissible symbol rate)."""
    return best_response_interval(traffic, bandwidth, b_max, tcm)[0]


def effective_gains(scene: NetworkScene, powers: Sequence[float]) -> np.ndarray:
    """Matched-filter effective gain h_k / (sigma^2 + sum_{j != k} p_j h_j)."""
    h = np.array([u.channel_gain for u in scene.users])
    rx = np.asarray(powers, dtype=float) * h
    return h / (scene.noise_power + rx.sum() - rx)


def achieved_sirs(scene: NetworkScene, strategies: Sequence[Strategy],
                  powers: Sequence[float]) -> np.ndarray:
    rs = np.array([s.symbol_rate for s in strategies])
    return scene.bandwidth / rs * np.asarray(powers, dtype=float) * effective_gains(scene, powers)


def nash_equilibrium(scene: NetworkScene, selection: str = PARETO) -> EquilibriumReport:
    """Closed-form matched-filter equilibrium built from per-user best responses.

    ``selection="max-rate"`` returns the other end of each best-response
    interval (R_s = B) instead of the Pareto-dominant one.
    """
    if selection not in (PARETO, MAX_RATE):
        raise ConfigError(f"unknown equilibrium selection {selection!r}")
    idx = 0 if selection == PARETO else 1
    strategies = [best_response_interval(u.traffic, scene.bandwidth, scene.b_max, scene.tcm)[idx]
                  for u in scene.users]
    sizes = tuple(user_size(s, scene.bandwidth) for s in strategies)
    total = math.fsum(sizes)
    if total >= 1.0:
        return EquilibriumReport(tuple(strategies), sizes, total, feasible=False)
    slack = 1.0 - total
    powers = [scene.noise_power / u.channel_gain * phi / slack for u, phi in zip(scene.users, sizes)]
    strategies = tuple(replace(s, power=p) for s, p in zip(strategies, powers))
    limited = tuple(p > scene.p_max for p in powers)
    report = EquilibriumReport(strategies, sizes, total, feasible=True, power_limited=limited)
    return replace(report, utilities=tuple(equilibrium_utility(scene, report)))


def equilibrium_utility(scene: NetworkScene, report: EquilibriumReport) -> list[float]:
    """Bits per joule of every user at a feasible equilibrium.

    Closed form in the users' sizes; equals b R_s f(gamma) / p for the
    reported powers.
    """
    if not report.feasible:
        raise InfeasibleError("utilities are undefined for an infeasible profile")
    out = []
    total = report.total_size
    for u, s, phi in zip(scene.users, report.strategies, report.sizes):
        f = efficiency(s.scheme, u.traffic.pkt, s.target_sir)
        others = total - phi
        out.append(scene.bandwidth * f * u.channel_gain * s.b / (scene.noise_power * s.target_sir)
                   * (1.0 - others / (1.0 - phi)))
    return out


def direct_utility(scene: NetworkScene, strategies: Sequence[Strategy],
                   powers: Sequence[float]) -> np.ndarray:
    """Throughput over power, b R_s f(gamma_k) / p_k, with SIRs from the powers."""
    sirs = achieved_sirs(scene, strategies, powers)
    return np.array([s.bit_rate * efficiency(s.scheme, u.traffic.pkt, g) / p
                     for s, u, g, p in zip(strategies, scene.users, sirs, powers)])


# --------------------------------------------------------------------------
# deviation check


@dataclass(frozen=True)
class DeviationCheck:
    max_gain: float
    per_user_max_gain: tuple[float, ...]
    n_feasible: int
    n_delay_violations: int
    max_gain_violating: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_gain <= self.tol


def _delay_ok(b, L, lam, D, rs, f):
    R = b * rs
    ok = R * D >= L
    eta = L * lam / R + L / (R * D) - L * L * lam / (2.0 * R * R * D)
    return ok & (eta < 1.0) & (f >= eta * (1.0 - 1e-12))


def verify_equilibrium(scene: NetworkScene, report: EquilibriumReport, n_samples: int = 10_000,
                       seed: int = 0, tol: float = 1e-6) -> DeviationCheck:
    """Sample unilateral deviations and measure the best relative utility gain.

    Each user in turn draws ``n_samples`` strategies (b uniform over even
    values up to ``b_max``, R_s log-uniform from half the slowest rate that
    can fit a packet in the bound up to B, p log-uniform within one decade
    of its equilibrium power) while everyone else keeps the
    equilibrium power. Gains count only for deviations meeting the delay bound.
    """
    if not report.feasible:
        raise InfeasibleError("cannot verify an infeasible profile")
    rng = np.random.default_rng(seed)
    powers = np.array(report.powers)
    h_eff = effective_gains(scene, powers)
    base = direct_utility(scene, report.strategies, powers)
    bs = np.arange(2, scene.b_max + 1, 2)
    B = scene.bandwidth

    gains, n_ok, n_bad, worst_bad = [], 0, 0, -math.inf
    for k, (u, s) in enumerate(zip(scene.users, report.strategies)):
        tr = u.traffic
        L, lam, D = tr.pkt.L, tr.arrival_rate, tr.delay_bound
        b = rng.choice(bs, size=n_samples)
        # below L / (b_max D) no constellation can fit a packet in the bound
        rs_lo = math.log(min(0.5 * L / (scene.b_max * D), 0.5 * s.symbol_rate))
        rs = np.exp(rng.uniform(rs_lo, math.log(B), n_samples))
        p = powers[k] * 10.0 ** rng.uniform(-1.0, 1.0, n_samples)
        gamma = B / rs * p * h_eff[k]
        f = np.empty(n_samples)
        for bb in bs:
            m = b == bb
            if not m.any():
                continue
            sch = ModScheme(int(bb), scene.tcm)
            f[m] = efficiency(sch, tr.pkt, gamma[m])
        util = b * rs * f / p
        ok = _delay_ok(b, L, lam, D, rs, f)
        rel = util / base[k] - 1.0
        best = float(rel[ok].max()) if ok.any() else -math.inf
        # the equilibrium action itself is always a candidate
        gains.append(max(best, 0.0))
        n_ok += int(ok.sum())
        n_bad += int((~ok).sum())
        if (~ok).any():
            worst_bad = max(worst_bad, float(rel[~ok].max()))
    return DeviationCheck(max_gain=max(gains), per_user_max_gain=tuple(gains), n_feasible=n_ok,
                          n_delay_violations=n_bad, max_gain_violating=worst_bad, tol=tol)


# --------------------------------------------------------------------------
# scene files


def scene_from_dict(doc: dict, gain_file: str | Path | None = None) -> NetworkScene:
    """Build a scene from the JSON layout
    ``{bandwidth_hz, noise_w, users: [{gain, lambda_pps, packet_bits, delay_s}], b_max, coded}``.
    """
    try:
        users = tuple(
            UserSpec(
                channel_gain=float(u["gain"]),
                traffic=TrafficQos(arrival_rate=float(u["lambda_pps"]),
                                   delay_bound=float(u["delay_s"]),
                                   pkt=PacketConfig(int(u.get("packet_bits", 100)))),
            )
            for u in doc["users"]
        )
        coded = bool(doc.get("coded", False))
        tcm = None
        if coded:
            tcm = load_tcm_config(gain_file) if gain_file else default_tcm_config()
        return NetworkScene(
            bandwidth=float(doc["bandwidth_hz"]),
            noise_power=float(doc["noise_w"]),
            users=users,
            b_max=int(doc.get("b_max", 10)),
            p_max=float(doc.get("p_max_w", math.inf)),
            tcm=tcm,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scene: {exc}") from exc


def load_scene(path: str | Path, gain_file: str | Path | None = None) -> NetworkScene:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scene file {path}: {exc}") from exc
    return scene_from_dict(doc, gain_file)


def report_to_dict(scene: NetworkScene, report: EquilibriumReport) -> dict:
    users = []
    for i, (s, phi) in enumerate(zip(report.strategies, report.sizes)):
        row = {
            "user": i,
            "b": s.b,
            "symbol_rate": s.symbol_rate,
            "bit_rate": s.bit_rate,
            "target_sir": s.target_sir,
            "target_sir_db": 10.0 * math.log10(s.target_sir),
            "size": phi,
            "power_w": s.power,
        }
        if report.utilities is not None:
            row["utility_bits_per_joule"] = report.utilities[i]
        if report.power_limited:
            row["exceeds_p_max"] = report.power_limited[i]
        users.append(row)
    return {
        "bandwidth_hz": scene.bandwidth,
        "noise_w": scene.noise_power,
        "coded": scene.tcm is not None,
        "feasible": report.feasible,
        "total_size": report.total_size,
        "pmax_violated": report.pmax_violated,
        "users": users,
    }
