"""M/G/1 model of a user's ARQ link.

Packets arrive as a Poisson stream and are sent FIFO; each transmission takes
``tau = L / (b R_s)`` and succeeds with probability ``f(gamma)``, so the
service time is a geometric number of slots. The average delay bound turns
into a floor on ``f`` (``eta_threshold``) and hence on the SIR.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DelayBoundError, DomainError, UnstableQueueError
from .optimizer import gamma_star, invert_efficiency
from .phy import ModScheme, PacketConfig, efficiency

STABILITY_MARGIN = 1e-12
TRACE_HEADER = ("packet_id", "arrival_time", "start_service", "departure", "delay")


@dataclass(frozen=True)
class TrafficQos:
    """Poisson packet source with an average-delay requirement.

    ``arrival_rate`` is in packets/s and ``delay_bound`` in seconds.
    ``ack_time`` is carried for completeness but never enters the analytic
    formulas (the ACK turnaround is treated as negligible).
    """

    arrival_rate: float
    delay_bound: float
    pkt: PacketConfig = PacketConfig()
    ack_time: float = 0.0

    def __post_init__(self):
        if not self.arrival_rate >= 0:
            raise DomainError(f"arrival rate must be >= 0, got {self.arrival_rate!r}")
        if not self.delay_bound > 0:
            raise DomainError(f"delay bound must be > 0, got {self.delay_bound!r}")

    @property
    def source_rate(self) -> float:
        """Offered load in bits/s."""
        return self.arrival_rate * self.pkt.L


@dataclass(frozen=True)
class LinkRate:
    symbol_rate: float
    scheme: ModScheme

    def __post_init__(self):
        if not self.symbol_rate > 0:
            raise DomainError(f"symbol rate must be > 0, got {self.symbol_rate!r}")

    @property
    def bit_rate(self) -> float:
        return self.scheme.b * self.symbol_rate


def packet_time(link: LinkRate, pkt: PacketConfig) -> float:
    return pkt.L / link.bit_rate


def pk_mean_delay(tau: float, arrival_rate: float, f: float) -> float:
    """Pollaczek-Khinchine mean sojourn time for geometric ARQ service."""
    margin = f - arrival_rate * tau
    if margin < STABILITY_MARGIN:
        raise UnstableQueueError(
            f"queue unstable: f={f:.6g} does not exceed lambda*tau={arrival_rate * tau:.6g}")
    return tau * (1.0 - arrival_rate * tau / 2.0) / margin


def avg_delay(link: LinkRate, traffic: TrafficQos, gamma: float) -> float:
    """Average queueing plus transmission delay at SIR ``gamma``."""
    f = efficiency(link.scheme, traffic.pkt, gamma)
    return pk_mean_delay(packet_time(link, traffic.pkt), traffic.arrival_rate, f)


def load_factor(link: LinkRate, traffic: TrafficQos, gamma: float) -> float:
    f = efficiency(link.scheme, traffic.pkt, gamma)
    if f <= 0:
        return math.inf
    return traffic.arrival_rate * packet_time(link, traffic.pkt) / f


def eta_threshold(link: LinkRate, traffic: TrafficQos) -> float:
    """Smallest packet-success probability that keeps the mean delay <= D."""
    L, lam, D = traffic.pkt.L, traffic.arrival_rate, traffic.delay_bound
    R = link.bit_rate
    if R * (1.0 + 1e-12) < L / D:
        raise DelayBoundError(
            f"delay bound {D:g}s is shorter than one packet time {L / R:g}s")
    return L * lam / R + L / (R * D) - L * L * lam / (2.0 * R * R * D)


def min_sir_for_delay(link: LinkRate, traffic: TrafficQos) -> float:
    """SIR at which the average delay equals the bound (gamma-hat)."""
    return invert_efficiency(link.scheme, traffic.pkt, eta_threshold(link, traffic))


def feasibility_lhs(b: int, traffic: TrafficQos, bandwidth: float) -> float:
    """Delay threshold at the maximal symbol rate R_s = B (feasible iff < 1)."""
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be > 0, got {bandwidth!r}")
    L, lam, D = traffic.pkt.L, traffic.arrival_rate, traffic.delay_bound
    R = b * bandwidth
    return L * lam / R + L / (R * D) - L * L * lam / (2.0 * R * R * D)


def qos_feasible(b: int, traffic: TrafficQos, bandwidth: float) -> bool:
    """Whether constellation ``b`` can meet (lambda, D) at some R_s <= B.

    Besides the threshold condition, one packet must fit in the delay bound
    at the maximal rate (b B >= L / D).
    """
    if b * bandwidth * traffic.delay_bound < traffic.pkt.L:
        return False
    return feasibility_lhs(b, traffic, bandwidth) < 1.0


def omega_infinity(traffic: TrafficQos) -> float:
    """Infimum of the bit rate b R_s for which the delay threshold drops below one."""
    L, lam, D = traffic.pkt.L, traffic.arrival_rate, traffic.delay_bound
    x = D * lam
    return (L / D) * (1.0 + x + math.sqrt(1.0 + x * x)) / 2.0


def omega_from_efficiency(traffic: TrafficQos, f: float) -> float:
    """Bit rate at which the delay threshold equals ``f``."""
    L, lam, D = traffic.pkt.L, traffic.arrival_rate, traffic.delay_bound
    x = D * lam
    return (L / D) * (1.0 + x + math.sqrt(1.0 + x * x + 2.0 * (1.0 - f) * x)) / (2.0 * f)


def omega_star(scheme: ModScheme, traffic: TrafficQos) -> float:
    """Bit rate at which the delay-limited SIR equals the optimum SIR."""
    return omega_from_efficiency(traffic, gamma_star(scheme, traffic.pkt).f_at_star)


# --------------------------------------------------------------------------
# discrete-event check


@dataclass(frozen=True)
class QueueSimResult:
    n_packets: int
    mean_delay: float
    std_error: float
    mean_service: float
    service_std_error: float
    analytic_delay: float
    analytic_service: float
    rho: float

    @property
    def z_score(self) -> float:
        return (self.mean_delay - self.analytic_delay) / self.std_error

    def within(self, n_sigma: float = 3.0) -> bool:
        return abs(self.z_score) <= n_sigma


def _batch_se(x: np.ndarray, n_batches: int) -> float:
    # delays are autocorrelated; batch means give an honest standard error
    n = len(x) // n_batches * n_batches
    means = x[:n].reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def simulate_queue(link: LinkRate, traffic: TrafficQos, gamma: float,
                   horizon_packets: int = 100_000, seed: int = 0,
                   trace_path: str | Path | None = None, n_batches: int = 30) -> QueueSimResult:
    """FIFO single-server simulation with geometric ARQ service.

    Interarrival times and transmission counts come from two independent
    streams spawned from ``seed`` and are drawn by inverse-CDF sampling.
    With ``arrival_rate == 0`` each packet finds the server idle.
    """
    if horizon_packets < 10_000:
        raise DomainError(f"horizon_packets must be >= 10000, got {horizon_packets}")
    f = efficiency(link.scheme, traffic.pkt, gamma)
    tau = packet_time(link, traffic.pkt)
    lam = traffic.arrival_rate
    analytic = pk_mean_delay(tau, lam, f)

    arr_rng, svc_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    n = int(horizon_packets)
    v = 1.0 - svc_rng.random(n)
    with np.errstate(divide="ignore"):
        tries = np.floor(np.log(v) / math.log1p(-f)) + 1.0 if f < 1.0 else np.ones(n)
    service = tries * tau
    cum_service = np.cumsum(service)

    if lam > 0:
        arrivals = np.cumsum(-np.log(1.0 - arr_rng.random(n)) / lam)
        # Lindley recursion in closed form: d_k = S_k + max_{j<=k}(a_j - S_{j-1})
        departures = cum_service + np.maximum.accumulate(arrivals - (cum_service - service))
    else:
        arrivals = np.concatenate(([0.0], cum_service[:-1]))
        departures = cum_service
    start = np.maximum(departures - service, arrivals)
    delay = departures - arrivals

    if trace_path is not None:
        write_trace_csv(trace_path, arrivals, start, departures, delay)

    return QueueSimResult(
        n_packets=n,
        mean_delay=float(delay.mean()),
        std_error=_batch_se(delay, n_batches),
        mean_service=float(service.mean()),
        service_std_error=float(service.std(ddof=1) / math.sqrt(n)),
        analytic_delay=analytic,
        analytic_service=tau / f,
        rho=lam * tau / f,
    )


def write_trace_csv(path, arrivals, start, departures, delay) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for i, row in enumerate(zip(arrivals, start, departures, delay)):
            w.writerow([i, *(repr(float(v)) for v in row)])
