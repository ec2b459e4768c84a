"""Acceptance checks, one per criterion.

Each check returns ``(passed, detail)`` and prints a single line
``[PASS] ...`` or ``[FAIL] ...`` with the tolerance it was held to. Run
under pytest (``pytest tests/test_acceptance.py -s``) or directly
(``python tests/test_acceptance.py``) for a summary.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import best_response_bruteforce  # noqa: E402
from scenes import random_feasible_scene  # noqa: E402

from qamgame.errors import DelayBoundError, QosInfeasibleError  # noqa: E402
from qamgame.experiments import SweepSpec, delay_sweep, tradeoff_rows  # noqa: E402
from qamgame.game import (best_response, direct_utility, equilibrium_utility,  # noqa: E402
                          nash_equilibrium, verify_equilibrium)
from qamgame.optimizer import gamma_star, invert_efficiency  # noqa: E402
from qamgame.phy import (ModScheme, PacketConfig, default_tcm_config, efficiency,  # noqa: E402
                         efficiency_derivative)
from qamgame.queueing import (LinkRate, TrafficQos, eta_threshold, feasibility_lhs,  # noqa: E402
                              packet_time, simulate_queue)

BS = (2, 4, 6, 8, 10)
PKT = PacketConfig(100)

UNCODED_SIR_DB = (9.1, 15.7, 21.6, 27.3, 33.0)
UNCODED_F = (0.801, 0.785, 0.771, 0.757, 0.743)
UNCODED_FACTOR = (0.1978, 0.0846, 0.0322, 0.0112, 0.0037)
CODED_SIR_DB = (8.1, 14.2, 20.4, 26.3, 31.9)
CODED_F = (0.947, 0.898, 0.872, 0.847, 0.788)
REFERENCE_B8_CODED_FACTOR = 0.160


def report(n, title, passed, detail):
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {n}: {title} | {detail}")
    return passed, detail


# --------------------------------------------------------------------------


def check_1():
    gamma_star.cache_clear()
    t0 = time.perf_counter()
    opts = [gamma_star(ModScheme(b), PKT) for b in BS]
    dt = time.perf_counter() - t0
    d_sir = max(abs(o.gamma_star_db - r) for o, r in zip(opts, UNCODED_SIR_DB))
    d_f = max(abs(o.f_at_star - r) for o, r in zip(opts, UNCODED_F))
    d_u = max(abs(o.utility_factor - r) for o, r in zip(opts, UNCODED_FACTOR))
    ok = d_sir <= 0.05 and d_f <= 0.002 and d_u <= 5e-4 and dt < 1.0
    return report(1, "uncoded optimum table", ok,
                  f"max|dSIR|={d_sir:.3f} dB (tol 0.05), max|df|={d_f:.4f} (tol 0.002), "
                  f"max|dfactor|={d_u:.2e} (tol 5e-4), runtime {dt:.3f}s (limit 1s)")


def check_2():
    tcm = default_tcm_config()
    opts = [gamma_star(ModScheme(b, tcm), PKT) for b in BS]
    d_sir = max(abs(o.gamma_star_db - r) for o, r in zip(opts, CODED_SIR_DB))
    d_f = max(abs(o.f_at_star - r) for o, r in zip(opts, CODED_F))
    b8 = opts[3].utility_factor
    ok = d_sir <= 0.3 and d_f <= 0.01
    return report(2, "coded optimum table", ok,
                  f"max|dSIR|={d_sir:.3f} dB (tol 0.3), max|df|={d_f:.4f} (tol 0.01); "
                  f"b=8 factor recomputed {b8:.4f} vs reference {REFERENCE_B8_CODED_FACTOR} "
                  f"(reference is off by a factor {REFERENCE_B8_CODED_FACTOR / b8:.1f})")


def _random_traffic(rng, L=100):
    while True:
        bw = 10 ** rng.uniform(5, 7)
        lam = bw * 10 ** rng.uniform(-4, -0.5) / L
        D = 10 ** rng.uniform(0.5, 3.5) * L / bw
        tr = TrafficQos(lam, D, PacketConfig(L))
        try:
            best_response(tr, bw)
        except QosInfeasibleError:
            continue
        return tr, bw


def check_3(n=100, seed=2024):
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    b_miss, worst = 0, 0.0
    for _ in range(n):
        tr, bw = _random_traffic(rng)
        s = best_response(tr, bw)
        ob, _, _, ou = best_response_bruteforce(tr.arrival_rate, tr.delay_bound, bw)
        u = s.b * efficiency(s.scheme, tr.pkt, s.target_sir) / s.target_sir
        b_miss += s.b != ob
        worst = max(worst, abs(u - ou) / ou)
    dt = time.perf_counter() - t0
    ok = b_miss == 0 and worst <= 1e-3 and dt < 30.0
    return report(3, "best response vs brute-force oracle", ok,
                  f"{n} instances, b mismatches {b_miss} (tol 0), max rel utility diff {worst:.2e} "
                  f"(tol 1e-3), runtime {dt:.1f}s (limit 30s)")


def check_4(n_scenes=20, seed=7):
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst, ks, n_ok = 0.0, [], 0
    for i in range(n_scenes):
        K = int(rng.integers(1, 9))
        sc = random_feasible_scene(rng, K)
        chk = verify_equilibrium(sc, nash_equilibrium(sc), 10_000, seed=i)
        worst = max(worst, chk.max_gain)
        ks.append(K)
        n_ok += chk.n_feasible
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 120.0
    return report(4, "Nash unilateral deviations", ok,
                  f"{n_scenes} scenes K in {sorted(set(ks))}, 1e4 deviations/user "
                  f"({n_ok} delay-feasible), max rel gain {worst:.2e} (tol 1e-6), "
                  f"runtime {dt:.1f}s (limit 120s)")


def check_5(seed=11):
    s = ModScheme(4)
    link = LinkRate(1e4, s)
    g = gamma_star(s, PKT).gamma_star
    f = efficiency(s, PKT, g)
    tau = packet_time(link, PKT)
    zs, svc = [], []
    for i, rho in enumerate((0.1, 0.3, 0.5, 0.7, 0.85)):
        res = simulate_queue(link, TrafficQos(rho * f / tau, 1.0, PKT), g, 100_000, seed=seed + i)
        zs.append(res.z_score)
        svc.append(abs(res.mean_service / res.analytic_service - 1))
    ok = max(map(abs, zs)) <= 3.0 and max(svc) <= 0.01
    return report(5, "queue simulation vs mean-delay formula", ok,
                  "z-scores " + ", ".join(f"{z:+.2f}" for z in zs)
                  + f" (tol |z|<=3), max rel E{{S}} error {max(svc):.2e} (tol 1e-2), 1e5 packets")


def _delay_sir_samples(rng, n, L=100):
    out = []
    while len(out) < n:
        rs = 10 ** rng.uniform(3, 7)
        tau2 = L / (2 * rs)
        lam = 10 ** rng.uniform(-4, math.log10(0.9)) / tau2
        D = tau2 * 10 ** rng.uniform(0.05, 3)
        tr = TrafficQos(lam, D, PacketConfig(L))
        try:
            etas = [eta_threshold(LinkRate(rs, ModScheme(b)), tr) for b in BS]
        except DelayBoundError:
            continue
        if all(2.0**-L < e < 1 - 2.0**-L for e in etas):
            out.append((rs, tr, etas))
    return out


def check_6(n=50, seed=3):
    rng = np.random.default_rng(seed)
    mono, ratio_up = 0, 0
    for rs, tr, etas in _delay_sir_samples(rng, n):
        g = np.array([invert_efficiency(ModScheme(b), tr.pkt, e) for b, e in zip(BS, etas)])
        mono += bool(np.all(np.diff(g) > 0))
        ratio_up += bool(np.all(np.diff(g[1:] / g[:-1]) > 0))
    ok = mono == n and ratio_up == n
    return report(6, "delay-limited SIR ordering in b", ok,
                  f"{n} samples with 2^-L < eta_b < 1: gamma-hat strictly increasing in "
                  f"{mono}/{n}, successive ratio increasing in {ratio_up}/{n} (need {n}/{n} each)")


def _structure(rows, suffix=""):
    B, L = 1.0, 100
    get = lambda r, k: r[k + suffix]
    fails = []
    rows = [r for r in rows if not math.isnan(get(r, "b"))]
    d = np.array([r["norm_delay"] for r in rows])
    b = np.array([get(r, "b") for r in rows])
    u = np.array([get(r, "norm_utility") for r in rows])
    rf = np.array([get(r, "rate_frac") for r in rows])
    phi = np.array([get(r, "size") for r in rows])
    # (a)
    if np.any(np.diff(b) > 0):
        fails.append("a")
    # (b) plateau (R_s < B): constant utility; R_s = B: utility falls as D tightens
    n_flat = n_ramp = 0
    for i in range(len(rows) - 1):
        if b[i] != b[i + 1]:
            continue
        if rf[i] < 1 and rf[i + 1] < 1:
            n_flat += 1
            if not u[i] == u[i + 1]:
                fails.append(f"b-plateau@{d[i]:.1f}")
        if rf[i] == 1 and rf[i + 1] == 1:
            n_ramp += 1
            if not u[i] < u[i + 1]:
                fails.append(f"b-ramp@{d[i]:.1f}")
    # (c) jump from b_hi to b_lo between d[i] and d[i+1]: b_lo infeasible at d[i],
    # feasible at d[i+1], so the boundary lhs_{b_lo}(D) = 1 lies in between
    n_jumps = 0
    lam = 0.01 * B / L
    for i in np.nonzero(np.diff(b))[0]:
        n_jumps += 1
        lo = int(b[i + 1])
        lhs = lambda dd: feasibility_lhs(lo, TrafficQos(lam, dd / B, PacketConfig(L)), B)
        if not (lhs(d[i]) >= 1.0 > lhs(d[i + 1])):
            fails.append(f"c@{d[i]:.2f}")
    # (d)
    if np.any(np.diff(phi) > 0):
        fails.append("d")
    return fails, f"{n_jumps} jumps, {n_flat} plateau and {n_ramp} ramp steps, b up to {int(b.max())}"


def check_7():
    tcm = default_tcm_config()
    rows = delay_sweep(SweepSpec(), PKT, tcm=tcm)
    fu, su = _structure(rows)
    fc, sc = _structure(rows, "_coded")
    gains = np.array([r["tcm_gain_db"] for r in rows if not math.isnan(r["tcm_gain_db"])])
    e_ok = gains.size > 0 and gains.min() >= 1.0 and gains.max() <= 3.5
    ok = not fu and not fc and e_ok
    detail = (f"400-point sweep D*B in [13, 1000]: (a)-(d) uncoded failures {fu or 'none'} "
              f"({su}), coded failures {fc or 'none'} ({sc}); "
              f"(e) TCM gain {gains.min():.2f}..{gains.max():.2f} dB (band [1.0, 3.5])")
    return report(7, "delay sweep structure", ok, detail)


def check_8():
    rows = tradeoff_rows(PKT, default_tcm_config(), 0.01)
    se = np.array([r["spectral_eff"] for r in rows])
    eu = np.array([r["energy_factor"] for r in rows])
    ec = np.array([r["energy_factor_coded"] for r in rows])
    ok = (np.all(np.diff(se) > 0) and np.all(np.diff(eu) < 0) and np.all(np.diff(ec) < 0)
          and np.all(ec > eu))
    return report(8, "energy/spectral tradeoff", ok,
                  f"spectral {se.round(2).tolist()} strictly up; uncoded energy strictly down "
                  f"{bool(np.all(np.diff(eu) < 0))}, coded strictly down {bool(np.all(np.diff(ec) < 0))}, "
                  f"coded > uncoded at every b {bool(np.all(ec > eu))}")


def _richardson_derivative(s, g, rel_step=1e-3):
    h = rel_step * g
    central = lambda h: (efficiency(s, PKT, g + h) - efficiency(s, PKT, g - h)) / (2 * h)
    return (4 * central(h / 2) - central(h)) / 3


def check_9(seed=9):
    tcm = default_tcm_config()
    schemes = [ModScheme(b) for b in BS] + [ModScheme(b, tcm) for b in BS]
    zero_ok = all(efficiency(s, PKT, 0.0) == 0.0 for s in schemes)

    rt = 0.0
    for s in schemes:
        for eta in np.concatenate([np.logspace(-8, -1, 8), np.linspace(0.1, 0.999, 20)]):
            rt = max(rt, abs(efficiency(s, PKT, invert_efficiency(s, PKT, float(eta))) / eta - 1))

    rng = np.random.default_rng(seed)
    cons = 0.0
    for i in range(10):
        sc = random_feasible_scene(rng, int(rng.integers(1, 9)), tcm=tcm if i % 2 else None)
        rep = nash_equilibrium(sc)
        a = np.array(equilibrium_utility(sc, rep))
        d = direct_utility(sc, rep.strategies, rep.powers)
        cons = max(cons, float(np.max(np.abs(a / d - 1))))

    # compared where the curve actually rises (0.05 <= f <= 0.99); in the
    # saturated tail f' drops below the spacing of doubles near 1 and no
    # difference quotient of f can resolve it
    der = 0.0
    for s in schemes:
        for eta in np.linspace(0.05, 0.99, 40):
            g = invert_efficiency(s, PKT, float(eta))
            der = max(der, abs(_richardson_derivative(s, g) / efficiency_derivative(s, PKT, g) - 1))

    ok = zero_ok and rt <= 1e-9 and cons <= 1e-9 and der <= 1e-6
    return report(9, "identities", ok,
                  f"f(0)==0 exactly: {zero_ok}; inverse round trip {rt:.1e} (tol 1e-9); "
                  f"closed-form vs direct utility {cons:.1e} (tol 1e-9); "
                  f"derivative vs finite difference {der:.1e} (tol 1e-6)")


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9]


@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i + 1}" for i in range(len(CHECKS))])
def test_acceptance(check, capsys):
    with capsys.disabled():
        print()
        passed, detail = check()
    assert passed, detail


if __name__ == "__main__":
    results = [c()[0] for c in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
