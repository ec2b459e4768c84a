"""Random scene generators shared by the unit and acceptance tests."""

import numpy as np

from qamgame.game import NetworkScene, UserSpec, nash_equilibrium
from qamgame.phy import PacketConfig
from qamgame.queueing import TrafficQos


def random_user(rng, B, K=1, L=100, tight=False):
    # source rate 1e-4 B .. 1e-2 B shared among K users; normalized delay
    # 20 K .. 2000 K so that crowded scenes stay inside the capacity region.
    # A tight user draws its delay from 13 .. 2000 K and may need b > 2;
    # only sparse scenes get one, as such a user fills most of the capacity.
    lam = B * 10 ** rng.uniform(-4, -2) / (K * L)
    lo = 13 if tight else 20 * K
    D = 10 ** rng.uniform(np.log10(lo), np.log10(2000 * K)) / B
    return UserSpec(10 ** rng.uniform(-12, -9), TrafficQos(lam, D, PacketConfig(L)))


def random_feasible_scene(rng, K, B=1e6, noise=1e-15, tcm=None, tries=200):
    for _ in range(tries):
        users = tuple(random_user(rng, B, K, tight=(k == 0 and K <= 2)) for k in range(K))
        scene = NetworkScene(B, noise, users, tcm=tcm)
        if nash_equilibrium(scene).feasible:
            return scene
    raise RuntimeError(f"no feasible scene with K={K}")
