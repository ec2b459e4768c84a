"""Table and sweep generators behind the command-line tools.

Everything is reported in bandwidth-normalized units: delay times B, symbol
and bit rates over B, power times the effective gain, utility over
B * effective gain. ``norm_throughput`` is the raw bit rate b R_s / B and
``norm_goodput`` scales it by the packet success probability. A single
isolated user is assumed for the sweeps, so its effective gain is
h / sigma^2 and p * h_eff = R_s * gamma / B.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .game import best_response, user_size
from .optimizer import gamma_star
from .phy import ModScheme, PacketConfig, TcmConfig, efficiency, to_db
from .queueing import TrafficQos

TABLE_BS = (2, 4, 6, 8, 10)

TABLE_COLUMNS = ["b", "alpha", "beta", "gamma_star_db", "f_star", "b_over_gamma_db", "utility_factor"]
TABLE_CODED_COLUMNS = ["gamma_star_coded_db", "f_star_coded", "utility_factor_coded"]

# printed precision: decimals per column
_TABLE_DECIMALS = {"beta": 4, "gamma_star_db": 1, "f_star": 3, "b_over_gamma_db": 1,
                   "utility_factor": 4, "gamma_star_coded_db": 1, "f_star_coded": 3,
                   "utility_factor_coded": 4}

SWEEP_COLUMNS = ["norm_delay", "feasible", "b", "rate_frac", "norm_throughput", "norm_goodput",
                 "sir_db", "norm_power", "norm_utility", "size"]
SWEEP_CODED_COLUMNS = ["b_coded", "rate_frac_coded", "norm_throughput_coded", "norm_goodput_coded",
                       "sir_db_coded", "norm_power_coded", "norm_utility_coded", "size_coded",
                       "tcm_gain_db"]

TRADEOFF_COLUMNS = ["b", "spectral_eff", "energy_factor", "energy_factor_coded"]


@dataclass(frozen=True)
class SweepSpec:
    lo: float = 13.0
    hi: float = 1000.0
    points: int = 400
    log: bool = True

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("a sweep needs at least 2 points")
        if not self.lo < self.hi:
            raise ValueError("sweep range must satisfy min < max")
        if self.log and self.lo <= 0:
            raise ValueError("log sweep needs a positive lower end")

    def values(self) -> np.ndarray:
        if self.log:
            return np.logspace(math.log10(self.lo), math.log10(self.hi), self.points)
        return np.linspace(self.lo, self.hi, self.points)


def table_rows(pkt: PacketConfig = PacketConfig(), tcm: TcmConfig | None = None,
               bs=TABLE_BS) -> list[dict]:
    rows = []
    for b in bs:
        s = ModScheme(b)
        opt = gamma_star(s, pkt)
        row = {
            "b": b,
            "alpha": s.alpha,
            "beta": s.beta,
            "gamma_star_db": opt.gamma_star_db,
            "f_star": opt.f_at_star,
            "b_over_gamma_db": to_db(b / opt.gamma_star),
            "utility_factor": opt.utility_factor,
        }
        if tcm is not None:
            c = gamma_star(ModScheme(b, tcm), pkt)
            row.update(gamma_star_coded_db=c.gamma_star_db, f_star_coded=c.f_at_star,
                       utility_factor_coded=c.utility_factor)
        rows.append(row)
    return rows


def round_table_row(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if k in _TABLE_DECIMALS:
            out[k] = f"{v:.{_TABLE_DECIMALS[k]}f}"
        elif isinstance(v, float):
            out[k] = f"{v:g}"
        else:
            out[k] = v
    return out


def _operating_point(traffic, bandwidth, tcm, b_max):
    try:
        s = best_response(traffic, bandwidth, b_max, tcm)
    except InfeasibleError:
        return None
    f = efficiency(s.scheme, traffic.pkt, s.target_sir)
    return {
        "b": s.b,
        "rate_frac": s.symbol_rate / bandwidth,
        "norm_throughput": s.bit_rate / bandwidth,
        "norm_goodput": s.bit_rate * f / bandwidth,
        "sir_db": to_db(s.target_sir),
        "norm_power": s.symbol_rate * s.target_sir / bandwidth,
        "norm_utility": s.b * f / s.target_sir,
        "size": user_size(s, bandwidth),
    }


def delay_sweep(sweep: SweepSpec = SweepSpec(), pkt: PacketConfig = PacketConfig(),
                source_frac: float = 0.01, tcm: TcmConfig | None = None,
                coded_only: bool = False, b_max: int = 10) -> list[dict]:
    """Best response of one user as the normalized delay bound D*B varies.

    The source rate is ``source_frac * B``. With ``tcm`` given the coded
    system is evaluated alongside (or, with ``coded_only``, instead of) the
    uncoded one and the utility ratio is reported in dB.
    """
    B = 1.0
    lam = source_frac * B / pkt.L
    rows = []
    for d in sweep.values():
        traffic = TrafficQos(lam, float(d) / B, pkt)
        row = {"norm_delay": float(d)}
        unc = None if coded_only else _operating_point(traffic, B, None, b_max)
        cod = _operating_point(traffic, B, tcm, b_max) if tcm is not None else None
        main = cod if coded_only else unc
        row["feasible"] = main is not None
        for col in SWEEP_COLUMNS[2:]:
            row[col] = main[col] if main else math.nan
        if tcm is not None and not coded_only:
            for col in SWEEP_CODED_COLUMNS[:-1]:
                row[col] = cod[col[:-len("_coded")]] if cod else math.nan
            row["tcm_gain_db"] = (to_db(cod["norm_utility"] / unc["norm_utility"])
                                  if cod and unc else math.nan)
        rows.append(row)
    return rows


def sweep_columns(tcm: TcmConfig | None, coded_only: bool = False) -> list[str]:
    if tcm is None or coded_only:
        return list(SWEEP_COLUMNS)
    return SWEEP_COLUMNS + SWEEP_CODED_COLUMNS


def tradeoff_rows(pkt: PacketConfig = PacketConfig(), tcm: TcmConfig | None = None,
                  rate_frac: float = 0.01, bs=TABLE_BS) -> list[dict]:
    rows = []
    for b in bs:
        row = {"b": b, "spectral_eff": b * rate_frac,
               "energy_factor": gamma_star(ModScheme(b), pkt).utility_factor}
        row["energy_factor_coded"] = (gamma_star(ModScheme(b, tcm), pkt).utility_factor
                                      if tcm is not None else math.nan)
        rows.append(row)
    return rows


# --------------------------------------------------------------------------
# output


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.generic):
        return v.item()
    return v


def format_rows(rows: list[dict], columns: list[str], fmt: str = "csv") -> str:
    """Serialize rows with a fixed header and column order."""
    if fmt == "json":
        return json.dumps([{c: _json_safe(r.get(c)) for c in columns} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v
