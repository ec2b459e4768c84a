"""Square M-QAM physical layer: packet efficiency, Gaussian tails, TCM gain.

All SIR and gain values are linear. Conversions to and from dB happen only
at I/O boundaries (:func:`to_db`, :func:`from_db`, gain files, CLI output).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import optimize, special

from .errors import ConfigError, DomainError, FitError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Below this exponent the efficiency is evaluated relative to the 2**-L floor
# so that f(0) == 0 exactly and tiny values keep full relative precision.
_FLOOR_BRANCH_T = 20.0

DEFAULT_GAIN_FILE = "tcm_gain_8state.json"


def to_db(x):
    return _scalar_or_array(10.0 * np.log10(x), x)


def from_db(x_db):
    return _scalar_or_array(10.0 ** (np.asarray(x_db, dtype=float) / 10.0), x_db)


def _scalar_or_array(result, like):
    if np.ndim(like) == 0:
        return float(result)
    return result


# --------------------------------------------------------------------------
# configuration types


@dataclass(frozen=True)
class PacketConfig:
    L: int = 100

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise DomainError(f"packet length must be a positive integer, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))


@dataclass(frozen=True)
class GainParams:
    """Constants of the arctan coding-gain model, all linear units."""

    A: float
    C: float
    D: float
    gamma_bar: float

    def __post_init__(self):
        if not self.D > 0:
            raise ConfigError(f"gain scale D must be positive, got {self.D!r}")

    def gain(self, gamma):
        return self.A + self.C * np.arctan((gamma - self.gamma_bar) / self.D)

    def slope(self, gamma):
        u = (gamma - self.gamma_bar) / self.D
        return self.C / (self.D * (1.0 + u * u))

    def min_gain(self) -> float:
        """Infimum of the gain over gamma >= 0."""
        if self.C >= 0:
            return float(self.gain(0.0))
        return self.A + self.C * math.pi / 2.0


@dataclass(frozen=True)
class TcmConfig:
    """Trellis-coded modulation setup.

    ``gain_params`` maps information bits per symbol to the fitted gain
    constants. ``info_bits`` / ``coded_bits`` override the conventional
    rate n/(n+1) subset code (n = 1 for b = 2, n = 2 otherwise).
    """

    gain_params: tuple = ()
    info_bits: int | None = None
    coded_bits: int | None = None

    def __post_init__(self):
        params = self.gain_params
        if isinstance(params, Mapping):
            params = tuple(sorted(params.items()))
        params = tuple((int(b), p) for b, p in params)
        object.__setattr__(self, "gain_params", params)
        for b, p in params:
            if p.min_gain() <= 0:
                raise ConfigError(f"coding gain for b={b} is not positive on gamma >= 0")
        if (self.info_bits is None) != (self.coded_bits is None):
            raise ConfigError("info_bits and coded_bits must be given together")
        if self.info_bits is not None and not 0 < self.info_bits < self.coded_bits:
            raise ConfigError("code rate info_bits/coded_bits must lie in (0, 1)")

    def params_for(self, b: int) -> GainParams:
        for key, p in self.gain_params:
            if key == b:
                return p
        raise ConfigError(f"no coding-gain parameters for b={b}")

    def bs(self) -> list[int]:
        return [b for b, _ in self.gain_params]

    def code_bits(self, b: int) -> tuple[int, int]:
        if self.info_bits is not None:
            return self.info_bits, self.coded_bits
        return (1, 2) if b == 2 else (2, 3)

    def code_rate(self, b: int) -> float:
        n, ell = self.code_bits(b)
        return n / ell


@dataclass(frozen=True)
class ModScheme:
    """Square M-QAM constellation with ``b`` (information) bits per symbol."""

    b: int
    coding: TcmConfig | None = field(default=None, compare=True)

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 2 or self.b % 2:
            raise DomainError(f"b must be an even integer >= 2 (square M-QAM), got {self.b!r}")
        object.__setattr__(self, "b", int(self.b))
        if self.coding is not None:
            self.coding.params_for(self.b)

    @property
    def M(self) -> int:
        return 2**self.b

    @property
    def alpha(self) -> float:
        return 2.0 * (1.0 - 2.0 ** (-self.b / 2))

    @property
    def beta(self) -> float:
        return 3.0 / (2.0**self.b - 1.0)

    @property
    def coded(self) -> bool:
        return self.coding is not None

    def uncoded(self) -> "ModScheme":
        return ModScheme(self.b)


# --------------------------------------------------------------------------
# Gaussian tail

# Acklam's rational approximation of the standard normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def q_tail(x):
    """Gaussian tail probability Q(x) = P(N(0, 1) > x)."""
    return _scalar_or_array(0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2), x)


def _acklam(p: float) -> float:
    # lower-tail quantile, relative error ~1e-9
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def _q_tail_inv_scalar(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"q_tail_inv needs p in (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    x = -_acklam(p)
    # one Newton step on Q(x) - p, dQ/dx = -phi(x)
    pdf = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
    if pdf > 0.0:
        x += (0.5 * math.erfc(x / _SQRT2) - p) / pdf
    return x


def q_tail_inv(p):
    """Inverse of :func:`q_tail` on (0, 1)."""
    if np.ndim(p) == 0:
        return _q_tail_inv_scalar(float(p))
    return np.array([_q_tail_inv_scalar(float(v)) for v in np.ravel(p)]).reshape(np.shape(p))


# --------------------------------------------------------------------------
# efficiency function


def _check_gamma(gamma, strict=False):
    g = np.asarray(gamma, dtype=float)
    bad = ~(g > 0) if strict else ~(g >= 0)
    if np.any(bad):
        bound = "> 0" if strict else ">= 0"
        raise DomainError(f"SIR must be {bound}, got {gamma!r}")
    return g


def _uncoded_efficiency(b: int, L: int, x):
    alpha = 2.0 * (1.0 - 2.0 ** (-b / 2))
    beta = 3.0 / (2.0**b - 1.0)
    expo = 2.0 * L / b
    z = np.sqrt(beta * x) / _SQRT2
    # (1 - alpha*Q) * 2**(b/2) = 1 + (2**(b/2) - 1) * erf(z)
    t = expo * np.log1p((2.0 ** (b / 2) - 1.0) * special.erf(z))
    with np.errstate(over="ignore"):
        near_floor = np.ldexp(np.expm1(np.minimum(t, _FLOOR_BRANCH_T)), -L)
    far = np.exp(expo * np.log1p(-alpha * 0.5 * special.erfc(z))) - 2.0**-L
    return np.where(t < _FLOOR_BRANCH_T, near_floor, far)


def _uncoded_derivative(b: int, L: int, x):
    alpha = 2.0 * (1.0 - 2.0 ** (-b / 2))
    beta = 3.0 / (2.0**b - 1.0)
    expo = 2.0 * L / b
    s = np.sqrt(beta * x)
    base = (expo - 1.0) * np.log1p(-alpha * 0.5 * special.erfc(s / _SQRT2))
    return expo * np.exp(base) * alpha * _INV_SQRT_2PI * np.exp(-0.5 * s * s) * beta / (2.0 * s)


def coding_gain(cfg: TcmConfig, b: int, gamma):
    """Effective TCM coding gain A + C*arctan((gamma - gamma_bar)/D), linear."""
    g = _check_gamma(gamma)
    return _scalar_or_array(cfg.params_for(b).gain(g), gamma)


def efficiency(scheme: ModScheme, pkt: PacketConfig, gamma):
    """Probability that an ``L``-bit packet survives one transmission.

    With ``scheme.coding`` set, the SIR inside the Gaussian tail is scaled by
    the coding gain evaluated at the same SIR.
    """
    g = _check_gamma(gamma)
    if scheme.coding is not None:
        g = g * scheme.coding.params_for(scheme.b).gain(g)
    return _scalar_or_array(_uncoded_efficiency(scheme.b, pkt.L, g), gamma)


def efficiency_derivative(scheme: ModScheme, pkt: PacketConfig, gamma):
    """d efficiency / d gamma (analytic; chain rule through the gain for TCM)."""
    g = _check_gamma(gamma, strict=True)
    if scheme.coding is None:
        return _scalar_or_array(_uncoded_derivative(scheme.b, pkt.L, g), gamma)
    p = scheme.coding.params_for(scheme.b)
    G = p.gain(g)
    out = _uncoded_derivative(scheme.b, pkt.L, g * G) * (G + g * p.slope(g))
    return _scalar_or_array(out, gamma)


def efficiency_ceiling(pkt: PacketConfig) -> float:
    return 1.0 - 2.0**-pkt.L


# --------------------------------------------------------------------------
# gain files and fitting


def gain_params_from_records(records: Iterable[Mapping]) -> dict[int, GainParams]:
    """Convert gain-file records (``D`` and ``gamma_bar`` in dB) to linear."""
    out = {}
    for rec in records:
        try:
            b = int(rec["b"])
            out[b] = GainParams(
                A=float(rec["A"]),
                C=float(rec["C"]),
                D=float(from_db(float(rec["D"]))),
                gamma_bar=float(from_db(float(rec["gamma_bar"]))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad gain record {rec!r}: {exc}") from exc
    return out


def gain_params_to_records(params: Mapping[int, GainParams]) -> list[dict]:
    return [
        {"b": b, "A": p.A, "C": p.C, "D": float(to_db(p.D)), "gamma_bar": float(to_db(p.gamma_bar))}
        for b, p in sorted(params.items())
    ]


def load_tcm_config(path: str | Path) -> TcmConfig:
    try:
        records = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read gain file {path}: {exc}") from exc
    if not isinstance(records, list):
        raise ConfigError(f"gain file {path} must hold a JSON array")
    return TcmConfig(gain_params_from_records(records))


def default_tcm_config() -> TcmConfig:
    """Gain constants shipped with the package (8-state, rate-2/3 TCM fit)."""
    text = resources.files("qamgame.data").joinpath(DEFAULT_GAIN_FILE).read_text()
    return TcmConfig(gain_params_from_records(json.loads(text)))


@dataclass(frozen=True)
class GainFit:
    params: GainParams
    rms: float
    n_samples: int


def _fixed_shape_lstsq(gam, gain, D, gbar):
    # model is linear in (A, C) once (D, gamma_bar) are fixed
    basis = np.column_stack([np.ones_like(gam), np.arctan((gam - gbar) / D)])
    coef, *_ = np.linalg.lstsq(basis, gain, rcond=None)
    resid = basis @ coef - gain
    return coef, float(resid @ resid)


def fit_coding_gain(samples: Sequence[tuple[float, float]], b: int) -> GainFit:
    """Least-squares fit of the arctan gain model to (gamma, gain) samples.

    Both coordinates are linear. Returns the fitted constants and the RMS of
    the residuals.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FitError("samples must be a sequence of (gamma, gain) pairs")
    gam, gain = arr[:, 0], arr[:, 1]
    if len(np.unique(gam)) < 4:
        raise FitError(f"need at least 4 distinct SIR values to fit b={b}, got {len(np.unique(gam))}")

    span = float(gam.max() - gam.min())
    best = None
    for gbar in np.quantile(gam, np.linspace(0.0, 1.0, 9)):
        for D in span * np.array([0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0]):
            coef, sse = _fixed_shape_lstsq(gam, gain, D, gbar)
            if best is None or sse < best[0]:
                best = (sse, coef[0], coef[1], math.log(D), gbar)

    def resid(theta):
        A, C, logD, gbar = theta
        return A + C * np.arctan((gam - gbar) / math.exp(logD)) - gain

    sol = optimize.least_squares(resid, best[1:], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                 max_nfev=20000)
    A, C, logD, gbar = sol.x
    params = GainParams(A=float(A), C=float(C), D=math.exp(logD), gamma_bar=float(gbar))
    r = params.gain(gam) - gain
    return GainFit(params=params, rms=float(np.sqrt(np.mean(r * r))), n_samples=len(gam))
