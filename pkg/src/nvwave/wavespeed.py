"""Wave-speed models c(u) with certified bounds.

Every model exposes vectorised ``c``, ``dc`` and ``d2c`` plus the constants
``kappa`` (1/kappa <= c <= kappa), ``k1`` (|c'| <= k1) and ``k2`` (|c''| <= k2).
"""

import math

import numpy as np
from scipy.interpolate import PchipInterpolator


class ConfigurationError(ValueError):
    pass


class WaveSpeedModel:
    """Base class; use one of the constructors below or ``from_config``."""

    kind = None

    def __init__(self, params, kappa, k1, k2):
        self.params = tuple(float(p) for p in params)
        self.kappa = float(kappa)
        self.k1 = float(k1)
        self.k2 = float(k2)

    def c(self, u):
        raise NotImplementedError

    def dc(self, u):
        raise NotImplementedError

    def d2c(self, u):
        raise NotImplementedError

    def __call__(self, u):
        return self.c(u)

    def to_config(self):
        return {"kind": self.kind, "params": list(self.params)}

    def __repr__(self):
        return f"{type(self).__name__}(params={list(self.params)}, kappa={self.kappa:g})"


class ConstantSpeed(WaveSpeedModel):
    kind = "constant"

    def __init__(self, c0=1.0):
        c0 = float(c0)
        if not c0 > 0:
            raise ConfigurationError("constant wave speed must be positive")
        self.c0 = c0
        super().__init__([c0], max(c0, 1.0 / c0), 0.0, 0.0)

    def c(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.c0)

    def dc(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def d2c(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))


class SmoothSpeed(WaveSpeedModel):
    """c(u) = a + b/(1+u^2) with a >= b > 0.

    The maximum a+b sits at u=0 and the infimum a is approached as |u|->inf.
    |c'| peaks at u = 1/sqrt(3) with value 3*sqrt(3)*b/8 and |c''| peaks at
    u = 0 with value 2b.
    """

    kind = "builtin-smooth"

    def __init__(self, a=1.0, b=1.0):
        a, b = float(a), float(b)
        if not (b > 0 and a >= b):
            raise ConfigurationError("builtin-smooth needs a >= b > 0")
        self.a, self.b = a, b
        kappa = max(a + b, 1.0 / a)
        super().__init__([a, b], kappa, 3.0 * math.sqrt(3.0) * b / 8.0, 2.0 * b)

    def c(self, u):
        u = np.asarray(u, dtype=float)
        return self.a + self.b / (1.0 + u * u)

    def dc(self, u):
        u = np.asarray(u, dtype=float)
        w = 1.0 + u * u
        return -2.0 * self.b * u / (w * w)

    def d2c(self, u):
        u = np.asarray(u, dtype=float)
        w = 1.0 + u * u
        return 2.0 * self.b * (3.0 * u * u - 1.0) / (w * w * w)


class TabulatedSpeed(WaveSpeedModel):
    """Monotone cubic (PCHIP) through (u_i, c_i) samples.

    Outside the table the value is held constant when ``extrapolation`` is
    "clamp"; with "none" such queries raise ConfigurationError.
    """

    kind = "tabulated"

    def __init__(self, u_samples, c_samples, extrapolation="clamp"):
        u = np.asarray(u_samples, dtype=float)
        cv = np.asarray(c_samples, dtype=float)
        if u.ndim != 1 or u.shape != cv.shape or u.size < 2:
            raise ConfigurationError("tabulated wave speed needs matching u and c samples")
        if np.any(np.diff(u) <= 0):
            raise ConfigurationError("tabulated u samples must be strictly increasing")
        if np.any(cv <= 0):
            raise ConfigurationError("tabulated c samples must be positive")
        if extrapolation not in ("clamp", "none"):
            raise ConfigurationError(f"unknown extrapolation rule {extrapolation!r}")
        self.extrapolation = extrapolation
        self._u = u
        self._interp = PchipInterpolator(u, cv, extrapolate=False)
        self._d1 = self._interp.derivative(1)
        self._d2 = self._interp.derivative(2)
        dense = np.linspace(u[0], u[-1], 20001)
        cd = self._interp(dense)
        kappa = 1.01 * max(cd.max(), 1.0 / cd.min(), 1.0)
        k1 = 1.01 * np.abs(self._d1(dense)).max()
        k2 = 1.01 * np.nanmax(np.abs(self._d2(dense)))
        params = np.column_stack([u, cv]).ravel()
        super().__init__(params, kappa, k1, k2)

    def _clip(self, u):
        u = np.asarray(u, dtype=float)
        outside = (u < self._u[0]) | (u > self._u[-1])
        if np.any(outside):
            if self.extrapolation == "none":
                raise ConfigurationError("tabulated wave speed queried outside its table")
        return np.clip(u, self._u[0], self._u[-1]), outside

    def c(self, u):
        uc, _ = self._clip(u)
        return self._interp(uc)

    def dc(self, u):
        uc, outside = self._clip(u)
        return np.where(outside, 0.0, self._d1(uc))

    def d2c(self, u):
        uc, outside = self._clip(u)
        return np.where(outside, 0.0, self._d2(uc))

    def to_config(self):
        cfg = super().to_config()
        if self.extrapolation != "clamp":
            cfg["extrapolation"] = self.extrapolation
        return cfg


def from_config(cfg):
    """Build a model from ``{"kind": ..., "params": [...]}``."""
    if isinstance(cfg, WaveSpeedModel):
        return cfg
    try:
        kind = cfg["kind"]
    except (KeyError, TypeError):
        raise ConfigurationError("wavespeed config needs a 'kind'") from None
    params = list(cfg.get("params", []))
    if kind == "constant":
        return ConstantSpeed(*(params or [1.0]))
    if kind == "builtin-smooth":
        return SmoothSpeed(*(params or [1.0, 1.0]))
    if kind == "tabulated":
        if len(params) < 4 or len(params) % 2:
            raise ConfigurationError("tabulated params are interleaved pairs u0, c0, u1, c1, ...")
        pairs = np.asarray(params, dtype=float).reshape(-1, 2)
        return TabulatedSpeed(pairs[:, 0], pairs[:, 1], cfg.get("extrapolation", "clamp"))
    raise ConfigurationError(f"unknown wavespeed kind {kind!r}")


def eval(model, u):
    """c(u); scalar in, scalar out."""
    out = model.c(u)
    return float(out) if np.ndim(out) == 0 else out


def eval_derivative(model, u, order=1):
    if order == 1:
        out = model.dc(u)
    elif order == 2:
        out = model.d2c(u)
    else:
        raise ValueError(f"derivative order must be 1 or 2, got {order!r}")
    return float(out) if np.ndim(out) == 0 else out
