"""Disturbance-time densities with compact support.

A :class:`Disturbance` is a piecewise-linear density on explicit knots and is
zero outside ``[t_low, t_high]``. The uniform law is the two-knot special case.
Zero-density spans between knots are support gaps.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDomainError


class DisturbanceKind(enum.Enum):
    UNIFORM = "uniform"
    PIECEWISE = "piecewise"


@dataclass(frozen=True)
class SupportGap:
    lo: float
    hi: float


@dataclass(frozen=True, eq=False)
class Disturbance:
    """Normalised piecewise-linear density.

    Build with :meth:`uniform` or :meth:`piecewise`. Leading and trailing
    zero-density segments are trimmed so that ``xs[0] == t_low`` and
    ``xs[-1] == t_high`` are the bounds of the essential support.
    """

    kind: DisturbanceKind
    xs: np.ndarray
    ys: np.ndarray
    mass_scale: float = 1.0  # raw mass before normalisation
    _cum: np.ndarray = None

    @classmethod
    def uniform(cls, t_low: float, t_high: float) -> "Disturbance":
        if not (0.0 <= t_low < t_high) or not np.isfinite(t_high):
            raise InvalidDomainError(f"uniform bounds need 0 <= low < high, got {t_low}, {t_high}")
        h = 1.0 / (t_high - t_low)
        return cls._build(DisturbanceKind.UNIFORM, [t_low, t_high], [h, h])

    @classmethod
    def piecewise(cls, knots) -> "Disturbance":
        k = np.asarray(knots, dtype=float)
        if k.ndim != 2 or k.shape[1] != 2 or k.shape[0] < 2:
            raise InvalidDomainError("knots must be a list of at least two (x, density) pairs")
        return cls._build(DisturbanceKind.PIECEWISE, k[:, 0], k[:, 1])

    @classmethod
    def _build(cls, kind, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise InvalidDomainError("knots must be finite")
        if np.any(np.diff(xs) <= 0):
            raise InvalidDomainError("knot positions must be strictly increasing")
        if xs[0] < 0:
            raise InvalidDomainError("disturbance support must lie in [0, inf)")
        if np.any(ys < 0):
            raise InvalidDomainError("densities must be nonnegative")
        seg = 0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)
        mass = float(seg.sum())
        if not mass > 0:
            raise InvalidDomainError("density has zero mass")
        live = np.flatnonzero(seg > 0)
        xs = xs[live[0]: live[-1] + 2].copy()
        ys = ys[live[0]: live[-1] + 2] / mass
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs))])
        # pin the top exactly at one; drift is O(n * eps)
        cum /= cum[-1]
        xs.setflags(write=False)
        ys.setflags(write=False)
        cum.setflags(write=False)
        return cls(kind, xs, ys, mass, cum)

    # -- basic accessors -------------------------------------------------
    @property
    def t_low(self) -> float:
        return float(self.xs[0])

    @property
    def t_high(self) -> float:
        return float(self.xs[-1])

    @property
    def knots(self):
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.xs, self.ys)
        out = np.where((x < self.xs[0]) | (x > self.xs[-1]), 0.0, out)
        return out if out.ndim else float(out)

    def density_right(self, x):
        """Right limit f(x+); differs from ``density`` only at t_high."""
        x = np.asarray(x, dtype=float)
        return np.where((x < self.xs[0]) | (x >= self.xs[-1]), 0.0, np.interp(x, self.xs, self.ys))

    def density_left(self, x):
        """Left limit f(x-); differs from ``density`` only at t_low."""
        x = np.asarray(x, dtype=float)
        return np.where((x <= self.xs[0]) | (x > self.xs[-1]), 0.0, np.interp(x, self.xs, self.ys))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.xs[0], self.xs[-1])
        i = np.clip(np.searchsorted(self.xs, xc, side="right") - 1, 0, self.xs.size - 2)
        x0 = self.xs[i]
        L = self.xs[i + 1] - x0
        t = xc - x0
        y0 = self.ys[i]
        slope = (self.ys[i + 1] - y0) / L
        out = self._cum[i] + y0 * t + 0.5 * slope * t * t
        out = np.minimum(out, self._cum[i + 1])
        out = np.where(x >= self.xs[-1], 1.0, np.where(x <= self.xs[0], 0.0, out))
        return out if out.ndim else float(out)

    def tail(self, x):
        return 1.0 - self.cdf(x)

    def quantile(self, q):
        """Smallest x with cdf(x) >= q."""
        return self._invert(q, lower=True)

    def upper_quantile(self, q):
        """Largest x with cdf(x) <= q; the right end of a flat span at level q."""
        return self._invert(q, lower=False)

    def _invert(self, q, lower):
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)) or np.any(~np.isfinite(q)):
            raise InvalidDomainError("quantile level must lie in [0, 1]")
        cum = self._cum
        if lower:
            i = np.searchsorted(cum, q, side="left") - 1
        else:
            i = np.searchsorted(cum, q, side="right") - 1
        i = np.clip(i, 0, self.xs.size - 2)
        x0 = self.xs[i]
        L = self.xs[i + 1] - x0
        y0 = self.ys[i]
        slope = (self.ys[i + 1] - y0) / L
        r = np.maximum(q - cum[i], 0.0)
        disc = np.sqrt(np.maximum(y0 * y0 + 2.0 * slope * r, 0.0))
        denom = y0 + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(denom > 0, 2.0 * r / denom, 0.0)
        out = np.clip(x0 + t, x0, x0 + L)
        out = np.where(q <= 0.0, self.xs[0], out)
        if not lower:
            # the flat span at the very top ends at t_high; below t_low is empty
            out = np.where(q >= 1.0, self.xs[-1], out)
        else:
            out = np.where(q >= 1.0, self._first_full(), out)
        return out if out.ndim else float(out)

    def _first_full(self):
        j = int(np.searchsorted(self._cum, 1.0, side="left"))
        return float(self.xs[min(j, self.xs.size - 1)])

    # -- support structure ------------------------------------------------
    def gaps(self):
        """Open spans inside (t_low, t_high) where the density vanishes."""
        zero = (self.ys[:-1] == 0) & (self.ys[1:] == 0)
        out = []
        i = 0
        n = zero.size
        while i < n:
            if zero[i]:
                j = i
                while j + 1 < n and zero[j + 1]:
                    j += 1
                out.append(SupportGap(float(self.xs[i]), float(self.xs[j + 1])))
                i = j + 1
            else:
                i += 1
        return out

    def in_esupp(self, x, atol=0.0):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.t_low - atol) & (x <= self.t_high + atol)
        for g in self.gaps():
            inside &= ~((x > g.lo + atol) & (x < g.hi - atol))
        return inside

    # -- transformations --------------------------------------------------
    def rescale(self, new_low: float, new_high: float) -> "Disturbance":
        """Affine image of the density carrying [t_low, t_high] onto [new_low, new_high]."""
        if not (0.0 <= new_low < new_high):
            raise InvalidDomainError("rescale needs 0 <= new_low < new_high")
        if new_low == self.t_low and new_high == self.t_high:
            return self
        scale = (new_high - new_low) / (self.t_high - self.t_low)
        xs = new_low + (self.xs - self.t_low) * scale
        xs[0], xs[-1] = new_low, new_high
        return Disturbance._build(self.kind, xs, self.ys / scale)

    def shift(self, delta: float) -> "Disturbance":
        if self.t_low + delta < 0:
            raise InvalidDomainError("shift would move support below zero")
        if delta == 0:
            return self
        return self.rescale(self.t_low + delta, self.t_high + delta)

    # -- serialisation ----------------------------------------------------
    def to_json(self) -> dict:
        if self.kind is DisturbanceKind.UNIFORM:
            return {"kind": "uniform", "t_low": self.t_low, "t_high": self.t_high}
        return {"kind": "piecewise", "knots": [[x, y] for x, y in self.knots]}

    @classmethod
    def from_json(cls, obj: dict) -> "Disturbance":
        kind = obj.get("kind")
        if kind == "uniform":
            return cls.uniform(float(obj["t_low"]), float(obj["t_high"]))
        if kind == "piecewise":
            return cls.piecewise(obj["knots"])
        raise InvalidDomainError(f"unknown disturbance kind {kind!r}")

    def __repr__(self):
        if self.kind is DisturbanceKind.UNIFORM:
            return f"Disturbance.uniform({self.t_low!r}, {self.t_high!r})"
        return f"Disturbance.piecewise({self.knots!r})"


def uniform(t_low: float, t_high: float) -> Disturbance:
    return Disturbance.uniform(t_low, t_high)


def piecewise(knots) -> Disturbance:
    return Disturbance.piecewise(knots)


def shift_disturbance(d: Disturbance, delta: float) -> Disturbance:
    """Translate a disturbance density by ``delta`` time units."""
    return d.shift(delta)
