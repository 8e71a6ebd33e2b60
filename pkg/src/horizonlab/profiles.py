"""Scalar time profiles such as the radial flow strength ``A(x0)``."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels

KINDS = ("constant", "tanh-ramp", "rational-bump", "tabulated")


@dataclass(frozen=True)
class TimeProfile:
    """A smooth function of ``x0`` with finite limits at both ends.

    Parameters
    ----------
    kind : str
        ``"constant"``: ``params = (c,)``.
        ``"tanh-ramp"``: ``base + amp * tanh((x0 - center) / width)``.
        ``"rational-bump"``: ``base + amp / (1 + ((x0 - center) / width)**2)``.
        ``"tabulated"``: clamped cubic spline through ``table``, constant
        outside it (the clamped end slopes keep the derivative continuous).
    params : tuple of float
        ``(c,)`` or ``(base, amp, center, width)``.
    table : tuple of (x0, value) pairs, optional
        Strictly increasing abscissae; only for ``"tabulated"``.
    """

    kind: str
    params: tuple = ()
    table: tuple | None = field(default=None, compare=True)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "constant":
            if len(self.params) != 1:
                raise ValueError("constant profile takes params=(value,)")
        elif self.kind in ("tanh-ramp", "rational-bump"):
            if len(self.params) != 4:
                raise ValueError(f"{self.kind} profile takes params=(base, amp, center, width)")
            if not self.params[3] > 0.0:
                raise ValueError("profile width must be positive")
        else:
            if self.table is None or len(self.table) < 4:
                raise ValueError("tabulated profile needs at least 4 (x0, value) pairs")
            tab = tuple((float(a), float(b)) for a, b in self.table)
            xs = np.array([t[0] for t in tab])
            if np.any(np.diff(xs) <= 0.0):
                raise ValueError("tabulated profile abscissae must be strictly increasing")
            object.__setattr__(self, "table", tab)
        if not all(np.isfinite(self.params)):
            raise ValueError("profile parameters must be finite")

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value):
        return cls("constant", (value,))

    @classmethod
    def tanh_ramp(cls, base, amp, center=0.0, width=1.0):
        return cls("tanh-ramp", (base, amp, center, width))

    @classmethod
    def rational_bump(cls, base, amp, center=0.0, width=1.0):
        return cls("rational-bump", (base, amp, center, width))

    @classmethod
    def tabulated(cls, x0, values):
        return cls("tabulated", table=tuple(zip(np.asarray(x0, float), np.asarray(values, float))))

    @cached_property
    def _spline(self):
        xs = np.array([t[0] for t in self.table])
        ys = np.array([t[1] for t in self.table])
        return CubicSpline(xs, ys, bc_type="clamped")

    # evaluation -------------------------------------------------------
    def __call__(self, x0):
        x = np.asarray(x0, dtype=float)
        if self.kind == "constant":
            out = np.full_like(x, self.params[0])
        elif self.kind == "tanh-ramp":
            base, amp, c, w = self.params
            out = base + amp * np.tanh((x - c) / w)
        elif self.kind == "rational-bump":
            base, amp, c, w = self.params
            u = (x - c) / w
            out = base + amp / (1.0 + u * u)
        else:
            lo, hi = self.table[0][0], self.table[-1][0]
            out = self._spline(np.clip(x, lo, hi))
        return out if out.ndim else float(out)

    def derivative(self, x0):
        x = np.asarray(x0, dtype=float)
        if self.kind == "constant":
            out = np.zeros_like(x)
        elif self.kind == "tanh-ramp":
            _, amp, c, w = self.params
            e = np.exp(-2.0 * np.abs((x - c) / w))
            out = amp / w * 4.0 * e / (1.0 + e) ** 2
        elif self.kind == "rational-bump":
            _, amp, c, w = self.params
            u = (x - c) / w
            out = -2.0 * amp * u / w / (1.0 + u * u) ** 2
        else:
            lo, hi = self.table[0][0], self.table[-1][0]
            inside = (x >= lo) & (x <= hi)
            out = np.where(inside, self._spline(np.clip(x, lo, hi), 1), 0.0)
        return out if out.ndim else float(out)

    def limit(self, side):
        """``A(+inf)`` for ``side > 0`` and ``A(-inf)`` otherwise."""
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "tanh-ramp":
            base, amp = self.params[:2]
            return base + amp if side > 0 else base - amp
        if self.kind == "rational-bump":
            return self.params[0]
        return self.table[-1][1] if side > 0 else self.table[0][1]

    def kernel_code(self):
        """``(kind_code, params4)`` for the compiled integrator, or ``None``."""
        if self.kind == "constant":
            return kernels.PROFILE_CONSTANT, (self.params[0], 0.0, 0.0, 1.0)
        if self.kind == "tanh-ramp":
            return kernels.PROFILE_TANH, self.params
        if self.kind == "rational-bump":
            return kernels.PROFILE_RATIONAL, self.params
        return None

    def bounds(self, x0_min, x0_max, n=2001):
        """Sampled ``(min, max)`` of the profile on a window, limits included."""
        xs = np.linspace(x0_min, x0_max, n)
        vals = np.concatenate([np.atleast_1d(self(xs)), [self.limit(-1), self.limit(1)]])
        return float(vals.min()), float(vals.max())

    def scaled(self, factor):
        """Profile multiplied by a constant (``-A`` mirrors black to white)."""
        if self.kind == "constant":
            return TimeProfile.constant(factor * self.params[0])
        if self.kind in ("tanh-ramp", "rational-bump"):
            base, amp, c, w = self.params
            return TimeProfile(self.kind, (factor * base, factor * amp, c, w))
        return TimeProfile("tabulated", table=tuple((a, factor * b) for a, b in self.table))

    # serialisation ----------------------------------------------------
    def to_dict(self):
        if self.kind == "tabulated":
            return {"kind": self.kind, "table": [list(t) for t in self.table]}
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, (int, float)):
            return cls.constant(float(d))
        if d["kind"] == "tabulated":
            return cls("tabulated", table=tuple(tuple(t) for t in d["table"]))
        return cls(d["kind"], tuple(d["params"]))
