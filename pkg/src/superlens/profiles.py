"""Periodic surface profiles ``f(x) = delta * g(x)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import ModeCoefficients, TWO_PI

KINDS = ("cosine", "tent", "boxcar", "fourier")


@dataclass(frozen=True)
class Profile:
    """Surface shape ``g`` scaled by ``delta``.

    ``terms`` depends on ``kind``:

    * ``cosine``: ``(n, amplitude)`` pairs, ``g = sum amp * cos(2 pi n x / period)``
    * ``tent``: ``(center, half_width)`` pairs of unit-height triangles
    * ``boxcar``: ``(lo, hi)`` pairs of unit indicator functions
    * ``fourier``: ``(n, coefficient)`` pairs, ``g = Re sum c_n exp(i alpha_n x)``

    Tents and boxcars are evaluated on ``x mod period``.  At kinks the
    derivatives take the right-sided value; jumps contribute nothing to g'.
    """

    kind: str
    terms: tuple
    delta: float = 0.01
    period: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        object.__setattr__(self, "terms", tuple(tuple(t) for t in self.terms))

    @property
    def is_smooth(self) -> bool:
        return self.kind in ("cosine", "fourier")

    def with_delta(self, delta: float) -> "Profile":
        return Profile(self.kind, self.terms, delta, self.period)

    # shape evaluation ----------------------------------------------------------
    def g(self, x) -> np.ndarray:
        return self._eval(np.asarray(x, dtype=float), 0)

    def dg(self, x) -> np.ndarray:
        return self._eval(np.asarray(x, dtype=float), 1)

    def d2g(self, x) -> np.ndarray:
        return self._eval(np.asarray(x, dtype=float), 2)

    def f(self, x) -> np.ndarray:
        return self.delta * self.g(x)

    def _eval(self, x: np.ndarray, order: int) -> np.ndarray:
        L = self.period
        out = np.zeros(x.shape)
        if self.kind == "cosine":
            for n, amp in self.terms:
                w = TWO_PI * n / L
                if order == 1:
                    out -= amp * w * np.sin(w * x)
                else:
                    out += amp * (-w * w) ** (order // 2) * np.cos(w * x)
        elif self.kind == "fourier":
            for n, c in self.terms:
                w = TWO_PI * n / L
                out += np.real(complex(c) * (1j * w) ** order * np.exp(1j * w * x))
        elif self.kind == "tent":
            xm = np.mod(x, L)
            for c, hw in self.terms:
                d = xm - c
                inside = (d >= -hw) & (d < hw)
                if order == 0:
                    out += np.where(inside, 1 - np.abs(d) / hw, 0.0)
                elif order == 1:
                    out += np.where(inside, np.where(d < 0, 1.0, -1.0) / hw, 0.0)
        else:
            if order == 0:
                xm = np.mod(x, L)
                for lo, hi in self.terms:
                    out += ((xm >= lo) & (xm <= hi)).astype(float)
        return out

    # spectrum ----------------------------------------------------------------
    def coefficients(self, n_max: int) -> ModeCoefficients:
        """Exact Fourier coefficients ``g^(n)`` for ``|n| <= n_max``."""
        L = self.period
        n = np.arange(-n_max, n_max + 1)
        a_n = TWO_PI * n / L
        vals = np.zeros(n.size, dtype=complex)
        if self.kind == "cosine":
            for m, amp in self.terms:
                for s in (m, -m):
                    if abs(s) <= n_max:
                        vals[s + n_max] += amp / 2
        elif self.kind == "fourier":
            for m, c in self.terms:
                # Re(c e^{i alpha_m x}) splits as c/2 on +m and conj(c)/2 on -m
                if abs(m) <= n_max:
                    vals[m + n_max] += complex(c) / 2
                    vals[-m + n_max] += np.conj(complex(c)) / 2
        elif self.kind == "tent":
            for c, hw in self.terms:
                half = a_n * hw / 2
                sinc2 = np.where(half == 0, 1.0, np.sin(half) / np.where(half == 0, 1, half)) ** 2
                vals += hw / L * np.exp(-1j * a_n * c) * sinc2
        else:
            for lo, hi in self.terms:
                safe = np.where(a_n == 0, 1.0, a_n)
                vals += np.where(a_n == 0, (hi - lo) / L,
                                 (np.exp(-1j * safe * lo) - np.exp(-1j * safe * hi)) / (1j * safe * L))
        return ModeCoefficients(n_max, vals)

    def projected(self, n_max: int) -> "Profile":
        """Band-limited copy keeping modes ``|n| <= n_max`` (smooth by construction)."""
        if self.kind == "fourier":
            terms = tuple((n, c) for n, c in self.terms if abs(n) <= n_max)
        else:
            c = self.coefficients(n_max)
            terms = ((0, c[0]),) + tuple((n, 2 * c[n]) for n in range(1, n_max + 1))
        return Profile("fourier", terms, self.delta, self.period)

    def max_abs_g(self, samples: int = 4096) -> float:
        x = np.arange(samples) * (self.period / samples)
        return float(np.max(np.abs(self.g(x))))

    # serialisation -----------------------------------------------------------
    def as_dict(self) -> dict:
        def enc(v):
            return [v.real, v.imag] if isinstance(v, complex) else v

        return {"kind": self.kind, "delta": self.delta, "period": self.period,
                "terms": [[enc(v) for v in t] for t in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        terms = []
        for t in d["terms"]:
            terms.append(tuple(complex(*v) if isinstance(v, list) else v for v in t))
        return cls(d["kind"], tuple(terms), float(d.get("delta", 0.01)), float(d.get("period", 1.0)))


def smooth_profile(delta: float = 0.01) -> Profile:
    """Three cosine modes at ``|n| = 1, 3, 10``."""
    return Profile("cosine", ((1, 0.4), (3, 0.3), (10, 0.2)), delta)


def tent_profile(delta: float = 0.01) -> Profile:
    """Two unit tents on ``[0.2, 0.4]`` and ``[0.6, 0.8]``."""
    return Profile("tent", ((0.3, 0.1), (0.7, 0.1)), delta)


def boxcar_profile(delta: float = 0.001) -> Profile:
    """Indicator of ``[0.2, 0.4] U [0.6, 0.8]``."""
    return Profile("boxcar", ((0.2, 0.4), (0.6, 0.8)), delta)


BUILTIN_PROFILES = {
    "smooth": smooth_profile,
    "tent": tent_profile,
    "boxcar": boxcar_profile,
}
