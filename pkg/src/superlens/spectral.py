"""Wavenumbers, branch conventions and periodic Fourier analysis.

All square roots in this package use the branch cut along the positive real
axis: ``arg(z)`` is taken in ``[0, 2*pi)`` so the root always lies in the
closed upper half plane.  With that choice ``eps = mu = -1`` gives
``eps * mu = 1`` on the cut's upper lip and the refractive index evaluates to
``+1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import AliasingError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SceneParameters:
    """Global physical configuration of the grating + slab setup.

    Parameters
    ----------
    period : float
        Grating period (Lambda).
    wavelength : float
        Free-space wavelength of the normally incident plane wave.
    a, b : float
        Lower and upper slab boundaries; measurements are taken at ``y = b``.
    eps, mu : complex
        Relative permittivity and permeability of the slab.
    """

    period: float = 1.0
    wavelength: float = 1.1
    a: float = 0.1
    b: float = 0.2
    eps: complex = 1.0
    mu: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "eps", complex(self.eps))
        object.__setattr__(self, "mu", complex(self.mu))
        if not (self.period > 0):
            raise ValueError(f"period must be positive, got {self.period}")
        if not (self.wavelength > 0):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not (0 < self.a < self.b):
            raise ValueError(f"need 0 < a < b, got a={self.a}, b={self.b}")
        if self.mu == 0:
            raise ValueError("mu must be nonzero")

    @property
    def kappa(self) -> float:
        return TWO_PI / self.wavelength

    def replace(self, **changes) -> "SceneParameters":
        kw = dict(period=self.period, wavelength=self.wavelength, a=self.a,
                  b=self.b, eps=self.eps, mu=self.mu)
        kw.update(changes)
        return SceneParameters(**kw)

    def label(self) -> str:
        return f"eps={_fmt_complex(self.eps)}, mu={_fmt_complex(self.mu)}"

    def as_dict(self) -> dict:
        return {
            "period": self.period,
            "wavelength": self.wavelength,
            "a": self.a,
            "b": self.b,
            "eps": [self.eps.real, self.eps.imag],
            "mu": [self.mu.real, self.mu.imag],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SceneParameters":
        kw = dict(d)
        for key in ("eps", "mu"):
            if key in kw:
                kw[key] = _parse_complex(kw[key])
        return cls(**kw)


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:g}"
    return f"{z.real:g}{z.imag:+g}i"


def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        re, im = v
        return complex(float(re), float(im))
    if isinstance(v, str):
        return complex(v.replace("i", "j").replace(" ", ""))
    return complex(v)


def branch_sqrt(z):
    """Square root with ``arg(z)`` in ``[0, 2*pi)``.

    The result always satisfies ``0 <= arg(w) < pi``: positive reals map to
    positive reals, negative reals to the positive imaginary axis.  Accepts a
    scalar or an array.
    """
    w = np.sqrt(np.asarray(z, dtype=complex))
    flip = (w.imag < 0) | ((w.imag == 0) & (w.real < 0))
    w = np.where(flip, -w, w) + 0.0  # + 0.0 clears negative zeros
    return complex(w) if w.ndim == 0 else w


def alpha(n, p: SceneParameters):
    """Horizontal wavenumber ``2*pi*n / period`` (vectorised over ``n``)."""
    return TWO_PI * np.asarray(n, dtype=float) / p.period if np.ndim(n) else TWO_PI * n / p.period


def mode_wavenumbers(n, p: SceneParameters):
    """Return ``(alpha_n, beta_n)`` for the free-space region above the slab."""
    a_n = alpha(n, p)
    return a_n, branch_sqrt(p.kappa**2 - a_n**2)


def refractive_wavenumber(p: SceneParameters) -> complex:
    """``eta = kappa * sqrt(eps * mu)`` on the fixed branch."""
    return p.kappa * branch_sqrt(p.eps * p.mu)


def slab_wavenumbers(n, p: SceneParameters):
    """Return ``(eta, gamma_n)`` inside the slab."""
    eta = refractive_wavenumber(p)
    a_n = alpha(n, p)
    return eta, branch_sqrt(eta**2 - a_n**2)


@dataclass(frozen=True)
class ModeCoefficients:
    """Fourier coefficients for modes ``-n_max..n_max`` stored densely.

    ``values[k]`` holds mode ``k - n_max``.  Indexing with an integer mode
    number returns the coefficient.
    """

    n_max: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (2 * self.n_max + 1,):
            raise ValueError(f"expected {2 * self.n_max + 1} values, got shape {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.n_max:
            raise KeyError(n)
        return complex(self.values[n + self.n_max])

    def __len__(self):
        return self.values.size

    def items(self):
        return zip(self.modes.tolist(), self.values.tolist())

    def as_dict(self) -> dict[int, complex]:
        return dict(self.items())

    @classmethod
    def from_mapping(cls, coeffs: Mapping[int, complex], n_max: int | None = None) -> "ModeCoefficients":
        if n_max is None:
            n_max = max((abs(int(n)) for n in coeffs), default=0)
        vals = np.zeros(2 * n_max + 1, dtype=complex)
        for n, c in coeffs.items():
            if abs(n) <= n_max:
                vals[int(n) + n_max] = c
        return cls(n_max, vals)

    def truncate(self, n_max: int) -> "ModeCoefficients":
        if n_max > self.n_max:
            raise ValueError("cannot truncate to a wider band")
        lo = self.n_max - n_max
        return ModeCoefficients(n_max, self.values[lo:lo + 2 * n_max + 1])


def sample_grid(m: int, period: float = 1.0) -> np.ndarray:
    """Uniform grid ``x_j = j * period / m`` for ``j = 0..m-1``."""
    return np.arange(m) * (period / m)


def fourier_coefficients(samples, n_max: int, period: float = 1.0) -> ModeCoefficients:
    """Discrete Fourier coefficients of one period of uniform samples.

    ``samples[m]`` is the value at ``x_m = m * period / M``; the duplicated
    endpoint ``x = period`` must not be included.  Returns
    ``c_n = (1/M) sum_m samples[m] exp(-i alpha_n x_m)`` for ``|n| <= n_max``.
    """
    s = np.asarray(samples, dtype=complex)
    m = s.size
    if m < 2 * n_max + 1:
        raise AliasingError(f"{m} samples cannot resolve {2 * n_max + 1} modes (need M >= 2N+1)")
    # x_m * alpha_n depends only on m*n, so the period cancels
    modes = np.arange(-n_max, n_max + 1)
    phase = np.exp(-2j * np.pi * np.outer(modes, np.arange(m)) / m)
    return ModeCoefficients(n_max, phase @ s / m)


def fourier_synthesis(coeffs: ModeCoefficients | Mapping[int, complex], x: Iterable[float],
                      period: float = 1.0) -> np.ndarray:
    """Evaluate ``sum_n c_n exp(i alpha_n x)`` at each point of ``x``."""
    if not isinstance(coeffs, ModeCoefficients):
        coeffs = ModeCoefficients.from_mapping(coeffs)
    x = np.asarray(x, dtype=float)
    kx = TWO_PI * np.outer(x.ravel(), coeffs.modes) / period
    return (np.exp(1j * kx) @ coeffs.values).reshape(x.shape)
