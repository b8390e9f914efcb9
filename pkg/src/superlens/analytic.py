"""Closed-form zeroth and first order fields of the transformed field expansion.

Every first-order quantity is per unit profile coefficient ``g^(n)``; the
caller multiplies by the actual coefficient.  The generic 4x4 interface solve
(`solve_interface_system`) is kept as an independent cross-check of the
closed forms and can run in extended precision via mpmath.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateModeError, ResonanceError
from .spectral import SceneParameters, mode_wavenumbers, refractive_wavenumber, slab_wavenumbers

RESONANCE_RTOL = 1e-12
DEGENERATE_RTOL = 1e-10


def boundary_source_rho(p: SceneParameters) -> complex:
    """Inhomogeneous term of the transparent condition, ``-2i kappa exp(-i kappa b)``."""
    k = p.kappa
    return -2j * k * cmath.exp(-1j * k * p.b)


def _phi(beta, gamma, mu, a, b, exp=cmath.exp):
    gp = gamma + mu * beta
    gm = gamma - mu * beta
    return (gm * exp(1j * gamma * (b - a)) * (gp * exp(1j * beta * a) - gm * exp(-1j * beta * a))
            + gp * exp(1j * gamma * (a - b)) * (gp * exp(-1j * beta * a) - gm * exp(1j * beta * a)))


def interface_determinant_phi(n: int, p: SceneParameters) -> complex:
    """Determinant of the 4x4 interface system for mode ``n``.

    Uses the two-term expansion directly; it agrees with the dense determinant
    of :func:`interface_matrix` including sign.
    """
    _, beta = mode_wavenumbers(n, p)
    _, gamma = slab_wavenumbers(n, p)
    return _phi(beta, gamma, p.mu, p.a, p.b)


def _check_resonance(n: int, phi: complex, p: SceneParameters) -> None:
    if abs(phi) < RESONANCE_RTOL * 4 * p.kappa**2:
        raise ResonanceError(n, phi)


def _phi0(p: SceneParameters) -> complex:
    phi0 = interface_determinant_phi(0, p)
    _check_resonance(0, phi0, p)
    return phi0


# --- generic interface system -------------------------------------------------

def _mp_branch_sqrt(z):
    import mpmath as mp

    theta = mp.arg(z)
    if theta < 0:
        theta += 2 * mp.pi
    return mp.sqrt(abs(z)) * mp.expj(theta / 2)


def interface_matrix(n: int, p: SceneParameters, dps: int | None = None) -> list[list]:
    """Rows: Robin condition at y=b, continuity and flux jump at y=a, Dirichlet at y=0.

    Unknowns are ``(a, b, c, d)``: slab field ``a e^{i gamma y} + b e^{-i gamma y}``
    and lower field ``c e^{i beta y} + d e^{-i beta y}``.  With ``dps`` set the
    entries are mpmath numbers at that working precision.
    """
    if dps is not None:
        import mpmath as mp

        with mp.workdps(dps):
            return _mp_interface_matrix(n, p)
    _, beta = mode_wavenumbers(n, p)
    _, gamma = slab_wavenumbers(n, p)
    return _matrix_rows(beta, gamma, p.mu, p.a, p.b, cmath.exp, 1.0, 0.0)


def _mp_interface_matrix(n: int, p: SceneParameters) -> list[list]:
    import mpmath as mp

    kappa = 2 * mp.pi / mp.mpf(p.wavelength)
    al = 2 * mp.pi * n / mp.mpf(p.period)
    mu = mp.mpc(p.mu)
    beta = _mp_branch_sqrt(kappa**2 - al**2)
    eta = kappa * _mp_branch_sqrt(mp.mpc(p.eps) * mu)
    gamma = _mp_branch_sqrt(eta**2 - al**2)
    return _matrix_rows(beta, gamma, mu, mp.mpf(p.a), mp.mpf(p.b), mp.exp, mp.mpf(1), mp.mpf(0))


def _matrix_rows(beta, gamma, mu, a, b, exp, one, zero):
    i = 1j
    return [
        [i * (gamma - mu * beta) * exp(i * gamma * b), -i * (gamma + mu * beta) * exp(-i * gamma * b), zero, zero],
        [exp(i * gamma * a), exp(-i * gamma * a), -exp(i * beta * a), -exp(-i * beta * a)],
        [i * gamma * exp(i * gamma * a), -i * gamma * exp(-i * gamma * a),
         -i * mu * beta * exp(i * beta * a), i * mu * beta * exp(-i * beta * a)],
        [zero, zero, one, one],
    ]


def _eliminate(A: list[list], rhs: list) -> list:
    """Gaussian elimination with column equilibration and partial pivoting.

    Works for any numeric type supporting ``abs`` and field arithmetic, so the
    same routine serves double and mpmath precision.
    """
    m = len(A)
    scale = [max(abs(A[r][c]) for r in range(m)) for c in range(m)]
    scale = [s if s != 0 else 1 for s in scale]
    M = [[A[r][c] / scale[c] for c in range(m)] + [rhs[r]] for r in range(m)]
    for col in range(m):
        piv = max(range(col, m), key=lambda r: abs(M[r][col]))
        if M[piv][col] == 0:
            raise ZeroDivisionError("singular interface system")
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, m):
            f = M[r][col] / M[col][col]
            if f != 0:
                for c in range(col, m + 1):
                    M[r][c] -= f * M[col][c]
    x = [0] * m
    for r in range(m - 1, -1, -1):
        acc = M[r][m]
        for c in range(r + 1, m):
            acc -= M[r][c] * x[c]
        x[r] = acc / M[r][r]
    return [x[c] / scale[c] for c in range(m)]


def solve_interface_system(n: int, p: SceneParameters, rhs: Sequence, dps: int | None = None):
    """Solve the 4x4 interface system for right-hand side ``(r, s, t)``.

    Returns the coefficients ``(a, b, c, d)`` as Python complex numbers.
    Raises :class:`ResonanceError` when the determinant is below tolerance.
    """
    phi = interface_determinant_phi(n, p)
    _check_resonance(n, phi, p)
    r, s, t = rhs
    if dps is None:
        x = _eliminate(interface_matrix(n, p), [complex(r), complex(s), complex(t), 0j])
        return tuple(complex(v) for v in x)
    import mpmath as mp

    with mp.workdps(dps):
        A = _mp_interface_matrix(n, p)
        x = _eliminate(A, [mp.mpc(r), mp.mpc(s), mp.mpc(t), mp.mpc(0)])
        return tuple(complex(v) for v in x)


# --- zeroth order -------------------------------------------------------------

@dataclass(frozen=True)
class ZerothOrderField:
    """Flat-surface total field ``u0(y)`` on ``0 <= y <= b`` (independent of x)."""

    a00: complex
    b00: complex
    c00: complex
    d00: complex
    eta: complex
    kappa: float
    a: float
    b: float

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        lower = self.c00 * np.exp(1j * self.kappa * y) + self.d00 * np.exp(-1j * self.kappa * y)
        upper = self.a00 * np.exp(1j * self.eta * y) + self.b00 * np.exp(-1j * self.eta * y)
        out = np.where(y <= self.a, lower, upper)
        return complex(out) if out.ndim == 0 else out

    def lower_limit(self, y: float) -> complex:
        return complex(self.c00 * cmath.exp(1j * self.kappa * y) + self.d00 * cmath.exp(-1j * self.kappa * y))

    def upper_limit(self, y: float) -> complex:
        return complex(self.a00 * cmath.exp(1j * self.eta * y) + self.b00 * cmath.exp(-1j * self.eta * y))


def zeroth_order_field(p: SceneParameters) -> ZerothOrderField:
    phi0 = _phi0(p)
    k, mu, a = p.kappa, p.mu, p.a
    eta = refractive_wavenumber(p)
    rho = boundary_source_rho(p)
    pref = 2 * mu * rho / (1j * phi0)
    a00 = pref * cmath.exp(-1j * eta * a) * (mu * k * math.cos(k * a) + 1j * eta * math.sin(k * a))
    b00 = -pref * cmath.exp(1j * eta * a) * (mu * k * math.cos(k * a) - 1j * eta * math.sin(k * a))
    c00 = pref * eta
    return ZerothOrderField(a00, b00, c00, -c00, eta, k, a, p.b)


# --- first order ----------------------------------------------------------------

def first_order_source(n: int, p: SceneParameters, y):
    """Per-unit-``g^(n)`` volume source ``v1^(n)(y)`` and interface jump ``tau1^(n)``."""
    phi0 = _phi0(p)
    k, mu, a = p.kappa, p.mu, p.a
    eta = refractive_wavenumber(p)
    rho = boundary_source_rho(p)
    a_n, _ = mode_wavenumbers(n, p)
    y = np.asarray(y, dtype=float)
    v1 = 4 * k * eta * mu * rho / (a * phi0) * (2 * k * np.sin(k * y) - a_n**2 * (a - y) * np.cos(k * y))
    tau1 = 4 * k * eta * mu**2 * rho / (a * phi0) * math.cos(k * a)
    return (complex(v1) if np.ndim(v1) == 0 else v1), tau1


def psi_closed_form(n: int, p: SceneParameters) -> complex:
    phi0 = _phi0(p)
    _, beta = mode_wavenumbers(n, p)
    eta = refractive_wavenumber(p)
    return 4 * p.kappa * eta * p.mu**2 * boundary_source_rho(p) * beta / phi0


def _gauss_legendre(lo: float, hi: float, nodes: int, panels: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def psi_quadrature(n: int, p: SceneParameters, nodes: int = 64, panels: int = 1) -> complex:
    """``mu * int_0^a sin(beta_n y) v1(y) dy + sin(beta_n a) tau1`` by Gauss-Legendre."""
    y, w = _gauss_legendre(0.0, p.a, nodes, panels)
    v1, tau1 = first_order_source(n, p, y)
    _, beta = mode_wavenumbers(n, p)
    return complex(p.mu * np.sum(w * np.sin(beta * y) * v1) + cmath.sin(beta * p.a) * tau1)


def first_order_rhs(n: int, p: SceneParameters, dps: int | None = None):
    """Right-hand side ``(r, s, t)`` of the first-order interface system by quadrature.

    ``s = int Phi_n(a,z) v1 dz`` and ``t = mu int d_y Phi_n(a,z) v1 dz + tau1``.
    With ``dps`` set, the integrals are evaluated by mpmath at that precision;
    the cancellation inside the 4x4 solve grows like ``exp(2|beta_n| a)``.
    """
    if dps is None:
        y, w = _gauss_legendre(0.0, p.a, 64, 1)
        v1, tau1 = first_order_source(n, p, y)
        _, beta = mode_wavenumbers(n, p)
        if beta == 0:
            s = np.sum(w * (p.a - y) * v1)
        else:
            s = np.sum(w * np.sin(beta * (p.a - y)) / beta * v1)
        t = p.mu * np.sum(w * np.cos(beta * (p.a - y)) * v1) + tau1
        return 0j, complex(s), complex(t)

    import mpmath as mp

    with mp.workdps(dps):
        return _mp_first_order_rhs(n, p)


def _mp_first_order_rhs(n: int, p: SceneParameters):
    import mpmath as mp

    kappa = 2 * mp.pi / mp.mpf(p.wavelength)
    al = 2 * mp.pi * n / mp.mpf(p.period)
    a, b = mp.mpf(p.a), mp.mpf(p.b)
    mu = mp.mpc(p.mu)
    beta = _mp_branch_sqrt(kappa**2 - al**2)
    eta = kappa * _mp_branch_sqrt(mp.mpc(p.eps) * mu)
    gamma0 = _mp_branch_sqrt(eta**2)
    rho = -2j * kappa * mp.exp(-1j * kappa * b)
    phi0 = _phi(kappa, gamma0, mu, a, b, exp=mp.exp)
    pref = 4 * kappa * eta * mu * rho / (a * phi0)

    def v1(z):
        return pref * (2 * kappa * mp.sin(kappa * z) - al**2 * (a - z) * mp.cos(kappa * z))

    tau1 = pref * mu * mp.cos(kappa * a)
    if beta == 0:
        s = mp.quad(lambda z: (a - z) * v1(z), [0, a])
    else:
        s = mp.quad(lambda z: mp.sin(beta * (a - z)) / beta * v1(z), [0, a])
    t = mu * mp.quad(lambda z: mp.cos(beta * (a - z)) * v1(z), [0, a]) + tau1
    return mp.mpc(0), s, t


def first_order_coefficients(n: int, p: SceneParameters) -> tuple[complex, complex]:
    """Slab coefficients ``(a_{1,n}, b_{1,n})`` per unit ``g^(n)``."""
    phi0 = _phi0(p)
    phin = interface_determinant_phi(n, p)
    _check_resonance(n, phin, p)
    _, beta = mode_wavenumbers(n, p)
    eta, gamma = slab_wavenumbers(n, p)
    mu, b = p.mu, p.b
    pref = -8 * p.kappa * eta * mu**2 * boundary_source_rho(p) * beta / (phi0 * phin)
    return (pref * (gamma + mu * beta) * cmath.exp(-1j * gamma * b),
            pref * (gamma - mu * beta) * cmath.exp(1j * gamma * b))


def first_order_slab_field(n: int, p: SceneParameters, y) -> np.ndarray:
    """``u1^(n)(y)`` on ``a <= y <= b`` per unit ``g^(n)``."""
    a1, b1 = first_order_coefficients(n, p)
    _, gamma = slab_wavenumbers(n, p)
    y = np.asarray(y, dtype=float)
    return a1 * np.exp(1j * gamma * y) + b1 * np.exp(-1j * gamma * y)


def first_order_trace(n: int, p: SceneParameters) -> complex:
    """``u1^(n)(b)`` per unit ``g^(n)``; the reciprocal of the scaling factor."""
    phi0 = _phi0(p)
    phin = interface_determinant_phi(n, p)
    _check_resonance(n, phin, p)
    _, beta = mode_wavenumbers(n, p)
    eta, gamma = slab_wavenumbers(n, p)
    return -16 * p.kappa * eta * p.mu**2 * boundary_source_rho(p) * beta * gamma / (phi0 * phin)


def check_degenerate(n: int, p: SceneParameters) -> None:
    """Raise :class:`DegenerateModeError` if ``beta_n`` or ``gamma_n`` vanishes."""
    tol = DEGENERATE_RTOL * p.kappa
    _, beta = mode_wavenumbers(n, p)
    _, gamma = slab_wavenumbers(n, p)
    if abs(beta) < tol:
        raise DegenerateModeError(n, "beta", beta)
    if abs(gamma) < tol:
        raise DegenerateModeError(n, "gamma", gamma)


def scaling_factor_upsilon(n: int, p: SceneParameters) -> complex:
    """Mode-wise factor mapping the measured first-order trace to ``g^(n)``."""
    check_degenerate(n, p)
    phi0 = _phi0(p)
    phin = interface_determinant_phi(n, p)
    _check_resonance(n, phin, p)
    _, beta = mode_wavenumbers(n, p)
    eta, gamma = slab_wavenumbers(n, p)
    return -phi0 * phin / (16 * p.kappa * eta * p.mu**2 * boundary_source_rho(p) * beta * gamma)


# --- resolution scan --------------------------------------------------------------

@dataclass
class UpsilonTable:
    """``|Upsilon_n|`` for ``n = 0..n_max`` per parameter set.

    Degenerate or resonant entries are NaN and listed in ``skipped`` as
    ``(set_index, n, reason)``.
    """

    modes: np.ndarray
    params: list[SceneParameters]
    values: np.ndarray
    skipped: list[tuple[int, int, str]] = field(default_factory=list)

    def labels(self) -> list[str]:
        return [p.label() for p in self.params]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n"] + [f"|Upsilon_n| ({lab})" for lab in self.labels()])
        for i, n in enumerate(self.modes):
            w.writerow([int(n)] + [repr(float(v)) for v in self.values[:, i]])
        return buf.getvalue()


def upsilon_scan(n_max: int, parameter_sets: Sequence[SceneParameters]) -> UpsilonTable:
    modes = np.arange(n_max + 1)
    values = np.full((len(parameter_sets), modes.size), np.nan)
    skipped = []
    for s, p in enumerate(parameter_sets):
        for n in modes:
            try:
                values[s, n] = abs(scaling_factor_upsilon(int(n), p))
            except (DegenerateModeError, ResonanceError) as exc:
                skipped.append((s, int(n), str(exc)))
    return UpsilonTable(modes, list(parameter_sets), values, skipped)
