"""Full-wave forward solver on the flattened domain.

The corrugated region ``f(x) < y < a`` is mapped to ``0 < y < a`` and the
slab ``a < y < b`` is kept as is.  Both are discretised on a uniform tensor
grid: second-order finite differences in y, Fourier collocation in the
periodic x direction.  Above ``y = b``
the exterior is replaced by the transparent condition, applied to the Fourier
modes ``|n| <= Nx/2 - 1`` of the top row.

Unknowns are nodal values, one per grid node, ordered level by level in y.
The slab and top rows have x-independent coefficients, so the solver reduces
them mode by mode to an exact condition at the interface; the remaining
levels are eliminated with dense block LU.
"""

from __future__ import annotations

import json
import struct
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .analytic import boundary_source_rho
from .blocktri import BlockSolveInfo, solve_block_tridiagonal, to_sparse
from .errors import ConditioningError
from .profiles import Profile
from .spectral import ModeCoefficients, SceneParameters, TWO_PI, branch_sqrt

RESIDUAL_TOL = 1e-10
LOSS_FALLBACK = 1e-8
TRACE_TAG = "superlens-trace v1"


@dataclass(frozen=True)
class Grid:
    """Tensor grid of the flattened domain.

    ``ny_omega`` counts levels on ``[0, a]`` and ``ny_slab`` on ``[a, b]``,
    both including their end points; the level at ``y = a`` is shared.
    """

    nx: int = 256
    ny_omega: int = 128
    ny_slab: int = 128

    def __post_init__(self):
        if self.nx < 4 or self.nx % 2:
            raise ValueError(f"nx must be even and >= 4, got {self.nx}")
        if self.ny_omega < 3 or self.ny_slab < 3:
            raise ValueError(f"need at least 3 levels per region, got {self.ny_omega}, {self.ny_slab}")

    @property
    def levels(self) -> int:
        return self.ny_omega + self.ny_slab - 1

    @property
    def interface_level(self) -> int:
        return self.ny_omega - 1

    @property
    def max_mode(self) -> int:
        """Largest mode carried by the transparent condition."""
        return self.nx // 2 - 1

    @property
    def projection_modes(self) -> int:
        return self.nx // 4

    def spacings(self, p: SceneParameters) -> tuple[float, float, float]:
        """``(hx, h_omega, h_slab)``."""
        return (p.period / self.nx, p.a / (self.ny_omega - 1),
                (p.b - p.a) / (self.ny_slab - 1))

    def x(self, period: float = 1.0) -> np.ndarray:
        return np.arange(self.nx) * (period / self.nx)

    def y(self, p: SceneParameters) -> np.ndarray:
        lower = np.linspace(0.0, p.a, self.ny_omega)
        upper = np.linspace(p.a, p.b, self.ny_slab)
        return np.concatenate([lower, upper[1:]])

    def as_dict(self) -> dict:
        return {"nx": self.nx, "ny_omega": self.ny_omega, "ny_slab": self.ny_slab}


@dataclass(frozen=True)
class TransformedCoefficients:
    """``c1..c4`` on the lower-region grid, arrays of shape ``(ny_omega, nx)``."""

    x: np.ndarray
    y: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray


def solver_profile(profile: Profile, grid: Grid) -> Profile:
    """Profile actually seen by the discretisation (kinked shapes are band-limited)."""
    return profile if profile.is_smooth else profile.projected(grid.projection_modes)


def _surface_terms(profile: Profile, x: np.ndarray, a: float):
    f = profile.delta * profile.g(x)
    fp = profile.delta * profile.dg(x)
    fpp = profile.delta * profile.d2g(x)
    if np.any(a - f <= 0):
        raise ValueError(f"surface reaches the slab: max f = {f.max():.4g} >= a = {a}")
    return f, fp, fpp


def transformed_coefficients(profile: Profile, p: SceneParameters,
                             grid: Grid) -> TransformedCoefficients:
    """Pointwise coefficients of the flattened Helmholtz operator.

    ``c1 = (a-f)^2``, ``c2 = ((a-y) f')^2 + a^2``, ``c3 = -2 (a-y)(a-f) f'`` and
    ``c4 = -(a-y) ((a-f) f'' + 2 f'^2)``, with ``y`` the flattened coordinate.
    """
    x = grid.x(p.period)
    y = np.linspace(0.0, p.a, grid.ny_omega)
    f, fp, fpp = _surface_terms(profile, x, p.a)
    s = (p.a - y)[:, None]
    c1 = np.broadcast_to((p.a - f) ** 2, (y.size, x.size)).copy()
    c2 = (s * fp) ** 2 + p.a**2
    c3 = -2 * s * (p.a - f) * fp
    c4 = -s * ((p.a - f) * fpp + 2 * fp**2)
    return TransformedCoefficients(x, y, c1, c2, c3, c4)


def _fft_modes(nx: int) -> np.ndarray:
    """Signed mode number of each ``np.fft`` bin; the Nyquist bin gets ``nx/2``."""
    k = np.arange(nx)
    return np.where(k <= nx // 2, k, k - nx)


def dtn_symbol(p: SceneParameters, nx: int) -> np.ndarray:
    """``i beta_n`` per FFT bin, with the Nyquist bin dropped (set to 0)."""
    al = TWO_PI * _fft_modes(nx) / p.period
    sym = 1j * branch_sqrt(p.kappa**2 - al**2)
    sym[nx // 2] = 0.0
    return sym


def dxx_symbol(p: SceneParameters, nx: int) -> np.ndarray:
    """Eigenvalues ``-alpha_n^2`` of Fourier collocation ``d^2/dx^2`` per FFT bin."""
    return -(TWO_PI * _fft_modes(nx) / p.period) ** 2


def dx_symbol(p: SceneParameters, nx: int) -> np.ndarray:
    """Eigenvalues ``i alpha_n`` of Fourier collocation ``d/dx`` (Nyquist bin zeroed)."""
    sym = 1j * TWO_PI * _fft_modes(nx) / p.period
    sym[nx // 2] = 0.0
    return sym


def _circulant(col: np.ndarray) -> np.ndarray:
    n = col.size
    return col[np.subtract.outer(np.arange(n), np.arange(n)) % n]


def circulant_from_symbol(symbol: np.ndarray) -> np.ndarray:
    """Dense nodal matrix of ``ifft(symbol * fft(.))``."""
    return _circulant(np.fft.ifft(symbol))


def dtn_matrix(p: SceneParameters, nx: int) -> np.ndarray:
    """Dense nodal matrix of the transparent operator (DFT, multiply, inverse DFT)."""
    return circulant_from_symbol(dtn_symbol(p, nx))


class BlockSequence(Sequence):
    """Read-only sequence of blocks generated on demand by ``build(level)``."""

    def __init__(self, build, levels: range):
        self._build = build
        self._levels = levels

    def __len__(self):
        return len(self._levels)

    def __getitem__(self, j):
        if isinstance(j, slice):
            return BlockSequence(self._build, self._levels[j])
        return self._build(self._levels[j])


@dataclass
class AssembledSystem:
    """Block-tridiagonal system: one block row per y-level, ``nx`` nodal unknowns each.

    ``lower``, ``diag`` and ``upper`` are sequences of dense ``nx x nx`` blocks
    built on access, so memory stays at a few blocks regardless of the grid.
    """

    grid: Grid
    params: SceneParameters
    profile: Profile
    loss: float
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    Dx: np.ndarray = field(repr=False)
    Dxx: np.ndarray = field(repr=False)
    T: np.ndarray = field(repr=False)

    def __post_init__(self):
        levels = range(self.grid.levels)
        self.lower = BlockSequence(lambda j: self._block(j, -1), levels)
        self.diag = BlockSequence(lambda j: self._block(j, 0), levels)
        self.upper = BlockSequence(lambda j: self._block(j, 1), levels)
        self.rhs = np.zeros((self.grid.levels, self.grid.nx), dtype=complex)
        self.rhs[-1] = self.params.mu * self.spacings[2] * boundary_source_rho(self.params)

    @property
    def spacings(self):
        return self.grid.spacings(self.params)

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    @property
    def eta_squared(self) -> complex:
        p = self.params
        return p.kappa**2 * (p.eps + 1j * self.loss) * p.mu

    def _helm_omega(self):
        a, k2 = self.params.a, self.params.kappa**2
        return ((a - self.f) ** 2)[:, None] * (self.Dxx + k2 * np.eye(self.grid.nx))

    def _helm_slab(self):
        return self.Dxx + self.eta_squared * np.eye(self.grid.nx)

    def _block(self, j: int, offset: int) -> np.ndarray:
        m = self.grid.nx
        a, mu = self.params.a, self.params.mu
        _, ho, hs = self.spacings
        iface, top = self.grid.interface_level, self.grid.levels - 1
        I = np.eye(m, dtype=complex)
        Z = np.zeros((m, m), dtype=complex)
        f, fp, fpp = self.f, self.fp, self.fpp
        if j == 0:
            return I if offset == 0 else Z
        if j < iface:
            # scaled by h^2 / a^2 to keep the blocks O(1)
            s = a - j * ho
            C2 = np.diag(s**2 * fp**2 + a**2)
            first = ((-2 * s * (a - f) * fp)[:, None] * self.Dx
                     + np.diag(-s * ((a - f) * fpp + 2 * fp**2))) * (ho / 2)
            if offset == 0:
                return (ho**2 * self._helm_omega() - 2 * C2) / a**2
            return (C2 + offset * first) / a**2
        if j == iface:
            t5 = 1 - f / a
            if offset == -1:
                return mu * I
            if offset == 1:
                return np.diag((ho / hs) * t5)
            return (np.diag(-(ho / hs) * t5) + (ho * hs / 2) * t5[:, None] * self._helm_slab()
                    - mu * I + mu * (ho**2 / (2 * a**2)) * self._helm_omega())
        if j < top:
            return hs**2 * self._helm_slab() - 2 * I if offset == 0 else I
        if offset == -1:
            return -I
        if offset == 0:
            return I - (hs**2 / 2) * self._helm_slab() - mu * hs * self.T
        return Z

    def to_sparse(self) -> sp.csr_matrix:
        return to_sparse(self.lower, self.diag, self.upper)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u).reshape(self.rhs.shape)
        out = np.empty_like(self.rhs)
        L = self.grid.levels
        for j in range(L):
            acc = self.diag[j] @ u[j]
            if j > 0:
                acc += self.lower[j] @ u[j - 1]
            if j < L - 1:
                acc += self.upper[j] @ u[j + 1]
            out[j] = acc
        return out

    def residual(self, u: np.ndarray) -> float:
        r = self.matvec(u) - self.rhs
        return float(np.linalg.norm(r) / max(np.linalg.norm(self.rhs), 1e-300))


def assemble_system(profile: Profile, p: SceneParameters, grid: Grid,
                    loss: float = 0.0) -> AssembledSystem:
    """Discretisation of the flattened boundary value problem.

    Rows, from bottom to top: ``u = 0`` on the flattened surface; the flattened
    Helmholtz equation; at ``y = a`` continuity and ``(1 - f/a) d+u = mu d-u``;
    ``(Delta + eta^2) u = 0`` in the slab; at ``y = b`` the condition
    ``d-u = mu (T u + rho)``.

    y-derivatives are centred second-order differences.  The one-sided
    derivatives at ``y = a`` and ``y = b`` are two-point differences corrected
    by ``h/2 u_yy``, with ``u_yy`` eliminated through the governing equation on
    that side; this keeps them second order and the system block-tridiagonal.
    x-derivatives use Fourier collocation on the periodic grid.

    Kinked profiles are replaced by their projection onto ``nx/4`` modes.
    """
    if loss < 0:
        raise ValueError("loss must be non-negative")
    prof = solver_profile(profile, grid)
    x = grid.x(p.period)
    f, fp, fpp = _surface_terms(prof, x, p.a)
    m = grid.nx
    return AssembledSystem(grid, p, prof, loss, f, fp, fpp,
                           Dx=circulant_from_symbol(dx_symbol(p, m)),
                           Dxx=circulant_from_symbol(dxx_symbol(p, m)).real.astype(complex),
                           T=dtn_matrix(p, m))


@dataclass
class DiscreteField:
    """Total field ``u[j, i]`` at ``(x_i, y_j)`` of the flattened grid."""

    values: np.ndarray
    params: SceneParameters
    grid: Grid
    profile: Profile
    info: BlockSolveInfo
    loss: float = 0.0

    @property
    def x(self) -> np.ndarray:
        return self.grid.x(self.params.period)

    @property
    def y(self) -> np.ndarray:
        return self.grid.y(self.params)

    @property
    def trace(self) -> np.ndarray:
        return self.values[-1]

    def trace_modes(self, n_max: int | None = None) -> ModeCoefficients:
        """Discrete Fourier coefficients of the top row for ``|n| <= n_max``."""
        n_max = self.grid.max_mode if n_max is None else n_max
        if n_max > self.grid.max_mode:
            raise ValueError(f"grid with nx={self.grid.nx} resolves |n| <= {self.grid.max_mode}")
        c = np.fft.fft(self.trace) / self.grid.nx
        return ModeCoefficients(n_max, c[np.arange(-n_max, n_max + 1) % self.grid.nx])

    def trace_at(self, x) -> np.ndarray:
        """Trigonometric interpolation of the top row (Nyquist term split evenly)."""
        return trigonometric_interpolation(self.trace, x, self.params.period)


def trigonometric_interpolation(samples, x, period: float = 1.0) -> np.ndarray:
    """Band-limited interpolant through equispaced periodic ``samples`` evaluated at ``x``."""
    samples = np.asarray(samples, dtype=complex)
    nx = samples.size
    c = np.fft.fft(samples) / nx
    n = _fft_modes(nx)
    x = np.asarray(x, dtype=float)
    phase = TWO_PI * x.ravel() / period
    if nx % 2 == 0:
        c[nx // 2] *= 0.5
    vals = np.exp(1j * np.outer(phase, n)) @ c
    if nx % 2 == 0:
        vals += np.exp(-1j * phase * (nx // 2)) * c[nx // 2]
    return vals.reshape(x.shape)


def _reduce_slab(system: AssembledSystem, rcond_tol: float, info: BlockSolveInfo):
    """Eliminate slab and top levels mode by mode.

    Returns FFT-space multipliers ``Z`` and offsets ``W``, one row per level
    above the interface, such that ``U_j = Z_j U_{j-1} + W_j``.
    """
    p, grid = system.params, system.grid
    m = grid.nx
    _, _, hs = grid.spacings(p)
    k2 = dxx_symbol(p, m) + system.eta_squared
    top_pivot = 1 - hs**2 / 2 * k2 - p.mu * hs * dtn_symbol(p, m)
    rho_hat = np.zeros(m, dtype=complex)
    rho_hat[0] = m * p.mu * hs * boundary_source_rho(p)

    iface, top = grid.interface_level, grid.levels - 1
    Z = np.empty((top - iface, m), dtype=complex)
    W = np.empty_like(Z)

    def check(level, piv):
        mag = np.abs(piv)
        rc = mag.min() / mag.max()
        info.record(level, rc, 0.0)
        if rc < rcond_tol:
            raise ConditioningError(level, rc)

    check(top, top_pivot)
    Z[-1] = 1 / top_pivot
    W[-1] = rho_hat / top_pivot
    d = hs**2 * k2 - 2
    for j in range(top - 1, iface, -1):
        piv = d + Z[j - iface]
        check(j, piv)
        Z[j - iface - 1] = -1 / piv
        W[j - iface - 1] = -W[j - iface] / piv
    return Z, W


def solve_total_field(profile: Profile, p: SceneParameters, grid: Grid | None = None,
                      loss: float = 0.0, rcond_tol: float = 1e-14) -> DiscreteField:
    """Assemble and solve the forward problem.

    Raises :class:`ConditioningError` if a pivot block is numerically singular.
    For lossless ``eps = mu = -1`` this happens once the grid carries strongly
    evanescent modes; a small ``loss`` such as ``LOSS_FALLBACK`` restores
    solvability.
    """
    grid = grid or Grid()
    system = assemble_system(profile, p, grid, loss=loss)
    info = BlockSolveInfo()
    Z, W = _reduce_slab(system, rcond_tol, info)
    iface = grid.interface_level

    # fold U_{iface+1} = Z U_iface + W (Fourier space) into the interface row
    U = system.upper[iface]
    fold = U @ _circulant(np.fft.ifft(Z[0]))
    diag = BlockSequence(lambda j: system.diag[j] + fold if j == iface else system.diag[j],
                         range(iface + 1))
    rhs = system.rhs[: iface + 1].copy()
    rhs[iface] -= U @ np.fft.ifft(W[0])
    u_low, info = solve_block_tridiagonal(system.lower[: iface + 1], diag,
                                          system.upper[: iface + 1], rhs,
                                          rcond_tol=rcond_tol, info=info)

    values = np.empty((grid.levels, grid.nx), dtype=complex)
    values[: iface + 1] = u_low
    values[0] = 0.0
    prev = np.fft.fft(u_low[-1])
    for j in range(iface + 1, grid.levels):
        prev = Z[j - iface - 1] * prev + W[j - iface - 1]
        values[j] = np.fft.ifft(prev)

    info.residual = system.residual(values)
    if info.residual > RESIDUAL_TOL:
        warnings.warn(f"forward solve residual {info.residual:.2e} exceeds {RESIDUAL_TOL:g} "
                      f"(min rcond {info.min_rcond:.2e} at level {info.min_rcond_level})",
                      RuntimeWarning, stacklevel=2)
    return DiscreteField(values, p, grid, system.profile, info, loss)


def trace_on_gamma_b(field: DiscreteField) -> np.ndarray:
    """Top-row values at ``x_i = i period / nx``."""
    return field.trace.copy()


# --- dumps ------------------------------------------------------------------------

FIELD_MAGIC = b"SLF1"
_HEADER = struct.Struct("<4sII3d")


def write_trace_csv(field: DiscreteField, path) -> None:
    """Top-row trace with ``# key=json`` header lines describing the solve."""
    meta = {"params": field.params.as_dict(), "grid": field.grid.as_dict(),
            "profile": field.profile.as_dict(), "loss": field.loss,
            "min_rcond": field.info.min_rcond, "residual": field.info.residual}
    lines = [f"# {TRACE_TAG}"]
    lines += [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in meta.items()]
    lines.append("x,re_u,im_u")
    lines += [f"{x!r},{u.real!r},{u.imag!r}"
              for x, u in zip(field.x.tolist(), field.trace.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path):
    """Return ``(x, u, meta)`` from a :func:`write_trace_csv` file."""
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != f"# {TRACE_TAG}":
        raise ValueError(f"{path}: missing '{TRACE_TAG}' header")
    meta, xs, us = {}, [], []
    for line in text[1:]:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = json.loads(val)
        elif line and not line.startswith("x,"):
            x, re, im = line.split(",")
            xs.append(float(x))
            us.append(complex(float(re), float(im)))
    meta["params"] = SceneParameters.from_dict(meta["params"])
    return np.array(xs), np.array(us), meta


def write_field_binary(field: DiscreteField, path) -> None:
    """Little-endian dump: header ``(magic, nx, ny, period, a, b)`` then complex128 rows."""
    vals = np.ascontiguousarray(field.values, dtype="<c16")
    ny, nx = vals.shape
    p = field.params
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FIELD_MAGIC, nx, ny, p.period, p.a, p.b))
        fh.write(vals.tobytes())


def read_field_binary(path):
    """Return ``(values, header)`` from a :func:`write_field_binary` dump."""
    raw = Path(path).read_bytes()
    magic, nx, ny, period, a, b = _HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        raise ValueError(f"{path}: not a field dump")
    vals = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(ny, nx)
    return vals, {"nx": nx, "ny": ny, "period": period, "a": a, "b": b}
