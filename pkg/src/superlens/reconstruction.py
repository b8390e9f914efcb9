"""Inverse step: measured trace -> Fourier modes of the surface.

Each mode is recovered independently as
``f^(n) = Upsilon_n (u^(n)(b) - u0(b) delta_{n0})`` and the profile is the
truncated synthesis over ``|n| <= N``.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import first_order_trace, scaling_factor_upsilon, zeroth_order_field
from .errors import DegenerateModeError
from .measurement import MeasurementSet
from .profiles import Profile
from .spectral import ModeCoefficients, SceneParameters, fourier_coefficients, fourier_synthesis

DEFAULT_EVAL_POINTS = 256


@dataclass(frozen=True)
class ReconstructedProfile:
    """Recovered coefficients ``f^(n)``, ``|n| <= N``, and their synthesis.

    ``values`` is the complex synthesis on ``x``; its real part is the
    profile and its imaginary part is kept as a consistency diagnostic.
    Skipped (degenerate) modes are zero in ``coefficients``.
    """

    coefficients: ModeCoefficients
    N: int
    x: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    upsilon: dict = field(repr=False, default_factory=dict)
    skipped: tuple = ()
    period: float = 1.0

    @property
    def profile(self) -> np.ndarray:
        return self.values.real

    @property
    def imaginary_residual(self) -> float:
        """``max |Im|`` of the synthesis relative to ``max |Re|``."""
        scale = max(np.abs(self.values.real).max(), 1e-300)
        return float(np.abs(self.values.imag).max() / scale)

    def evaluate(self, x) -> np.ndarray:
        return fourier_synthesis(self.coefficients, x, self.period)


def reconstruct_profile(ms: MeasurementSet, N: int, p: SceneParameters | None = None,
                        eval_points: int = DEFAULT_EVAL_POINTS) -> ReconstructedProfile:
    """Recover ``f^(n)`` for ``|n| <= N`` from one set of measurements.

    Raises :class:`~superlens.errors.AliasingError` if ``M < 2N + 1`` and
    propagates resonance errors.  Modes with vanishing ``beta_n`` or
    ``gamma_n`` are skipped with a warning.
    """
    p = p or ms.params
    # subtracting u0(b) before the transform keeps the dominant constant out of
    # the round-off that Upsilon_n amplifies
    u0b = zeroth_order_field(p)(p.b)
    data = fourier_coefficients(ms.one_period - u0b, N, p.period)
    vals = np.zeros(2 * N + 1, dtype=complex)
    ups, skipped = {}, []
    for n in range(-N, N + 1):
        try:
            Y = scaling_factor_upsilon(n, p)
        except DegenerateModeError as exc:
            warnings.warn(f"skipping mode {n}: {exc}", RuntimeWarning, stacklevel=2)
            skipped.append(n)
            continue
        ups[n] = Y
        vals[n + N] = Y * data[n]
    coeffs = ModeCoefficients(N, vals)
    x = np.arange(eval_points) * (p.period / eval_points)
    return ReconstructedProfile(coeffs, N, x, fourier_synthesis(coeffs, x, p.period), ups,
                                tuple(skipped), p.period)


def linearized_trace(profile: Profile, p: SceneParameters, n_max: int):
    """Trace predicted by the first-order expansion, as a callable of ``x``.

    ``u0(b) + delta sum_n u1^(n)(b) g^(n) exp(i alpha_n x)`` over ``|n| <= n_max``;
    feeding its samples to :func:`reconstruct_profile` returns ``delta g^(n)``.
    """
    g = profile.coefficients(n_max)
    u0b = zeroth_order_field(p)(p.b)
    coeffs = {n: profile.delta * first_order_trace(n, p) * g[n] for n in range(-n_max, n_max + 1)}
    coeffs[0] += u0b
    mc = ModeCoefficients.from_mapping(coeffs, n_max)
    return lambda x: fourier_synthesis(mc, x, p.period)


def profile_error(recon: ReconstructedProfile, truth: Profile,
                  grid_points: int = 1024) -> dict:
    """Relative l2 / l-infinity errors of ``Re(recon)`` against ``delta g``.

    Per-mode entries hold absolute and relative coefficient errors; the
    relative error is ``None`` where the true coefficient vanishes.
    """
    x = np.arange(grid_points) * (truth.period / grid_points)
    true = truth.f(x)
    rec = recon.evaluate(x).real
    diff = rec - true
    l2 = float(np.linalg.norm(diff) / max(np.linalg.norm(true), 1e-300))
    linf = float(np.abs(diff).max() / max(np.abs(true).max(), 1e-300))
    tc = truth.coefficients(recon.N)
    modes = {}
    for n in range(0, recon.N + 1):
        t = truth.delta * tc[n]
        err = abs(recon.coefficients[n] - t)
        modes[n] = {"true": t, "recon": recon.coefficients[n], "abs_error": err,
                    "rel_error": err / abs(t) if abs(t) > 1e-14 * max(truth.delta, 1e-300) else None}
    return {"l2": l2, "linf": linf, "imag_residual": recon.imaginary_residual,
            "modes": modes, "skipped": list(recon.skipped)}


# --- output tables -------------------------------------------------------------------

def reconstruction_csv(recon: ReconstructedProfile, truth: Profile | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "f_true", "f_recon_re", "f_recon_im"])
    true = truth.f(recon.x) if truth is not None else np.full(recon.x.shape, np.nan)
    for x, t, v in zip(recon.x.tolist(), true.tolist(), recon.values.tolist()):
        w.writerow([repr(x), repr(t), repr(v.real), repr(v.imag)])
    return buf.getvalue()


def mode_table_csv(recon: ReconstructedProfile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "re_f", "im_f", "abs_upsilon", "skipped"])
    for n, c in recon.coefficients.items():
        ups = recon.upsilon.get(n)
        w.writerow([n, repr(c.real), repr(c.imag), repr(abs(ups)) if ups is not None else "nan",
                    int(n in recon.skipped)])
    return buf.getvalue()


def write_reconstruction(recon: ReconstructedProfile, path, truth: Profile | None = None) -> None:
    Path(path).write_text(reconstruction_csv(recon, truth))


def write_mode_table(recon: ReconstructedProfile, path) -> None:
    Path(path).write_text(mode_table_csv(recon))
