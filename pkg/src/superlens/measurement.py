"""Sampling of the ``y = b`` trace and the multiplicative noise model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .spectral import SceneParameters

DEFAULT_M = 100
DEFAULT_NOISE = 0.05

RNG_ALGORITHM = "numpy.random.PCG64"
# PCG64: 128-bit LCG state s <- s * MULT + inc (mod 2^128), XSL-RR output; the
# stream (state, inc) is derived from the integer seed by numpy's SeedSequence.
RNG_CONSTANTS = {"multiplier": "0x2360ed051fc65da44385df649fccf645",
                 "output": "XSL-RR 128/64", "seeding": "SeedSequence(seed)"}

_CSV_TAG = "superlens-measurement v1"


@dataclass(frozen=True)
class MeasurementSet:
    """Samples ``u(x_m, b)`` at ``x_m = m period / M`` for ``m = 0..M``.

    The endpoint ``m = M`` duplicates ``m = 0`` before noise is applied; it is
    kept here and dropped by the analysis.
    """

    samples: np.ndarray = field(repr=False)
    M: int
    params: SceneParameters
    noise_level: float = 0.0
    seed: int | None = None
    noiseless: bool = True
    rng: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.M + 1,):
            raise ValueError(f"expected {self.M + 1} samples for M={self.M}, got {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.M + 1) * (self.params.period / self.M)

    @property
    def one_period(self) -> np.ndarray:
        """Samples ``0..M-1`` (duplicate endpoint removed)."""
        return self.samples[:-1]


def sample_measurements(trace_provider: Callable, p: SceneParameters,
                        M: int = DEFAULT_M) -> MeasurementSet:
    """Evaluate ``trace_provider(x)`` at ``x_m = m period / M``, ``m = 0..M``.

    ``trace_provider`` is any callable returning the trace at an array of
    points, e.g. :meth:`DiscreteField.trace_at`.
    """
    if M < 2:
        raise ValueError("need M >= 2")
    x = np.arange(M + 1) * (p.period / M)
    vals = np.asarray(trace_provider(x), dtype=complex)
    vals = vals.copy()
    vals[-1] = vals[0]  # exact periodicity, independent of interpolation round-off
    return MeasurementSet(vals, M, p)


def noise_factors(n: int, level: float, seed: int) -> np.ndarray:
    """Real multipliers ``1 + r_m`` with ``r_m`` uniform on ``[-level, level]``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return 1.0 + rng.uniform(-level, level, size=n)


def apply_noise(ms: MeasurementSet, level: float = DEFAULT_NOISE, seed: int = 0) -> MeasurementSet:
    """Multiply every sample by an independent real factor ``1 + r_m``."""
    if level < 0:
        raise ValueError("noise level must be non-negative")
    if level == 0:
        return replace(ms, seed=seed, noise_level=0.0)
    factors = noise_factors(ms.M + 1, level, seed)
    return replace(ms, samples=ms.samples * factors, noise_level=float(level), seed=int(seed),
                   noiseless=False, rng={"algorithm": RNG_ALGORITHM, **RNG_CONSTANTS})


# --- CSV interchange ---------------------------------------------------------------

def write_measurements(ms: MeasurementSet, path) -> None:
    meta = {
        "M": ms.M,
        "noise_level": ms.noise_level,
        "seed": ms.seed,
        "noiseless": ms.noiseless,
        "rng": ms.rng,
        "params": ms.params.as_dict(),
    }
    lines = [f"# {_CSV_TAG}"]
    lines += [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in meta.items()]
    lines.append("m,x,re_u,im_u")
    for m, (x, u) in enumerate(zip(ms.x.tolist(), ms.samples.tolist())):
        lines.append(f"{m},{x!r},{u.real!r},{u.imag!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_measurements(path) -> MeasurementSet:
    meta, rows = {}, []
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != f"# {_CSV_TAG}":
        raise ValueError(f"{path}: missing '{_CSV_TAG}' header")
    for line in text[1:]:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = json.loads(val)
        elif line and not line.startswith("m,"):
            m, _, re, im = line.split(",")
            rows.append(complex(float(re), float(im)))
    params = SceneParameters.from_dict(meta["params"])
    return MeasurementSet(np.array(rows), int(meta["M"]), params,
                          noise_level=float(meta.get("noise_level", 0.0)),
                          seed=meta.get("seed"), noiseless=bool(meta.get("noiseless", True)),
                          rng=meta.get("rng") or {})
