"""Nakagami-m and cascaded Nakagami-m channel generation, densities and
relay path-loss geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import GeometryError, ParameterDomainError, UnsupportedDepthError

MAX_PDF_DEPTH = 3
QUAD_EPSABS = 1e-8


@dataclass(frozen=True)
class NakagamiStage:
    m: float
    omega: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 0.5):
            raise ParameterDomainError(f"Nakagami shape m must be >= 1/2, got {self.m}")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ParameterDomainError(f"Nakagami spread omega must be > 0, got {self.omega}")


@dataclass(frozen=True)
class CascadeSpec:
    """Ordered Nakagami stages whose amplitudes multiply; ``K = len(stages)``."""

    stages: tuple[NakagamiStage, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if len(self.stages) < 1:
            raise ParameterDomainError("a cascade needs at least one stage")

    @classmethod
    def uniform(cls, K: int, m: float, omega: float = 1.0) -> "CascadeSpec":
        """K identical stages."""
        if K < 1:
            raise ParameterDomainError(f"cascading degree K must be >= 1, got {K}")
        return cls(tuple(NakagamiStage(m, omega) for _ in range(K)))

    @property
    def K(self) -> int:
        return len(self.stages)

    @property
    def mean_power(self) -> float:
        return float(np.prod([s.omega for s in self.stages]))


@dataclass
class RngStream:
    """Seeded random stream keyed by ``(seed, stream)``.

    The same key always reproduces the same draw sequence. ``stream`` may be
    an int or a tuple of ints; :meth:`child` derives independent sub-streams
    so parallel workers never share state.
    """

    seed: int
    stream: tuple[int, ...] = ()
    _gen: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.stream, int):
            self.stream = (self.stream,)
        self.stream = tuple(int(s) for s in self.stream)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(int(self.seed), spawn_key=self.stream)
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.stream + tuple(int(k) for k in keys))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_nakagami_amplitude(stage: NakagamiStage, rng, size=None):
    """Draw Nakagami(m, omega) amplitudes as sqrt of Gamma(m, omega/m)."""
    g = _as_generator(rng).gamma(stage.m, stage.omega / stage.m, size)
    return np.sqrt(g)


def sample_cascade_amplitude(spec: CascadeSpec, rng, size=None):
    amp = None
    for stage in spec.stages:
        a = sample_nakagami_amplitude(stage, rng, size)
        amp = a if amp is None else amp * a
    return amp


def sample_channel(spec: CascadeSpec, rng, size=None):
    """Complex cascaded coefficient(s): product amplitude times a uniform phasor.

    Amplitudes are drawn first (stage by stage), then the phase.
    """
    gen = _as_generator(rng)
    amp = sample_cascade_amplitude(spec, gen, size)
    phase = gen.uniform(0.0, 2.0 * np.pi, size)
    return amp * np.exp(1j * phase)


def nakagami_pdf(h, m: float, omega: float = 1.0):
    """Closed-form Nakagami density, zero for h <= 0."""
    h = np.asarray(h, dtype=float)
    out = np.zeros_like(h)
    pos = h > 0
    hp = h[pos]
    log_f = (math.log(2.0) + m * math.log(m / omega) - gammaln(m)
             + (2 * m - 1) * np.log(hp) - (m / omega) * hp * hp)
    out[pos] = np.exp(log_f)
    return out if out.ndim else float(out)


def _product_pdf(h: np.ndarray, stages: Sequence[NakagamiStage]) -> np.ndarray:
    first = stages[0]
    if len(stages) == 1:
        return nakagami_pdf(h, first.m, first.omega)
    rest = stages[1:]

    # f(h) = int_0^inf f_1(x) f_rest(h/x) / x dx, with x = t / (1 - t);
    # vectorized over every requested h at once
    def integrand(t):
        x = t / (1.0 - t)
        w = nakagami_pdf(x, first.m, first.omega) / (x * (1.0 - t) ** 2)
        if w == 0.0:
            return np.zeros_like(h)
        return w * _product_pdf(h / x, rest)

    val, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=1e-10,
                                norm="max", limit=400, points=[0.5])
    return np.maximum(val, 0.0)


def cascaded_pdf(h, spec: CascadeSpec):
    """Density of the cascaded Nakagami-m amplitude at ``h`` (scalar or array).

    Evaluated as the product-distribution integral, nested once per extra
    stage. Supports K <= 3.
    """
    if spec.K > MAX_PDF_DEPTH:
        raise UnsupportedDepthError(
            f"cascaded_pdf supports K <= {MAX_PDF_DEPTH}, got K={spec.K}")
    arr = np.asarray(h, dtype=float)
    if not np.all(arr > 0):
        raise ParameterDomainError("density argument must be positive")
    out = _product_pdf(np.atleast_1d(arr), spec.stages)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


@dataclass(frozen=True)
class RelayGeometry:
    d_sr: float
    theta: float
    c: float
    d_rd: float
    a_sr: float
    a_rd: float

    @property
    def amplitude_gain(self) -> float:
        """sqrt(A_SR * A_RD), the amplitude factor on the relay composite."""
        return math.sqrt(self.a_sr * self.a_rd)


def solve_geometry(d_sr: float, theta: float, c: float) -> RelayGeometry:
    """Place a relay with S-D distance 1 and solve d_RD by the law of cosines.

    d_RD is the positive root of ``d^2 - 2 d_SR cos(theta) d + d_SR^2 - 1 = 0``.
    """
    if not d_sr > 0:
        raise GeometryError(f"d_SR must be positive, got {d_sr}")
    if not c > 0:
        raise GeometryError(f"path-loss exponent must be positive, got {c}")
    if not (math.pi / 2 <= theta < math.pi):
        raise GeometryError(f"theta must lie in [pi/2, pi), got {theta}")
    b = -2.0 * d_sr * math.cos(theta)
    disc = b * b - 4.0 * (d_sr * d_sr - 1.0)
    if disc < 0:
        raise GeometryError("no real solution for d_RD")
    d_rd = (-b + math.sqrt(disc)) / 2.0
    if not d_rd > 0:
        raise GeometryError(f"no positive d_RD for d_SR={d_sr}, theta={theta}")
    return RelayGeometry(d_sr, theta, c, d_rd, d_sr ** -c, d_rd ** -c)
