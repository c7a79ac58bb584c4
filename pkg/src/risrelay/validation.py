"""Statistical self-checks of the channel generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_models import (CascadeSpec, NakagamiStage, cascaded_pdf, sample_cascade_amplitude,
                             sample_nakagami_amplitude)

HIST_BINS = 100
HIST_RANGE = (0.0, 5.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    expected: float
    tolerance: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: got {self.value:.6g}, expected {self.expected:.6g} ({self.tolerance})"


def _rel_check(name, value, expected, rel) -> CheckResult:
    ok = abs(value - expected) <= rel * abs(expected)
    return CheckResult(name, bool(ok), float(value), float(expected), f"rel tol {rel:g}")


def binned_pdf(spec: CascadeSpec, edges) -> np.ndarray:
    """Bin-averaged density via Simpson's rule on each bin."""
    edges = np.asarray(edges, dtype=float)
    lo = np.maximum(edges[:-1], 1e-12)
    hi = edges[1:]
    pts = np.concatenate([lo, 0.5 * (lo + hi), hi])
    vals = cascaded_pdf(pts, spec)
    n = len(lo)
    return (vals[:n] + 4.0 * vals[n:2 * n] + vals[2 * n:]) / 6.0


def histogram_error(spec: CascadeSpec, amplitudes) -> float:
    """Max absolute difference between the empirical density and the pdf."""
    edges = np.linspace(*HIST_RANGE, HIST_BINS + 1)
    counts, _ = np.histogram(amplitudes, bins=edges)
    density = counts / (len(amplitudes) * np.diff(edges))
    return float(np.max(np.abs(density - binned_pdf(spec, edges))))


def stage_moment_checks(stage: NakagamiStage, rng, n: int = 1_000_000,
                        expected: NakagamiStage | None = None) -> list[CheckResult]:
    expected = expected or stage
    h = sample_nakagami_amplitude(stage, rng, n)
    h2 = h * h
    tag = f"m={expected.m:g},omega={expected.omega:g}"
    return [
        _rel_check(f"nakagami E[h^2] {tag}", h2.mean(), expected.omega, 0.01),
        _rel_check(f"nakagami E[h^4] {tag}", (h2 * h2).mean(),
                   expected.omega ** 2 * (expected.m + 1) / expected.m, 0.02),
    ]


def cascade_checks(spec: CascadeSpec, rng, n: int = 1_000_000,
                   expected: CascadeSpec | None = None) -> list[CheckResult]:
    """Mean power and pdf-vs-histogram agreement for a cascade.

    Raises :class:`UnsupportedDepthError` for K beyond the density's reach.
    """
    expected = expected or spec
    amp = sample_cascade_amplitude(spec, rng, n)
    tag = f"K={expected.K}"
    err = histogram_error(expected, amp)
    return [
        _rel_check(f"cascade E[|h|^2] {tag}", float(np.mean(amp * amp)), expected.mean_power, 0.02),
        CheckResult(f"cascade pdf vs histogram {tag}", err < 0.02, err, 0.0, "max bin error < 0.02"),
    ]


def validate_channels(spec: CascadeSpec, rng, n: int = 1_000_000,
                      sample_spec: CascadeSpec | None = None) -> list[CheckResult]:
    """All checks for ``spec``; ``sample_spec`` lets a caller sample from a
    deliberately different law (fault injection)."""
    sample_spec = sample_spec or spec
    results = []
    for stage, drawn in zip(spec.stages, sample_spec.stages):
        results.extend(stage_moment_checks(drawn, rng, n, expected=stage))
    results.extend(cascade_checks(sample_spec, rng, n, expected=spec))
    return results
