"""Seeded excitation signals and the per-stage precompute.

Before a stage runs, the primary noise is pushed through every relevant
path once: disturbances through the primary paths, filtered references
through the secondary paths. The filtered-reference tensors carry a lead-in
of control_len - 1 zero rows so that a full tapped-delay-line window exists
from the very first adaptation sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import design_bandpass, fir_filter
from .paths import PathSet, SystemGeometry, validate_paths
from .rng import CounterRng


@dataclass(frozen=True)
class NoiseSpec:
    """Bandlimited Gaussian excitation: amplitude * white noise through a
    windowed-sinc bandpass."""

    band_lo_hz: float
    band_hi_hz: float
    amplitude: float
    num_samples: int
    seed: int
    filter_order: int

    def validate(self, fs: float) -> None:
        if not (0.0 < self.band_lo_hz < self.band_hi_hz < fs / 2.0):
            raise ValueError(
                f"noise band ({self.band_lo_hz}, {self.band_hi_hz}) invalid for fs={fs}"
            )
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.filter_order < 2 or self.filter_order % 2 != 0:
            raise ValueError("filter_order must be an even integer >= 2")


@dataclass(frozen=True)
class PrecomputedSignals:
    """Disturbances and filtered references for one stage's primary noise.

    Shapes: dist_* are (N, mics); fxref_* are (N + L - 1, mics, K, R) with
    the first L - 1 rows exactly zero; reference is (N, R).
    """

    dist_virt: np.ndarray
    dist_phys: np.ndarray
    fxref_virt: np.ndarray
    fxref_phys: np.ndarray
    reference: np.ndarray

    @property
    def num_samples(self) -> int:
        return self.dist_phys.shape[0]

    @property
    def control_len(self) -> int:
        return self.fxref_phys.shape[0] - self.num_samples + 1


def white_noise(n: int, seed: int) -> np.ndarray:
    """n standard-normal samples, reproducible for a given seed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return CounterRng(seed).normals(n)


def make_primary_noise(spec: NoiseSpec, fs: float) -> np.ndarray:
    """Generate the bandlimited primary noise described by `spec`."""
    spec.validate(fs)
    bandpass = design_bandpass(spec.filter_order, spec.band_lo_hz, spec.band_hi_hz, fs)
    return fir_filter(bandpass, spec.amplitude * white_noise(spec.num_samples, spec.seed))


def create_reference_signals(paths: PathSet, pri_noise: np.ndarray,
                             geometry: SystemGeometry) -> PrecomputedSignals:
    """Filter the primary noise through every path of the plant.

    Disturbance columns are the noise through the primary paths; the fxref
    tensors are the noise through the secondary paths, shifted down by
    control_len - 1 zero rows.
    """
    violations = validate_paths(paths, geometry)
    if violations:
        raise ValueError("paths inconsistent with geometry: " + "; ".join(violations))

    reference = np.asarray(pri_noise, dtype=np.float64)
    if reference.ndim == 1:
        reference = reference[:, np.newaxis]
    if reference.ndim != 2 or reference.shape[1] != geometry.num_refs:
        raise ValueError(
            f"pri_noise must have {geometry.num_refs} column(s), got shape {reference.shape}"
        )
    n = reference.shape[0]
    left = geometry.control_len - 1
    if n < geometry.control_len:
        raise ValueError(f"need at least control_len={geometry.control_len} samples, got {n}")

    def disturbances(primary: np.ndarray) -> np.ndarray:
        mics = primary.shape[0]
        out = np.zeros((n, mics))
        for m in range(mics):
            for r in range(geometry.num_refs):
                out[:, m] += fir_filter(primary[m, r], reference[:, r])
        return out

    def filtered_refs(secondary: np.ndarray) -> np.ndarray:
        mics = secondary.shape[0]
        out = np.zeros((n + left, mics, geometry.num_sources, geometry.num_refs))
        for m in range(mics):
            for k in range(geometry.num_sources):
                for r in range(geometry.num_refs):
                    out[left:, m, k, r] = fir_filter(secondary[m, k], reference[:, r])
        return out

    return PrecomputedSignals(
        dist_virt=disturbances(paths.primary_virt),
        dist_phys=disturbances(paths.primary_phys),
        fxref_virt=filtered_refs(paths.secondary_virt),
        fxref_phys=filtered_refs(paths.secondary_phys),
        reference=reference,
    )
