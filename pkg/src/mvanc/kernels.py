"""Adaptive-filter stages of the two-stage virtual-sensing pipeline.

Stage one trains the control filters against the virtual-microphone
disturbances (filtered-reference LMS across all channels). Stage two
freezes those filters and trains auxiliary filters that model the
remaining physical-microphone residual from the raw reference. The control
stage then re-trains control filters from scratch using only physical
microphones, steering their residual toward the auxiliary-filter output.

All stages process one sample at a time: compute every microphone error
first, then apply every weight update. Runs are strictly sequential and
own their filter state, so results are bit-reproducible; independent runs
can execute concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dsp import fir_filter
from .paths import SystemGeometry
from .signals import PrecomputedSignals


class DivergenceError(RuntimeError):
    """Adaptation produced a non-finite filter coefficient."""

    def __init__(self, sample_index: int, step_name: str):
        super().__init__(
            f"non-finite filter value after sample {sample_index}; "
            f"reduce {step_name} and rerun"
        )
        self.sample_index = sample_index


@dataclass(frozen=True)
class StageConfig:
    """Step size and sample count for one adaptation run. A zero step size
    freezes the filters (useful for open-loop baselines)."""

    step_size: float
    num_samples: int

    def __post_init__(self):
        if not np.isfinite(self.step_size) or self.step_size < 0:
            raise ValueError("step_size must be finite and >= 0")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")


@dataclass(frozen=True)
class ControlFilterMatrix:
    """Control filters, shape (num_sources, num_refs, control_len)."""

    weights: np.ndarray

    def stacked(self) -> np.ndarray:
        """Per-source view: each row concatenates that source's per-reference
        filters into one (num_refs * control_len) vector."""
        k = self.weights.shape[0]
        return self.weights.reshape(k, -1)


@dataclass(frozen=True)
class AuxiliaryFilterBank:
    """Auxiliary filters, shape (num_phys, num_refs, aux_len)."""

    filters: np.ndarray


@dataclass(frozen=True)
class StageResult:
    """Converged filters plus the per-microphone error trace of one run.

    `errors` has shape (num_mics, num_samples). The control stage also
    carries its virtual-microphone monitoring trace in `monitor_errors`;
    that trace never feeds back into the adaptation.
    """

    filters: ControlFilterMatrix | AuxiliaryFilterBank
    errors: np.ndarray
    monitor_errors: np.ndarray | None = None


def lms_step(state: np.ndarray, window: np.ndarray, error: float,
             step: float) -> np.ndarray:
    """One gradient update: state + step * error * window."""
    state = np.asarray(state, dtype=np.float64)
    window = np.asarray(window, dtype=np.float64)
    if state.shape != window.shape:
        raise ValueError(f"state shape {state.shape} != window shape {window.shape}")
    return state + step * error * window


def _check_pre(pre: PrecomputedSignals, geometry: SystemGeometry,
               cfg: StageConfig) -> None:
    n = pre.num_samples
    expected_virt = (n + geometry.control_len - 1, geometry.num_virt,
                     geometry.num_sources, geometry.num_refs)
    expected_phys = (n + geometry.control_len - 1, geometry.num_phys,
                     geometry.num_sources, geometry.num_refs)
    if pre.fxref_virt.shape != expected_virt or pre.fxref_phys.shape != expected_phys:
        raise ValueError(
            "precomputed signals do not match geometry: fxref shapes "
            f"{pre.fxref_virt.shape} / {pre.fxref_phys.shape}, expected "
            f"{expected_virt} / {expected_phys}"
        )
    if pre.dist_virt.shape != (n, geometry.num_virt) or \
            pre.dist_phys.shape != (n, geometry.num_phys):
        raise ValueError("disturbance arrays do not match geometry")
    if cfg.num_samples > n:
        raise ValueError(
            f"cfg.num_samples={cfg.num_samples} exceeds available samples {n}"
        )


def _initial_weights(geometry: SystemGeometry,
                     initial: ControlFilterMatrix | None) -> np.ndarray:
    shape = (geometry.num_sources, geometry.num_refs, geometry.control_len)
    if initial is None:
        return np.zeros(shape)
    weights = np.asarray(initial.weights, dtype=np.float64)
    if weights.shape != shape:
        raise ValueError(f"initial weights shape {weights.shape}, expected {shape}")
    # Taps are stored reversed internally so the ascending window dot
    # realizes the tapped delay line without per-sample copies.
    return weights[:, :, ::-1].copy()


def _fxlms_loop(dist: np.ndarray, windows: np.ndarray, w_rev: np.ndarray,
                step: float, n_samples: int, step_name: str,
                target: np.ndarray | None = None,
                monitor: tuple[np.ndarray, np.ndarray] | None = None):
    """Shared filtered-reference LMS recursion.

    `windows[n]` is the (mics, K, R, L) block of filtered-reference
    history ending at sample n, ascending in time; `w_rev` holds the
    control filters with taps reversed. When `target` is given the update
    is driven by (error - target[n]) while the recorded trace keeps the
    raw error. `monitor` adds a read-only (dist, windows) pair evaluated
    with the current filters each sample.
    """
    errors = np.empty((dist.shape[1], n_samples))
    monitor_errors = None
    if monitor is not None:
        monitor_errors = np.empty((monitor[0].shape[1], n_samples))
    for n in range(n_samples):
        win = windows[n]
        e = dist[n] - np.einsum("mkrt,krt->m", win, w_rev)
        errors[:, n] = e
        if monitor is not None:
            monitor_errors[:, n] = monitor[0][n] - np.einsum(
                "mkrt,krt->m", monitor[1][n], w_rev)
        if target is not None:
            e = e - target[n]
        w_rev += step * np.einsum("m,mkrt->krt", e, win)
        if not np.isfinite(w_rev).all():
            raise DivergenceError(n, step_name)
    return errors, monitor_errors


def tune_control_filters(pre: PrecomputedSignals, geometry: SystemGeometry,
                         cfg: StageConfig,
                         initial: ControlFilterMatrix | None = None) -> StageResult:
    """Stage one: adapt control filters against the virtual microphones.

    Per sample, the virtual errors are the disturbances minus the filtered
    references passed through the current filters; each filter then moves
    along the sum of its filtered-reference window weighted by every
    virtual error. `initial` is a testing hook; production runs start from
    zero.
    """
    _check_pre(pre, geometry, cfg)
    w_rev = _initial_weights(geometry, initial)
    windows = sliding_window_view(pre.fxref_virt, geometry.control_len, axis=0)
    errors, _ = _fxlms_loop(pre.dist_virt, windows, w_rev, cfg.step_size,
                            cfg.num_samples, "the tuning step size")
    return StageResult(ControlFilterMatrix(w_rev[:, :, ::-1].copy()), errors)


def physical_residual(pre: PrecomputedSignals, control: ControlFilterMatrix,
                      geometry: SystemGeometry) -> np.ndarray:
    """Physical-microphone error (N, num_phys) under frozen control filters."""
    weights = np.asarray(control.weights, dtype=np.float64)
    expected = (geometry.num_sources, geometry.num_refs, geometry.control_len)
    if weights.shape != expected:
        raise ValueError(f"control weights shape {weights.shape}, expected {expected}")
    n = pre.num_samples
    left = geometry.control_len - 1
    anti = np.zeros((n, geometry.num_phys))
    for m in range(geometry.num_phys):
        for k in range(geometry.num_sources):
            for r in range(geometry.num_refs):
                anti[:, m] += fir_filter(weights[k, r],
                                         pre.fxref_phys[:, m, k, r])[left:]
    return pre.dist_phys - anti


def train_auxiliary_filters(pre: PrecomputedSignals, control: ControlFilterMatrix,
                            geometry: SystemGeometry,
                            cfg: StageConfig) -> StageResult:
    """Stage two: model the physical residual from the raw reference.

    The control filters stay frozen; each physical microphone gets one
    adaptive filter per reference, driven by plain LMS on the residual
    left after the frozen controller acts.
    """
    _check_pre(pre, geometry, cfg)
    residual = physical_residual(pre, control, geometry)

    nh = geometry.aux_len
    padded = np.vstack([np.zeros((nh - 1, geometry.num_refs)), pre.reference])
    windows = sliding_window_view(padded, nh, axis=0)  # (N, R, Nh) ascending
    h_rev = np.zeros((geometry.num_phys, geometry.num_refs, nh))
    errors = np.empty((geometry.num_phys, cfg.num_samples))
    step = cfg.step_size
    for n in range(cfg.num_samples):
        win = windows[n]
        e_h = residual[n] - np.einsum("rt,mrt->m", win, h_rev)
        errors[:, n] = e_h
        h_rev += step * e_h[:, np.newaxis, np.newaxis] * win[np.newaxis, :, :]
        if not np.isfinite(h_rev).all():
            raise DivergenceError(n, "the auxiliary step size")
    return StageResult(AuxiliaryFilterBank(h_rev[:, :, ::-1].copy()), errors)


def run_control_stage(pre: PrecomputedSignals, aux: AuxiliaryFilterBank,
                      geometry: SystemGeometry, cfg: StageConfig,
                      initial: ControlFilterMatrix | None = None) -> StageResult:
    """Control stage: re-train control filters without virtual microphones.

    The adaptation error is the physical residual minus the auxiliary
    filters' response to the reference, so the physical microphones are
    steered toward the residual pattern that produced silence at the
    virtual positions. Virtual errors are recorded for monitoring only.
    """
    _check_pre(pre, geometry, cfg)
    filters = np.asarray(aux.filters, dtype=np.float64)
    expected = (geometry.num_phys, geometry.num_refs, geometry.aux_len)
    if filters.shape != expected:
        raise ValueError(f"auxiliary filters shape {filters.shape}, expected {expected}")

    target = np.zeros((pre.num_samples, geometry.num_phys))
    for m in range(geometry.num_phys):
        for r in range(geometry.num_refs):
            target[:, m] += fir_filter(filters[m, r], pre.reference[:, r])

    w_rev = _initial_weights(geometry, initial)
    win_phys = sliding_window_view(pre.fxref_phys, geometry.control_len, axis=0)
    win_virt = sliding_window_view(pre.fxref_virt, geometry.control_len, axis=0)
    errors, monitor_errors = _fxlms_loop(
        pre.dist_phys, win_phys, w_rev, cfg.step_size, cfg.num_samples,
        "the control step size", target=target,
        monitor=(pre.dist_virt, win_virt))
    return StageResult(ControlFilterMatrix(w_rev[:, :, ::-1].copy()),
                       errors, monitor_errors)
