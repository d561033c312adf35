"""Acoustic plant model: primary and secondary path impulse responses.

A PathSet holds FIR impulse responses for the four path groups of a
virtual-sensing layout: noise source to physical/virtual microphones
(primary) and secondary sources to physical/virtual microphones
(secondary). Sets can be synthesized from a seed or loaded from the
portable ``MVANC-PATHS v1`` text format. PathSet arrays are frozen after
construction, so instances can be shared across threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

import numpy as np

from .rng import CounterRng

_FORMAT_TAG = "MVANC-PATHS"
_FORMAT_VERSION = "v1"
_GROUP_ORDER = ("primary_phys", "primary_virt", "secondary_phys", "secondary_virt")


class PathFormatError(ValueError):
    """Raised when a path file cannot be parsed or contradicts its header."""


@dataclass(frozen=True)
class SystemGeometry:
    """Channel counts and filter lengths of one R x K x Mp x Mv system."""

    num_refs: int
    num_sources: int
    num_phys: int
    num_virt: int
    control_len: int
    aux_len: int

    def __post_init__(self):
        for name in ("num_refs", "num_sources", "num_phys", "num_virt",
                     "control_len", "aux_len"):
            value = getattr(self, name)
            if value != int(value) or int(value) < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
            object.__setattr__(self, name, int(value))


@dataclass(frozen=True)
class PathSet:
    """Impulse responses per (microphone, source) pair, one 3-D array per group.

    Shapes: primary groups are (mics, num_refs, primary_len); secondary
    groups are (mics, num_sources, secondary_len).
    """

    primary_phys: np.ndarray
    primary_virt: np.ndarray
    secondary_phys: np.ndarray
    secondary_virt: np.ndarray

    def __post_init__(self):
        for field in fields(self):
            arr = np.array(getattr(self, field.name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, field.name, arr)

    def __eq__(self, other):
        if not isinstance(other, PathSet):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name))
            for f in fields(self)
        )


def synth_paths(geometry: SystemGeometry, primary_len: int, secondary_len: int,
                seed: int) -> PathSet:
    """Synthesize a random but reproducible acoustic plant.

    Each response is Gaussian noise shaped by an exponential decay envelope
    exp(-n / tau) with tau = length / 4, preceded by a seeded pure delay of
    1..8 samples, and normalized to unit energy. Physical and virtual
    microphones at the same index share the same delay so the two sets stay
    time-aligned while their tap values remain independent.
    """
    if primary_len < 1 or secondary_len < 1:
        raise ValueError("path lengths must be >= 1")
    rng = CounterRng(seed)

    mics_max = max(geometry.num_phys, geometry.num_virt)
    delays_primary = _draw_delays(rng, mics_max, geometry.num_refs)
    delays_secondary = _draw_delays(rng, mics_max, geometry.num_sources)

    return PathSet(
        primary_phys=_synth_group(rng, geometry.num_phys, geometry.num_refs,
                                  primary_len, delays_primary),
        primary_virt=_synth_group(rng, geometry.num_virt, geometry.num_refs,
                                  primary_len, delays_primary),
        secondary_phys=_synth_group(rng, geometry.num_phys, geometry.num_sources,
                                    secondary_len, delays_secondary),
        secondary_virt=_synth_group(rng, geometry.num_virt, geometry.num_sources,
                                    secondary_len, delays_secondary),
    )


def _draw_delays(rng: CounterRng, rows: int, cols: int) -> np.ndarray:
    return (1 + np.floor(rng.uniforms(rows * cols) * 8.0)).astype(int).reshape(rows, cols)


def _synth_group(rng: CounterRng, mics: int, sources: int, length: int,
                 delays: np.ndarray) -> np.ndarray:
    tau = length / 4.0
    group = np.zeros((mics, sources, length))
    for m in range(mics):
        for s in range(sources):
            # Keep at least one live tap even for very short responses.
            delay = min(int(delays[m, s]), length - 1)
            body = length - delay
            taps = rng.normals(body) * np.exp(-np.arange(body) / tau)
            group[m, s, delay:] = taps / np.sqrt(np.sum(taps * taps))
    return group


def validate_paths(paths: PathSet, geometry: SystemGeometry) -> list[str]:
    """Return a list of violation descriptions; empty means consistent."""
    expected = {
        "primary_phys": (geometry.num_phys, geometry.num_refs),
        "primary_virt": (geometry.num_virt, geometry.num_refs),
        "secondary_phys": (geometry.num_phys, geometry.num_sources),
        "secondary_virt": (geometry.num_virt, geometry.num_sources),
    }
    violations = []
    for group in _GROUP_ORDER:
        arr = getattr(paths, group)
        mics, sources = expected[group]
        if arr.ndim != 3 or arr.shape[0] != mics or arr.shape[1] != sources:
            violations.append(
                f"{group}: expected shape ({mics}, {sources}, taps), got {arr.shape}"
            )
            continue
        if arr.shape[2] < 1:
            violations.append(f"{group}: responses must have at least one tap")
            continue
        finite = np.isfinite(arr).all(axis=2)
        for m, s in np.argwhere(~finite):
            violations.append(f"{group}: non-finite tap at mic {m}, source {s}")
    return violations


def save_paths(paths: PathSet, destination) -> None:
    """Write a PathSet in the MVANC-PATHS v1 text format (lossless)."""
    shapes = {g: getattr(paths, g).shape for g in _GROUP_ORDER}
    for group, shape in shapes.items():
        if len(shape) != 3:
            raise PathFormatError(f"{group}: expected a 3-D array, got shape {shape}")
    mp, r, lp = shapes["primary_phys"]
    mv = shapes["primary_virt"][0]
    k, ls = shapes["secondary_phys"][1], shapes["secondary_phys"][2]
    expected = {
        "primary_phys": (mp, r, lp),
        "primary_virt": (mv, r, lp),
        "secondary_phys": (mp, k, ls),
        "secondary_virt": (mv, k, ls),
    }
    for group, shape in shapes.items():
        if shape != expected[group]:
            raise PathFormatError(
                f"{group}: shape {shape} inconsistent with the other groups"
            )

    lines = [f"{_FORMAT_TAG} {_FORMAT_VERSION} {r} {k} {mp} {mv} {lp} {ls}"]
    for group in _GROUP_ORDER:
        lines.append(group)
        arr = getattr(paths, group)
        for m in range(arr.shape[0]):
            for s in range(arr.shape[1]):
                lines.append(",".join(f"{v:.17g}" for v in arr[m, s]))
    with open(os.fspath(destination), "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_paths(source) -> PathSet:
    """Read a PathSet from the MVANC-PATHS v1 text format."""
    with open(os.fspath(source), "r", encoding="ascii") as fh:
        lines = [line.rstrip("\n") for line in fh]
    lines = [line for line in lines if line.strip() != ""]
    if not lines:
        raise PathFormatError("empty path file")

    header = lines[0].split()
    if len(header) != 8 or header[0] != _FORMAT_TAG or header[1] != _FORMAT_VERSION:
        raise PathFormatError(
            f"header: expected '{_FORMAT_TAG} {_FORMAT_VERSION} R K Mp Mv Lp Ls', got {lines[0]!r}"
        )
    try:
        r, k, mp, mv, lp, ls = (int(tok) for tok in header[2:])
    except ValueError as exc:
        raise PathFormatError(f"header: non-integer dimension in {lines[0]!r}") from exc
    for name, value in zip(("R", "K", "Mp", "Mv", "Lp", "Ls"), (r, k, mp, mv, lp, ls)):
        if value < 1:
            raise PathFormatError(f"header: {name} must be >= 1, got {value}")

    layout = {
        "primary_phys": (mp, r, lp),
        "primary_virt": (mv, r, lp),
        "secondary_phys": (mp, k, ls),
        "secondary_virt": (mv, k, ls),
    }
    groups = {}
    cursor = 1
    for group in _GROUP_ORDER:
        mics, sources, taps = layout[group]
        if cursor >= len(lines) or lines[cursor].strip() != group:
            found = lines[cursor].strip() if cursor < len(lines) else "end of file"
            raise PathFormatError(f"{group}: expected block label, found {found!r}")
        cursor += 1
        rows = mics * sources
        if cursor + rows > len(lines):
            raise PathFormatError(
                f"{group}: expected {rows} rows, found {len(lines) - cursor}"
            )
        block = np.empty((mics, sources, taps))
        for i in range(rows):
            cells = lines[cursor + i].split(",")
            if len(cells) != taps:
                raise PathFormatError(
                    f"{group}: row {i} has {len(cells)} taps, header says {taps}"
                )
            try:
                values = np.array([float(c) for c in cells])
            except ValueError as exc:
                raise PathFormatError(f"{group}: row {i} has a non-numeric tap") from exc
            if not np.isfinite(values).all():
                raise PathFormatError(f"{group}: row {i} has a non-finite tap")
            block[i // sources, i % sources] = values
        cursor += rows
        groups[group] = block
    if cursor != len(lines):
        raise PathFormatError(f"trailing content after {_GROUP_ORDER[-1]} block")
    return PathSet(**groups)
