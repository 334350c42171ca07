"""Hidden device model: gate drives, durations, connectivity, overheads.

A device is described by an INI-style config file (one file per device):

``[device]``
    ``name``, ``n_qubits``, ``coupling`` (comma list of ``a-b`` edges),
    ``levels`` (2, or 3 to carry an idle third level per qubit).
``[overheads]``
    ``t_init``, ``t_meas``, ``per_circuit``, ``per_job``, ``jitter_stddev``,
    ``time_resolution``.
``[gate NAME]``
    ``virtual`` (zero-duration phase-frame gate), ``duration``, ``shape``
    (``square``, ``gaussian`` or ``two-segment``), optional
    ``rabi_frequency`` (peak Omega/2pi; calibrated to a pi-area pulse when
    absent), ``sigma_fraction`` and ``segment_ratio`` for the envelopes,
    ``variant.<pattern> = <duration>`` for three-qubit connectivity
    patterns and ``decomposition[.<pattern>]`` naming native gates.  A
    variant without an explicit duration takes the summed durations of
    its decomposition.

Nothing in this module is visible through the job interface.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy.special import erf

from ..constants import HBAR
from ..dynamics import HamiltonianTrajectory, propagate
from ..errors import ConnectivityError, DeviceConfigError, GateRealizationMismatch, UnknownGate
from .gates import (
    canonical_name,
    computational_indices,
    drive_generator,
    extend_levels,
    extend_unitary,
    gate_arity,
    gate_unitary_library,
    phase_fidelity,
)

DEFAULT_CONFIG_NAME = "ibm-torino-like.cfg"
REALIZATION_TOL = 1e-6
VALIDATION_STEPS = 256

SHAPES = ("square", "gaussian", "two-segment")
PATTERNS_3Q = ("full", "linear-target-middle", "linear-target-end")

_UNITS = {
    "s": "1", "ms": "1e-3", "us": "1e-6", "µs": "1e-6", "ns": "1e-9", "ps": "1e-12",
    "hz": "1", "khz": "1e3", "mhz": "1e6", "ghz": "1e9",
}
_QUANTITY = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Zµ]*)\s*$")


def parse_quantity(text: str) -> float:
    m = _QUANTITY.match(text)
    if not m:
        raise DeviceConfigError(f"cannot parse quantity {text!r}")
    unit = m.group(2).lower()
    if unit and unit not in _UNITS:
        raise DeviceConfigError(f"unknown unit {m.group(2)!r} in {text!r}")
    try:
        # decimal arithmetic so that "500 ns" is exactly the float 5e-07
        value = Decimal(m.group(1)) * Decimal(_UNITS.get(unit, "1"))
    except InvalidOperation:
        raise DeviceConfigError(f"cannot parse quantity {text!r}") from None
    return float(value)


@dataclass(frozen=True)
class Overheads:
    t_init: float = 100e-6
    t_meas: float = 300e-6
    per_circuit: float = 0.0
    per_job: float = 5.0
    jitter_stddev: float = 0.5
    time_resolution: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value >= 0:
                raise DeviceConfigError(f"overhead {name} must be nonnegative")


def envelope(shape: str, duration: float, *, sigma_fraction: float = 0.25,
             segment_ratio: float = 0.5) -> tuple[Callable[[float], float], float]:
    """Unit-peak pulse envelope on ``[0, duration]`` and its exact area."""
    T = duration
    if shape == "square":
        return (lambda t: 1.0), T
    if shape == "two-segment":
        r = segment_ratio
        return (lambda t: 1.0 if t < 0.5 * T else r), 0.5 * T * (1.0 + r)
    if shape == "gaussian":
        sigma = sigma_fraction * T
        edge = math.exp(-0.5 * (0.5 * T / sigma) ** 2)
        norm = 1.0 - edge

        def env(t):
            return (math.exp(-0.5 * ((t - 0.5 * T) / sigma) ** 2) - edge) / norm

        gauss_area = sigma * math.sqrt(2 * math.pi) * erf(0.5 * T / (sigma * math.sqrt(2)))
        return env, (gauss_area - T * edge) / norm
    raise DeviceConfigError(f"unknown pulse shape {shape!r}; expected one of {SHAPES}")


def build_drive(generator: np.ndarray, shape: str, duration: float, omega_peak: float, *,
                hbar: float = HBAR, **shape_args) -> HamiltonianTrajectory:
    """``H(t) = hbar * omega_peak * envelope(t) * generator``."""
    env, _ = envelope(shape, duration, **shape_args)
    G = np.asarray(generator, dtype=complex)
    scale = hbar * omega_peak
    return HamiltonianTrajectory(
        G.shape[0], duration, lambda t: (scale * env(t)) * G,
        smoothness="smooth" if shape == "gaussian" else "piecewise-constant",
        time_independent=(shape == "square"))


@dataclass(frozen=True)
class GateVariant:
    pattern: str
    duration: float
    drive: HamiltonianTrajectory | None = field(default=None, repr=False)
    decomposition: tuple[str, ...] = ()


@dataclass(frozen=True)
class GateSpec:
    name: str
    arity: int
    unitary: np.ndarray = field(repr=False)
    virtual: bool
    shape: str | None
    variants: Mapping[str, GateVariant]

    @property
    def duration(self) -> float:
        """Shortest duration over connectivity variants."""
        return min(v.duration for v in self.variants.values())

    @property
    def drive(self) -> HamiltonianTrajectory | None:
        return min(self.variants.values(), key=lambda v: v.duration).drive


@dataclass(frozen=True)
class DeviceModel:
    name: str
    n_qubits: int
    levels: int
    coupling: frozenset
    gates: Mapping[str, GateSpec]
    overheads: Overheads

    def connected(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.coupling

    def connectivity_pattern(self, qubits) -> str:
        qubits = tuple(qubits)
        if len(qubits) <= 1:
            return "default"
        if len(qubits) == 2:
            if not self.connected(*qubits):
                raise ConnectivityError(f"qubits {qubits} are not coupled")
            return "default"
        edges = [(a, b) for i, a in enumerate(qubits) for b in qubits[i + 1:]
                 if self.connected(a, b)]
        if len(edges) == 3:
            return "full"
        if len(edges) == 2:
            degree = {q: sum(q in e for e in edges) for q in qubits}
            return "linear-target-middle" if degree[qubits[-1]] == 2 else "linear-target-end"
        raise ConnectivityError(f"qubits {qubits} are not connected")

    def gate(self, name: str) -> GateSpec:
        try:
            key = canonical_name(name)
        except UnknownGate:
            raise UnknownGate(f"device {self.name!r} has no gate {name!r}") from None
        if key not in self.gates:
            raise UnknownGate(f"device {self.name!r} has no gate {name!r}")
        return self.gates[key]

    def variant(self, name: str, qubits) -> GateVariant:
        spec = self.gate(name)
        if spec.virtual or spec.arity < 3:
            if spec.arity == 2:
                self.connectivity_pattern(qubits)
            return spec.variants["default"]
        pattern = self.connectivity_pattern(qubits)
        if pattern not in spec.variants:
            raise ConnectivityError(
                f"gate {spec.name} has no variant for {pattern} qubits {tuple(qubits)}")
        return spec.variants[pattern]

    def gate_duration(self, name: str, qubits) -> float:
        return self.variant(name, qubits).duration

    def with_overheads(self, **changes) -> "DeviceModel":
        return replace(self, overheads=replace(self.overheads, **changes))


def _check_realization(name, variant, target, arity, levels, steps):
    # Only the computational block matters: idle upper levels may pick up
    # a different phase without affecting any qubit observable.
    drive = variant.drive
    U = propagate(drive, np.eye(drive.dim)[0], steps).final_unitary
    idx = np.ix_(*(computational_indices(arity, levels),) * 2)
    fid = phase_fidelity(target[idx], U[idx])
    if 1.0 - fid > REALIZATION_TOL:
        raise GateRealizationMismatch(name, fid)


def _coupling(text: str, n_qubits: int) -> frozenset:
    edges = set()
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            a, b = (int(x) for x in item.split("-"))
        except ValueError:
            raise DeviceConfigError(f"bad coupling edge {item!r}") from None
        if a == b or not (0 <= a < n_qubits and 0 <= b < n_qubits):
            raise DeviceConfigError(f"coupling edge {item!r} out of range")
        edges.add(frozenset((a, b)))
    return frozenset(edges)


def _gate_spec(section, name, levels, durations, validate, steps) -> GateSpec:
    try:
        key = canonical_name(name)
    except UnknownGate:
        raise UnknownGate(f"config declares unknown gate {name!r}") from None
    arity = gate_arity(key)
    if "arity" in section and int(section["arity"]) != arity:
        raise DeviceConfigError(f"gate {key} has arity {arity}, config says {section['arity']}")
    unitary = extend_unitary(gate_unitary_library(key), arity, levels)
    virtual = section.getboolean("virtual", fallback=False)
    if virtual:
        if "duration" in section and parse_quantity(section["duration"]) != 0:
            raise DeviceConfigError(f"virtual gate {key} must have duration 0")
        return GateSpec(key, arity, unitary, True, None,
                        {"default": GateVariant("default", 0.0)})

    shape = section.get("shape", "square")
    shape_args = {}
    if "sigma_fraction" in section:
        shape_args["sigma_fraction"] = float(section["sigma_fraction"])
    if "segment_ratio" in section:
        shape_args["segment_ratio"] = float(section["segment_ratio"])

    def decomposition(pattern):
        text = section.get(f"decomposition.{pattern}", section.get("decomposition", ""))
        return tuple(canonical_name(g) for g in text.split())

    def summed(pattern):
        parts = decomposition(pattern)
        missing = [g for g in parts if g not in durations]
        if not parts or missing:
            raise DeviceConfigError(
                f"gate {key} ({pattern}) needs a duration or a decomposition into "
                f"previously declared gates")
        return sum(durations[g] for g in parts)

    patterns = {"default" if arity < 3 else "full": section.get("duration")}
    for opt in section:
        if opt.startswith("variant."):
            pattern = opt.split(".", 1)[1]
            if arity < 3 or pattern not in PATTERNS_3Q:
                raise DeviceConfigError(f"gate {key}: unsupported variant {pattern!r}")
            patterns[pattern] = section[opt]

    generator = extend_levels(drive_generator(key), arity, levels)
    variants = {}
    for pattern, text in patterns.items():
        duration = parse_quantity(text) if text else summed(pattern)
        if not duration > 0:
            raise DeviceConfigError(f"physical gate {key} needs a positive duration")
        _, area = envelope(shape, duration, **shape_args)
        if "rabi_frequency" in section:
            omega = 2 * math.pi * parse_quantity(section["rabi_frequency"])
        else:
            omega = math.pi / area
        drive = build_drive(generator, shape, duration, omega, **shape_args)
        variant = GateVariant(pattern, duration, drive, decomposition(pattern))
        if validate:
            _check_realization(key, variant, unitary, arity, levels, steps)
        variants[pattern] = variant
    return GateSpec(key, arity, unitary, False, shape, variants)


def load_device(config: str, *, validate: bool = True,
                steps: int = VALIDATION_STEPS) -> DeviceModel:
    """Build a :class:`DeviceModel` from config text.

    Every physical gate's drive is propagated once and compared with the
    gate unitary; a phase-insensitive infidelity above ``1e-6`` raises
    :class:`GateRealizationMismatch`.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(config)
    except configparser.Error as exc:
        raise DeviceConfigError(str(exc)) from None
    if not cp.has_section("device"):
        raise DeviceConfigError("config lacks a [device] section")
    dev = cp["device"]
    try:
        n_qubits = int(dev.get("n_qubits", "1"))
        levels = int(dev.get("levels", "2"))
    except ValueError as exc:
        raise DeviceConfigError(str(exc)) from None
    if n_qubits < 1:
        raise DeviceConfigError("n_qubits must be positive")
    if levels not in (2, 3):
        raise DeviceConfigError("levels must be 2 or 3")
    coupling = _coupling(dev.get("coupling", ""), n_qubits)

    oh = {}
    if cp.has_section("overheads"):
        for key, text in cp["overheads"].items():
            if key not in Overheads.__dataclass_fields__:
                raise DeviceConfigError(f"unknown overhead {key!r}")
            oh[key] = parse_quantity(text)
    overheads = Overheads(**oh)

    gates: dict[str, GateSpec] = {}
    durations: dict[str, float] = {}
    for section_name in cp.sections():
        if not section_name.startswith("gate "):
            if section_name not in ("device", "overheads"):
                raise DeviceConfigError(f"unknown section [{section_name}]")
            continue
        spec = _gate_spec(cp[section_name], section_name[5:].strip(), levels,
                          durations, validate, steps)
        if spec.name in gates:
            raise DeviceConfigError(f"gate {spec.name} declared twice")
        if spec.arity > n_qubits:
            raise DeviceConfigError(f"gate {spec.name} needs {spec.arity} qubits")
        gates[spec.name] = spec
        durations[spec.name] = spec.duration
    return DeviceModel(dev.get("name", "device"), n_qubits, levels, coupling, gates, overheads)


def default_config_text() -> str:
    return resources.files(__package__).joinpath(DEFAULT_CONFIG_NAME).read_text()


def load_device_file(path) -> DeviceModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DeviceConfigError(f"cannot read device config {path}: {exc}") from None
    return load_device(text)


def default_device() -> DeviceModel:
    return load_device(default_config_text())
