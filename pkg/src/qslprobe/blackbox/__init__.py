"""The hidden side: device model, gate library, circuit format, simulator."""

from .backend import SimulatedBackend, submit_job
from .circuit import Circuit, Instruction, RepeatBlock, parse_circuit, repeated_gate_circuit
from .device import DeviceModel, GateSpec, Overheads, default_device, load_device, load_device_file
from .gates import gate_unitary_library

__all__ = [
    "Circuit", "DeviceModel", "GateSpec", "Instruction", "Overheads", "RepeatBlock",
    "SimulatedBackend", "default_device", "gate_unitary_library", "load_device",
    "load_device_file", "parse_circuit", "repeated_gate_circuit", "submit_job",
]
