"""Circuit text format.

Line-based, whitespace-insensitive, ``#`` starts a comment::

    qubits 2
    CZ q0 q1
    repeat 100000 { X q0 }
    repeat 3 {
        H q0
        CNOT q0 q1
    }

``;`` separates statements on one line.  Repeat blocks do not nest.
Measurement of every qubit is implicit at the end of the circuit.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Union

from ..errors import BadIndex, CircuitSyntaxError, UnknownGate
from .gates import canonical_name, gate_arity

_QUBIT = re.compile(r"^q(\d+)$")
_REPEAT = re.compile(r"^repeat\s+(\S+)\s*\{(.*)$")


@dataclass(frozen=True)
class Instruction:
    gate: str
    qubits: tuple[int, ...]
    repeat: int = 1

    def to_text(self) -> str:
        text = " ".join([self.gate] + [f"q{q}" for q in self.qubits])
        return text if self.repeat == 1 else f"repeat {self.repeat} {{ {text} }}"


@dataclass(frozen=True)
class RepeatBlock:
    body: tuple[Instruction, ...]
    repeat: int

    def to_text(self) -> str:
        inner = "; ".join(i.to_text() for i in self.body)
        return f"repeat {self.repeat} {{ {inner} }}"


Item = Union[Instruction, RepeatBlock]


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    instructions: tuple[Item, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise BadIndex("a circuit needs at least one qubit")
        for item in self.instructions:
            body = item.body if isinstance(item, RepeatBlock) else (item,)
            if item.repeat < 1:
                raise CircuitSyntaxError("repeat count must be at least 1")
            for ins in body:
                if ins.repeat < 1:
                    raise CircuitSyntaxError("repeat count must be at least 1")
                if ins is not item and ins.repeat != 1:
                    raise CircuitSyntaxError("repeat blocks cannot nest")
                if any(q < 0 or q >= self.n_qubits for q in ins.qubits):
                    raise BadIndex(f"{ins.gate} addresses a qubit outside 0..{self.n_qubits - 1}")

    def applications(self) -> Counter:
        """Total applications per ``(gate, qubits)``."""
        counts: Counter = Counter()
        for item in self.instructions:
            if isinstance(item, RepeatBlock):
                for ins in item.body:
                    counts[(ins.gate, ins.qubits)] += item.repeat * ins.repeat
            else:
                counts[(item.gate, item.qubits)] += item.repeat
        return counts

    def to_text(self) -> str:
        lines = [f"qubits {self.n_qubits}"]
        lines += [item.to_text() for item in self.instructions]
        return "\n".join(lines) + "\n"


def repeated_gate_circuit(gate: str, qubits, n_gate: int, n_qubits: int | None = None) -> Circuit:
    """``n_gate`` back-to-back applications of one gate (empty when 0)."""
    qubits = tuple(qubits)
    n = n_qubits if n_qubits is not None else max(qubits) + 1
    if n_gate < 0:
        raise CircuitSyntaxError("gate count must be nonnegative")
    items = (Instruction(canonical_name(gate), qubits, n_gate),) if n_gate else ()
    return Circuit(n, items)


def _parse_count(token: str, lineno: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise CircuitSyntaxError(f"bad repeat count {token!r}", lineno) from None
    if value != int(value) or value < 1:
        raise CircuitSyntaxError(f"repeat count must be a positive integer, got {token!r}", lineno)
    return int(value)


def _parse_instruction(stmt: str, n_qubits: int, lineno: int) -> Instruction:
    tokens = stmt.split()
    try:
        gate = canonical_name(tokens[0])
    except UnknownGate:
        raise UnknownGate(f"unknown gate {tokens[0]!r}", lineno) from None
    qubits = []
    for tok in tokens[1:]:
        m = _QUBIT.match(tok)
        if not m:
            raise CircuitSyntaxError(f"expected a qubit like q0, got {tok!r}", lineno)
        q = int(m.group(1))
        if q >= n_qubits:
            raise BadIndex(f"qubit q{q} outside a {n_qubits}-qubit circuit", lineno)
        qubits.append(q)
    if len(set(qubits)) != len(qubits):
        raise BadIndex(f"{gate} repeats a qubit", lineno)
    if len(qubits) != gate_arity(gate):
        raise CircuitSyntaxError(
            f"{gate} takes {gate_arity(gate)} qubit(s), got {len(qubits)}", lineno)
    return Instruction(gate, tuple(qubits))


def parse_circuit(text: str) -> Circuit:
    """Parse the circuit text format; errors carry 1-based line numbers."""
    n_qubits = None
    items: list[Item] = []
    block: list[Instruction] | None = None
    block_count = 0
    block_line = 0

    def close_block():
        nonlocal block
        if block:
            items.append(RepeatBlock(tuple(block), block_count)
                         if len(block) > 1 else
                         Instruction(block[0].gate, block[0].qubits, block_count))
        block = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        statements = [s.strip() for s in line.split(";")]
        for stmt in statements:
            while stmt:
                if block is not None:
                    if "{" in stmt:
                        raise CircuitSyntaxError("repeat blocks cannot nest", lineno)
                    head, sep, tail = stmt.partition("}")
                    head = head.strip()
                    if head:
                        if head.startswith("repeat"):
                            raise CircuitSyntaxError("repeat blocks cannot nest", lineno)
                        block.append(_parse_instruction(head, n_qubits, lineno))
                    if sep:
                        close_block()
                    stmt = tail.strip()
                    continue
                if stmt.startswith("qubits"):
                    parts = stmt.split()
                    if n_qubits is not None:
                        raise CircuitSyntaxError("qubit count declared twice", lineno)
                    if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                        raise CircuitSyntaxError("expected 'qubits <n>'", lineno)
                    n_qubits = int(parts[1])
                    stmt = ""
                    continue
                if n_qubits is None:
                    raise CircuitSyntaxError("'qubits <n>' must come first", lineno)
                if stmt.startswith("repeat"):
                    m = _REPEAT.match(stmt)
                    if not m:
                        raise CircuitSyntaxError("expected 'repeat <m> { ... }'", lineno)
                    block_count = _parse_count(m.group(1), lineno)
                    block, block_line = [], lineno
                    stmt = m.group(2).strip()
                    continue
                if "}" in stmt or "{" in stmt:
                    raise CircuitSyntaxError("unbalanced brace", lineno)
                items.append(_parse_instruction(stmt, n_qubits, lineno))
                stmt = ""
    if block is not None:
        raise CircuitSyntaxError("unterminated repeat block", block_line)
    if n_qubits is None:
        raise CircuitSyntaxError("missing 'qubits <n>' declaration", 1)
    return Circuit(n_qubits, tuple(items))
