"""Line-oriented text format for circuits, systems and promises.

::

    # two coins for a (1/3, 2/3) promise
    qubits 1
    circuit high
      gate RY(1.9106332362490186) 0
    end
    circuit low
      gate RY(1.2309594173407747) 0
    end
    input basis 0
    projector qubit 0 outcome 1
    promise 0.33333333333333331 0.66666666666666663

Inside ``circuit``: ``gate NAME[(p, ...)] q ...``, ``matrix q ... <grid>`` and
``blackbox NAME q ... [dagger]`` (calls a circuit defined earlier). Grids are
JSON lists of ``[re, im]`` pairs. Top level also accepts ``input amplitudes
<list>``, ``projector matrix <grid>``, ``input-length N`` and ``members x ...``
(bitstrings) for derandomization fixtures.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import statekit as sk
from .errors import DimensionError, ExactAmpError
from .systems import Measurement2, QuantumSystem, SeparablePromise


class ParseError(ExactAmpError):
    def __init__(self, message, path=None, line=None):
        self.path, self.line = path, line
        where = f"{path or '<string>'}:{line}: " if line is not None else f"{path or '<string>'}: "
        super().__init__(where + message)


@dataclass(eq=False)
class ProblemFile:
    qubits: int
    circuits: dict = field(default_factory=dict)
    input: np.ndarray | None = None
    projector: sk.Projector | None = None
    promise: SeparablePromise | None = None
    input_length: int | None = None
    members: tuple = ()
    path: str | None = None

    def called(self) -> set:
        return {s for c in self.circuits.values() for s in c.slots()}

    def top_level(self) -> list[str]:
        """Circuits not called as a black box by another circuit."""
        used = self.called()
        return [name for name in self.circuits if name not in used]

    def bindings_for(self, name: str) -> dict:
        """Slot bindings reachable from circuit ``name``."""
        out, todo = {}, list(self.circuits[name].slots())
        while todo:
            s = todo.pop()
            if s not in out:
                out[s] = self.circuits[s]
                todo.extend(self.circuits[s].slots())
        return out

    def system(self, name: str) -> QuantumSystem:
        if self.input is None or self.projector is None:
            raise ParseError("a system needs both 'input' and 'projector'", self.path)
        return QuantumSystem(self.input, self.circuits[name], Measurement2(self.projector),
                             self.bindings_for(name))


# ---------------------------------------------------------------- numbers


def fmt(x: float) -> str:
    """17 significant digits: enough for every double to read back bit for bit."""
    return f"{float(x):.17g}"


def _complex_grid(obj, where):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad complex grid: {e}", *where) from None
    if arr.shape[-1:] != (2,):
        raise ParseError("complex entries must be [re, im] pairs", *where)
    return arr[..., 0] + 1j * arr[..., 1]


def _grid_text(arr) -> str:
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 1:
        return "[" + ", ".join(f"[{fmt(z.real)}, {fmt(z.imag)}]" for z in arr) + "]"
    return "[" + ", ".join(_grid_text(row) for row in arr) + "]"


def _json_tail(text, where):
    i = text.find("[")
    if i < 0:
        raise ParseError("expected a [..] grid", *where)
    try:
        return text[:i].split(), json.loads(text[i:])
    except json.JSONDecodeError as e:
        raise ParseError(f"bad grid: {e.msg}", *where) from None


def _ints(tokens, where, what="qubit"):
    try:
        return tuple(int(t) for t in tokens)
    except ValueError:
        raise ParseError(f"expected {what} indices, got {' '.join(tokens)!r}", *where) from None


def _float(tok, where):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", *where) from None


_GATE = re.compile(r"^([A-Za-z_]+)(?:\(([^)]*)\))?$")


# ---------------------------------------------------------------- parse


def loads(text: str, path: str | None = None) -> ProblemFile:
    pf = None
    current = None  # (name, n, ops, start_line)
    for lineno, raw in enumerate(text.splitlines(), 1):
        where = (path, lineno)
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if pf is None and head != "qubits":
            raise ParseError("file must start with 'qubits N'", *where)
        try:
            if current is not None:
                current = _circuit_line(pf, current, head, rest, where)
                continue
            pf = _top_line(pf, head, rest, where, path)
            if head == "circuit":
                name = rest.split()[0] if rest else ""
                if not name or len(rest.split()) > 2:
                    raise ParseError("usage: circuit NAME [QUBITS]", *where)
                if name in pf.circuits:
                    raise ParseError(f"circuit {name!r} defined twice", *where)
                n = _ints(rest.split()[1:], where)[0] if len(rest.split()) == 2 else pf.qubits
                current = (name, n, [], lineno)
        except ParseError:
            raise
        except (DimensionError, ValueError, ExactAmpError) as e:
            raise ParseError(str(e), *where) from None
    if pf is None:
        raise ParseError("empty file", path)
    if current is not None:
        raise ParseError(f"circuit {current[0]!r} is missing 'end'", path, current[3])
    return pf


def _top_line(pf, head, rest, where, path):
    if head == "qubits":
        if pf is not None:
            raise ParseError("'qubits' given twice", *where)
        n = _ints(rest.split(), where)
        if len(n) != 1 or n[0] < 1:
            raise ParseError("usage: qubits N (N >= 1)", *where)
        sk.check_budget(n[0])
        return ProblemFile(n[0], path=path)
    if head == "circuit":
        return pf
    if head == "input":
        kind, _, body = rest.partition(" ")
        if kind == "basis":
            label = body.strip()
            if len(label) != pf.qubits or set(label) - {"0", "1"}:
                raise ParseError(f"basis label must be {pf.qubits} bits, got {label!r}", *where)
            pf.input = sk.basis_state(pf.qubits, label)
        elif kind == "amplitudes":
            _, grid = _json_tail(body, where)
            psi = _complex_grid(grid, where)
            if psi.shape != (1 << pf.qubits,):
                raise ParseError(f"need {1 << pf.qubits} amplitudes, got {psi.size}", *where)
            report = sk.validate(psi, "state")
            if not report.ok:
                raise ParseError(f"invalid input state: {report}", *where)
            pf.input = psi
        else:
            raise ParseError("usage: input basis BITS | input amplitudes [[re, im], ...]", *where)
    elif head == "projector":
        toks = rest.split()
        if toks[:1] == ["qubit"] and len(toks) == 4 and toks[2] == "outcome":
            q, b = _ints([toks[1], toks[3]], where)
            pf.projector = sk.basis_projector(pf.qubits, q, b)
        elif toks[:1] == ["matrix"]:
            _, grid = _json_tail(rest, where)
            mat = _complex_grid(grid, where)
            report = sk.validate(mat, "projector")
            if not report.ok:
                raise ParseError(f"invalid projector: {report}", *where)
            pf.projector = sk.DenseProjector(mat)
            if pf.projector.dim != 1 << pf.qubits:
                raise ParseError(f"projector dim {pf.projector.dim} for {pf.qubits} qubits", *where)
        else:
            raise ParseError("usage: projector qubit K outcome B | projector matrix <grid>", *where)
    elif head == "promise":
        toks = rest.replace(",", " ").split()
        if len(toks) != 2:
            raise ParseError("usage: promise DELTA EPSILON", *where)
        pf.promise = SeparablePromise(_float(toks[0], where), _float(toks[1], where))
    elif head == "input-length":
        n = _ints(rest.split(), where, "integer")
        if len(n) != 1 or not 1 <= n[0] < pf.qubits:
            raise ParseError("input-length must be between 1 and qubits - 1", *where)
        pf.input_length = n[0]
    elif head == "members":
        toks = tuple(rest.split())
        if any(set(t) - {"0", "1"} for t in toks):
            raise ParseError("members are bitstrings", *where)
        pf.members = toks
    else:
        raise ParseError(f"unknown directive {head!r}", *where)
    return pf


def _circuit_line(pf, current, head, rest, where):
    name, n, ops, start = current
    if head == "end":
        pf.circuits[name] = sk.Circuit(n, tuple(ops))
        return None
    if head == "gate":
        toks = rest.split()
        m = _GATE.match(toks[0]) if toks else None
        if not m:
            raise ParseError("usage: gate NAME[(params)] q ...", *where)
        gname = m.group(1).upper()
        params = tuple(_float(t, where) for t in m.group(2).split(",")) if m.group(2) else ()
        if gname not in sk.NAMED_GATES:
            raise ParseError(f"unknown gate {gname!r}", *where)
        ops.append(sk.Gate(gname, _ints(toks[1:], where), params))
    elif head == "matrix":
        toks, grid = _json_tail(rest, where)
        u = _complex_grid(grid, where)
        report = sk.validate(u, "unitary")
        if not report.ok:
            raise ParseError(f"matrix is not unitary: {report}", *where)
        ops.append(sk.MatrixGate(u, _ints(toks, where)))
    elif head == "blackbox":
        toks = rest.split()
        dagger = bool(toks) and toks[-1] == "dagger"
        toks = toks[:-1] if dagger else toks
        if not toks:
            raise ParseError("usage: blackbox NAME q ... [dagger]", *where)
        slot = toks[0]
        if slot not in pf.circuits:
            raise ParseError(f"black box {slot!r} must name a circuit defined earlier", *where)
        targets = _ints(toks[1:], where)
        if len(targets) != pf.circuits[slot].qubit_count:
            raise ParseError(f"{slot!r} acts on {pf.circuits[slot].qubit_count} qubits, "
                             f"{len(targets)} targets given", *where)
        ops.append(sk.BlackBox(slot, targets, dagger))
    else:
        raise ParseError(f"unknown circuit statement {head!r}", *where)
    # validate targets early so the error points at this line
    sk.Circuit(n, tuple(ops))
    return current


def load(path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror}", str(path)) from None
    return loads(text, str(path))


# ---------------------------------------------------------------- emit


def _op_line(op) -> str:
    if isinstance(op, sk.Gate):
        if op.dagger:
            raise ValueError(f"cannot serialize daggered gate {op.name}")
        params = "(" + ", ".join(fmt(p) for p in op.params) + ")" if op.params else ""
        return f"gate {op.name}{params} " + " ".join(map(str, op.targets))
    if isinstance(op, sk.MatrixGate):
        u = op.unitary.conj().T if op.dagger else op.unitary
        return "matrix " + " ".join(map(str, op.targets)) + " " + _grid_text(u)
    if isinstance(op, sk.BlackBox):
        return "blackbox " + " ".join([op.slot, *map(str, op.targets)] + (["dagger"] if op.dagger else []))
    raise ValueError(f"{type(op).__name__} has no text form")


def dumps(pf: ProblemFile) -> str:
    out = [f"qubits {pf.qubits}"]
    for name, c in pf.circuits.items():
        out.append(f"circuit {name}" + (f" {c.qubit_count}" if c.qubit_count != pf.qubits else ""))
        out.extend("  " + _op_line(op) for op in c.ops)
        out.append("end")
    if pf.input is not None:
        out.append("input amplitudes " + _grid_text(pf.input))
    if pf.projector is not None:
        out.append("projector matrix " + _grid_text(pf.projector.matrix()))
    if pf.promise is not None:
        out.append(f"promise {fmt(pf.promise.delta)} {fmt(pf.promise.epsilon)}")
    if pf.input_length is not None:
        out.append(f"input-length {pf.input_length}")
    if pf.members:
        out.append("members " + " ".join(pf.members))
    return "\n".join(out) + "\n"
