"""Dense state vectors, gate circuits and projectors.

Conventions:

* A state on ``n`` qubits is a complex vector of length ``2**n``; qubit 0 is
  the most significant bit of the basis index.
* Operators act on a batch ``(2**n, k)`` internally so a circuit's matrix is
  just the circuit applied to the identity.
* Projectors are kept structured (rank one, tensor products, complements) so
  measurement and reflection gates never materialize a ``2**n x 2**n`` matrix.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, NotAProjectorError, QubitBudgetError, UnboundSlotError

OP_TOL = 1e-9
NORM_TOL = 1e-9
PROB_TOL = 1e-7

DEFAULT_QUBIT_BUDGET = 14
_budget = contextvars.ContextVar("qubit_budget", default=DEFAULT_QUBIT_BUDGET)

# dense matrices above this many qubits are avoided in favour of op-by-op runs
_DENSE_LIMIT = 10


@contextlib.contextmanager
def qubit_budget(n: int):
    """Temporarily change the total-qubit cap used by every constructor."""
    token = _budget.set(int(n))
    try:
        yield
    finally:
        _budget.reset(token)


def current_budget() -> int:
    return _budget.get()


def check_budget(n: int) -> None:
    if n > _budget.get():
        raise QubitBudgetError(f"{n} qubits requested, budget is {_budget.get()}")


# ---------------------------------------------------------------- states


def qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def basis_state(n: int, index: int | str = 0) -> np.ndarray:
    """Standard basis state; ``index`` may be an int or a bit string like ``"01"``."""
    if isinstance(index, str):
        if len(index) != n or set(index) - {"0", "1"}:
            raise ValueError(f"bad basis label {index!r} for {n} qubits")
        index = int(index, 2)
    if not 0 <= index < 1 << n:
        raise ValueError(f"basis index {index} out of range for {n} qubits")
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def tensor(*states: np.ndarray) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for s in states:
        out = np.kron(out, s)
    return out


def complete_unitary(columns: Mapping[int, np.ndarray], dim: int, tol: float = 1e-10) -> np.ndarray:
    """Unitary with the given orthonormal columns at the given positions.

    Free columns are filled, in index order, by Gram-Schmidt over the standard
    basis vectors taken in index order.
    """
    cols = {int(k): np.asarray(v, dtype=complex) for k, v in columns.items()}
    basis = list(cols.values())
    for v in basis:
        if v.shape != (dim,):
            raise DimensionError(f"column of length {v.shape} for dimension {dim}")
    gram = np.array([[np.vdot(a, b) for b in basis] for a in basis]).reshape(len(basis), len(basis))
    if len(basis) and np.max(np.abs(gram - np.eye(len(basis)))) > tol:
        raise ValueError("given columns are not orthonormal")

    free = [j for j in range(dim) if j not in cols]
    filler = []
    for j in range(dim):
        if len(filler) == len(free):
            break
        v = np.zeros(dim, dtype=complex)
        v[j] = 1.0
        for b in basis + filler:
            v = v - np.vdot(b, v) * b
        # second pass keeps the completion orthogonal to working precision
        for b in basis + filler:
            v = v - np.vdot(b, v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            filler.append(v / norm)
    out = np.zeros((dim, dim), dtype=complex)
    for k, v in cols.items():
        out[:, k] = v
    for k, v in zip(free, filler):
        out[:, k] = v
    return out


# ---------------------------------------------------------------- named gates

_SELF_ADJOINT = {"I", "X", "Y", "Z", "H", "CX", "CZ", "SWAP", "CCX", "MCX", "FANOUT"}
_PARAMETRIC = {"RX": 1, "RY": 1, "RZ": 1, "PHASE": 1, "CRY": 1, "CPHASE": 1}
_ARITY = {
    "I": 1, "X": 1, "Y": 1, "Z": 1, "H": 1, "S": 1, "T": 1,
    "RX": 1, "RY": 1, "RZ": 1, "PHASE": 1,
    "CX": 2, "CZ": 2, "SWAP": 2, "CRY": 2, "CPHASE": 2, "CCX": 3,
}
_PERMUTATION = {"X", "CX", "SWAP", "CCX", "MCX", "FANOUT"}
NAMED_GATES = sorted(set(_ARITY) | {"MCX", "FANOUT"})


def _ry(a):
    c, s = np.cos(a / 2), np.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _controlled(u):
    out = np.eye(2 * len(u), dtype=complex)
    out[len(u):, len(u):] = u
    return out


@lru_cache(maxsize=None)
def _permutation(name: str, t: int) -> np.ndarray:
    """``src`` with ``out[i] = in[src[i]]`` for the basis permutation gates."""
    idx = np.arange(1 << t)
    if name == "X":
        dst = idx ^ 1
    elif name == "SWAP":
        dst = ((idx & 1) << 1) | ((idx >> 1) & 1)
    elif name in ("CX", "CCX", "MCX"):
        dst = np.where((idx | 1) == (1 << t) - 1, idx ^ 1, idx)
    elif name == "FANOUT":
        m = t // 2
        hi = idx >> m
        dst = (hi << m) | ((idx & ((1 << m) - 1)) ^ hi)
    else:
        raise KeyError(name)
    src = np.empty_like(dst)
    src[dst] = idx
    return src


def named_matrix(name: str, params: Sequence[float] = (), t: int | None = None) -> np.ndarray:
    """Matrix of a named gate on ``t`` qubits (``t`` only needed for MCX/FANOUT)."""
    if t is None:
        t = _ARITY[name]
    if name in _PERMUTATION:
        src = _permutation(name, t)
        return np.eye(1 << t, dtype=complex)[src]
    a = params[0] if params else None
    if name == "I":
        return np.eye(2, dtype=complex)
    if name == "Y":
        return np.array([[0, -1j], [1j, 0]])
    if name == "Z":
        return np.diag([1, -1]).astype(complex)
    if name == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    if name == "S":
        return np.diag([1, 1j])
    if name == "T":
        return np.diag([1, np.exp(1j * np.pi / 4)])
    if name == "RX":
        c, s = np.cos(a / 2), np.sin(a / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if name == "RY":
        return _ry(a)
    if name == "RZ":
        return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])
    if name == "PHASE":
        return np.diag([1, np.exp(1j * a)])
    if name == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if name == "CRY":
        return _controlled(_ry(a))
    if name == "CPHASE":
        return np.diag([1, 1, 1, np.exp(1j * a)])
    raise KeyError(f"unknown gate {name!r}")


# ---------------------------------------------------------------- projectors


class Projector:
    """Orthogonal projector on ``dim``-dimensional space.

    Subclasses only need ``apply``; ``matrix`` is derived from it.
    """

    dim: int

    @property
    def qubit_count(self) -> int:
        return qubits_of(self.dim)

    def apply(self, block: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.dim, dtype=complex))

    def complement(self) -> "Projector":
        return ComplementProjector(self)

    def kron(self, other: "Projector") -> "Projector":
        left = self.factors if isinstance(self, KronProjector) else (self,)
        right = other.factors if isinstance(other, KronProjector) else (other,)
        return KronProjector(left + right)

    def expectation(self, psi: np.ndarray) -> float:
        """``<psi|P|psi>``, i.e. the probability of this outcome."""
        v = self.apply(psi.reshape(-1, 1)).ravel()
        return float(np.vdot(psi, v).real)

    def signature(self):
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Projector) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())


class DenseProjector(Projector):
    def __init__(self, matrix):
        self.mat = np.asarray(matrix, dtype=complex)
        if self.mat.ndim != 2 or self.mat.shape[0] != self.mat.shape[1]:
            raise DimensionError(f"projector matrix must be square, got {self.mat.shape}")
        self.dim = self.mat.shape[0]

    def apply(self, block):
        return self.mat @ block

    def matrix(self):
        return self.mat.copy()

    def signature(self):
        return ("dense", self.mat.shape, self.mat.tobytes())

    def __repr__(self):
        return f"DenseProjector(dim={self.dim})"


class RankOneProjector(Projector):
    """``|v><v|`` for a normalized copy of ``v``."""

    def __init__(self, vector):
        v = np.asarray(vector, dtype=complex).ravel()
        self.vec = v / np.linalg.norm(v)
        self.dim = len(v)

    def apply(self, block):
        return np.outer(self.vec, self.vec.conj() @ block)

    def signature(self):
        return ("rank1", self.vec.tobytes())

    def __repr__(self):
        return f"RankOneProjector(dim={self.dim})"


class IdentityProjector(Projector):
    def __init__(self, dim):
        self.dim = int(dim)

    def apply(self, block):
        return block.copy()

    def signature(self):
        return ("id", self.dim)

    def __repr__(self):
        return f"IdentityProjector(dim={self.dim})"


class ComplementProjector(Projector):
    """``I - P``."""

    def __init__(self, inner: Projector):
        self.inner = inner
        self.dim = inner.dim

    def apply(self, block):
        return block - self.inner.apply(block)

    def complement(self):
        return self.inner

    def signature(self):
        return ("not", self.inner.signature())

    def __repr__(self):
        return f"ComplementProjector({self.inner!r})"


class KronProjector(Projector):
    """Tensor product; factor 0 acts on the most significant qubits."""

    def __init__(self, factors: Sequence[Projector]):
        self.factors = tuple(factors)
        self.dim = int(np.prod([f.dim for f in self.factors]))

    def apply(self, block):
        dims = [f.dim for f in self.factors]
        k = block.shape[1]
        t = block.reshape(*dims, k)
        for axis, f in enumerate(self.factors):
            if isinstance(f, IdentityProjector):
                continue
            moved = np.moveaxis(t, axis, 0)
            shape = moved.shape
            out = f.apply(moved.reshape(dims[axis], -1)).reshape(shape)
            t = np.moveaxis(out, 0, axis)
        return np.ascontiguousarray(t).reshape(self.dim, k)

    def signature(self):
        return ("kron",) + tuple(f.signature() for f in self.factors)

    def __repr__(self):
        return f"KronProjector({', '.join(map(repr, self.factors))})"


def basis_projector(n: int, qubit: int, bit: int) -> Projector:
    """Projector onto ``qubit`` being in state ``|bit>`` on an ``n``-qubit register."""
    if not 0 <= qubit < n:
        raise DimensionError(f"qubit {qubit} out of range for {n} qubits")
    single = np.zeros((2, 2), dtype=complex)
    single[bit, bit] = 1.0
    factors = []
    if qubit:
        factors.append(IdentityProjector(1 << qubit))
    factors.append(DenseProjector(single))
    if n - qubit - 1:
        factors.append(IdentityProjector(1 << (n - qubit - 1)))
    return KronProjector(factors) if len(factors) > 1 else factors[0]


def as_projector(obj) -> Projector:
    return obj if isinstance(obj, Projector) else DenseProjector(obj)


# ---------------------------------------------------------------- circuit ops


def _matrix_key(m: np.ndarray):
    return (m.shape, np.ascontiguousarray(m).tobytes())


class _Op:
    targets: tuple

    def signature(self):
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())


@dataclass(frozen=True, eq=False)
class Gate(_Op):
    name: str
    targets: tuple
    params: tuple = ()
    dagger: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.name not in NAMED_GATES:
            raise KeyError(f"unknown gate {self.name!r}")
        t = len(self.targets)
        if self.name in _ARITY and _ARITY[self.name] != t:
            raise DimensionError(f"{self.name} takes {_ARITY[self.name]} qubits, got {t}")
        if self.name == "FANOUT" and (t == 0 or t % 2):
            raise DimensionError("FANOUT needs an even, non-zero number of targets")
        if self.name == "MCX" and t == 0:
            raise DimensionError("MCX needs at least one target")
        if len(self.params) != _PARAMETRIC.get(self.name, 0):
            raise ValueError(f"{self.name} expects {_PARAMETRIC.get(self.name, 0)} parameters")

    def adjoint(self):
        if self.name in _SELF_ADJOINT:
            return self
        if self.name in _PARAMETRIC:
            return Gate(self.name, self.targets, tuple(-p for p in self.params))
        return Gate(self.name, self.targets, self.params, not self.dagger)

    def matrix(self):
        m = named_matrix(self.name, self.params, len(self.targets))
        return m.conj().T if self.dagger else m

    def remap(self, mapping):
        return Gate(self.name, tuple(mapping[q] for q in self.targets), self.params, self.dagger)

    def signature(self):
        return ("gate", self.name, self.targets, self.params, self.dagger)


@dataclass(frozen=True, eq=False)
class MatrixGate(_Op):
    unitary: np.ndarray
    targets: tuple
    label: str = "U"
    dagger: bool = False

    def __post_init__(self):
        m = np.asarray(self.unitary, dtype=complex)
        object.__setattr__(self, "unitary", m)
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        if m.shape != (1 << len(self.targets),) * 2:
            raise DimensionError(f"matrix of shape {m.shape} on {len(self.targets)} targets")

    def adjoint(self):
        return MatrixGate(self.unitary, self.targets, self.label, not self.dagger)

    def matrix(self):
        return self.unitary.conj().T if self.dagger else self.unitary

    def remap(self, mapping):
        return MatrixGate(self.unitary, tuple(mapping[q] for q in self.targets), self.label, self.dagger)

    def signature(self):
        return ("matrix", self.label, self.targets, self.dagger, _matrix_key(self.unitary))


@dataclass(frozen=True, eq=False)
class BlackBox(_Op):
    """Call site of an externally supplied circuit, bound at simulation time."""

    slot: str
    targets: tuple
    dagger: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))

    def adjoint(self):
        return BlackBox(self.slot, self.targets, not self.dagger)

    def remap(self, mapping):
        return BlackBox(self.slot, tuple(mapping[q] for q in self.targets), self.dagger)

    def signature(self):
        return ("call", self.slot, self.targets, self.dagger)


@dataclass(frozen=True, eq=False)
class ProjectorPhase(_Op):
    """``I - (1 - e^{i angle}) P`` applied through the projector's structure."""

    projector: Projector
    angle: float
    targets: tuple
    label: str = "S"
    dagger: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "angle", float(self.angle))
        if self.projector.dim != 1 << len(self.targets):
            raise DimensionError(f"projector of dim {self.projector.dim} on {len(self.targets)} targets")

    @property
    def factor(self) -> complex:
        phase = np.exp(-1j * self.angle) if self.dagger else np.exp(1j * self.angle)
        return 1.0 - phase

    def adjoint(self):
        return ProjectorPhase(self.projector, self.angle, self.targets, self.label, not self.dagger)

    def matrix(self):
        return np.eye(self.projector.dim, dtype=complex) - self.factor * self.projector.matrix()

    def remap(self, mapping):
        return ProjectorPhase(self.projector, self.angle, tuple(mapping[q] for q in self.targets),
                              self.label, self.dagger)

    def signature(self):
        return ("phase", self.label, self.targets, self.angle, self.dagger, self.projector.signature())


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``qubit_count`` qubits; ops apply left to right."""

    qubit_count: int
    ops: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.qubit_count < 1:
            raise DimensionError("a circuit needs at least one qubit")
        check_budget(self.qubit_count)
        for op in self.ops:
            ts = op.targets
            if len(set(ts)) != len(ts):
                raise DimensionError(f"repeated target in {op}")
            if any(not 0 <= q < self.qubit_count for q in ts):
                raise DimensionError(f"target out of range in {op} for {self.qubit_count} qubits")

    # builders -------------------------------------------------------
    def add(self, *ops) -> "Circuit":
        return Circuit(self.qubit_count, self.ops + tuple(ops))

    def gate(self, name: str, *targets: int, params: Sequence[float] = ()) -> "Circuit":
        return self.add(Gate(name, targets, tuple(params)))

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.qubit_count != self.qubit_count:
            raise DimensionError("cannot concatenate circuits of different widths")
        return Circuit(self.qubit_count, self.ops + other.ops)

    def __len__(self):
        return len(self.ops)

    # transforms -----------------------------------------------------
    def adjoint(self) -> "Circuit":
        return circuit_adjoint(self)

    def widen(self, n: int) -> "Circuit":
        """Same ops on a register of ``n >= qubit_count`` qubits (``C ⊗ I``)."""
        if n < self.qubit_count:
            raise DimensionError("widen cannot shrink a circuit")
        return Circuit(n, self.ops)

    def remap(self, targets: Sequence[int], qubit_count: int) -> "Circuit":
        """Place this circuit onto qubits ``targets`` of a ``qubit_count``-qubit register."""
        if len(targets) != self.qubit_count:
            raise DimensionError(f"{len(targets)} targets for a {self.qubit_count}-qubit circuit")
        mapping = dict(enumerate(targets))
        return Circuit(qubit_count, tuple(op.remap(mapping) for op in self.ops))

    def bind(self, **slots: "Circuit") -> "Circuit":
        """Inline circuits for the named black-box slots; others stay as calls."""
        ops = []
        for op in self.ops:
            if isinstance(op, BlackBox) and op.slot in slots:
                sub = slots[op.slot]
                if sub.qubit_count != len(op.targets):
                    raise DimensionError(f"slot {op.slot!r} has {len(op.targets)} targets, "
                                         f"bound circuit has {sub.qubit_count} qubits")
                if op.dagger:
                    sub = sub.adjoint()
                ops.extend(sub.remap(op.targets, self.qubit_count).ops)
            else:
                ops.append(op)
        return Circuit(self.qubit_count, tuple(ops))

    # queries --------------------------------------------------------
    def slots(self) -> set:
        return {op.slot for op in self.ops if isinstance(op, BlackBox)}

    def call_count(self, slot: str | None = None) -> int:
        return sum(isinstance(op, BlackBox) and (slot is None or op.slot == slot) for op in self.ops)

    def call_positions(self, slot: str | None = None) -> list:
        return [i for i, op in enumerate(self.ops)
                if isinstance(op, BlackBox) and (slot is None or op.slot == slot)]

    def signature(self) -> tuple:
        return (self.qubit_count,) + tuple(op.signature() for op in self.ops)

    def matrix(self, bindings: Mapping | None = None) -> np.ndarray:
        return circuit_matrix(self, bindings)


def circuit_adjoint(circuit: Circuit) -> Circuit:
    return Circuit(circuit.qubit_count, tuple(op.adjoint() for op in reversed(circuit.ops)))


# ---------------------------------------------------------------- simulation


def _on_targets(block: np.ndarray, n: int, targets: Sequence[int], fn: Callable) -> np.ndarray:
    k = block.shape[1]
    t = len(targets)
    if tuple(targets) == tuple(range(t)):
        return fn(block.reshape(1 << t, -1)).reshape(1 << n, k)
    tens = block.reshape((2,) * n + (k,))
    moved = np.moveaxis(tens, targets, range(t))
    shape = moved.shape
    out = fn(moved.reshape(1 << t, -1)).reshape(shape)
    return np.ascontiguousarray(np.moveaxis(out, range(t), targets)).reshape(1 << n, k)


def _resolve(slot: str, dagger: bool, bindings: Mapping, cache: dict):
    key = (slot, dagger)
    if key in cache:
        return cache[key]
    if slot not in bindings:
        raise UnboundSlotError(slot)
    bound = bindings[slot]
    if isinstance(bound, Circuit):
        if bound.qubit_count <= _DENSE_LIMIT:
            m = _run(bound.ops, np.eye(1 << bound.qubit_count, dtype=complex),
                     bound.qubit_count, bindings, {})
            val = m.conj().T if dagger else m
        else:
            val = bound.adjoint() if dagger else bound
    else:
        m = np.asarray(bound, dtype=complex)
        val = m.conj().T if dagger else m
    cache[key] = val
    return val


def _run(ops, block, n, bindings, cache):
    for op in ops:
        if isinstance(op, Gate) and op.name in _PERMUTATION:
            src = _permutation(op.name, len(op.targets))
            block = _on_targets(block, n, op.targets, lambda s, src=src: s[src])
        elif isinstance(op, (Gate, MatrixGate)):
            m = op.matrix()
            block = _on_targets(block, n, op.targets, lambda s, m=m: m @ s)
        elif isinstance(op, ProjectorPhase):
            f, p = op.factor, op.projector
            block = _on_targets(block, n, op.targets, lambda s, f=f, p=p: s - f * p.apply(s))
        elif isinstance(op, BlackBox):
            val = _resolve(op.slot, op.dagger, bindings, cache)
            if isinstance(val, Circuit):
                if val.qubit_count != len(op.targets):
                    raise DimensionError(f"slot {op.slot!r} bound to a {val.qubit_count}-qubit circuit")
                sub = val.remap(op.targets, n)
                block = _run(sub.ops, block, n, bindings, cache)
            else:
                if val.shape != (1 << len(op.targets),) * 2:
                    raise DimensionError(f"slot {op.slot!r} bound to matrix of shape {val.shape}")
                block = _on_targets(block, n, op.targets, lambda s, m=val: m @ s)
        else:
            raise TypeError(f"unknown op {op!r}")
    return block


def apply_circuit(circuit: Circuit, state: np.ndarray, bindings: Mapping | None = None) -> np.ndarray:
    """``C|state>``; a 2-D ``state`` is treated as a batch of column vectors."""
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != 1 << circuit.qubit_count:
        raise DimensionError(f"state of length {state.shape[0]} for a {circuit.qubit_count}-qubit circuit")
    block = state.reshape(state.shape[0], -1)
    out = _run(circuit.ops, block.copy(), circuit.qubit_count, bindings or {}, {})
    return out.reshape(state.shape)


def circuit_matrix(circuit: Circuit, bindings: Mapping | None = None) -> np.ndarray:
    return apply_circuit(circuit, np.eye(1 << circuit.qubit_count, dtype=complex), bindings)


def phase_on_projector(P, angle: float) -> np.ndarray:
    """Dense ``I - (1 - e^{i angle}) P``."""
    P = as_projector(P)
    report = validate(P, kind="projector")
    if not report.ok:
        raise NotAProjectorError(str(report))
    return np.eye(P.dim, dtype=complex) - (1.0 - np.exp(1j * angle)) * P.matrix()


def fanout(m: int) -> np.ndarray:
    """XOR-copy of an m-qubit register onto a second m-qubit register."""
    if m < 1:
        raise ValueError("fanout needs m >= 1")
    check_budget(2 * m)
    return named_matrix("FANOUT", (), 2 * m)


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    kind: str
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return f"{self.kind}: ok"
        return "; ".join(f"{self.kind}: {name} violated (deviation {dev:.3g})" for name, dev in self.violations)


def validate(obj, kind: str | None = None, op_tol: float = OP_TOL, norm_tol: float = NORM_TOL) -> ValidationReport:
    """Check the invariants of a state, unitary or projector.

    ``kind`` is inferred when omitted: Projector instances are projectors,
    1-D arrays are states and 2-D arrays unitaries.
    """
    if kind is None:
        if isinstance(obj, Projector):
            kind = "projector"
        else:
            kind = "state" if np.ndim(obj) == 1 else "unitary"
    report = ValidationReport(kind)
    if kind == "state":
        v = np.asarray(obj, dtype=complex)
        if not np.all(np.isfinite(v)):
            report.violations.append(("finite", float("inf")))
            return report
        try:
            qubits_of(len(v))
        except DimensionError:
            report.violations.append(("power-of-two length", float(len(v))))
        dev = abs(float(np.vdot(v, v).real) - 1.0)
        if dev > norm_tol:
            report.violations.append(("unit norm", dev))
        return report

    if kind == "unitary":
        m = np.asarray(obj, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            report.violations.append(("square", float("inf")))
            return report
        if not np.all(np.isfinite(m)):
            report.violations.append(("finite", float("inf")))
            return report
        dev = float(np.max(np.abs(m.conj().T @ m - np.eye(len(m)))))
        if dev > op_tol:
            report.violations.append(("unitarity", dev))
        return report

    if kind == "projector":
        P = as_projector(obj)
        if P.dim <= 1 << _DENSE_LIMIT:
            m = P.matrix()
            herm = float(np.max(np.abs(m - m.conj().T)))
            idem = float(np.max(np.abs(m @ m - m)))
        else:
            rng = np.random.default_rng(0)
            probes = rng.normal(size=(P.dim, 4)) + 1j * rng.normal(size=(P.dim, 4))
            pv = P.apply(probes)
            idem = float(np.max(np.abs(P.apply(pv) - pv)))
            herm = float(np.max(np.abs(probes.conj().T @ pv - pv.conj().T @ probes)))
        if herm > op_tol:
            report.violations.append(("hermitian", herm))
        if idem > op_tol:
            report.violations.append(("idempotent", idem))
        return report

    raise ValueError(f"unknown kind {kind!r}")


def validate_circuit(circuit: Circuit, op_tol: float = OP_TOL) -> ValidationReport:
    """Unitarity of every raw-matrix gate and validity of every phase projector."""
    report = ValidationReport("circuit")
    for i, op in enumerate(circuit.ops):
        if isinstance(op, MatrixGate):
            sub = validate(op.unitary, "unitary", op_tol=op_tol)
        elif isinstance(op, ProjectorPhase):
            sub = validate(op.projector, "projector", op_tol=op_tol)
        else:
            continue
        report.violations.extend((f"op {i} ({op.label}) {name}", dev) for name, dev in sub.violations)
    return report


def structural_diff(a: Circuit, b: Circuit) -> list:
    """Op positions where two circuits differ (length mismatch counts every extra op)."""
    diff = [i for i, (x, y) in enumerate(zip(a.ops, b.ops)) if x != y]
    diff.extend(range(min(len(a), len(b)), max(len(a), len(b))))
    if a.qubit_count != b.qubit_count:
        diff.insert(0, -1)
    return diff

