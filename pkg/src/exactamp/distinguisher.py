"""Deciding with certainty which of two known circuits sits in a black box.

Probe with ``phi``: the reference system ends in ``psi1 = C1 phi`` and the
measurement asks "not psi1?". C1 then never reports E and C2 reports E with
probability ``1 - |<psi1|psi2>|^2``, a (0, eps) promise that the perfect
distinguisher lifts to certainty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import statekit as sk
from .amplifier import AmplificationPlan, apply_plan, build_perfect_distinguisher
from .errors import DimensionError, IndistinguishableError, PromiseViolation
from .systems import Measurement2, QuantumSystem, SeparablePromise, outcome_probability

PHASE_MERGE_TOL = 1e-9


def _as_matrix(c) -> np.ndarray:
    return sk.circuit_matrix(c) if isinstance(c, sk.Circuit) else np.asarray(c, dtype=complex)


def _as_circuit(c) -> sk.Circuit:
    if isinstance(c, sk.Circuit):
        return c
    u = np.asarray(c, dtype=complex)
    n = sk.qubits_of(u.shape[0])
    return sk.Circuit(n, (sk.MatrixGate(u, tuple(range(n))),))


def _outputs(c1, c2, phi):
    c1, c2 = _as_circuit(c1), _as_circuit(c2)
    phi = np.asarray(phi, dtype=complex)
    if c1.qubit_count != c2.qubit_count or len(phi) != 1 << c1.qubit_count:
        raise DimensionError(
            f"circuits on {c1.qubit_count} and {c2.qubit_count} qubits, probe of length {len(phi)}")
    return sk.apply_circuit(c1, phi), sk.apply_circuit(c2, phi)


def overlap_epsilon(c1, c2, phi) -> float:
    """``1 - |<C1 phi|C2 phi>|^2``."""
    psi1, psi2 = _outputs(c1, c2, phi)
    return float(min(max(1.0 - abs(np.vdot(psi1, psi2)) ** 2, 0.0), 1.0))


@dataclass(frozen=True, eq=False)
class DistinguisherPlan:
    c1: sk.Circuit
    c2: sk.Circuit
    phi: np.ndarray
    epsilon: float
    plan: AmplificationPlan
    verdicts = {"E": "is_C2", "F": "is_C1"}

    @property
    def projector_E(self) -> sk.Projector:
        psi1 = sk.apply_circuit(self.c1, self.phi)
        return sk.RankOneProjector(psi1).complement()

    def system(self, blackbox) -> QuantumSystem:
        return QuantumSystem(self.phi, _as_circuit(blackbox), Measurement2(self.projector_E))


def build_circuit_distinguisher(c1, c2, phi) -> DistinguisherPlan:
    eps = overlap_epsilon(c1, c2, phi)
    if eps <= sk.PROB_TOL:
        raise IndistinguishableError(
            f"circuits are identical on this probe (eps = {eps:.3g}); try optimal_input")
    # a probe that separates perfectly up to rounding gets the exact (0, 1) plan
    if eps > 1.0 - sk.PROB_TOL:
        eps = 1.0
    plan = build_perfect_distinguisher(SeparablePromise(0.0, eps))
    return DistinguisherPlan(_as_circuit(c1), _as_circuit(c2), np.asarray(phi, dtype=complex), eps, plan)


def decide(dplan: DistinguisherPlan, blackbox, prob_tol: float = sk.PROB_TOL) -> str:
    """``"is_C1"`` or ``"is_C2"``; PromiseViolation when the outcome is not deterministic."""
    qs = dplan.system(blackbox)
    p = outcome_probability(apply_plan(dplan.plan, qs, verify=False)).p_E
    if abs(p - 1.0) <= prob_tol:
        return dplan.verdicts["E"]
    if abs(p) <= prob_tol:
        return dplan.verdicts["F"]
    raise PromiseViolation(f"black box is neither C1 nor C2: final p_E = {p:.9g}", [("blackbox", p)])


# ---------------------------------------------------------------- optimal probe


@dataclass(frozen=True, eq=False)
class EigenPhaseProblem:
    """Distinct eigenphases of ``C1^dagger C2`` with one eigenvector each.

    ``weights`` is filled in by :func:`solve`.
    """

    phases: np.ndarray
    vectors: np.ndarray  # columns
    weights: np.ndarray | None = None

    def gram(self) -> np.ndarray:
        return np.cos(self.phases[:, None] - self.phases[None, :])

    def objective(self, c) -> float:
        c = np.asarray(c, dtype=float)
        return float(c @ self.gram() @ c)

    def probe(self, c=None) -> np.ndarray:
        c = self.weights if c is None else np.asarray(c, dtype=float)
        return self.vectors @ np.sqrt(np.clip(c, 0.0, None))


def eigenphase_problem(c1, c2, op_tol: float = sk.OP_TOL) -> EigenPhaseProblem:
    u1, u2 = _as_matrix(c1), _as_matrix(c2)
    if u1.shape != u2.shape:
        raise DimensionError(f"circuit dimensions {u1.shape} and {u2.shape} differ")
    s = u1.conj().T @ u2
    t, z = scipy.linalg.schur(s, output="complex")
    eig = np.diag(t)
    if np.max(np.abs(np.abs(eig) - 1.0)) > op_tol:
        raise ValueError("C1^dagger C2 is not unitary")
    phases = np.angle(eig)
    keep_phase, keep_vec = [], []
    for j in np.argsort(phases):
        if any(abs(np.angle(np.exp(1j * (phases[j] - q)))) <= PHASE_MERGE_TOL for q in keep_phase):
            continue
        keep_phase.append(phases[j])
        keep_vec.append(z[:, j])
    return EigenPhaseProblem(np.array(keep_phase), np.stack(keep_vec, axis=1))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of ``v`` onto the probability simplex."""
    v = np.atleast_2d(v)
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, v.shape[1] + 1)
    rho = np.count_nonzero(u - css / idx > 0, axis=1)
    tau = css[np.arange(v.shape[0]), rho - 1] / rho
    return np.maximum(v - tau[:, None], 0.0)


def minimize_on_simplex(g: np.ndarray, restarts: int = 20, iters: int = 4000,
                        rng: np.random.Generator | None = None) -> np.ndarray:
    """Accelerated projected gradient for ``min c^T G c`` over the simplex, best of ``restarts``."""
    rng = np.random.default_rng(0) if rng is None else rng
    k = g.shape[0]
    step = 1.0 / (2.0 * max(np.linalg.eigvalsh(g)[-1], 1e-12))
    x = rng.dirichlet(np.ones(k), size=restarts)
    x[0] = 1.0 / k
    y, t = x.copy(), 1.0
    for _ in range(iters):
        x_new = project_simplex(y - step * 2.0 * y @ g)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
    values = np.einsum("ri,ij,rj->r", x, g, x)
    return x[int(np.argmin(values))]


def solve(problem: EigenPhaseProblem, restarts: int = 20, seed: int = 0) -> EigenPhaseProblem:
    k = len(problem.phases)
    if k == 1:
        raise IndistinguishableError("circuits are equal up to a global phase; indistinguishable")
    if k == 2:
        c = np.array([0.5, 0.5])
    else:
        c = minimize_on_simplex(problem.gram(), restarts, rng=np.random.default_rng(seed))
    return EigenPhaseProblem(problem.phases, problem.vectors, c)


def optimal_input(c1, c2, seed: int = 0, restarts: int = 20) -> tuple[np.ndarray, float]:
    """``(phi*, eps*)`` maximizing ``overlap_epsilon(c1, c2, phi)``.

    With ``phi = sum_j sqrt(c_j) v_j`` over eigenvectors of ``C1^dagger C2``,
    ``|<psi1|psi2>|^2 = c^T G c``, so ``eps* = 1 - min_c c^T G c``.
    """
    solved = solve(eigenphase_problem(c1, c2), restarts, seed)
    f = solved.objective(solved.weights)
    return solved.probe(), float(min(max(1.0 - f, 0.0), 1.0))


def fault_detect(reference, fault_model, device, seed: int = 0) -> str:
    """``"fault_free"`` if ``device`` acts as ``reference``, ``"faulty"`` if it acts as ``fault_model``."""
    phi, _ = optimal_input(reference, fault_model, seed)
    dplan = build_circuit_distinguisher(reference, fault_model, phi)
    return "fault_free" if decide(dplan, device) == "is_C1" else "faulty"
