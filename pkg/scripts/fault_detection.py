"""Random single-gate faults on a small reference circuit, detected with the optimal probe."""

from dataclasses import dataclass

import numpy as np

from exactamp import statekit as sk
from exactamp.amplifier import build_perfect_distinguisher
from exactamp.distinguisher import fault_detect, optimal_input
from exactamp.systems import SeparablePromise

from _config import parse


@dataclass
class Config:
    qubits: int = 2
    faults: int = 10
    seed: int = 0


def reference(n):
    c = sk.Circuit(n).gate("H", 0)
    for q in range(1, n):
        c = c.gate("CX", q - 1, q)
    return c


def main(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    ref = reference(cfg.qubits)
    wrong = 0
    print(f"{'fault':<22}{'eps*':>10}{'calls':>7}  verdicts (ref, faulty)")
    for _ in range(cfg.faults):
        q = int(rng.integers(cfg.qubits))
        name = str(rng.choice(["RX", "RY", "RZ"]))
        angle = float(rng.uniform(0.2, np.pi))
        fault = ref.gate(name, q, params=[angle])
        _, eps = optimal_input(ref, fault, seed=cfg.seed)
        a = fault_detect(ref, fault, ref, seed=cfg.seed)
        b = fault_detect(ref, fault, fault, seed=cfg.seed)
        wrong += (a != "fault_free") + (b != "faulty")
        calls = build_perfect_distinguisher(SeparablePromise(0, min(eps, 1.0))).query_count
        print(f"{name}({angle:.3f}) on q{q:<8}{eps:>10.5f}{calls:>7}  {a}, {b}")
    print(f"misclassifications: {wrong}")


if __name__ == "__main__":
    main(parse(Config, description=__doc__))
