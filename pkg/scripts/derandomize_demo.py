"""Zero-error decision tables for small language fixtures under several promises."""

from dataclasses import dataclass

import numpy as np

from exactamp.derand import derandomize_family_full, half_transform_verdicts, language_fixture
from exactamp.systems import SeparablePromise

from _config import parse


@dataclass
class Config:
    n: int = 2
    delta: float = 1 / 3
    epsilon: float = 2 / 3
    seed: int = 1


def main(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    members = {x for x in range(1 << cfg.n) if rng.random() < 0.5}
    fx = language_fixture(cfg.n, members, SeparablePromise(cfg.delta, cfg.epsilon))
    res = derandomize_family_full(fx)
    print(f"members {sorted(members)}; {res.circuit.qubit_count} qubits, {res.plan.query_count} calls")
    for x, v in res.table.items():
        print(f"  x={x}  p_E={v.p_E:.3g}  {'accept' if v.accept else 'reject'}")
    half = language_fixture(cfg.n, members, SeparablePromise(0, 0.5))
    print("one-sided (0, 1/2) shortcut circuit:")
    for x, v in half_transform_verdicts(half).items():
        print(f"  x={x}  p_E={v.p_E:.3g}  {'accept' if v.accept else 'reject'}")


if __name__ == "__main__":
    main(parse(Config, description=__doc__))
