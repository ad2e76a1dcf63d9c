"""Calls to the black box for a perfect (0, eps) distinguisher as eps shrinks."""

from dataclasses import dataclass

import numpy as np

from exactamp.amplifier import apply_plan, build_perfect_distinguisher, epsilon_schedule
from exactamp.systems import SeparablePromise, engineered_system, outcome_probability

from _config import parse


@dataclass
class Config:
    epsilons: tuple = (1e-2, 1e-3, 1e-4, 1e-5)
    simulate: bool = True


def main(cfg: Config):
    print(f"{'eps':>10} {'k':>3} {'calls':>7} {'calls*sqrt(eps)':>16} {'final p_E':>12}")
    prev = None
    for eps in cfg.epsilons:
        plan = build_perfect_distinguisher(SeparablePromise(0, eps))
        final = outcome_probability(apply_plan(plan, engineered_system(eps))).p_E if cfg.simulate else float("nan")
        k = epsilon_schedule(eps).k if eps < 0.25 else 0
        ratio = "" if prev is None else f"  ratio {plan.query_count / prev:.3f}"
        print(f"{eps:>10.3g} {k:>3} {plan.query_count:>7} {plan.query_count * np.sqrt(eps):>16.4f} {final:>12.9f}{ratio}")
        prev = plan.query_count


if __name__ == "__main__":
    main(parse(Config, description=__doc__))
