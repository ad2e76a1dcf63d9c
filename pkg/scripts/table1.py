"""Optimal equal-phase iterator: best phase, gain and simulated p' for a list of p."""

from dataclasses import dataclass

import numpy as np

from exactamp.grover import optimal_iterator, optimal_phase
from exactamp.systems import engineered_system, outcome_probability

from _config import parse


@dataclass
class Config:
    ps: tuple = (0.5, 0.4, 0.3, 0.25, 0.2, 0.125, 0.05)
    padding: int = 1


def main(cfg: Config):
    print(f"{'p':>8} {'theta/pi':>10} {'gain':>10} {'predicted':>12} {'simulated':>12}")
    for p in cfg.ps:
        theta, gain, after = optimal_phase(p)
        sim = outcome_probability(optimal_iterator(engineered_system(p, cfg.padding), p)).p_E
        print(f"{p:>8.4g} {theta / np.pi:>10.6f} {gain:>10.6f} {after:>12.9f} {sim:>12.9f}")


if __name__ == "__main__":
    main(parse(Config, description=__doc__))
