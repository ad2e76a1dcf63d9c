"""Exact separation of two biased coins: the probability ledger next to simulation."""

from dataclasses import dataclass

from exactamp.amplifier import build_perfect_distinguisher, trace_plan
from exactamp.systems import SeparablePromise, engineered_system

from _config import parse


@dataclass
class Config:
    delta: float = 1 / 3
    epsilon: float = 2 / 3
    padding: int = 1


def main(cfg: Config):
    plan = build_perfect_distinguisher(SeparablePromise(cfg.delta, cfg.epsilon))
    hi = trace_plan(plan, engineered_system(cfg.epsilon, cfg.padding))
    lo = trace_plan(plan, engineered_system(cfg.delta, cfg.padding))
    labels = ["input"] + [str(s) for s in plan.stages]
    print(f"{'stage':<34}{'ledger good':>13}{'sim':>13}{'ledger bad':>13}{'sim':>13}")
    for label, (g, b), h, l in zip(labels, plan.ledger.rows, hi, lo):
        print(f"{label:<34}{g:>13.9f}{h:>13.9f}{b:>13.9f}{l:>13.9f}")
    print(f"{plan.query_count} calls to the coin circuit")


if __name__ == "__main__":
    main(parse(Config, description=__doc__))
