"""Tiny helper: expose a dataclass config as command-line flags."""

import argparse
import dataclasses


def parse(cls, argv=None, description=None):
    p = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        kind = type(f.default)
        if kind is bool:
            p.add_argument(f"--{f.name.replace('_', '-')}", action=argparse.BooleanOptionalAction, default=f.default)
        elif kind is tuple:
            p.add_argument(f"--{f.name.replace('_', '-')}", type=float, nargs="+", default=f.default)
        else:
            p.add_argument(f"--{f.name.replace('_', '-')}", type=kind, default=f.default)
    ns = p.parse_args(argv)
    return cls(**{f.name: (tuple(v) if isinstance(v, list) else v)
                  for f, v in zip(dataclasses.fields(cls), vars(ns).values())})
