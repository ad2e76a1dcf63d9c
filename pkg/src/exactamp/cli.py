"""``exactamp`` command line.

Exit status: 0 on success, 1 when a promise or a verification check fails,
2 when an input file or an argument does not parse or validate.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import statekit as sk
from .amplifier import build_perfect_distinguisher, build_separator, epsilon_schedule, trace_plan
from .derand import LanguageFixture, derandomize_family_full
from .distinguisher import build_circuit_distinguisher, decide, fault_detect, optimal_input, overlap_epsilon
from .errors import (ExactAmpError, IndistinguishableError, InvalidPromiseError, PromiseViolation,
                     VerificationError)
from .problemfile import ParseError, load
from .systems import SeparablePromise, classify_separable, outcome_probability

FAIL, BAD_INPUT = 1, 2


class Report:
    def __init__(self, command):
        self.data = {"command": command}
        self.lines = []

    def say(self, line=""):
        self.lines.append(line)

    def emit(self, fmt_name, stream):
        if fmt_name == "json":
            json.dump(self.data, stream, indent=2, default=_jsonable)
            stream.write("\n")
        else:
            stream.write("\n".join(self.lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [[float(z.real), float(z.imag)] for z in obj.ravel()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(type(obj).__name__)


def _promise(text) -> SeparablePromise:
    toks = text.replace(",", " ").split()
    if len(toks) != 2:
        raise argparse.ArgumentTypeError("promise is 'DELTA,EPSILON'")
    try:
        return SeparablePromise(float(toks[0]), float(toks[1]))
    except (ValueError, InvalidPromiseError) as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _pick(pf, names, count, what):
    names = list(names or [])
    avail = list(pf.circuits)
    for n in names:
        if n not in pf.circuits:
            raise ParseError(f"no circuit named {n!r} (have {', '.join(avail)})", pf.path)
    if len(names) < count:
        rest = [n for n in pf.top_level() if n not in names]
        names += rest[: count - len(names)]
    if len(names) < count:
        raise ParseError(f"{what} needs {count} circuits, file has {len(avail)}", pf.path)
    return names[:count]


def _bound(pf, name) -> sk.Circuit:
    c = pf.circuits[name]
    while c.slots():
        c = c.bind(**{s: pf.circuits[s] for s in c.slots()})
    return c


# ---------------------------------------------------------------- commands


def cmd_simulate(args, rep):
    pf = load(args.system)
    rep.data["systems"] = {}
    status = 0
    for name in pf.top_level():
        report = sk.validate_circuit(_bound(pf, name))
        if not report.ok:
            rep.say(f"{name}: invalid circuit")
            rep.say("  " + str(report))
            rep.data["systems"][name] = {"valid": False, "violations": [list(v) for v in report.violations]}
            status = BAD_INPUT
            continue
        qs = pf.system(name)
        p = outcome_probability(qs).p_E
        rep.data["systems"][name] = {"valid": True, "p_E": p, "p_F": 1 - p}
        rep.say(f"{name}: p_E = {p:.12g}  p_F = {1 - p:.12g}")
        if args.amplitudes:
            out = qs.output_state()
            rep.data["systems"][name]["state"] = out
            for i in np.flatnonzero(np.abs(out) > 1e-12):
                rep.say(f"  |{format(i, f'0{qs.qubit_count}b')}>  {out[i]:.12g}")
    return status


def cmd_amplify(args, rep):
    pf = load(args.system)
    promise = args.promise or pf.promise
    if promise is None:
        raise ParseError("no promise given (use --promise or a 'promise' line)", pf.path)
    plan = build_separator(promise) if args.separator else build_perfect_distinguisher(promise)
    names = pf.top_level()
    systems = [pf.system(n) for n in names]
    sides = classify_separable(systems, promise, args.tolerance, names)

    traces = {n: trace_plan(plan, qs) for n, qs in zip(names, systems)}
    rows, worst = [], 0.0
    labels = ["input"] + [str(st) for st in plan.stages]
    for i, (label, (g, b)) in enumerate(zip(labels, plan.ledger.rows)):
        row = {"stage": label, "p_good": g, "p_bad": b, "simulated": {}, "deviation": 0.0}
        for n, side in zip(names, sides):
            sim = traces[n][i]
            dev = abs(sim - (g if side == "high" else b))
            row["simulated"][n] = sim
            row["deviation"] = max(row["deviation"], dev)
        worst = max(worst, row["deviation"])
        rows.append(row)

    rep.data.update(promise=[promise.delta, promise.epsilon], query_count=plan.query_count,
                    ledger=rows, sides=dict(zip(names, sides)), max_deviation=worst)
    header = f"{'stage':<34}{'p_good':>14}{'p_bad':>14}" + "".join(f"{n[:14]:>16}" for n in names)
    rep.say(f"promise ({promise.delta:.12g}, {promise.epsilon:.12g}); "
            f"{len(plan.stages)} stages; {plan.query_count} calls to C")
    rep.say(header)
    for row in rows:
        rep.say(f"{row['stage']:<34}{row['p_good']:>14.9f}{row['p_bad']:>14.9f}"
                + "".join(f"{row['simulated'][n]:>16.9f}" for n in names))
    verdicts = {}
    for n in names:
        p = traces[n][-1]
        verdicts[n] = "E" if abs(p - 1) <= args.tolerance else "F" if abs(p) <= args.tolerance else "?"
    rep.data["verdicts"] = verdicts
    rep.say("final: " + ", ".join(f"{n} -> {v}" for n, v in verdicts.items()))
    rep.say(f"max |simulated - ledger| = {worst:.3g}")
    if args.verify and worst > args.tolerance:
        raise VerificationError(f"simulation drifted from the ledger by {worst:.3g}")
    if not args.separator and "?" in verdicts.values():
        raise VerificationError("some final probabilities are not deterministic")
    return 0


def _probe(pf, c1, c2, args):
    if args.probe == "input":
        if pf.input is None:
            raise ParseError("--probe input needs an 'input' line", pf.path)
        return pf.input
    phi, _ = optimal_input(c1, c2, seed=args.seed)
    return phi


def cmd_distinguish(args, rep):
    pf = load(args.system)
    n1, n2 = _pick(pf, [x for x in (args.c1, args.c2) if x], 2, "distinguish")
    c1, c2 = _bound(pf, n1), _bound(pf, n2)
    phi = _probe(pf, c1, c2, args)
    dplan = build_circuit_distinguisher(c1, c2, phi)
    devices = args.device or [n1, n2]
    verdicts = {}
    for d in devices:
        if d not in pf.circuits:
            raise ParseError(f"no circuit named {d!r}", pf.path)
        verdicts[d] = decide(dplan, _bound(pf, d), args.tolerance)
    rep.data.update(c1=n1, c2=n2, epsilon=dplan.epsilon, query_count=dplan.plan.query_count,
                    probe=phi, verdicts=verdicts)
    rep.say(f"C1 = {n1}, C2 = {n2}, eps = {dplan.epsilon:.12g}, {dplan.plan.query_count} calls")
    for d, v in verdicts.items():
        rep.say(f"{d}: {v}")
    return 0


def cmd_fault_detect(args, rep):
    pf = load(args.system)
    ref, fault = _pick(pf, [x for x in (args.reference, args.fault) if x], 2, "fault-detect")
    devices = args.device or [ref, fault]
    verdicts = {}
    for d in devices:
        if d not in pf.circuits:
            raise ParseError(f"no circuit named {d!r}", pf.path)
        verdicts[d] = fault_detect(_bound(pf, ref), _bound(pf, fault), _bound(pf, d), seed=args.seed)
    rep.data.update(reference=ref, fault_model=fault, verdicts=verdicts)
    rep.say(f"reference = {ref}, fault model = {fault}")
    for d, v in verdicts.items():
        rep.say(f"{d}: {v}")
    return 0


def cmd_optimal_input(args, rep):
    pf = load(args.system)
    n1, n2 = _pick(pf, [x for x in (args.c1, args.c2) if x], 2, "optimal-input")
    c1, c2 = _bound(pf, n1), _bound(pf, n2)
    phi, eps = optimal_input(c1, c2, seed=args.seed)
    rep.data.update(c1=n1, c2=n2, epsilon_star=eps, phi_star=phi,
                    check=overlap_epsilon(c1, c2, phi))
    rep.say(f"eps* = {eps:.12g}  (direct overlap at phi*: {overlap_epsilon(c1, c2, phi):.12g})")
    rep.say("phi* = [" + ", ".join(f"{z:.9g}" for z in phi) + "]")
    return 0


def cmd_derandomize(args, rep):
    pf = load(args.system)
    promise = args.promise or pf.promise
    if promise is None or pf.input_length is None:
        raise ParseError("derandomize needs 'promise' and 'input-length' lines", pf.path)
    (name,) = _pick(pf, [args.circuit] if args.circuit else [], 1, "derandomize")
    n = pf.input_length
    members = {int(b, 2) for b in pf.members}
    if any(len(b) != n for b in pf.members):
        raise ParseError(f"members must be {n}-bit strings", pf.path)
    fixture = LanguageFixture(n, pf.qubits - n, members, _bound(pf, name), promise, pf.projector)
    res = derandomize_family_full(fixture, args.tolerance)
    wrong = [x for x, v in res.table.items() if v.accept != (int(x, 2) in members)]
    rep.data.update(query_count=res.plan.query_count, qubits=res.circuit.qubit_count,
                    uniform=True, table={x: {"accept": v.accept, "p_E": v.p_E} for x, v in res.table.items()},
                    disagreements=wrong)
    rep.say(f"uniform circuit on {res.circuit.qubit_count} qubits, {res.plan.query_count} calls to C; "
            f"gate lists identical across all {len(res.table)} inputs")
    for x, v in res.table.items():
        rep.say(f"  x={x}  p_E={v.p_E:.3g}  {'accept' if v.accept else 'reject'}")
    if wrong:
        raise VerificationError(f"verdicts disagree with declared members at {', '.join(wrong)}")
    return 0


def cmd_schedule(args, rep):
    eps = args.epsilon
    if not 0 < eps <= 1:
        raise InvalidPromiseError(f"epsilon {eps} outside (0, 1]")
    chain = []
    if eps < 0.25:
        sched = epsilon_schedule(eps)
        closed = sched.closed_form()
        for j, (e, cf, calls) in enumerate(zip(sched.epsilons, closed, sched.calls), 1):
            chain.append({"k": j, "epsilon": e, "closed_form": cf, "calls": calls})
            rep.say(f"k={j} ε{j}≈{e:.6g} calls {calls}   (sin^2(3^{j} beta) = {cf:.12g})")
    else:
        rep.say("epsilon >= 1/4: no chain needed")
    sep = build_separator(SeparablePromise(0.0, eps))
    perfect = build_perfect_distinguisher(SeparablePromise(0.0, eps))
    rep.say(f"separator: {', '.join(map(str, sep.stages)) or 'identity'}; {sep.query_count} calls")
    rep.say(f"perfect distinguisher for (0, {eps:.6g}): {perfect.query_count} calls")
    rep.data.update(epsilon=eps, schedule=chain, separator_calls=sep.query_count,
                    separator_stages=[str(s) for s in sep.stages], perfect_calls=perfect.query_count)
    return 0


COMMANDS = {
    "simulate": cmd_simulate, "amplify": cmd_amplify, "distinguish": cmd_distinguish,
    "fault-detect": cmd_fault_detect, "optimal-input": cmd_optimal_input,
    "derandomize": cmd_derandomize, "schedule": cmd_schedule,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--qubit-budget", type=int, default=sk.DEFAULT_QUBIT_BUDGET)
    common.add_argument("--tolerance", type=float, default=sk.PROB_TOL, help="probability tolerance")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=0, help="seed for optimizer restarts")

    p = argparse.ArgumentParser(prog="exactamp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="outcome distribution of each system")
    s.add_argument("--system", required=True)
    s.add_argument("--amplitudes", action="store_true")

    s = sub.add_parser("amplify", parents=[common], help="build and apply a perfect plan")
    s.add_argument("--system", required=True)
    s.add_argument("--promise", type=_promise)
    s.add_argument("--verify", action="store_true")
    s.add_argument("--separator", action="store_true", help="stop after the first separator")

    s = sub.add_parser("distinguish", parents=[common], help="decide which circuit is in the box")
    s.add_argument("--system", required=True)
    s.add_argument("--c1")
    s.add_argument("--c2")
    s.add_argument("--device", action="append")
    s.add_argument("--probe", choices=("optimal", "input"), default="optimal")

    s = sub.add_parser("fault-detect", parents=[common], help="fault-free or faulty")
    s.add_argument("--system", required=True)
    s.add_argument("--reference")
    s.add_argument("--fault")
    s.add_argument("--device", action="append")

    s = sub.add_parser("optimal-input", parents=[common], help="best probe state for two circuits")
    s.add_argument("--system", required=True)
    s.add_argument("--c1")
    s.add_argument("--c2")

    s = sub.add_parser("derandomize", parents=[common], help="uniform zero-error decision table")
    s.add_argument("--system", required=True)
    s.add_argument("--promise", type=_promise)
    s.add_argument("--circuit")

    s = sub.add_parser("schedule", parents=[common], help="chain of epsilons and call counts")
    s.add_argument("--epsilon", type=float, required=True)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return BAD_INPUT if e.code else 0
    rep = Report(args.command)
    t0 = time.perf_counter()
    try:
        with sk.qubit_budget(args.qubit_budget):
            status = COMMANDS[args.command](args, rep)
    except (PromiseViolation, VerificationError, IndistinguishableError) as e:
        rep.data["error"] = str(e)
        rep.say(f"error: {e}")
        status = FAIL
    except (ExactAmpError, ValueError) as e:
        rep.data["error"] = str(e)
        rep.say(f"error: {e}")
        status = BAD_INPUT
    rep.data["exit"] = status
    rep.data["seconds"] = round(time.perf_counter() - t0, 4)
    rep.emit(args.format, sys.stdout)
    return status


if __name__ == "__main__":
    sys.exit(main())
