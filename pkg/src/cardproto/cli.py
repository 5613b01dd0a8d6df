"""``cardproto`` command line: run, verify, analyze, resources, check-script.

Exit codes: 0 pass, 1 bad usage or input, 2 a verification verdict failed,
3 the enumeration budget ran out.
"""

from __future__ import annotations

import argparse
import inspect
import json
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import analyzer as an
from . import script as sc
from .errors import BudgetExceeded, DomainError, ProtocolError
from .protocol import OUTPUT, Protocol
from .protocols import BUILTINS
from . import steps as st

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_BUDGET = 0, 1, 2, 3
BUILTIN_FLAGS = ("n", "k", "g")


class UsageError(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def dumps(report) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- protocol selection


def load_protocol(args) -> Protocol:
    if bool(args.protocol) == bool(args.script):
        raise UsageError("give exactly one of a built-in protocol name or --script PATH")
    if args.script:
        if any(getattr(args, f) is not None for f in BUILTIN_FLAGS):
            raise UsageError("--n/--k/--g only apply to built-in protocols")
        return sc.load(Path(args.script).read_text(encoding="utf-8"))
    factory = BUILTINS.get(args.protocol)
    if factory is None:
        raise UsageError(f"unknown protocol {args.protocol!r}; choose from {', '.join(BUILTINS)}")
    accepted = inspect.signature(factory).parameters
    params = {}
    for flag in BUILTIN_FLAGS:
        value = getattr(args, flag)
        if value is None:
            continue
        if flag not in accepted:
            raise UsageError(f"{args.protocol} takes no --{flag}")
        params[flag] = value
    missing = [p.name for p in accepted.values()
               if p.default is inspect.Parameter.empty and p.name not in params]
    if missing:
        raise UsageError(f"{args.protocol} needs " + ", ".join(f"--{m}" for m in missing))
    return factory(**params)


def _inputs(args, protocol: Protocol) -> tuple[int, ...]:
    if args.input is not None and (args.a is not None or args.b is not None):
        raise UsageError("use either --input or --a/--b")
    if args.input is not None:
        values = args.input
    elif args.a is not None and args.b is not None:
        values = [args.a, args.b]
    else:
        raise UsageError("run needs --input (or --a and --b)")
    return protocol.check_input(values)


def parse_prior(text: Optional[str], protocol: Protocol) -> dict:
    """``uniform``, ``point:1,0`` or explicit weights ``1,0=1/2;0,1=1/2``."""
    inputs = [tuple(i) for i in protocol.domain()]
    if not text or text == "uniform":
        return an.uniform_prior(inputs)
    if text.startswith("point:"):
        at = protocol.check_input(_int_list(text[len("point:"):]))
        return an.point_prior(inputs, at)
    prior = {i: Fraction(0) for i in inputs}
    try:
        for part in filter(None, text.split(";")):
            key, _, weight = part.partition("=")
            prior[protocol.check_input(_int_list(key))] = Fraction(weight.strip())
    except ValueError as exc:
        raise UsageError(f"bad prior {text!r}: {exc}") from None
    if sum(prior.values()) != 1:
        raise UsageError("prior weights must sum to 1")
    return prior


# ---------------------------------------------------------------- subcommands


def _header(protocol: Protocol) -> str:
    params = " ".join(f"{k}={','.join(map(str, v)) if isinstance(v, (list, tuple)) else v}"
                      for k, v in protocol.params)
    return f"protocol {protocol.name}" + (f"  {params}" if params else "")


def cmd_run(args, out) -> int:
    protocol = load_protocol(args)
    inputs = _inputs(args, protocol)
    seed = 0 if args.seed is None else args.seed
    outcome, log = an.run_once(protocol, inputs, random.Random(seed), args.budget)
    peek = args.unsafe_peek
    start = protocol.initial_deck(inputs)
    steps = [{"action": "start", "deck": start.render(peek)}]
    for rec in log:
        step = {"action": rec.label, "deck": "".join(c.render(peek) for c in rec.deck)}
        if rec.observation is not None:
            step["observed"] = str(rec.observation)
        if rec.choice is not None:
            step["choice"] = rec.choice.index
        steps.append(step)
    result = _result(protocol, outcome, peek)
    if args.format == "json":
        report = {"protocol": protocol.name, "params": protocol.params_json(), "inputs": list(inputs),
                  "seed": seed, "steps": steps, "trace": an.render_trace(outcome.trace),
                  "probability": an.frac(outcome.probability), "result": result}
        out.write(dumps(report))
        return EXIT_OK
    out.write(f"{_header(protocol)}  input {','.join(map(str, inputs))}  seed {seed}\n")
    width = max(len(s["action"]) for s in steps) + 2
    for s in steps:
        extra = ""
        if "choice" in s:
            extra = f"  (choice {s['choice']})"
        if "observed" in s:
            extra = f"  observed {s['observed']}"
        out.write(f"{s['action']:<{width}}{' '.join(s['deck'])}{extra}\n")
    out.write(result["line"] + "\n")
    return EXIT_OK


def _result(protocol: Protocol, outcome, peek: bool) -> dict:
    if outcome.visible:
        return {"kind": "public", "value": outcome.result, "line": f"result {outcome.result}"}
    stmt, positions = next(ins.arg for ins in protocol.program.code if ins.op == OUTPUT)
    kind = "committed" if isinstance(stmt, st.OutputCommitted) else "encoded"
    if peek:
        return {"kind": kind, "value": outcome.result, "line": f"{kind} output decodes to {outcome.result}"}
    where = st.format_positions(p + 1 for p in positions)
    return {"kind": kind, "line": f"{kind} output face down at {where} (decode with --unsafe-peek)"}


def _explore(args, protocol: Protocol) -> an.Exploration:
    return an.explore(protocol, threads=args.threads, budget=args.budget)


def _figures(args, protocol, ex, table=None) -> list[str]:
    if not args.plot_dir:
        return []
    from . import plotting

    folder = Path(args.plot_dir)
    folder.mkdir(parents=True, exist_ok=True)
    paths = [plotting.trace_heatmap(ex, folder / f"{protocol.name}_traces.png")]
    if table is not None:
        paths.append(plotting.posterior_figure(table, protocol.name, folder / f"{protocol.name}_posteriors.png"))
    return [str(p) for p in paths]


def cmd_verify(args, out) -> int:
    protocol = load_protocol(args)
    if args.sample is not None:
        return _sampled(args, protocol, out)
    ex = _explore(args, protocol)
    report = {
        "protocol": protocol.name,
        "params": protocol.params_json(),
        "correctness": an.verify_correctness(protocol, exploration=ex).to_json(),
        "security": an.verify_security(protocol, exploration=ex).to_json(),
        "resources": an.count_resources(protocol, exploration=ex).to_json(),
    }
    figures = _figures(args, protocol, ex)
    if figures:
        report["figures"] = figures
    passed = report["correctness"]["pass"] and report["security"]["pass"]
    _emit(args, out, protocol, report, len(ex.raw))
    return EXIT_OK if passed else EXIT_VIOLATION


def _sampled(args, protocol, out) -> int:
    if args.seed is None:
        raise UsageError("sampled mode (--sample N) requires --seed")
    if args.sample < 1:
        raise UsageError("--sample needs a positive count")
    report = {"protocol": protocol.name, "params": protocol.params_json(),
              **an.sampled_check(protocol, args.sample, args.seed, args.budget)}
    passed = report["correctness"]["pass"] and report["security"]["pass"]
    if args.format == "json":
        out.write(dumps(report))
    else:
        out.write(_header(protocol) + "\n")
        out.write(f"sampled {args.sample} paths per input, seed {args.seed} (refutation only, not a proof)\n")
        out.write(f"correctness  {'no counterexample found' if report['correctness']['pass'] else 'FAIL'}\n")
        out.write(f"security     {'no leak found' if report['security']['pass'] else 'FAIL'}\n")
        _violations(out, report)
    return EXIT_OK if passed else EXIT_VIOLATION


def _violations(out, report):
    for c in report["correctness"]["counterexamples"]:
        out.write(f"  input {','.join(map(str, c['input']))}: trace {c['trace']} gives {c['result']}, "
                  f"expected {c['expected']} (probability {c['probability']})\n")
    for v in report["security"]["violations"]:
        a, b = (",".join(map(str, i)) for i in v["inputs"])
        out.write(f"  inputs {a} and {b}: trace {v['trace']} has probability "
                  f"{v['probabilities'][0]} vs {v['probabilities'][1]}\n")


def _resources_line(res: dict) -> str:
    shuffles = res["shuffles"]
    shuffles = shuffles if res["uniform"] else f"{shuffles[0]}..{shuffles[1]} (differs by path)"
    kinds = ", ".join(f"{k} {v}" for k, v in res["by_kind"].items())
    return (f"resources    {res['cards']} cards ({res['suits']['C']} C, {res['suits']['H']} H), "
            f"{shuffles} shuffle{'' if shuffles == 1 else 's'}" + (f" [{kinds}]" if kinds else ""))


def _emit(args, out, protocol, report, n_inputs):
    if args.format == "json":
        out.write(dumps(report))
        return
    out.write(_header(protocol) + "\n")
    ok = lambda flag: "pass" if flag else "FAIL"  # noqa: E731
    out.write(f"correctness  {ok(report['correctness']['pass'])}  ({n_inputs} inputs)\n")
    out.write(f"security     {ok(report['security']['pass'])}\n")
    out.write(_resources_line(report["resources"]) + "\n")
    _violations(out, report)
    if "posteriors" in report:
        rows = report["posteriors"]
        good = sum(r["matches_prior"] for r in rows)
        out.write(f"posteriors   {good}/{len(rows)} traces leave the prior unchanged "
                  f"(conditioned on the output)\n")
        for r in rows:
            if not r["matches_prior"]:
                out.write(f"  trace {r['trace']}: posterior {r['posterior']}\n")
    for f in report.get("figures", []):
        out.write(f"wrote {f}\n")


def cmd_analyze(args, out) -> int:
    protocol = load_protocol(args)
    prior = parse_prior(args.prior, protocol)
    ex = _explore(args, protocol)
    table = an.kwh_posteriors(protocol, prior, upto=args.upto, exploration=ex)
    report = {
        "protocol": protocol.name,
        "params": protocol.params_json(),
        "correctness": an.verify_correctness(protocol, exploration=ex).to_json(),
        "security": an.verify_security(protocol, exploration=ex).to_json(),
        "resources": an.count_resources(protocol, exploration=ex).to_json(),
        "prior": {",".join(map(str, i)): an.frac(p) for i, p in sorted(prior.items())},
        "posteriors": table.to_json(),
        "posteriors_match_prior": table.matches_prior(),
    }
    if args.upto is not None:
        report["upto"] = args.upto
    figures = _figures(args, protocol, ex, table)
    if figures:
        report["figures"] = figures
    _emit(args, out, protocol, report, len(ex.raw))
    passed = report["correctness"]["pass"] and report["security"]["pass"] and table.matches_prior()
    return EXIT_OK if passed else EXIT_VIOLATION


def cmd_resources(args, out) -> int:
    protocol = load_protocol(args)
    res = an.count_resources(protocol, exploration=_explore(args, protocol)).to_json()
    if args.format == "json":
        out.write(dumps({"protocol": protocol.name, "params": protocol.params_json(), "resources": res}))
    else:
        out.write(_header(protocol) + "\n" + _resources_line(res) + "\n")
    return EXIT_OK


def cmd_check_script(args, out) -> int:
    text = Path(args.path).read_text(encoding="utf-8")
    try:
        protocol = sc.load(text)
    except sc.ScriptError as exc:
        diags = exc.diagnostics
        if args.format == "json":
            out.write(dumps({"ok": False, "diagnostics": [d._asdict() for d in diags]}))
        else:
            for d in diags:
                out.write(f"{args.path}:{d}\n")
        return EXIT_USAGE
    except sc.ElaborationError as exc:
        if args.format == "json":
            out.write(dumps({"ok": False, "problems": [{"line": ln, "message": m} for ln, m in exc.problems]}))
        else:
            for ln, msg in exc.problems:
                out.write(f"{args.path}:{ln}: {msg}\n")
        return EXIT_USAGE
    if args.format == "json":
        out.write(dumps({"ok": True, "protocol": protocol.name, "cards": protocol.card_count,
                         "inputs": protocol.arity}))
    else:
        out.write(f"{args.path}: ok ({protocol.name}, {protocol.card_count} cards, {protocol.arity} inputs)\n")
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgParser(prog="cardproto", description="Run and verify card-based secure computation protocols.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _ArgParser(add_help=False)
    common.add_argument("protocol", nargs="?", help=f"built-in protocol: {', '.join(BUILTINS)}")
    common.add_argument("--script", help="path to a .cardp script instead of a built-in")
    common.add_argument("--n", type=int, help="number of inputs")
    common.add_argument("--k", type=int, help="modulus or candidate count")
    common.add_argument("--g", type=_int_list, help="reduced function table, e.g. 0,1,1,0")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--budget", type=int, default=an.DEFAULT_BUDGET, help="enumeration step budget")
    common.add_argument("--threads", type=int, help="worker processes (default: $CARDPROTO_THREADS or 1)")

    run = sub.add_parser("run", parents=[common], help="execute one seeded path")
    run.add_argument("--input", type=_int_list, help="comma-separated input values")
    run.add_argument("--a", type=int, help="first input (shorthand for two-input protocols)")
    run.add_argument("--b", type=int, help="second input")
    run.add_argument("--seed", type=int)
    run.add_argument("--unsafe-peek", action="store_true", help="show face-down suits (breaks secrecy)")
    run.set_defaults(handler=cmd_run)

    plots = _ArgParser(add_help=False)
    plots.add_argument("--plot-dir", help="write figures into this directory")

    verify = sub.add_parser("verify", parents=[common, plots], help="exhaustive correctness and security")
    verify.add_argument("--sample", type=int, help="check N random paths per input instead (cannot prove)")
    verify.add_argument("--seed", type=int)
    verify.set_defaults(handler=cmd_verify)

    analyze = sub.add_parser("analyze", parents=[common, plots], help="verification plus posterior tables")
    analyze.add_argument("--prior", default="uniform", help="uniform | point:a,b,... | a,b=p;c,d=q")
    analyze.add_argument("--upto", type=int, help="condition only on the first N observations")
    analyze.set_defaults(handler=cmd_analyze)

    resources = sub.add_parser("resources", parents=[common], help="card and shuffle counts")
    resources.set_defaults(handler=cmd_resources)

    check = sub.add_parser("check-script", help="parse and elaborate a .cardp script")
    check.add_argument("path")
    check.add_argument("--format", choices=("text", "json"), default="text")
    check.set_defaults(handler=cmd_check_script)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args, out)
    except UsageError as exc:
        sys.stderr.write(f"cardproto: {exc}\n")
        return EXIT_USAGE
    except sc.ScriptError as exc:
        sys.stderr.write(f"cardproto: script errors\n{exc}\n")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        summary = {"protocol": getattr(args, "protocol", None) or getattr(args, "script", None),
                   "status": "budget-exceeded", "budget": args.budget, "message": str(exc)}
        if getattr(args, "format", "text") == "json":
            out.write(dumps(summary))
        else:
            out.write(f"budget exceeded: {exc}\n")
        return EXIT_BUDGET
    except (DomainError, ProtocolError, OSError) as exc:
        sys.stderr.write(f"cardproto: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
