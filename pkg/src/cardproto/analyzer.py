"""Exhaustive execution and verification of card protocols with exact rationals.

Two execution routes exist.  ``enumerate_runs`` walks one path per choice
vector and is what ``run``/sampling build on.  ``Explorer`` computes the
joint distribution of (visible trace, result) per input, memoizing on
``(pc, deck)`` so identical intermediate decks reached by different random
choices are expanded once; every verdict is derived from it.
"""

from __future__ import annotations

import math
import os
import random
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .deck import Card, CardSequence, Observation
from .errors import BudgetExceeded, DomainError, ProtocolError, UncoveredBranch
from .protocol import (BRANCH, CONCEAL, HALT, JUMP, OUTPUT, PERM, REVEAL, SHUFFLE,
                       FunctionSpec, Protocol, evaluate_output, pattern_matches)
from .shuffles import RandomChoice

DEFAULT_BUDGET = 20_000_000

Trace = tuple[Observation, ...]


def frac(x: Fraction) -> str:
    """Canonical ``p/q`` rendering used in every report."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def render_trace(trace: Trace) -> str:
    return " | ".join(str(o) for o in trace) if trace else "(nothing revealed)"


def _permute(deck: tuple, images: tuple) -> tuple:
    out = [None] * len(deck)
    for i, j in enumerate(images):
        out[j] = deck[i]
    return tuple(out)


def _flip(deck: tuple, positions: tuple) -> tuple:
    cards = list(deck)
    for p in positions:
        c = cards[p]
        cards[p] = Card(c.suit, not c.face_up)
    return tuple(cards)


def _branch_target(arg, deck, pc, origin):
    positions, exact, wild = arg
    pattern = "".join(deck[p].suit.value for p in positions)
    target = exact.get(pattern)
    if target is None:
        for pat, t in wild:
            if pattern_matches(pat, pattern):
                return pattern, t
        raise UncoveredBranch(pc, pattern, origin)
    return pattern, target


# ---------------------------------------------------------------- path enumeration


@dataclass(frozen=True)
class RunOutcome:
    inputs: tuple[int, ...]
    choices: tuple[RandomChoice, ...]
    trace: Trace
    probability: Fraction
    result: int
    visible: bool
    final_deck: CardSequence = field(repr=False, compare=False)


@dataclass
class StepRecord:
    label: str
    deck: tuple
    observation: Optional[Observation] = None
    choice: Optional[RandomChoice] = None


def _walk(protocol: Protocol, inputs, choose, budget: int, log: Optional[list] = None):
    """Depth-first walk; ``choose(pc, n)`` yields the choice indices to follow."""
    code = protocol.program.code
    inputs = protocol.check_input(inputs)
    start = tuple(protocol.initial_deck(inputs))
    visits = [0]
    out: list[RunOutcome] = []

    def go(pc, deck, choices, trace, prob):
        while True:
            visits[0] += 1
            if visits[0] > budget:
                raise BudgetExceeded(f"more than {budget} steps while enumerating {protocol.name}")
            ins = code[pc]
            op = ins.op
            if op == PERM:
                deck = _permute(deck, ins.arg)
                pc += 1
            elif op == REVEAL:
                deck = _flip(deck, ins.arg)
                obs = Observation(tuple(p + 1 for p in ins.arg), "".join(deck[p].suit.value for p in ins.arg))
                trace = trace + (obs,)
                pc += 1
            elif op == CONCEAL:
                deck = _flip(deck, ins.arg)
                pc += 1
            elif op == BRANCH:
                _, pc = _branch_target(ins.arg, deck, pc, ins.origin)
                continue
            elif op == JUMP:
                pc = ins.arg
                continue
            elif op == SHUFFLE:
                perms, _ = ins.arg
                p = Fraction(1, len(perms))
                for i in choose(pc, len(perms)):
                    if log is not None:
                        log.append(StepRecord(ins.label, _permute(deck, perms[i]), None, RandomChoice(i, p)))
                    go(pc + 1, _permute(deck, perms[i]), choices + (RandomChoice(i, p),), trace, prob * p)
                return
            elif op == OUTPUT:
                stmt, positions = ins.arg
                value = evaluate_output(stmt, positions, deck)
                out.append(RunOutcome(inputs, choices, trace, prob, value, stmt.visible, CardSequence(deck)))
                return
            else:
                raise ProtocolError("protocol finished without an output")
            if log is not None:
                log.append(StepRecord(ins.label, deck, trace[-1] if op == REVEAL else None))

    go(0, start, (), (), Fraction(1))
    return out


def enumerate_runs(protocol: Protocol, inputs: Sequence[int], budget: int = DEFAULT_BUDGET) -> list[RunOutcome]:
    """One outcome per choice vector; probabilities sum to 1."""
    return _walk(protocol, inputs, lambda pc, n: range(n), budget)


def run_once(protocol: Protocol, inputs: Sequence[int], rng: random.Random,
             budget: int = DEFAULT_BUDGET) -> tuple[RunOutcome, list[StepRecord]]:
    """Execute a single path, drawing each shuffle choice from ``rng``."""
    log: list[StepRecord] = []
    (outcome,) = _walk(protocol, inputs, lambda pc, n: [rng.randrange(n)], budget, log)
    return outcome, log


def deck_distribution(protocol: Protocol, inputs: Sequence[int]) -> dict[tuple, Fraction]:
    """Distribution of the final deck (suits and orientation) over all paths."""
    dist: dict[tuple, Fraction] = defaultdict(Fraction)
    for run in enumerate_runs(protocol, inputs):
        dist[tuple(run.final_deck)] += run.probability
    return dict(dist)


# ---------------------------------------------------------------- memoized explorer


class Explorer:
    """Exact distribution of (trace, result) per input, memoized on (pc, deck).

    Internally a distribution is an integer count per outcome over a shared
    denominator; fractions are built only when a caller asks.
    """

    def __init__(self, protocol: Protocol, budget: int = DEFAULT_BUDGET):
        self.protocol = protocol
        self.code = protocol.program.code
        self.budget = budget
        self.visits = 0
        self.memo: dict = {}
        self.taken: set[tuple[int, str]] = set()

    def outcomes(self, inputs: Sequence[int]) -> dict[tuple[Trace, int], Fraction]:
        denom, counts = self.counts(inputs)
        return {k: Fraction(v, denom) for k, v in counts.items()}

    def counts(self, inputs: Sequence[int]) -> tuple[int, dict]:
        """``(denominator, {(trace, result): numerator})`` for one input."""
        deck = tuple(self.protocol.initial_deck(inputs))
        denom, counts, _ = self._explore(0, deck)
        return denom, counts

    def signatures(self, inputs: Sequence[int]) -> frozenset:
        """Shuffle-kind sequences over all paths of one input."""
        deck = tuple(self.protocol.initial_deck(inputs))
        return self._explore(0, deck)[2]

    def _explore(self, pc: int, deck: tuple):
        key = (pc, deck)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        code = self.code
        prefix: list[Observation] = []
        while True:
            self.visits += 1
            if self.visits > self.budget:
                raise BudgetExceeded(f"more than {self.budget} steps while analyzing {self.protocol.name}")
            ins = code[pc]
            op = ins.op
            if op == PERM:
                deck = _permute(deck, ins.arg)
                pc += 1
            elif op == REVEAL:
                deck = _flip(deck, ins.arg)
                prefix.append(Observation(tuple(p + 1 for p in ins.arg),
                                          "".join(deck[p].suit.value for p in ins.arg)))
                pc += 1
            elif op == CONCEAL:
                deck = _flip(deck, ins.arg)
                pc += 1
            elif op == BRANCH:
                pattern, target = _branch_target(ins.arg, deck, pc, ins.origin)
                self.taken.add((pc, pattern))
                pc = target
            elif op == JUMP:
                pc = ins.arg
            elif op == SHUFFLE:
                perms, kind = ins.arg
                subs = [self._explore(pc + 1, _permute(deck, images)) for images in perms]
                common = math.lcm(*(d for d, _, _ in subs))
                dist: dict = defaultdict(int)
                sigs = set()
                for d, sub, subsigs in subs:
                    scale = common // d
                    for k, v in sub.items():
                        dist[k] += v * scale
                    sigs.update((kind,) + s for s in subsigs)
                denom, dist, sigs = common * len(perms), dict(dist), frozenset(sigs)
                break
            elif op == OUTPUT:
                stmt, positions = ins.arg
                denom, dist = 1, {((), evaluate_output(stmt, positions, deck)): 1}
                sigs = frozenset([()])
                break
            else:
                raise ProtocolError("protocol finished without an output")
        if prefix:
            pre = tuple(prefix)
            dist = {(pre + t, v): q for (t, v), q in dist.items()}
        result = (denom, dist, sigs)
        self.memo[key] = result
        return result

    def dead_branches(self) -> list[tuple[int, str]]:
        """Branch patterns no explored path took."""
        dead = []
        for pc, ins in enumerate(self.code):
            if ins.op != BRANCH:
                continue
            _, exact, wild = ins.arg
            for pattern in list(exact) + [w for w, _ in wild]:
                if not any(tpc == pc and pattern_matches(pattern, got) for tpc, got in self.taken):
                    dead.append((pc, pattern))
        return dead


def _explore_chunk(protocol: Protocol, chunk, budget: int):
    ex = Explorer(protocol, budget)
    rows = [(inp, ex.counts(inp), ex.signatures(inp)) for inp in chunk]
    return rows, ex.taken


def worker_count(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get("CARDPROTO_THREADS")
        threads = int(env) if env else 1
    return max(1, threads)


@dataclass
class Exploration:
    """Outcome distributions for every input of a protocol's domain.

    ``raw`` keeps each input's integer counts over one denominator;
    ``outcomes`` is the same data as fractions, built on first use.
    """

    protocol: Protocol
    raw: dict[tuple[int, ...], tuple[int, dict]]
    signatures: dict[tuple[int, ...], frozenset]
    dead: list[tuple[int, str]]

    @cached_property
    def outcomes(self) -> dict[tuple[int, ...], dict]:
        return {inp: {k: Fraction(v, d) for k, v in counts.items()} for inp, (d, counts) in self.raw.items()}

    def trace_counts(self, inputs) -> tuple[int, dict[Trace, int]]:
        denom, counts = self.raw[tuple(inputs)]
        dist: dict = defaultdict(int)
        for (trace, _), v in counts.items():
            dist[trace] += v
        return denom, dict(dist)

    def trace_distribution(self, inputs) -> dict[Trace, Fraction]:
        denom, counts = self.trace_counts(inputs)
        return {t: Fraction(v, denom) for t, v in counts.items()}


def explore(protocol: Protocol, inputs: Optional[Iterable[Sequence[int]]] = None,
            threads: Optional[int] = None, budget: int = DEFAULT_BUDGET) -> Exploration:
    """Explore every input (or the given ones).  Merging is order-independent."""
    inputs = [tuple(i) for i in (protocol.domain() if inputs is None else inputs)]
    workers = min(worker_count(threads), len(inputs))
    if workers <= 1:
        rows, taken = _explore_chunk(protocol, inputs, budget)
        results = [(rows, taken)]
    else:
        chunks = [inputs[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_explore_chunk, [protocol] * workers, chunks, [budget] * workers))
    raw, sigs, taken = {}, {}, set()
    for rows, t in results:
        taken |= t
        for inp, dist, sg in rows:
            raw[inp] = dist
            sigs[inp] = sg
    ordered = {inp: raw[inp] for inp in inputs}
    probe = Explorer(protocol)
    probe.taken = taken
    return Exploration(protocol, ordered, {inp: sigs[inp] for inp in inputs}, probe.dead_branches())


def _as_exploration(protocol, exploration, threads, budget) -> Exploration:
    if exploration is None:
        return explore(protocol, threads=threads, budget=budget)
    return exploration


# ---------------------------------------------------------------- correctness


@dataclass
class CorrectnessReport:
    passed: bool
    counterexamples: list[dict]
    inputs_checked: int

    def to_json(self) -> dict:
        return {"pass": self.passed, "counterexamples": self.counterexamples}


def verify_correctness(protocol: Protocol, spec: Optional[FunctionSpec] = None,
                       exploration: Optional[Exploration] = None, threads=None,
                       budget: int = DEFAULT_BUDGET, limit: int = 20) -> CorrectnessReport:
    """Every reachable (trace, result) of every input must carry ``f(input)``."""
    spec = spec or protocol.function
    ex = _as_exploration(protocol, exploration, threads, budget)
    bad = []
    for inp, (denom, counts) in ex.raw.items():
        want = spec(inp)
        wrong = [(key, v) for key, v in counts.items() if key[1] != want]
        for (trace, value), v in sorted(wrong):
            bad.append({"input": list(inp), "trace": render_trace(trace), "result": value,
                        "expected": want, "probability": frac(Fraction(v, denom))})
    return CorrectnessReport(not bad, bad[:limit], len(ex.raw))


# ---------------------------------------------------------------- security


def output_classes(protocol: Protocol, spec: FunctionSpec, inputs) -> dict:
    """Inputs grouped by what an observer may legitimately learn.

    Public outputs split inputs by function value.  Hidden outputs reveal
    nothing, so every input falls into one class.
    """
    classes: dict = defaultdict(list)
    visible = protocol.outputs_visible
    for inp in inputs:
        classes[spec(inp) if visible else None].append(tuple(inp))
    return dict(classes)


def compare_distributions(d1: Mapping[Trace, Fraction], d2: Mapping[Trace, Fraction]):
    """Smallest trace whose probability differs, with both probabilities; else None."""
    if d1 == d2:
        return None
    for trace in sorted(set(d1) | set(d2)):
        p1, p2 = d1.get(trace, Fraction(0)), d2.get(trace, Fraction(0))
        if p1 != p2:
            return trace, p1, p2
    return None


def _compare_counts(a: tuple[int, dict], b: tuple[int, dict]):
    """``compare_distributions`` on integer counts, cross-multiplying denominators."""
    (da, ca), (db, cb) = a, b
    if da == db and ca == cb:
        return None
    if all(ca.get(t, 0) * db == v * da for t, v in cb.items()) and all(t in cb for t in ca):
        return None
    for trace in sorted(set(ca) | set(cb)):
        if ca.get(trace, 0) * db != cb.get(trace, 0) * da:
            return trace, Fraction(ca.get(trace, 0), da), Fraction(cb.get(trace, 0), db)
    return None


@dataclass
class SecurityReport:
    passed: bool
    violations: list[dict]
    classes: dict
    counts: dict = field(repr=False, default_factory=dict)  # input -> (denominator, trace counts)

    def compare(self, i1, i2) -> Optional[dict]:
        """Verdict for one pair; symmetric up to swapping the two probabilities."""
        hit = _compare_counts(self.counts[tuple(i1)], self.counts[tuple(i2)])
        if hit is None:
            return None
        trace, p1, p2 = hit
        return {"inputs": [list(i1), list(i2)], "trace": render_trace(trace),
                "probabilities": [frac(p1), frac(p2)]}

    def to_json(self) -> dict:
        return {"pass": self.passed, "violations": self.violations}


def verify_security(protocol: Protocol, spec: Optional[FunctionSpec] = None,
                    exploration: Optional[Exploration] = None, threads=None,
                    budget: int = DEFAULT_BUDGET, limit: int = 20) -> SecurityReport:
    """Trace distributions must agree exactly within every output class."""
    spec = spec or protocol.function
    ex = _as_exploration(protocol, exploration, threads, budget)
    dists = {inp: ex.trace_counts(inp) for inp in ex.raw}
    classes = output_classes(protocol, spec, ex.raw)
    report = SecurityReport(True, [], classes, dists)
    for members in classes.values():
        ref = members[0]
        for other in members[1:]:
            v = report.compare(ref, other)
            if v is not None:
                report.passed = False
                if len(report.violations) < limit:
                    report.violations.append(v)
    return report


# ---------------------------------------------------------------- posteriors


def uniform_prior(inputs) -> dict[tuple[int, ...], Fraction]:
    inputs = [tuple(i) for i in inputs]
    return {i: Fraction(1, len(inputs)) for i in inputs}


def point_prior(inputs, at) -> dict[tuple[int, ...], Fraction]:
    return {tuple(i): Fraction(int(tuple(i) == tuple(at))) for i in inputs}


@dataclass
class PosteriorTable:
    """Bayes posteriors over inputs for each reachable visible trace."""

    prior: dict
    rows: dict  # trace -> {input: posterior}
    evidence: dict  # trace -> Pr(trace)
    values: dict  # trace -> set of co-occurring output values
    visible: bool
    function: FunctionSpec

    def posterior(self, trace: Trace) -> dict:
        if trace not in self.rows:
            raise DomainError(f"trace {render_trace(trace)} has probability zero under this prior")
        return self.rows[trace]

    def expected(self, trace: Trace) -> dict:
        """The prior conditioned on what the output legitimately discloses."""
        if self.visible:
            allowed = {i for i in self.prior if self.function(i) in self.values[trace]}
        else:
            allowed = set(self.prior)
        mass = sum(self.prior[i] for i in allowed)
        return {i: (self.prior[i] / mass if i in allowed else Fraction(0)) for i in self.prior}

    def mismatches(self) -> list[Trace]:
        return [t for t in self.rows if self.rows[t] != self.expected(t)]

    def matches_prior(self) -> bool:
        return not self.mismatches()

    def marginal(self, trace: Trace, index: int) -> dict[int, Fraction]:
        out: dict = defaultdict(Fraction)
        for inp, p in self.posterior(trace).items():
            out[inp[index]] += p
        return dict(out)

    def prior_marginal(self, index: int) -> dict[int, Fraction]:
        out: dict = defaultdict(Fraction)
        for inp, p in self.prior.items():
            out[inp[index]] += p
        return dict(out)

    def to_json(self) -> list[dict]:
        rows = []
        for trace in sorted(self.rows):
            rows.append({
                "trace": render_trace(trace),
                "probability": frac(self.evidence[trace]),
                "posterior": {",".join(map(str, i)): frac(p) for i, p in sorted(self.rows[trace].items())},
                "matches_prior": self.rows[trace] == self.expected(trace),
            })
        return rows


def kwh_posteriors(protocol: Protocol, prior: Mapping, upto: Optional[int] = None,
                   exploration: Optional[Exploration] = None, threads=None,
                   budget: int = DEFAULT_BUDGET) -> PosteriorTable:
    """Posterior over inputs given the first ``upto`` observations (all if None)."""
    prior = {tuple(k): Fraction(v) for k, v in prior.items()}
    if sum(prior.values()) != 1 or any(v < 0 for v in prior.values()):
        raise DomainError("prior must be a probability distribution over inputs")
    for inp in prior:
        protocol.check_input(inp)
    ex = _as_exploration(protocol, exploration, threads, budget)
    joint: dict = defaultdict(lambda: defaultdict(Fraction))
    values: dict = defaultdict(set)
    for inp, pi in prior.items():
        denom, counts = ex.raw[inp]
        weight = pi / denom
        for (trace, value), v in counts.items():
            t = trace if upto is None else trace[:upto]
            values[t].add(value)
            if pi:
                joint[t][inp] += weight * v
    rows, evidence = {}, {}
    for t, per in joint.items():
        total = sum(per.values())
        if total == 0:
            continue
        evidence[t] = total
        rows[t] = {i: per.get(i, Fraction(0)) / total for i in prior}
    return PosteriorTable(prior, rows, evidence, {t: values[t] for t in rows},
                          protocol.outputs_visible, protocol.function)


# ---------------------------------------------------------------- resources


@dataclass
class ResourceCount:
    cards: int
    clubs: int
    hearts: int
    shuffles_min: int
    shuffles_max: int
    by_kind: dict

    @property
    def uniform(self) -> bool:
        return self.shuffles_min == self.shuffles_max

    @property
    def shuffles(self) -> int:
        return self.shuffles_max

    def to_json(self) -> dict:
        return {
            "cards": self.cards,
            "suits": {"C": self.clubs, "H": self.hearts},
            "shuffles": self.shuffles_max if self.uniform else [self.shuffles_min, self.shuffles_max],
            "uniform": self.uniform,
            "by_kind": {k: (v[0] if v[0] == v[1] else list(v)) for k, v in sorted(self.by_kind.items())},
        }


def count_resources(protocol: Protocol, exploration: Optional[Exploration] = None,
                    threads=None, budget: int = DEFAULT_BUDGET) -> ResourceCount:
    ex = _as_exploration(protocol, exploration, threads, budget)
    splits = {protocol.initial_deck(i).suit_counts() for i in ex.signatures}
    if len(splits) != 1:
        raise ProtocolError(f"suit split depends on the input: {sorted(splits)}")
    clubs, hearts = splits.pop()
    all_sigs = set().union(*ex.signatures.values())
    lengths = [len(s) for s in all_sigs]
    kinds = sorted({k for s in all_sigs for k in s})
    by_kind = {k: (min(s.count(k) for s in all_sigs), max(s.count(k) for s in all_sigs)) for k in kinds}
    return ResourceCount(protocol.card_count, clubs, hearts, min(lengths), max(lengths), by_kind)


# ---------------------------------------------------------------- sampling


def trace_probability(protocol: Protocol, inputs: Sequence[int], trace: Trace,
                      budget: int = DEFAULT_BUDGET) -> Fraction:
    """Exact Pr(trace | inputs), following only paths consistent with ``trace``."""
    code = protocol.program.code
    memo: dict = {}
    visits = [0]

    def go(pc, deck, idx):
        key = (pc, deck, idx)
        if key in memo:
            return memo[key]
        start = key
        while True:
            visits[0] += 1
            if visits[0] > budget:
                raise BudgetExceeded("trace probability exceeded the step budget")
            ins = code[pc]
            op = ins.op
            if op == PERM:
                deck, pc = _permute(deck, ins.arg), pc + 1
            elif op == REVEAL:
                deck = _flip(deck, ins.arg)
                obs = Observation(tuple(p + 1 for p in ins.arg), "".join(deck[p].suit.value for p in ins.arg))
                if idx >= len(trace) or trace[idx] != obs:
                    result = Fraction(0)
                    break
                idx, pc = idx + 1, pc + 1
            elif op == CONCEAL:
                deck, pc = _flip(deck, ins.arg), pc + 1
            elif op == BRANCH:
                _, pc = _branch_target(ins.arg, deck, pc, ins.origin)
            elif op == JUMP:
                pc = ins.arg
            elif op == SHUFFLE:
                perms, _ = ins.arg
                result = sum((go(pc + 1, _permute(deck, im), idx) for im in perms), Fraction(0)) / len(perms)
                break
            elif op == OUTPUT:
                result = Fraction(int(idx == len(trace)))
                break
            else:
                raise ProtocolError("protocol finished without an output")
        memo[start] = result
        return result

    return go(0, tuple(protocol.initial_deck(inputs)), 0)


def sampled_check(protocol: Protocol, samples: int, seed: int,
                  budget: int = DEFAULT_BUDGET, limit: int = 20) -> dict:
    """Refutation-only check from ``samples`` random paths per input.

    Correctness is checked on the sampled paths.  For each sampled trace the
    exact probability under every other input of the same class is computed;
    any difference is a genuine violation.  Passing proves nothing.
    """
    spec = protocol.function
    inputs = [tuple(i) for i in protocol.domain()]
    classes = output_classes(protocol, spec, inputs)
    wrong, leaks = [], []
    seen: set = set()
    for inp in inputs:
        rng = random.Random(f"{seed}:{','.join(map(str, inp))}")
        for _ in range(samples):
            run, _ = run_once(protocol, inp, rng, budget)
            if run.result != spec(inp):
                wrong.append({"input": list(inp), "trace": render_trace(run.trace), "result": run.result,
                              "expected": spec(inp), "probability": frac(run.probability)})
            cls = spec(inp) if protocol.outputs_visible else None
            if (cls, run.trace) in seen:
                continue
            seen.add((cls, run.trace))
            probs = {m: trace_probability(protocol, m, run.trace, budget) for m in classes[cls]}
            ref = probs[classes[cls][0]]
            for m, p in probs.items():
                if p != ref:
                    leaks.append({"inputs": [list(classes[cls][0]), list(m)], "trace": render_trace(run.trace),
                                  "probabilities": [frac(ref), frac(p)]})
                    break
    return {
        "correctness": {"pass": not wrong, "counterexamples": wrong[:limit]},
        "security": {"pass": not leaks, "violations": leaks[:limit]},
        "sampling": {"samples_per_input": samples, "seed": seed, "proof": False},
    }


# ---------------------------------------------------------------- reports


def analysis_report(protocol: Protocol, prior: Optional[Mapping] = None, threads=None,
                    budget: int = DEFAULT_BUDGET, include_posteriors: bool = False) -> dict:
    """Full JSON-ready report; rationals rendered as ``p/q`` strings."""
    ex = explore(protocol, threads=threads, budget=budget)
    report = {
        "protocol": protocol.name,
        "params": protocol.params_json(),
        "function": protocol.function.to_json(),
        "correctness": verify_correctness(protocol, exploration=ex).to_json(),
        "security": verify_security(protocol, exploration=ex).to_json(),
        "resources": count_resources(protocol, exploration=ex).to_json(),
        "dead_branches": [{"branch": pc, "pattern": pat} for pc, pat in ex.dead],
    }
    if include_posteriors:
        prior = prior or uniform_prior(protocol.domain())
        table = kwh_posteriors(protocol, prior, exploration=ex)
        report["posteriors"] = table.to_json()
        report["posteriors_match_prior"] = table.matches_prior()
    return report
