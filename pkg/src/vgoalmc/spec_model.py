"""Abstract syntax, parser, printer, validator and grounder for `.vg` specifications.

The concrete grammar is documented in docs/LANGUAGE.md.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

SECTIONS = (
    "agents",
    "knowledge",
    "constraints",
    "actions",
    "send",
    "events",
    "effects",
    "domains",
    "prob",
    "safety",
)

# internal predicate prefixes for message and goal literals
RECEIVED = "received:"
GOAL = "goal:"


class SpecError(Exception):
    """Raised for malformed specifications."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class ParseError(SpecError):
    pass


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self):
        return self.name


def term_str(t) -> str:
    return t.name if isinstance(t, Var) else t


@dataclass(frozen=True, order=True)
class Atom:
    pred: str
    args: tuple = ()

    def __str__(self):
        if self.pred.startswith(RECEIVED):
            inner = Atom(self.pred[len(RECEIVED):], self.args[1:])
            return f"received({term_str(self.args[0])}, {inner})"
        if self.pred.startswith(GOAL):
            return f"goal({Atom(self.pred[len(GOAL):], self.args)})"
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(term_str(a) for a in self.args)})"

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def variables(self) -> set[str]:
        return {a.name for a in self.args if isinstance(a, Var)}

    def substitute(self, binding) -> Atom:
        if not binding:
            return self
        return Atom(self.pred, tuple(binding.get(a.name, a) if isinstance(a, Var) else a for a in self.args))


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"

    def variables(self):
        return self.atom.variables()

    def substitute(self, binding):
        return Literal(self.atom.substitute(binding), self.positive)


@dataclass(frozen=True)
class Neq:
    """Disequality between two terms, checked after grounding."""

    left: object
    right: object

    def __str__(self):
        return f"{term_str(self.left)} != {term_str(self.right)}"

    def variables(self):
        return {t.name for t in (self.left, self.right) if isinstance(t, Var)}

    def substitute(self, binding):
        def sub(t):
            return binding.get(t.name, t) if isinstance(t, Var) else t

        return Neq(sub(self.left), sub(self.right))


def body_str(body) -> str:
    return " and ".join(str(lit) for lit in body)


def body_vars(body) -> set[str]:
    out = set()
    for lit in body:
        out |= lit.variables()
    return out


@dataclass(frozen=True)
class Rule:
    """Knowledge rule `body implies head`; a fact when the body is empty."""

    head: Atom
    body: tuple = ()
    existential_vars: frozenset = frozenset()
    line: int | None = field(default=None, compare=False)

    def variables(self):
        return self.head.variables() | body_vars(self.body)

    def substitute(self, binding):
        return Rule(self.head.substitute(binding), tuple(l.substitute(binding) for l in self.body), frozenset(), self.line)


@dataclass(frozen=True)
class ConstraintRule:
    """`body implies forbid action(args)`."""

    action: Atom
    body: tuple = ()
    existential_vars: frozenset = frozenset()
    line: int | None = field(default=None, compare=False)

    def variables(self):
        return self.action.variables() | body_vars(self.body)

    def substitute(self, binding):
        return ConstraintRule(self.action.substitute(binding), tuple(l.substitute(binding) for l in self.body), frozenset(), self.line)


@dataclass(frozen=True)
class ActionRule:
    """`body implies do action(args)`."""

    action: Atom
    body: tuple = ()
    existential_vars: frozenset = frozenset()
    line: int | None = field(default=None, compare=False)

    def variables(self):
        return self.action.variables() | body_vars(self.body)

    def substitute(self, binding):
        return ActionRule(self.action.substitute(binding), tuple(l.substitute(binding) for l in self.body), frozenset(), self.line)


@dataclass(frozen=True)
class MessageRule:
    """`body implies send recipient: payload`."""

    trigger: tuple
    recipient: object
    payload: Atom
    existential_vars: frozenset = frozenset()
    line: int | None = field(default=None, compare=False)

    def variables(self):
        rec = {self.recipient.name} if isinstance(self.recipient, Var) else set()
        return rec | self.payload.variables() | body_vars(self.trigger)

    def substitute(self, binding):
        rec = binding.get(self.recipient.name, self.recipient) if isinstance(self.recipient, Var) else self.recipient
        return MessageRule(tuple(l.substitute(binding) for l in self.trigger), rec, self.payload.substitute(binding), frozenset(), self.line)


@dataclass(frozen=True)
class EventRule:
    """`body implies add .., del .., adopt g, drop g`."""

    trigger: tuple
    belief_adds: tuple = ()
    belief_dels: tuple = ()
    goal_ops: tuple = ()  # (("adopt"|"drop", frozenset[Atom]), ...)
    existential_vars: frozenset = frozenset()
    line: int | None = field(default=None, compare=False)

    def variables(self):
        out = body_vars(self.trigger)
        for a in self.belief_adds + self.belief_dels:
            out |= a.variables()
        return out

    def substitute(self, binding):
        return EventRule(
            tuple(l.substitute(binding) for l in self.trigger),
            tuple(a.substitute(binding) for a in self.belief_adds),
            tuple(a.substitute(binding) for a in self.belief_dels),
            self.goal_ops,
            frozenset(),
            self.line,
        )


@dataclass(frozen=True)
class Outcome:
    label: str
    adds: tuple = ()
    dels: tuple = ()


@dataclass(frozen=True)
class ActionDef:
    name: str
    params: tuple = ()
    precondition: tuple = ()
    outcomes: tuple = ()
    line: int | None = field(default=None, compare=False)

    def substitute(self, binding):
        return ActionDef(
            self.name,
            tuple(binding.get(p.name, p) if isinstance(p, Var) else p for p in self.params),
            tuple(l.substitute(binding) for l in self.precondition),
            tuple(
                Outcome(o.label, tuple(a.substitute(binding) for a in o.adds), tuple(a.substitute(binding) for a in o.dels))
                for o in self.outcomes
            ),
            self.line,
        )


@dataclass(frozen=True, order=True)
class Message:
    sender: str
    recipient: str
    payload: Atom

    def __str__(self):
        return f"{self.sender}->{self.recipient}:{self.payload}"


@dataclass(frozen=True)
class AgentSpec:
    id: str
    beliefs: frozenset = frozenset()
    goals: tuple = ()  # sequence of goal bases (frozensets of ground atoms)
    outbox: frozenset = frozenset()
    inbox: frozenset = frozenset()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Specification:
    agents: tuple = ()
    knowledge: tuple = ()
    constraints: tuple = ()
    action_rules: tuple = ()
    send_rules: tuple = ()
    event_rules: tuple = ()
    effects: tuple = ()
    domains: tuple = ()  # ((sort, (const, ...)), ...)
    var_sorts: tuple = ()  # ((var, sort), ...)
    prob: tuple = ()  # ((label, Fraction), ...)
    safety: tuple = ()  # ((agent, (atom, ...)), ...)
    goal_names: tuple = ()  # ((name, frozenset[Atom]), ...) for printing

    @cached_property
    def domain_map(self) -> dict:
        return {k: v for k, v in self.domains}

    @cached_property
    def sort_of(self) -> dict:
        return dict(self.var_sorts)

    @cached_property
    def prob_map(self) -> dict:
        return dict(self.prob)

    @cached_property
    def safety_map(self) -> dict:
        return {k: tuple(v) for k, v in self.safety}

    @cached_property
    def action_map(self) -> dict:
        return {a.name: a for a in self.effects}

    @property
    def agent_ids(self) -> tuple:
        return tuple(a.id for a in self.agents)

    def agent(self, agent_id) -> AgentSpec:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def replace(self, **changes) -> Specification:
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields.update(changes)
        return Specification(**fields)

    def outcome_labels(self) -> dict:
        """Map every outcome label to its action name."""
        return {o.label: a.name for a in self.effects for o in a.outcomes}


# --------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>!=|[(){}\[\],.:=;|])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0
        self.agent_ids = self._prescan_agents()
        self.bound: set[str] = set()
        self.arity: dict[str, int] = {}
        self.goal_names: dict[str, frozenset] = {}

    def _prescan_agents(self):
        ids = set()
        for a, b in zip(self.toks, self.toks[1:]):
            if a.kind == "ident" and a.text == "agent" and b.kind == "ident":
                ids.add(b.text)
        return ids

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, expected):
        t = self.tok
        got = t.text or "end of input"
        raise ParseError(f"expected {expected}, got {got!r}", t.line, t.col)

    def at(self, text):
        return self.tok.text == text and self.tok.kind in ("ident", "op")

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.error(repr(text))

    def ident(self):
        if self.tok.kind != "ident":
            self.error("identifier")
        t = self.tok
        self.i += 1
        return t.text

    def at_section(self):
        return self.tok.kind == "ident" and self.tok.text in SECTIONS and self.peek().text == ":" and self.peek(2).kind != "op"

    # terms and atoms
    def term(self):
        t = self.tok
        if t.kind == "number":
            if "." in t.text or "/" in t.text:
                self.error("integer or symbol")
            self.i += 1
            return t.text
        if t.kind == "ident":
            self.i += 1
            if t.text in self.bound or (t.text[0].isupper() and t.text not in self.agent_ids):
                return Var(t.text)
            return t.text
        self.error("term")

    def _check_arity(self, pred, n, tok):
        known = self.arity.setdefault(pred, n)
        if known != n:
            raise ParseError(f"predicate {pred!r} used with arity {n}, previously {known}", tok.line, tok.col)

    def atom(self):
        tok = self.tok
        name = self.ident()
        args = []
        if self.accept("("):
            args.append(self.term())
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
        self._check_arity(name, len(args), tok)
        return Atom(name, tuple(args))

    def ground_atom(self):
        tok = self.tok
        a = self.atom()
        if not a.is_ground:
            raise ParseError(f"atom {a} must be ground", tok.line, tok.col)
        return a

    def atom_set(self):
        self.expect("{")
        out = []
        if not self.at("}"):
            out.append(self.ground_atom())
            while self.accept(","):
                out.append(self.ground_atom())
        self.expect("}")
        return frozenset(out)

    def goal_ref(self):
        if self.at("{"):
            return self.atom_set()
        tok = self.tok
        name = self.ident()
        if name not in self.goal_names:
            raise ParseError(f"unknown goal {name!r}", tok.line, tok.col)
        return self.goal_names[name]

    def literal(self):
        if self.accept("not"):
            lit = self.literal()
            if not isinstance(lit, Literal) or not lit.positive:
                self.error("atom after 'not'")
            return Literal(lit.atom, False)
        if self.tok.text == "received" and self.peek().text == "(":
            tok = self.tok
            self.i += 2
            sender = self.term()
            self.expect(",")
            inner = self.atom()
            self.expect(")")
            pred = RECEIVED + inner.pred
            self._check_arity(pred, len(inner.args) + 1, tok)
            return Literal(Atom(pred, (sender,) + inner.args))
        if self.tok.text == "goal" and self.peek().text == "(":
            self.i += 2
            inner = self.atom()
            self.expect(")")
            return Literal(Atom(GOAL + inner.pred, inner.args))
        if self.peek().text == "!=":
            left = self.term()
            self.expect("!=")
            return Neq(left, self.term())
        return Literal(self.atom())

    def body(self):
        lits = [self.literal()]
        while self.accept("and"):
            lits.append(self.literal())
        return tuple(lits)

    def exists_prefix(self):
        names = []
        if self.accept("exists"):
            names.append(self.ident())
            while self.accept(","):
                names.append(self.ident())
            self.expect(".")
        self.bound = set(names)
        return frozenset(names)

    def rule_prefix(self):
        """Parse `[exists ..] body implies`; returns (exists, body)."""
        ex = self.exists_prefix()
        body = self.body()
        self.expect("implies")
        return ex, body

    # sections
    def parse(self):
        parts = {name: [] for name in SECTIONS}
        extra = {"domains": [], "var_sorts": [], "goal_names": []}
        # agents must be parsed first for goal names; sections may repeat
        while self.tok.kind != "eof":
            if not self.at_section():
                self.error("section header")
            name = self.ident()
            self.expect(":")
            while self.tok.kind != "eof" and not self.at_section():
                line = self.tok.line
                self.bound = set()
                getattr(self, "stmt_" + name)(parts[name], extra, line)
        seen = set()
        for a in parts["agents"]:
            if a.id in seen:
                raise ParseError(f"duplicate agent id {a.id!r}", a.line, 1)
            seen.add(a.id)
        return Specification(
            agents=tuple(parts["agents"]),
            knowledge=tuple(parts["knowledge"]),
            constraints=tuple(parts["constraints"]),
            action_rules=tuple(parts["actions"]),
            send_rules=tuple(parts["send"]),
            event_rules=tuple(parts["events"]),
            effects=tuple(parts["effects"]),
            domains=tuple(extra["domains"]),
            var_sorts=tuple(extra["var_sorts"]),
            prob=tuple(parts["prob"]),
            safety=tuple(parts["safety"]),
            goal_names=tuple(extra["goal_names"]),
        )

    def stmt_agents(self, out, extra, line):
        if self.accept("goal"):
            name = self.ident()
            self.expect("=")
            base = self.atom_set() if self.at("{") else frozenset([self.ground_atom()])
            self.goal_names[name] = base
            extra["goal_names"].append((name, base))
            self.expect(".")
            return
        if not self.accept("agent"):
            self.error("'agent' or 'goal'")
        aid = self.ident()
        beliefs, goals, inbox, outbox = frozenset(), [], set(), set()
        while not self.accept("."):
            if self.accept("beliefs"):
                beliefs = self.atom_set()
            elif self.accept("goals"):
                self.expect("[")
                if not self.at("]"):
                    goals.append(self.goal_ref())
                    while self.accept(","):
                        goals.append(self.goal_ref())
                self.expect("]")
            elif self.at("inbox") or self.at("outbox"):
                which = self.ident()
                self.expect("{")
                while not self.accept("}"):
                    self.expect("(")
                    other = self.ident()
                    self.expect(",")
                    payload = self.ground_atom()
                    self.expect(")")
                    if which == "inbox":
                        inbox.add(Message(other, aid, payload))
                    else:
                        outbox.add(Message(aid, other, payload))
                    self.accept(",")
            else:
                self.error("'beliefs', 'goals', 'inbox', 'outbox' or '.'")
        out.append(AgentSpec(aid, beliefs, tuple(goals), frozenset(outbox), frozenset(inbox), line))

    def _is_fact(self):
        depth = 0
        for t in self.toks[self.i:]:
            if t.kind == "eof" or (t.text == "." and depth == 0):
                return True
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
            elif t.text in ("implies", "exists") and t.kind == "ident":
                return False
        return True

    def stmt_knowledge(self, out, extra, line):
        if self._is_fact():
            head = self.ground_atom()
            self.expect(".")
            out.append(Rule(head, (), frozenset(), line))
            return
        ex, body = self.rule_prefix()
        head = self.atom()
        self.expect(".")
        out.append(Rule(head, body, ex, line))

    def stmt_constraints(self, out, extra, line):
        ex, body = self.rule_prefix()
        self.expect("forbid")
        act = self.atom()
        self.expect(".")
        out.append(ConstraintRule(act, body, ex, line))

    def stmt_actions(self, out, extra, line):
        ex, body = self.rule_prefix()
        self.expect("do")
        act = self.atom()
        self.expect(".")
        out.append(ActionRule(act, body, ex, line))

    def stmt_send(self, out, extra, line):
        ex, body = self.rule_prefix()
        self.expect("send")
        rec = self.term()
        self.expect(":")
        payload = self.atom()
        self.expect(".")
        out.append(MessageRule(body, rec, payload, ex, line))

    def stmt_events(self, out, extra, line):
        ex, body = self.rule_prefix()
        adds, dels, ops = [], [], []
        mode = None
        while True:
            if self.at("add") or self.at("del"):
                mode = self.ident()
                (adds if mode == "add" else dels).append(self.atom())
            elif self.at("adopt") or self.at("drop"):
                op = self.ident()
                ops.append((op, self.goal_ref()))
                mode = None
            elif mode is not None and self.tok.kind == "ident":
                (adds if mode == "add" else dels).append(self.atom())
            else:
                self.error("'add', 'del', 'adopt' or 'drop'")
            if self.accept("."):
                break
            self.accept(",")
        out.append(EventRule(body, tuple(adds), tuple(dels), tuple(ops), ex, line))

    def stmt_effects(self, out, extra, line):
        self.expect("action")
        name = self.ident()
        params = []
        if self.accept("("):
            params.append(self.term())
            while self.accept(","):
                params.append(self.term())
            self.expect(")")
        for p in params:
            if not isinstance(p, Var):
                raise ParseError(f"action parameter {p!r} must be a variable", line, 1)
        pre = ()
        if self.accept("requires"):
            pre = self.body()
        outcomes = []
        while self.accept("outcome"):
            label = self.ident()
            adds, dels = [], []
            if self.accept(":"):
                mode = None
                while not (self.at("outcome") or self.at(".")):
                    if self.at("add") or self.at("del"):
                        mode = self.ident()
                    elif mode is None:
                        self.error("'add' or 'del'")
                    (adds if mode == "add" else dels).append(self.atom())
                    self.accept(",")
            outcomes.append(Outcome(label, tuple(adds), tuple(dels)))
        self.expect(".")
        if not outcomes:
            outcomes = [Outcome(name)]
        labels = [o.label for o in outcomes]
        if len(set(labels)) != len(labels):
            raise ParseError(f"duplicate outcome label in action {name!r}", line, 1)
        out.append(ActionDef(name, tuple(params), pre, tuple(outcomes), line))

    def stmt_domains(self, out, extra, line):
        names = [self.ident()]
        while self.accept(","):
            names.append(self.ident())
        if self.accept("in"):
            sort = self.ident()
            self.expect(".")
            extra["var_sorts"].extend((n, sort) for n in names)
            return
        if len(names) != 1:
            self.error("'in'")
        self.expect("=")
        self.expect("{")
        consts = []
        while not self.accept("}"):
            t = self.tok
            if t.kind not in ("ident", "number"):
                self.error("constant")
            consts.append(t.text)
            self.i += 1
            self.accept(",")
        self.expect(".")
        extra["domains"].append((names[0], tuple(consts)))

    def stmt_prob(self, out, extra, line):
        label = self.ident()
        self.expect("=")
        t = self.tok
        if t.kind != "number":
            self.error("probability")
        self.i += 1
        self.expect(".")
        out.append((label, Fraction(t.text)))

    def stmt_safety(self, out, extra, line):
        aid = self.ident()
        self.expect(":")
        atoms = [self.ground_atom()]
        while self.accept(","):
            atoms.append(self.ground_atom())
        self.expect(".")
        out.append((aid, tuple(atoms)))


def parse_spec(text: str) -> Specification:
    """Parse `.vg` source text into a :class:`Specification`."""
    return _Parser(text).parse()


def load_spec(path) -> Specification:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


# ------------------------------------------------------------------- printer


def _fmt_set(atoms) -> str:
    return "{" + ", ".join(sorted(str(a) for a in atoms)) + "}"


def _fmt_prefix(ex) -> str:
    return f"exists {', '.join(sorted(ex))}. " if ex else ""


def print_spec(spec: Specification) -> str:
    """Canonical rendering; `parse_spec(print_spec(s)) == s` for parsed specs."""
    names = {base: name for name, base in spec.goal_names}

    def goal_ref(base):
        return names.get(base) or _fmt_set(base)

    lines = ["agents:"]
    for name, base in spec.goal_names:
        lines.append(f"  goal {name} = {_fmt_set(base)}.")
    for a in spec.agents:
        s = f"  agent {a.id} beliefs {_fmt_set(a.beliefs)} goals [{', '.join(goal_ref(g) for g in a.goals)}]"
        if a.inbox:
            s += " inbox {" + ", ".join(f"({m.sender}, {m.payload})" for m in sorted(a.inbox)) + "}"
        if a.outbox:
            s += " outbox {" + ", ".join(f"({m.recipient}, {m.payload})" for m in sorted(a.outbox)) + "}"
        lines.append(s + ".")
    lines.append("knowledge:")
    for r in spec.knowledge:
        if r.body:
            lines.append(f"  {_fmt_prefix(r.existential_vars)}{body_str(r.body)} implies {r.head}.")
        else:
            lines.append(f"  {r.head}.")
    lines.append("constraints:")
    for r in spec.constraints:
        lines.append(f"  {_fmt_prefix(r.existential_vars)}{body_str(r.body)} implies forbid {r.action}.")
    lines.append("actions:")
    for r in spec.action_rules:
        lines.append(f"  {_fmt_prefix(r.existential_vars)}{body_str(r.body)} implies do {r.action}.")
    lines.append("send:")
    for r in spec.send_rules:
        lines.append(
            f"  {_fmt_prefix(r.existential_vars)}{body_str(r.trigger)} implies send {term_str(r.recipient)}: {r.payload}."
        )
    lines.append("events:")
    for r in spec.event_rules:
        items = [f"add {a}" for a in r.belief_adds] + [f"del {a}" for a in r.belief_dels]
        items += [f"{op} {goal_ref(g)}" for op, g in r.goal_ops]
        lines.append(f"  {_fmt_prefix(r.existential_vars)}{body_str(r.trigger)} implies {', '.join(items)}.")
    lines.append("effects:")
    for a in spec.effects:
        head = a.name + (f"({','.join(term_str(p) for p in a.params)})" if a.params else "")
        s = f"  action {head}"
        if a.precondition:
            s += f" requires {body_str(a.precondition)}"
        for o in a.outcomes:
            s += f"\n    outcome {o.label}"
            ops = [f"add {x}" for x in o.adds] + [f"del {x}" for x in o.dels]
            if ops:
                s += ": " + ", ".join(ops)
        lines.append(s + ".")
    lines.append("domains:")
    for sort, consts in spec.domains:
        lines.append(f"  {sort} = {{{', '.join(consts)}}}.")
    for var, sort in spec.var_sorts:
        lines.append(f"  {var} in {sort}.")
    lines.append("prob:")
    for label, p in spec.prob:
        lines.append(f"  {label} = {p}.")
    lines.append("safety:")
    for aid, atoms in spec.safety:
        lines.append(f"  {aid}: {', '.join(str(a) for a in atoms)}.")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    location: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.location}: {self.message}"


def _loc(rule, section):
    return f"{section}:{rule.line}" if getattr(rule, "line", None) else section


def predicate_graph(rules):
    """Edges head -> (body predicate, negated) for stratification."""
    edges = {}
    for r in rules:
        for lit in r.body:
            if isinstance(lit, Literal):
                edges.setdefault(r.head.pred, set()).add((lit.atom.pred, not lit.positive))
    return edges


def stratify(rules) -> list[set[str]]:
    """Return head predicates grouped by stratum; raise SpecError on a negative cycle."""
    heads = {r.head.pred for r in rules}
    edges = predicate_graph(rules)
    level = {p: 0 for p in heads}
    # Bellman-Ford style relaxation; a negative cycle makes levels exceed |heads|
    for _ in range(len(heads) + 1):
        changed = False
        for h, deps in edges.items():
            for dep, neg in deps:
                if dep not in heads:
                    continue
                need = level[dep] + (1 if neg else 0)
                if level[h] < need:
                    level[h] = need
                    changed = True
                    if level[h] > len(heads):
                        raise SpecError(f"negation is not stratified (cycle through {h!r})")
        if not changed:
            break
    strata = {}
    for p, lv in level.items():
        strata.setdefault(lv, set()).add(p)
    return [strata[k] for k in sorted(strata)]


def _rule_items(spec):
    for r in spec.knowledge:
        yield "knowledge", r, r.body, r.head.variables()
    for r in spec.constraints:
        yield "constraints", r, r.body, r.action.variables()
    for r in spec.action_rules:
        yield "actions", r, r.body, r.action.variables()
    for r in spec.send_rules:
        rec = {r.recipient.name} if isinstance(r.recipient, Var) else set()
        yield "send", r, r.trigger, r.payload.variables() | rec
    for r in spec.event_rules:
        hv = set()
        for a in r.belief_adds + r.belief_dels:
            hv |= a.variables()
        yield "events", r, r.trigger, hv


def validate(spec: Specification) -> list[Diagnostic]:
    """Check the structural invariants; an empty list means the spec is valid."""
    diags = []

    def add(sev, loc, msg):
        diags.append(Diagnostic(sev, loc, msg))

    for label, p in spec.prob:
        if not 0 <= p <= 1:
            add("error", f"prob:{label}", f"probability out of range: {p}")
    labels = spec.outcome_labels()
    actions = spec.action_map
    for label, _ in spec.prob:
        if label not in labels and label not in actions:
            add("error", f"prob:{label}", f"unknown outcome label {label!r}")
    seen_labels = {}
    for a in spec.effects:
        for o in a.outcomes:
            if o.label in seen_labels and seen_labels[o.label] != a.name:
                add("error", _loc(a, "effects"), f"outcome label {o.label!r} reused by {a.name!r}")
            seen_labels[o.label] = a.name
        for p in a.params:
            if p.name not in spec.sort_of:
                add("error", _loc(a, "effects"), f"unbounded variable {p.name!r}")

    for section, rule, body, head_vars in _rule_items(spec):
        pos_vars = set()
        for lit in body:
            if isinstance(lit, Literal) and lit.positive:
                pos_vars |= lit.variables()
        for v in sorted(rule.variables()):
            if v not in spec.sort_of and v not in pos_vars:
                kind = "unsafe rule" if v in head_vars else "unbounded variable"
                add("error", _loc(rule, section), f"{kind}: variable {v!r} has no domain")
            elif v in spec.sort_of and spec.sort_of[v] not in spec.domain_map:
                add("error", _loc(rule, section), f"variable {v!r} has undeclared sort {spec.sort_of[v]!r}")

    for r in spec.knowledge:
        for lit in r.body:
            if isinstance(lit, Literal) and lit.atom.pred.startswith(GOAL):
                add("error", _loc(r, "knowledge"), "goal literals are not allowed in knowledge rules")
    for r in spec.event_rules:
        for lit in r.trigger:
            if isinstance(lit, Literal) and lit.atom.pred.startswith(GOAL):
                add("error", _loc(r, "events"), "goal literals are not allowed in event triggers")
    try:
        stratify(spec.knowledge)
    except SpecError as exc:
        add("error", "knowledge", str(exc))

    for r in list(spec.action_rules) + list(spec.constraints):
        sec = "actions" if isinstance(r, ActionRule) else "constraints"
        a = actions.get(r.action.pred)
        if a is None:
            add("error", _loc(r, sec), f"undeclared action {r.action.pred!r}")
        elif len(a.params) != len(r.action.args):
            add("error", _loc(r, sec), f"action {a.name!r} expects {len(a.params)} arguments")

    ids = set(spec.agent_ids)
    for r in spec.send_rules:
        if not isinstance(r.recipient, Var) and r.recipient not in ids:
            add("warning", _loc(r, "send"), f"recipient {r.recipient!r} is not a declared agent; messages dropped")
        elif isinstance(r.recipient, Var):
            sort = spec.sort_of.get(r.recipient.name)
            stray = [c for c in spec.domain_map.get(sort, ()) if c not in ids]
            if stray:
                add("error", _loc(r, "send"), f"recipient domain contains non-agents {stray}")

    derivable = {r.head.pred for r in spec.knowledge}
    for aid, atoms in spec.safety:
        if aid not in ids:
            add("error", f"safety:{aid}", f"unknown agent {aid!r}")
        for a in atoms:
            if a.pred not in derivable:
                add("error", f"safety:{aid}", f"safety atom {a} is not derivable by any knowledge rule")

    mentioned = set()
    for ag in spec.agents:
        mentioned |= {a.pred for a in ag.beliefs}
        for g in ag.goals:
            mentioned |= {a.pred for a in g}
    for _, _, body, _ in _rule_items(spec):
        mentioned |= {l.atom.pred.split(":", 1)[-1] for l in body if isinstance(l, Literal)}
    for a in spec.effects:
        mentioned |= {l.atom.pred for l in a.precondition if isinstance(l, Literal)}
    mentioned |= derivable
    for a in spec.effects:
        for o in a.outcomes:
            for x in o.adds + o.dels:
                if x.pred not in mentioned:
                    add("warning", _loc(a, "effects"), f"effect of {o.label!r} references undeclared predicate {x.pred!r}")
    return diags


# ----------------------------------------------------------------- grounding


def ground(rule, domains: dict, sort_of: dict) -> list:
    """All ground instances of `rule` over the Cartesian product of its variables' domains.

    `domains` maps sort name -> constants; `sort_of` maps variable name -> sort.
    Disequality literals are kept; callers drop instances violating them.
    """
    names = sorted(rule.variables())
    pools = []
    for v in names:
        sort = sort_of.get(v)
        if sort is None or sort not in domains:
            raise SpecError(f"unbounded variable {v!r} (no domain)")
        pools.append(domains[sort])
    if not names:
        return [rule]
    return [rule.substitute(dict(zip(names, combo))) for combo in itertools.product(*pools)]


def ground_spec_rule(rule, spec: Specification) -> list:
    """Ground instances with violated disequalities removed."""
    body = getattr(rule, "body", None)
    if body is None:
        body = rule.trigger
    out = []
    for inst in ground(rule, spec.domain_map, spec.sort_of):
        ib = getattr(inst, "body", None)
        if ib is None:
            ib = inst.trigger
        if all(l.left != l.right for l in ib if isinstance(l, Neq)):
            out.append(inst)
    return out
