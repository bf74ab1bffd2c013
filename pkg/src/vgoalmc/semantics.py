"""Operational semantics: minimal models, the per-agent reasoning cycle and the joint step.

One reasoning cycle of an agent runs, in order: goal popping, event processing,
constraint and action generation, effect application and message generation.
Messages produced in a joint step are delivered to the recipients' inboxes for
the next step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .spec_model import (
    GOAL,
    RECEIVED,
    Atom,
    Literal,
    Message,
    Neq,
    Specification,
    SpecError,
    ground_spec_rule,
    stratify,
)

SKIP = "skip"  # goal-holding agent with no feasible action
IDLE = "idle"  # goal-free agent (or a passive agent in a joint step)


@dataclass(frozen=True)
class AgentState:
    """Runtime configuration of one agent: belief base, goal sequence, pending inbox."""

    id: str
    beliefs: frozenset
    goals: tuple
    inbox: frozenset = frozenset()


@dataclass(frozen=True)
class Substate:
    """The observable view `id:(I(B), I(goals))` of an agent."""

    id: str
    belief_interp: frozenset
    goal_interp: frozenset


@dataclass(frozen=True, order=True)
class AgentStep:
    agent: str
    action: str
    outcome: str
    consumed: tuple = ()

    def __str__(self):
        if self.action == self.outcome:
            return f"{self.agent}:{self.action}"
        return f"{self.agent}:{self.action}/{self.outcome}"


def action_label(joint) -> str:
    return ";".join(str(step) for step in joint)


def parse_action_label(text: str) -> list[tuple[str, str, str]]:
    """Inverse of :func:`action_label` up to consumed messages: [(agent, action, outcome)].

    A part without an agent prefix (hand-written models) gets the agent "".
    """
    out = []
    for part in text.split(";"):
        agent, _, rest = part.partition(":") if ":" in part else ("", "", part)
        action, _, outcome = rest.partition("/")
        out.append((agent, action, outcome or action))
    return out


@dataclass(frozen=True)
class Option:
    """One way an agent can complete a reasoning cycle."""

    action: str
    outcome: str
    next: AgentState
    messages: frozenset
    pops: int = 0
    goal_ops: tuple = ()
    focus: frozenset | None = None


def interpret_goals(goals) -> frozenset:
    """The focused goal base: the head of the goal sequence, or the empty set."""
    return frozenset(goals[0]) if goals else frozenset()


def is_terminal(state) -> bool:
    """True iff every agent's goal sequence is empty."""
    return all(not a.goals for a in state)


def _split(body):
    pos = tuple(l.atom for l in body if isinstance(l, Literal) and l.positive)
    neg = tuple(l.atom for l in body if isinstance(l, Literal) and not l.positive)
    return pos, neg


def _holds(pos, neg, model) -> bool:
    for a in pos:
        if a not in model:
            return False
    for a in neg:
        if a in model:
            return False
    return True


class _GroundProgram:
    """Stratified ground knowledge base evaluated by forward chaining."""

    def __init__(self, rules, domains, sort_of):
        self.strata = []
        if not rules:
            return
        from .spec_model import ground as _ground

        layers = stratify(rules)
        index = {p: i for i, layer in enumerate(layers) for p in layer}
        grouped = [[] for _ in layers]
        for r in rules:
            for inst in _ground(r, domains, sort_of):
                if any(isinstance(l, Neq) and l.left == l.right for l in inst.body):
                    continue
                pos, neg = _split(inst.body)
                grouped[index[inst.head.pred]].append((inst.head, pos, neg))
        self.strata = grouped

    def closure(self, facts) -> frozenset:
        model = set(facts)
        for rules in self.strata:
            pending = [r for r in rules if r[0] not in model]
            changed = True
            while changed and pending:
                changed = False
                rest = []
                for head, pos, neg in pending:
                    if head in model:
                        continue
                    if _holds(pos, neg, model):
                        model.add(head)
                        changed = True
                    else:
                        rest.append((head, pos, neg))
                pending = rest
        return frozenset(model)


def minimal_model(beliefs, rules, domains=None, sort_of=None) -> frozenset:
    """Least model of `rules` (stratified, grounded over `domains`) containing `beliefs`."""
    return _GroundProgram(tuple(rules), domains or {}, sort_of or {}).closure(beliefs)


def received_atoms(inbox) -> frozenset:
    return frozenset(Atom(RECEIVED + m.payload.pred, (m.sender,) + m.payload.args) for m in inbox)


def goal_atoms(focus) -> frozenset:
    return frozenset(Atom(GOAL + a.pred, a.args) for a in focus or ())


class Engine:
    """Grounded, cached evaluator of one specification's semantics."""

    def __init__(self, spec: Specification, cache: bool = True):
        self.spec = spec
        self.cache = cache
        self.ids = spec.agent_ids
        self.kb = _GroundProgram(spec.knowledge, spec.domain_map, spec.sort_of)
        self.events = []
        for r in spec.event_rules:
            for inst in ground_spec_rule(r, spec):
                pos, neg = _split(inst.trigger)
                self.events.append((pos, neg, inst.belief_adds, inst.belief_dels, inst.goal_ops))
        self.constraints = []
        for r in spec.constraints:
            for inst in ground_spec_rule(r, spec):
                self.constraints.append((*_split(inst.body), inst.action))
        self.action_rules = []
        for r in spec.action_rules:
            for inst in ground_spec_rule(r, spec):
                self.action_rules.append((*_split(inst.body), inst.action))
        self.sends = []
        for r in spec.send_rules:
            for inst in ground_spec_rule(r, spec):
                self.sends.append((*_split(inst.trigger), inst.recipient, inst.payload))
        self._models = {}
        self._options = {}
        self._actions = {}

    def model(self, facts) -> frozenset:
        m = self._models.get(facts)
        if m is None:
            m = self.kb.closure(facts)
            self._models[facts] = m
        return m

    def belief_model(self, beliefs) -> frozenset:
        """I(B): minimal model of the belief base under the knowledge base."""
        return self.model(frozenset(beliefs))

    def substate(self, a: AgentState) -> Substate:
        return Substate(a.id, self.belief_model(a.beliefs), interpret_goals(a.goals))

    def label(self, state) -> frozenset:
        return frozenset(f"{a.id}.{atom}" for a in state for atom in self.belief_model(a.beliefs))

    def ground_action(self, act: Atom):
        hit = self._actions.get(act)
        if hit is None:
            adef = self.spec.action_map.get(act.pred)
            if adef is None:
                raise SpecError(f"undeclared action {act.pred!r}")
            inst = adef.substitute({p.name: v for p, v in zip(adef.params, act.args)})
            hit = (*_split(inst.precondition), inst.outcomes)
            self._actions[act] = hit
        return hit

    def _send(self, aid, beliefs, recv, focus) -> frozenset:
        if not self.sends:
            return frozenset()
        m = self.model(frozenset(beliefs) | recv) | goal_atoms(focus)
        out = set()
        for pos, neg, rec, payload in self.sends:
            if rec in self.ids and _holds(pos, neg, m):
                out.add(Message(aid, rec, payload))
        return frozenset(out)

    def options(self, state: AgentState) -> tuple:
        if not self.cache:
            return self._compute_options(state)
        hit = self._options.get(state)
        if hit is None:
            hit = self._compute_options(state)
            self._options[state] = hit
        return hit

    def _compute_options(self, st: AgentState) -> tuple:
        beliefs = st.beliefs
        mm = self.belief_model(beliefs)
        goals = list(st.goals)
        pops = 0
        while goals and goals[0] <= mm:
            goals.pop(0)
            pops += 1

        recv = received_atoms(st.inbox)
        tm = self.model(beliefs | recv) if recv else mm
        adds, dels, ops = set(), set(), []
        for pos, neg, a, d, gops in self.events:
            if _holds(pos, neg, tm):
                adds.update(a)
                dels.update(d)
                ops.extend(gops)
        b1 = (beliefs - dels) | adds
        for op, base in ops:
            if op == "adopt":
                if base not in goals:
                    goals.append(base)
            else:
                goals = [g for g in goals if g != base]
        goals = tuple(goals)
        focus = goals[0] if goals else None
        after = AgentState(st.id, frozenset(b1), goals)
        meta = {"pops": pops, "goal_ops": tuple(ops), "focus": focus}

        if not goals:
            msgs = self._send(st.id, after.beliefs, recv, None)
            if after.beliefs == st.beliefs and not st.goals and not st.inbox and not msgs:
                return ()
            return (Option(IDLE, IDLE, after, msgs, **meta),)

        cm = self.model(after.beliefs | recv) | goal_atoms(focus)
        forbidden = {act for pos, neg, act in self.constraints if _holds(pos, neg, cm)}
        chosen = sorted({act for pos, neg, act in self.action_rules if _holds(pos, neg, cm)} - forbidden)
        result = []
        for act in chosen:
            pos, neg, outcomes = self.ground_action(act)
            if not _holds(pos, neg, cm):
                continue
            for o in outcomes:
                b2 = frozenset((after.beliefs - set(o.dels)) | set(o.adds))
                nxt = AgentState(st.id, b2, goals)
                result.append(Option(str(act), o.label, nxt, self._send(st.id, b2, recv, focus), **meta))
        if not result:
            msgs = self._send(st.id, after.beliefs, recv, focus)
            return (Option(SKIP, SKIP, after, msgs, **meta),)
        return tuple(result)

    def initial_state(self) -> tuple:
        inboxes = {a.id: set(a.inbox) for a in self.spec.agents}
        for a in self.spec.agents:
            for m in a.outbox:
                if m.recipient in inboxes:
                    inboxes[m.recipient].add(m)
        return tuple(AgentState(a.id, frozenset(a.beliefs), tuple(a.goals), frozenset(inboxes[a.id])) for a in self.spec.agents)

    def joint_successors(self, state) -> list:
        """All (joint action, successor) pairs, sorted by canonical serialization."""
        per_agent = [self.options(a) for a in state]
        if not any(per_agent):
            return []
        choices = []
        for a, opts in zip(state, per_agent):
            choices.append(opts or (Option(IDLE, IDLE, a, frozenset()),))
        out = []
        for combo in itertools.product(*choices):
            out.append(self.compose(state, combo))
        out.sort(key=lambda pair: (serialize_state(pair[1]), action_label(pair[0])))
        return out

    def compose(self, state, combo):
        """Assemble one joint step from per-agent options, routing messages."""
        inbox = {aid: [] for aid in self.ids}
        for opt in combo:
            for m in opt.messages:
                inbox[m.recipient].append(m)
        steps = []
        nxt = []
        for a, opt in zip(state, combo):
            steps.append(AgentStep(a.id, opt.action, opt.outcome, tuple(sorted(a.inbox))))
            nxt.append(replace(opt.next, inbox=frozenset(inbox[a.id])))
        return tuple(steps), tuple(nxt)


_ENGINES = {}
_MAX_ENGINES = 32


def engine_for(spec: Specification) -> Engine:
    """Cached :class:`Engine` per specification object."""
    eng = _ENGINES.get(id(spec))
    if eng is None or eng.spec is not spec:
        if len(_ENGINES) >= _MAX_ENGINES:
            _ENGINES.clear()
        eng = Engine(spec)
        _ENGINES[id(spec)] = eng
    return eng


def clear_caches():
    """Drop cached engines and serializations (long-running processes, tests)."""
    _ENGINES.clear()
    _SER.clear()


def agent_options(state: AgentState, spec: Specification) -> tuple:
    return engine_for(spec).options(state)


def joint_successors(state, spec: Specification) -> list:
    return engine_for(spec).joint_successors(state)


def initial_state(spec: Specification) -> tuple:
    return engine_for(spec).initial_state()


# ------------------------------------------------------------ serialization

_SER = {}


def _fmt_atoms(atoms) -> str:
    return ",".join(sorted(str(a) for a in atoms))


def serialize_agent(a: AgentState) -> str:
    s = _SER.get(a)
    if s is None:
        goals = ";".join("{" + _fmt_atoms(g) + "}" for g in a.goals)
        msgs = ",".join(sorted(f"{m.sender}:{m.payload}" for m in a.inbox))
        s = f"{a.id}{{{_fmt_atoms(a.beliefs)}}}[{goals}]<{msgs}>"
        _SER[a] = s
    return s


def serialize_state(state) -> str:
    """Canonical text of a system state: agents in order, atoms sorted."""
    return "|".join(serialize_agent(a) for a in state)
