"""CTL and PCTL formulas: syntax tree, parser and printer.

Precedence from tightest to loosest: unary operators (`!`, `EX`, `AG`, ...),
`&`, `|`, `->` (right associative).  `E [f U g]`, `A [f U g]` and
`P>=b [path]` use brackets.  Atomic propositions are identifiers (letters,
digits, `_`, `.` and inner `-`, e.g. `non-errors`, `A1_safe1`) or double-quoted
strings for raw label names such as `"A1.at(6)"`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction


class FormulaError(ValueError):
    def __init__(self, message, position=None):
        super().__init__(message if position is None else f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Prop:
    name: str


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Temporal:
    """CTL unary operator: op in EX EF EG AX AF AG."""

    op: str
    arg: object


@dataclass(frozen=True)
class Until:
    """`E [left U right]` or `A [left U right]`; quantifier None inside P[...]."""

    quant: str | None
    left: object
    right: object


@dataclass(frozen=True)
class PathOp:
    """PCTL unary path operator: op in X F G."""

    op: str
    arg: object


@dataclass(frozen=True)
class Prob:
    """P⋈bound [path]; a bound of None is the query form `P=? [path]`."""

    cmp: str
    bound: Fraction | None
    path: object


TRUE = Const(True)
FALSE = Const(False)
CTL_UNARY = ("EX", "EF", "EG", "AX", "AF", "AG")
COMPARATORS = (">=", "<=", ">", "<", "=")


def conj(args) -> object:
    args = tuple(args)
    if not args:
        return TRUE
    return args[0] if len(args) == 1 else And(args)


def disj(args) -> object:
    args = tuple(args)
    if not args:
        return FALSE
    return args[0] if len(args) == 1 else Or(args)


# ------------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<str>"[^"]*")
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?|\.\d+)
  | (?P<cmp>>=|<=|=\?|>|<|=)
  | (?P<op>->|=>|→|!|¬|&|∧|\||∨|\(|\)|\[|\])
  | (?P<id>[A-Za-z_][A-Za-z0-9_.]*(?:-[A-Za-z0-9_.]+)*)
    """,
    re.VERBOSE,
)

_ALIASES = {"¬": "!", "not": "!", "∧": "&", "and": "&", "∨": "|", "or": "|", "=>": "->", "→": "->", "implies": "->"}


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group()
            if kind == "id" and val in _ALIASES:
                kind, val = "op", _ALIASES[val]
            elif kind == "op":
                val = _ALIASES.get(val, val)
            out.append((kind, val, pos))
        pos = m.end()
    out.append(("eof", "", pos))
    return out


class _Parser:
    def __init__(self, text, logic):
        self.toks = _tokenize(text)
        self.i = 0
        self.logic = logic  # "ctl" or "pctl"

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, expected):
        kind, val, pos = self.tok
        found = "end of input" if kind == "eof" else repr(val)
        raise FormulaError(f"expected {expected}, found {found}", pos)

    def accept(self, val):
        if self.tok[1] == val and self.tok[0] in ("op", "id", "cmp"):
            self.i += 1
            return True
        return False

    def expect(self, val):
        if not self.accept(val):
            self.error(repr(val))

    def parse(self):
        f = self.implies()
        if self.tok[0] != "eof":
            self.error("end of input")
        return f

    def implies(self):
        left = self.disj()
        if self.accept("->"):
            return Implies(left, self.implies())
        return left

    def disj(self):
        args = [self.conj()]
        while self.accept("|"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self):
        args = [self.unary()]
        while self.accept("&"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        kind, val, pos = self.tok
        if self.accept("!"):
            return Not(self.unary())
        if kind == "id":
            if self.logic == "ctl" and val in CTL_UNARY:
                self.i += 1
                return Temporal(val, self.unary())
            if self.logic == "ctl" and val in ("E", "A") and self.toks[self.i + 1][1] == "[":
                self.i += 2
                left = self.implies()
                self.expect("U")
                right = self.implies()
                self.expect("]")
                return Until(val, left, right)
            if self.logic == "pctl" and val == "P" and self.toks[self.i + 1][0] == "cmp":
                return self.prob()
            if val in ("TRUE", "true"):
                self.i += 1
                return TRUE
            if val in ("FALSE", "false"):
                self.i += 1
                return FALSE
            self.i += 1
            return Prop(val)
        if kind == "str":
            self.i += 1
            return Prop(val[1:-1])
        if self.accept("("):
            f = self.implies()
            self.expect(")")
            return f
        self.error("a formula")

    def prob(self):
        self.i += 1
        _, cmp, pos = self.tok
        self.i += 1
        if cmp == "=?":
            bound = None
            cmp = "="
        else:
            kind, num, npos = self.tok
            if kind != "num":
                self.error("a probability bound")
            self.i += 1
            bound = Fraction(num)
            if not 0 <= bound <= 1:
                raise FormulaError(f"probability bound {num} outside [0, 1]", npos)
        self.expect("[")
        path = self.path()
        self.expect("]")
        return Prob(cmp, bound, path)

    def path(self):
        kind, val, _ = self.tok
        if kind == "id" and val in ("X", "F", "G"):
            self.i += 1
            return PathOp(val, self.unary())
        left = self.implies()
        self.expect("U")
        return Until(None, left, self.implies())


def parse_ctl(text: str):
    """Parse a CTL state formula."""
    return _Parser(text, "ctl").parse()


def parse_pctl(text: str):
    """Parse a PCTL state formula (P operators with X, F, G or U path formulas)."""
    return _Parser(text, "pctl").parse()


# ------------------------------------------------------------------ printing

_PLAIN_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*(?:-[A-Za-z0-9_.]+)*\Z")
_RESERVED = set(CTL_UNARY) | {"E", "A", "U", "P", "X", "F", "G", "TRUE", "FALSE", "true", "false",
                              "not", "and", "or", "implies"}


def _default_ap(name):
    if _PLAIN_ID.match(name) and name not in _RESERVED:
        return name
    return f'"{name}"'


def _level(f) -> int:
    if isinstance(f, Implies):
        return 1
    if isinstance(f, Or):
        return 2
    if isinstance(f, And):
        return 3
    return 4


def to_text(f, ap=_default_ap, style="default") -> str:
    """Render a formula; parse(to_text(f)) == f.

    `ap` maps proposition names to their rendering; `style="smv"` prints
    constants as TRUE/FALSE and `style="prism"` as true/false.
    """

    def wrap(g, level):
        s = go(g)
        return f"({s})" if _level(g) < level else s

    def go(g):
        if isinstance(g, Const):
            if style == "prism":
                return "true" if g.value else "false"
            return "TRUE" if g.value else "FALSE"
        if isinstance(g, Prop):
            return ap(g.name)
        if isinstance(g, Not):
            return "!" + wrap(g.arg, 4)
        if isinstance(g, And):
            return " & ".join(wrap(a, 4) for a in g.args)
        if isinstance(g, Or):
            return " | ".join(wrap(a, 3) for a in g.args)
        if isinstance(g, Implies):
            return f"{wrap(g.left, 2)} -> {wrap(g.right, 1)}"
        if isinstance(g, Temporal):
            return f"{g.op} ({go(g.arg)})"
        if isinstance(g, Until):
            inner = f"{wrap(g.left, 4)} U {wrap(g.right, 4)}"
            return inner if g.quant is None else f"{g.quant} [{inner}]"
        if isinstance(g, PathOp):
            return f"{g.op} {wrap(g.arg, 4)}"
        if isinstance(g, Prob):
            bound = "?" if g.bound is None else exact_decimal(g.bound)
            cmp = "=" if g.bound is None else g.cmp
            return f"P{cmp}{bound} [{go(g.path)}]"
        raise TypeError(f"not a formula: {g!r}")

    return go(f)


def exact_decimal(q: Fraction) -> str:
    """Exact rendering: integers and terminating decimals as decimals, else n/d."""
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    k = max(twos, fives)
    digits = str(abs(q.numerator) * 10**k // q.denominator).rjust(k + 1, "0")
    sign = "-" if q < 0 else ""
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def propositions(f) -> set:
    """Names of the atomic propositions occurring in `f`."""
    if isinstance(f, Prop):
        return {f.name}
    out = set()
    for child in children(f):
        out |= propositions(child)
    return out


def children(f) -> tuple:
    if isinstance(f, (Not, Temporal, PathOp)):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, (Implies, Until)):
        return (f.left, f.right)
    if isinstance(f, Prob):
        return (f.path,)
    return ()


def substitute(f, macros: dict):
    """Replace propositions named in `macros` by their formulas (one level)."""
    if isinstance(f, Prop):
        return macros.get(f.name, f)
    if isinstance(f, Not):
        return Not(substitute(f.arg, macros))
    if isinstance(f, And):
        return And(tuple(substitute(a, macros) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute(a, macros) for a in f.args))
    if isinstance(f, Implies):
        return Implies(substitute(f.left, macros), substitute(f.right, macros))
    if isinstance(f, Temporal):
        return Temporal(f.op, substitute(f.arg, macros))
    if isinstance(f, PathOp):
        return PathOp(f.op, substitute(f.arg, macros))
    if isinstance(f, Until):
        return Until(f.quant, substitute(f.left, macros), substitute(f.right, macros))
    if isinstance(f, Prob):
        return Prob(f.cmp, f.bound, substitute(f.path, macros))
    return f


def parse_property_file(text: str) -> list:
    """Lines of the form `ctl: <formula>` or `pctl: <formula>`; `#` starts a comment.

    Returns a list of (logic, formula) pairs in file order.
    """
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        logic, sep, body = line.partition(":")
        logic = logic.strip().lower()
        if not sep or logic not in ("ctl", "pctl"):
            raise FormulaError(f"line {lineno}: expected 'ctl:' or 'pctl:' prefix")
        try:
            f = parse_ctl(body) if logic == "ctl" else parse_pctl(body)
        except FormulaError as exc:
            raise FormulaError(f"line {lineno}: {exc}") from None
        out.append((logic, f))
    return out


# ------------------------------------------------------- identifier mangling

_NON_IDENT = re.compile(r"[^A-Za-z0-9_]+")


def sanitize_ap(name: str) -> str:
    """Identifier form of a label name: `A1.at(6)` -> `A1_at_6`."""
    ident = _NON_IDENT.sub("_", name).strip("_")
    if not ident:
        raise ValueError(f"cannot derive an identifier from {name!r}")
    if ident[0].isdigit():
        ident = "_" + ident
    return ident


def sanitize_map(names) -> dict:
    """Map each name to its identifier, refusing two names that collide."""
    out = {}
    seen = {}
    for name in sorted(set(names)):
        ident = sanitize_ap(name)
        if ident in seen:
            raise ValueError(f"label names {seen[ident]!r} and {name!r} both sanitize to {ident!r}")
        seen[ident] = name
        out[name] = ident
    return out
