"""Trigger-action rules: a small DSL, its evaluator, and an edge-triggered engine.

Rule files look like:

    # send an alarm when someone stays in the toilet too long
    RULE toilet_alarm:
        WHEN Toilet.Occupied == True AND Duration >= 30min
        THEN ALERT "Sending an alarm to caregiver"

    RULE porch_light:
        WHEN Porch.Presence == True AND Time in [8:00pm 8:00am]
        THEN SET FrontDoorLight.ON = True

Triggers are boolean expressions over entity state (NOT > AND > OR), plus two
temporal atoms: ``Duration >= <n><unit>`` (every plain predicate in the same
AND group must have held continuously that long) and ``Time in [a b]`` (clock
window, wrapping midnight when a > b). A bare ``Name == x`` predicate is
shorthand for ``Activity.Name == x``. Actions: EMIT (derived activity event),
SET (actuation event), ALERT (message only). Engine semantics are
edge-triggered on event time: a rule fires exactly when its trigger flips
false -> true, with duration boundaries checked by internal timers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import InvalidInputError, RuleSyntaxError
from .events import ContextEvent, EventTimeline

MS_PER_MINUTE = 60_000
MS_PER_DAY = 86_400_000

COMPARATORS = ("==", "!=", ">=", "<=", ">", "<")

DURATION_UNITS_MS = {"ms": 1, "s": 1000, "min": MS_PER_MINUTE, "mins": MS_PER_MINUTE,
                     "h": 3_600_000}


# ---------------------------------------------------------------------------
# Trigger expression tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Predicate:
    entity: str
    attribute: str
    op: str
    literal: bool | float | int | str

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise InvalidInputError(f"unknown comparator {self.op!r}")


@dataclass(frozen=True)
class DurationAtLeast:
    duration_ms: int


@dataclass(frozen=True)
class TimeWindow:
    start_min: int   # minutes since midnight, in [0, 1440)
    end_min: int

    def __post_init__(self):
        for v in (self.start_min, self.end_min):
            if not 0 <= v < 1440:
                raise InvalidInputError("clock values must lie in [00:00, 24:00)")


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    operand: object


@dataclass(frozen=True)
class And:
    operands: tuple


@dataclass(frozen=True)
class Or:
    operands: tuple


@dataclass(frozen=True)
class Action:
    type: str                       # emit_event | send_alert | set_entity
    entity: str | None = None
    attribute: str | None = None
    value: object | None = None
    message: str | None = None

    def __post_init__(self):
        if self.type == "send_alert":
            if self.message is None or self.entity is not None:
                raise InvalidInputError("send_alert carries only a message")
        elif self.type in ("emit_event", "set_entity"):
            if self.entity is None or self.attribute is None or self.value is None:
                raise InvalidInputError(f"{self.type} needs entity, attribute, and value")
        else:
            raise InvalidInputError(f"unknown action type {self.type!r}")

    def payload(self) -> dict:
        if self.type == "send_alert":
            return {"message": self.message}
        return {"entity": self.entity, "attribute": self.attribute, "value": self.value}


@dataclass(frozen=True)
class Rule:
    name: str
    trigger: object
    actions: tuple


@dataclass
class RuleSet:
    rules: list[Rule]

    def __post_init__(self):
        seen = set()
        for r in self.rules:
            if r.name in seen:
                raise InvalidInputError(f"duplicate rule name {r.name!r}")
            seen.add(r.name)
            if not r.actions:
                raise InvalidInputError(f"rule {r.name!r} has no actions")
            _validate_durations(r.trigger, r.name)


def _validate_durations(node, rule_name, parent_is_and=False):
    if isinstance(node, DurationAtLeast):
        if not parent_is_and:
            raise InvalidInputError(
                f"rule {rule_name!r}: Duration must sit inside an AND group "
                "with at least one plain predicate")
        return
    if isinstance(node, And):
        has_duration = any(isinstance(op, DurationAtLeast) for op in node.operands)
        has_predicate = any(isinstance(op, Predicate) for op in node.operands)
        if has_duration and not has_predicate:
            raise InvalidInputError(
                f"rule {rule_name!r}: Duration's AND group needs a plain predicate "
                "to measure")
        for op in node.operands:
            _validate_durations(op, rule_name, parent_is_and=True)
    elif isinstance(node, Or):
        for op in node.operands:
            _validate_durations(op, rule_name)
    elif isinstance(node, Not):
        _validate_durations(node.operand, rule_name)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<clock>\d{1,2}:\d{2}(?:am|pm)?)
  | (?P<duration>\d+(?:\.\d+)?(?:ms|mins|min|s|h)\b)
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|>=|<=|>|<|=|[.:,()\[\]])
""", re.VERBOSE)

_KEYWORDS = {"RULE", "WHEN", "THEN", "NOT", "AND", "OR", "EMIT", "SET", "ALERT",
             "Duration", "Time", "in"}


@dataclass(frozen=True)
class _Token:
    kind: str      # keyword name, IDENT, NUMBER, STRING, CLOCK, DURATION, BOOL, op text, EOF
    text: str
    line: int
    column: int


def _lex(text: str) -> list[_Token]:
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}",
                                  line, pos - line_start + 1)
        column = match.start() - line_start + 1
        kind = match.lastgroup
        tok = match.group()
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind == "ident":
            if tok in _KEYWORDS:
                tokens.append(_Token(tok, tok, line, column))
            elif tok.lower() in ("true", "false"):
                tokens.append(_Token("BOOL", tok, line, column))
            else:
                tokens.append(_Token("IDENT", tok, line, column))
        elif kind == "clock":
            tokens.append(_Token("CLOCK", tok, line, column))
        elif kind == "duration":
            tokens.append(_Token("DURATION", tok, line, column))
        elif kind == "number":
            tokens.append(_Token("NUMBER", tok, line, column))
        elif kind == "string":
            tokens.append(_Token("STRING", tok, line, column))
        else:
            tokens.append(_Token(tok, tok, line, column))
        pos = match.end()
    tokens.append(_Token("EOF", "", line, len(text) - line_start + 1))
    return tokens


def _parse_clock(text: str, line: int, column: int) -> int:
    m = re.fullmatch(r"(\d{1,2}):(\d{2})(am|pm)?", text)
    hours, minutes, suffix = int(m.group(1)), int(m.group(2)), m.group(3)
    if minutes > 59:
        raise RuleSyntaxError(f"bad minutes in clock {text!r}", line, column)
    if suffix:
        if not 1 <= hours <= 12:
            raise RuleSyntaxError(f"12-hour clock needs hours 1-12: {text!r}", line, column)
        hours = hours % 12 + (12 if suffix == "pm" else 0)
    elif hours > 23:
        raise RuleSyntaxError(f"bad hours in clock {text!r}", line, column)
    return hours * 60 + minutes


def _parse_duration(text: str) -> int:
    m = re.fullmatch(r"(\d+(?:\.\d+)?)(ms|mins|min|s|h)", text)
    return int(round(float(m.group(1)) * DURATION_UNITS_MS[m.group(2)]))


class _Parser:
    def __init__(self, text: str):
        self.tokens = _lex(text)
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        if self.cur.kind != kind:
            raise RuleSyntaxError(f"expected {kind!r}, found {self.cur.text!r}",
                                  self.cur.line, self.cur.column)
        return self.advance()

    def error(self, message: str):
        raise RuleSyntaxError(message, self.cur.line, self.cur.column)

    def parse_ruleset(self) -> RuleSet:
        rules = []
        while self.cur.kind != "EOF":
            rules.append(self.parse_rule())
        if not rules:
            self.error("no rules found")
        return RuleSet(rules)

    def parse_rule(self) -> Rule:
        self.expect("RULE")
        if self.cur.kind == "IDENT":
            name = self.advance().text
        elif self.cur.kind == "STRING":
            name = _unquote(self.advance().text)
        else:
            self.error("expected a rule name")
        self.expect(":")
        self.expect("WHEN")
        trigger = self.parse_expr()
        self.expect("THEN")
        actions = [self.parse_action()]
        while self.cur.kind == ",":
            self.advance()
            actions.append(self.parse_action())
        return Rule(name=name, trigger=trigger, actions=tuple(actions))

    def parse_expr(self):
        operands = [self.parse_and_expr()]
        while self.cur.kind == "OR":
            self.advance()
            operands.append(self.parse_and_expr())
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def parse_and_expr(self):
        operands = [self.parse_unary()]
        while self.cur.kind == "AND":
            self.advance()
            operands.append(self.parse_unary())
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def parse_unary(self):
        if self.cur.kind == "NOT":
            self.advance()
            return Not(self.parse_unary())
        if self.cur.kind == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        return self.parse_atom()

    def parse_atom(self):
        tok = self.cur
        if tok.kind == "Duration":
            self.advance()
            if self.cur.kind != ">=":
                self.error("Duration supports only '>='")
            self.advance()
            return DurationAtLeast(self.parse_duration_value())
        if tok.kind == "Time":
            self.advance()
            if not (self.cur.kind == "in"):
                self.error("expected 'in' after Time")
            self.advance()
            self.expect("[")
            start = self.parse_clock_value()
            end = self.parse_clock_value()
            self.expect("]")
            return TimeWindow(start, end)
        if tok.kind == "BOOL":
            self.advance()
            return Const(tok.text.lower() == "true")
        if tok.kind == "IDENT":
            first = self.advance().text
            if self.cur.kind == ".":
                self.advance()
                attribute = self.expect("IDENT").text
                entity = first
            else:
                entity, attribute = "Activity", first
            op = self.parse_comparator()
            literal = self.parse_literal()
            return Predicate(entity, attribute, op, literal)
        self.error(f"expected a condition, found {tok.text!r}")

    def parse_comparator(self) -> str:
        if self.cur.kind in COMPARATORS:
            return self.advance().text
        if self.cur.kind == "=":
            self.advance()   # tolerate a single '=' as equality
            return "=="
        self.error(f"expected a comparator, found {self.cur.text!r}")

    def parse_literal(self):
        tok = self.cur
        if tok.kind == "BOOL":
            self.advance()
            return tok.text.lower() == "true"
        if tok.kind == "NUMBER":
            self.advance()
            return float(tok.text) if "." in tok.text else int(tok.text)
        if tok.kind == "STRING":
            self.advance()
            return _unquote(tok.text)
        if tok.kind == "IDENT":
            self.advance()
            return tok.text
        self.error(f"expected a literal, found {tok.text!r}")

    def parse_duration_value(self) -> int:
        tok = self.cur
        if tok.kind == "DURATION":
            self.advance()
            return _parse_duration(tok.text)
        if tok.kind == "NUMBER":     # "30 min" with whitespace
            self.advance()
            unit = self.cur
            if unit.kind == "IDENT" and unit.text in DURATION_UNITS_MS:
                self.advance()
                return int(round(float(tok.text) * DURATION_UNITS_MS[unit.text]))
            self.error("expected a duration unit (ms, s, min, h)")
        self.error(f"expected a duration, found {tok.text!r}")

    def parse_clock_value(self) -> int:
        tok = self.cur
        if tok.kind != "CLOCK":
            self.error(f"expected a clock time, found {tok.text!r}")
        self.advance()
        return _parse_clock(tok.text, tok.line, tok.column)

    def parse_action(self) -> Action:
        tok = self.cur
        if tok.kind == "ALERT":
            self.advance()
            message = _unquote(self.expect("STRING").text)
            return Action(type="send_alert", message=message)
        if tok.kind in ("EMIT", "SET"):
            self.advance()
            entity = self.expect("IDENT").text
            self.expect(".")
            attribute = self.expect("IDENT").text
            if self.cur.kind in ("=", "=="):
                self.advance()
            else:
                self.error("expected '=' in action")
            value = self.parse_literal()
            action_type = "emit_event" if tok.kind == "EMIT" else "set_entity"
            return Action(type=action_type, entity=entity, attribute=attribute,
                          value=value)
        self.error(f"expected an action (EMIT, SET, or ALERT), found {tok.text!r}")


def _unquote(text: str) -> str:
    body = text[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


def parse_rules(text: str) -> RuleSet:
    """Parse rule text into a RuleSet; syntax errors carry line/column."""
    return _Parser(text).parse_ruleset()


# ---------------------------------------------------------------------------
# Pretty printer
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _format_literal(value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, (int, float)):
        return repr(value)
    if (_IDENT_RE.fullmatch(value) and value not in _KEYWORDS
            and value.lower() not in ("true", "false")):
        return value
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _format_duration(ms: int) -> str:
    for unit, factor in (("h", 3_600_000), ("min", MS_PER_MINUTE), ("s", 1000)):
        if ms % factor == 0 and ms >= factor:
            return f"{ms // factor}{unit}"
    return f"{ms}ms"


def _format_clock(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def format_expr(node, parent: str = "or") -> str:
    if isinstance(node, Predicate):
        return f"{node.entity}.{node.attribute} {node.op} {_format_literal(node.literal)}"
    if isinstance(node, DurationAtLeast):
        return f"Duration >= {_format_duration(node.duration_ms)}"
    if isinstance(node, TimeWindow):
        return f"Time in [{_format_clock(node.start_min)} {_format_clock(node.end_min)}]"
    if isinstance(node, Const):
        return "True" if node.value else "False"
    if isinstance(node, Not):
        inner = format_expr(node.operand, parent="not")
        if isinstance(node.operand, (And, Or)):
            inner = f"({inner})"
        return f"NOT {inner}"
    if isinstance(node, And):
        parts = []
        for op in node.operands:
            text = format_expr(op, parent="and")
            if isinstance(op, (And, Or)):
                text = f"({text})"
            parts.append(text)
        return " AND ".join(parts)
    if isinstance(node, Or):
        parts = []
        for op in node.operands:
            text = format_expr(op, parent="or")
            if isinstance(op, Or):
                text = f"({text})"
            parts.append(text)
        return " OR ".join(parts)
    raise InvalidInputError(f"unknown expression node {node!r}")


def _format_action(action: Action) -> str:
    if action.type == "send_alert":
        return 'ALERT "' + action.message.replace("\\", "\\\\").replace('"', '\\"') + '"'
    verb = "EMIT" if action.type == "emit_event" else "SET"
    return (f"{verb} {action.entity}.{action.attribute} = "
            f"{_format_literal(action.value)}")


def print_rules(ruleset: RuleSet) -> str:
    """Render a RuleSet back to canonical DSL text (parses to the same tree)."""
    chunks = []
    for rule in ruleset.rules:
        name = rule.name if _IDENT_RE.fullmatch(rule.name) else f'"{rule.name}"'
        actions = ", ".join(_format_action(a) for a in rule.actions)
        chunks.append(f"RULE {name}:\n"
                      f"    WHEN {format_expr(rule.trigger)}\n"
                      f"    THEN {actions}\n")
    return "\n".join(chunks)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _compare(value, op: str, literal) -> bool:
    if isinstance(value, bool) != isinstance(literal, bool):
        return False     # booleans never equal numbers or strings
    if op == "==":
        return value == literal
    if op == "!=":
        return value != literal
    numeric = isinstance(value, (int, float)) and isinstance(literal, (int, float))
    stringy = isinstance(value, str) and isinstance(literal, str)
    if not (numeric or stringy):
        return False
    if op == ">=":
        return value >= literal
    if op == "<=":
        return value <= literal
    if op == ">":
        return value > literal
    return value < literal


def _clock_minutes(ts: int) -> int:
    return (int(ts) % MS_PER_DAY) // MS_PER_MINUTE


def _predicate_holds(pred: Predicate, timeline: EventTimeline, now: int) -> bool:
    value = timeline.state_at(pred.entity, pred.attribute, now)
    if value is None:
        return False     # unknown state evaluates conservatively false
    return _compare(value, pred.op, pred.literal)


def _predicate_held_ms(pred: Predicate, timeline: EventTimeline, now: int):
    return timeline.run_duration(pred.entity, pred.attribute,
                                 lambda v: _compare(v, pred.op, pred.literal), now)


def evaluate(trigger, timeline: EventTimeline, now: int) -> bool:
    """Truth value of a trigger at event time ``now``.

    ``Duration >= T`` is true iff every plain predicate in its AND group has
    held continuously for at least T. A time window [a b) wraps midnight when
    a > b. Unknown entity state makes a predicate false.
    """
    if isinstance(trigger, Const):
        return trigger.value
    if isinstance(trigger, Predicate):
        return _predicate_holds(trigger, timeline, now)
    if isinstance(trigger, TimeWindow):
        clock = _clock_minutes(now)
        if trigger.start_min <= trigger.end_min:
            return trigger.start_min <= clock < trigger.end_min
        return clock >= trigger.start_min or clock < trigger.end_min
    if isinstance(trigger, Not):
        return not evaluate(trigger.operand, timeline, now)
    if isinstance(trigger, Or):
        return any(evaluate(op, timeline, now) for op in trigger.operands)
    if isinstance(trigger, And):
        for op in trigger.operands:
            if isinstance(op, DurationAtLeast):
                continue
            if not evaluate(op, timeline, now):
                return False
        durations = [op for op in trigger.operands if isinstance(op, DurationAtLeast)]
        if durations:
            held = []
            for op in trigger.operands:
                if isinstance(op, Predicate):
                    h = _predicate_held_ms(op, timeline, now)
                    if h is None:
                        return False
                    held.append(h)
            needed = max(d.duration_ms for d in durations)
            if not held or min(held) < needed:
                return False
        return True
    if isinstance(trigger, DurationAtLeast):
        raise InvalidInputError("Duration cannot be evaluated outside an AND group")
    raise InvalidInputError(f"unknown trigger node {trigger!r}")


def _duration_groups(node, out=None):
    """All And nodes (anywhere in the tree) that contain a Duration atom."""
    if out is None:
        out = []
    if isinstance(node, And):
        if any(isinstance(op, DurationAtLeast) for op in node.operands):
            out.append(node)
        for op in node.operands:
            _duration_groups(op, out)
    elif isinstance(node, (Or, Not)):
        operands = node.operands if isinstance(node, Or) else (node.operand,)
        for op in operands:
            _duration_groups(op, out)
    return out


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class EmissionCapError(RuntimeError):
    """A step emitted more derived events than the cap allows (rule cycle)."""


ACTION_EVENT_KIND = {"emit_event": "activity", "set_entity": "actuation"}


class RuleEngine:
    """Edge-triggered trigger-action engine over one ordered event stream.

    Rules evaluate in declaration order; a rule fires exactly when its
    trigger transitions false -> true. EMIT/SET actions append events to the
    timeline at the same timestamp (visible to later rules, run to
    completion). Duration boundaries are handled by internal timers that
    evaluate the rule at exactly run-start + T, in event time.
    """

    def __init__(self, ruleset: RuleSet, timeline: EventTimeline | None = None,
                 emission_cap: int = 100):
        self.ruleset = ruleset
        self.timeline = timeline if timeline is not None else EventTimeline()
        self.emission_cap = emission_cap
        self.last_value = {rule.name: False for rule in ruleset.rules}
        self._groups = {rule.name: _duration_groups(rule.trigger)
                        for rule in ruleset.rules}
        self._timers: list[tuple[int, str]] = []   # sorted unique (ts, rule name)
        self.action_log: list[dict] = []

    # -- timers ------------------------------------------------------------

    def _schedule_checks(self, now: int) -> None:
        for rule in self.ruleset.rules:
            for group in self._groups[rule.name]:
                held = []
                broken = False
                for op in group.operands:
                    if isinstance(op, Predicate):
                        h = _predicate_held_ms(op, self.timeline, now)
                        if h is None:
                            broken = True
                            break
                        held.append(h)
                if broken or not held:
                    continue
                run_start = now - min(held)
                for op in group.operands:
                    if isinstance(op, DurationAtLeast):
                        check_ts = run_start + op.duration_ms
                        if check_ts > now:
                            entry = (check_ts, rule.name)
                            if entry not in self._timers:
                                self._timers.append(entry)
        self._timers.sort()

    def _fire_due_timers(self, up_to_ts: int, fired: list) -> None:
        while self._timers and self._timers[0][0] <= up_to_ts:
            check_ts, rule_name = self._timers.pop(0)
            rule = next(r for r in self.ruleset.rules if r.name == rule_name)
            self._evaluate_rules(check_ts, fired, only=[rule])
            self._schedule_checks(check_ts)

    # -- evaluation --------------------------------------------------------

    def _evaluate_rules(self, now: int, fired: list, only=None) -> None:
        budget = self.emission_cap
        pending = [(only or self.ruleset.rules, now)]
        emitters: list[str] = []
        while pending:
            rules, when = pending.pop(0)
            emitted_here = False
            for rule in rules:
                value = evaluate(rule.trigger, self.timeline, when)
                rose = value and not self.last_value[rule.name]
                self.last_value[rule.name] = value
                if not rose:
                    continue
                for action in rule.actions:
                    record = {"ts": int(when), "rule": rule.name,
                              "action_type": action.type, "payload": action.payload()}
                    fired.append(record)
                    self.action_log.append(record)
                    if action.type in ACTION_EVENT_KIND:
                        budget -= 1
                        emitters.append(rule.name)
                        if budget < 0:
                            cycle = " -> ".join(emitters[-6:])
                            raise EmissionCapError(
                                f"more than {self.emission_cap} emitted events in one "
                                f"step; suspected rule cycle: {cycle}")
                        self.timeline.ingest(ContextEvent(
                            int(when), ACTION_EVENT_KIND[action.type],
                            action.entity, action.attribute, action.value))
                        emitted_here = True
            if emitted_here:
                # derived events may flip other (or the same) rules at this ts
                pending.append((self.ruleset.rules, when))

    # -- public API ----------------------------------------------------------

    def step(self, event: ContextEvent) -> list[dict]:
        """Advance the engine by one external event; returns actions fired."""
        fired: list[dict] = []
        self._fire_due_timers(event.ts, fired)
        self.timeline.ingest(event)
        self._evaluate_rules(event.ts, fired)
        self._schedule_checks(event.ts)
        return fired

    def advance_to(self, ts: int) -> list[dict]:
        """Fire any pending duration timers up to ``ts`` (no external event)."""
        fired: list[dict] = []
        self._fire_due_timers(ts, fired)
        return fired


def run(ruleset: RuleSet, events, flush_until: int | None = None,
        timeline: EventTimeline | None = None, emission_cap: int = 100) -> list[dict]:
    """Fold the engine over an ordered event stream; returns the action log."""
    engine = RuleEngine(ruleset, timeline=timeline, emission_cap=emission_cap)
    for event in events:
        engine.step(event)
    if flush_until is not None:
        engine.advance_to(flush_until)
    return engine.action_log


# ---------------------------------------------------------------------------
# Action log file format
# ---------------------------------------------------------------------------

EXAMPLE_RULES = """\
# Household rules: complex activities derived from atomic context events,
# plus safety alerts. Bare names (Sleeping, Falling) read activity state.

RULE making_sandwich:
    WHEN Kitchen.Presence == True AND Cooktop.ON == True AND Choptable.Use == True
    THEN EMIT Activity.MakingSandwich = True

RULE sleep_lights_off:
    WHEN Sleeping == True
    THEN SET Lights.ON = False

RULE toilet_alarm:
    WHEN Toilet.Occupied == True AND Duration >= 30min
    THEN ALERT "Sending an alarm to caregiver"

RULE fall_alarm:
    WHEN Falling == True
    THEN ALERT "Sending an alarm to caregiver"

RULE porch_light:
    WHEN Porch.Presence == True AND Time in [8:00pm 8:00am]
    THEN SET FrontDoorLight.ON = True

RULE watching_tv:
    WHEN Couch.Occupied == True AND TV.ON == True
    THEN EMIT Activity.WatchingTV = True
"""


def write_actions_jsonl(path, actions) -> None:
    with open(path, "w") as fh:
        for record in actions:
            fh.write(json.dumps(record) + "\n")


def read_actions_jsonl(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
