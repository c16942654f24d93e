"""Scenario DSL: lexer, parser, validator, canonical renderer, and compiler.

Scenario files (`.scn`) declare assets and a lesson/stage/action tree.  The
compiler flattens the tree into an ordered RuntimeProgram whose action path
ids look like ``Lesson0/Stage1/Action0``.  Parsing reports as many errors as
it can per run, recovering at the next closing brace.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .core import Pose, UnitQuat, Vec3

KEYWORDS = {
    "scenario", "asset", "lesson", "stage", "action",
    "insert", "remove", "tool", "use", "quiz",
}

ACTION_KINDS = {"insert", "remove", "tool", "use", "quiz"}

DEFAULT_CLEARANCE_M = 0.3
DEFAULT_REQUIRED_ACTIVE_S = 1.0
DEFAULT_REQUIRED_SWEEP_M = 0.5


@dataclass(frozen=True)
class Span:
    line: int  # 1-based
    col: int   # 1-based
    length: int


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    message: str
    span: Span

    def format(self) -> str:
        return f"{self.span.line}:{self.span.col}: {self.severity.value}: {self.message}"


class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENT = "ident"
    STRING = "string"
    NUMBER = "number"
    LBRACE = "{"
    RBRACE = "}"
    LPAREN = "("
    RPAREN = ")"
    LBRACKET = "["
    RBRACKET = "]"
    EQUALS = "="
    COMMA = ","
    SLASH = "/"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    value: str
    span: Span


_PUNCT = {
    "{": TokenKind.LBRACE,
    "}": TokenKind.RBRACE,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    "[": TokenKind.LBRACKET,
    "]": TokenKind.RBRACKET,
    "=": TokenKind.EQUALS,
    ",": TokenKind.COMMA,
    "/": TokenKind.SLASH,
}


class DslError(Exception):
    """Carries the diagnostics of a failed parse or validation."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.format() for d in diagnostics))


def tokenize(source: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diagnostics: list[Diagnostic] = []
    line, col = 1, 1
    i = 0
    n = len(source)

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance()
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                advance()
            continue
        start_line, start_col = line, col
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, Span(start_line, start_col, 1)))
            advance()
            continue
        if ch == '"':
            advance()
            buf = []
            terminated = False
            while i < n:
                c = source[i]
                if c == '"':
                    advance()
                    terminated = True
                    break
                if c == "\n":
                    break
                buf.append(c)
                advance()
            text = "".join(buf)
            if not terminated:
                diagnostics.append(Diagnostic(
                    Severity.ERROR, "unterminated string",
                    Span(start_line, start_col, len(text) + 1)))
                continue
            tokens.append(Token(TokenKind.STRING, text,
                                Span(start_line, start_col, len(text) + 2)))
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and source[i + 1].isdigit()):
            j = i + 1
            while j < n and (source[j].isdigit() or source[j] in ".eE+-"):
                # stop a trailing +/- that is not an exponent sign
                if source[j] in "+-" and source[j - 1] not in "eE":
                    break
                j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                diagnostics.append(Diagnostic(
                    Severity.ERROR, f"malformed number '{text}'",
                    Span(start_line, start_col, len(text))))
                advance(j - i)
                continue
            tokens.append(Token(TokenKind.NUMBER, text,
                                Span(start_line, start_col, len(text))))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENT
            tokens.append(Token(kind, text, Span(start_line, start_col, len(text))))
            advance(j - i)
            continue
        diagnostics.append(Diagnostic(
            Severity.ERROR, f"illegal character '{ch}'", Span(start_line, start_col, 1)))
        advance()

    tokens.append(Token(TokenKind.EOF, "", Span(line, col, 0)))
    return tokens, diagnostics


Value = Union[str, float, Pose, list]


@dataclass
class AssetDef:
    id: str
    initial_pose: Pose = field(default_factory=Pose.identity)
    tags: frozenset[str] = frozenset()
    narration: Optional[list[tuple[float, str]]] = None
    ik: Optional[tuple[float, float]] = None
    span: Span = Span(0, 0, 0)


@dataclass
class Region:
    center: Vec3
    radius: float


@dataclass
class ActionDef:
    id: str
    kind: str
    span: Span = Span(0, 0, 0)
    # insert
    interactable: Optional[str] = None
    final: Optional[Pose] = None
    hologram: Optional[str] = None
    aidline: Optional[str] = None
    # remove
    target: Optional[str] = None
    clearance_m: float = DEFAULT_CLEARANCE_M
    # tool
    tool: Optional[str] = None
    region: Optional[Region] = None
    required_active_s: float = DEFAULT_REQUIRED_ACTIVE_S
    # use
    implement: Optional[str] = None
    required_sweep_m: float = DEFAULT_REQUIRED_SWEEP_M
    # quiz
    question: Optional[str] = None
    choices: Optional[list[str]] = None
    correct: Optional[int] = None


@dataclass
class StageDef:
    id: str
    title: str
    actions: list[ActionDef] = field(default_factory=list)


@dataclass
class LessonDef:
    id: str
    title: str
    stages: list[StageDef] = field(default_factory=list)


@dataclass
class ScenarioDoc:
    name: str
    assets: list[AssetDef] = field(default_factory=list)
    lessons: list[LessonDef] = field(default_factory=list)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def bump(self) -> Token:
        tok = self.cur
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def error(self, message: str, span: Optional[Span] = None) -> None:
        self.diagnostics.append(Diagnostic(Severity.ERROR, message, span or self.cur.span))

    def expect(self, kind: TokenKind, what: str) -> Optional[Token]:
        if self.cur.kind is kind:
            return self.bump()
        self.error(f"expected {what}, got '{self.cur.value or 'end of input'}'")
        return None

    def expect_keyword(self, word: str) -> bool:
        if self.cur.kind is TokenKind.KEYWORD and self.cur.value == word:
            self.bump()
            return True
        self.error(f"expected '{word}', got '{self.cur.value or 'end of input'}'")
        return False

    def recover_to_rbrace(self) -> None:
        """Panic-mode recovery: skip to just past the next closing brace."""
        depth = 0
        while self.cur.kind is not TokenKind.EOF:
            if self.cur.kind is TokenKind.LBRACE:
                depth += 1
            elif self.cur.kind is TokenKind.RBRACE:
                self.bump()
                if depth == 0:
                    return
                depth -= 1
                continue
            self.bump()

    def parse_scenario(self) -> Optional[ScenarioDoc]:
        if not self.expect_keyword("scenario"):
            return None
        name_tok = self.expect(TokenKind.STRING, "scenario name string")
        if name_tok is None or self.expect(TokenKind.LBRACE, "'{'") is None:
            return None
        doc = ScenarioDoc(name=name_tok.value)
        while self.cur.kind is not TokenKind.RBRACE:
            if self.cur.kind is TokenKind.EOF:
                self.error("unexpected end of input, expected '}'")
                return doc
            if self.cur.kind is TokenKind.KEYWORD and self.cur.value == "asset":
                asset = self.parse_asset()
                if asset is not None:
                    doc.assets.append(asset)
            elif self.cur.kind is TokenKind.KEYWORD and self.cur.value == "lesson":
                lesson = self.parse_lesson()
                if lesson is not None:
                    doc.lessons.append(lesson)
            else:
                self.error(f"expected 'asset' or 'lesson', got '{self.cur.value}'")
                self.bump()
                self.recover_to_rbrace()
        self.bump()
        return doc

    def parse_asset(self) -> Optional[AssetDef]:
        self.bump()  # 'asset'
        name = self.expect(TokenKind.IDENT, "asset identifier")
        if name is None or self.expect(TokenKind.LBRACE, "'{'") is None:
            self.recover_to_rbrace()
            return None
        props = self.parse_properties()
        asset = AssetDef(id=name.value, span=name.span)
        for key, (value, span) in props.items():
            if key == "pose":
                if not isinstance(value, Pose):
                    self.error("asset 'pose' must be a pose(...) value", span)
                else:
                    asset.initial_pose = value
            elif key == "tags":
                if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
                    self.error("asset 'tags' must be a list of strings", span)
                else:
                    asset.tags = frozenset(value)
            elif key == "narration":
                lines = _as_narration(value)
                if lines is None:
                    self.error("asset 'narration' must be a list of [delay, text] pairs", span)
                else:
                    asset.narration = lines
            elif key == "ik":
                if (not isinstance(value, list) or len(value) != 2
                        or not all(isinstance(v, float) for v in value)):
                    self.error("asset 'ik' must be [L1, L2]", span)
                else:
                    asset.ik = (value[0], value[1])
            else:
                self.error(f"unknown asset property '{key}'", span)
        return asset

    def parse_lesson(self) -> Optional[LessonDef]:
        self.bump()  # 'lesson'
        name = self.expect(TokenKind.IDENT, "lesson identifier")
        title = self.expect(TokenKind.STRING, "lesson title string")
        if name is None or title is None or self.expect(TokenKind.LBRACE, "'{'") is None:
            self.recover_to_rbrace()
            return None
        lesson = LessonDef(id=name.value, title=title.value)
        while self.cur.kind is not TokenKind.RBRACE:
            if self.cur.kind is TokenKind.EOF:
                self.error("unexpected end of input in lesson")
                return lesson
            if self.cur.kind is TokenKind.KEYWORD and self.cur.value == "stage":
                stage = self.parse_stage()
                if stage is not None:
                    lesson.stages.append(stage)
            else:
                self.error(f"expected 'stage', got '{self.cur.value}'")
                self.bump()
                self.recover_to_rbrace()
        self.bump()
        return lesson

    def parse_stage(self) -> Optional[StageDef]:
        self.bump()  # 'stage'
        name = self.expect(TokenKind.IDENT, "stage identifier")
        title = self.expect(TokenKind.STRING, "stage title string")
        if name is None or title is None or self.expect(TokenKind.LBRACE, "'{'") is None:
            self.recover_to_rbrace()
            return None
        stage = StageDef(id=name.value, title=title.value)
        while self.cur.kind is not TokenKind.RBRACE:
            if self.cur.kind is TokenKind.EOF:
                self.error("unexpected end of input in stage")
                return stage
            if self.cur.kind is TokenKind.KEYWORD and self.cur.value == "action":
                act = self.parse_action()
                if act is not None:
                    stage.actions.append(act)
            else:
                self.error(f"expected 'action', got '{self.cur.value}'")
                self.bump()
                self.recover_to_rbrace()
        self.bump()
        return stage

    def parse_action(self) -> Optional[ActionDef]:
        self.bump()  # 'action'
        name = self.expect(TokenKind.IDENT, "action identifier")
        if name is None:
            self.recover_to_rbrace()
            return None
        if self.cur.kind is TokenKind.KEYWORD and self.cur.value in ACTION_KINDS:
            kind = self.bump().value
        else:
            self.error(f"expected action kind (insert/remove/tool/use/quiz), got '{self.cur.value}'")
            self.recover_to_rbrace()
            return None
        if self.expect(TokenKind.LBRACE, "'{'") is None:
            self.recover_to_rbrace()
            return None
        props = self.parse_properties()
        return self.build_action(name, kind, props)

    def build_action(self, name: Token, kind: str,
                     props: dict[str, tuple[Value, Span]]) -> Optional[ActionDef]:
        act = ActionDef(id=name.value, kind=kind, span=name.span)

        def take_str(key: str, required: bool = False) -> Optional[str]:
            if key not in props:
                if required:
                    self.error(f"{kind} action '{name.value}' missing '{key}' key", name.span)
                return None
            value, span = props.pop(key)
            if not isinstance(value, str):
                self.error(f"'{key}' must be a string", span)
                return None
            return value

        def take_num(key: str, required: bool = False) -> Optional[float]:
            if key not in props:
                if required:
                    self.error(f"{kind} action '{name.value}' missing '{key}' key", name.span)
                return None
            value, span = props.pop(key)
            if not isinstance(value, float):
                self.error(f"'{key}' must be a number", span)
                return None
            return value

        def take_pose(key: str, required: bool = False) -> Optional[Pose]:
            if key not in props:
                if required:
                    self.error(f"{kind} action '{name.value}' missing '{key}' key", name.span)
                return None
            value, span = props.pop(key)
            if not isinstance(value, Pose):
                self.error(f"'{key}' must be a pose(...) value", span)
                return None
            return value

        def take_region(key: str, required: bool = False) -> Optional[Region]:
            if key not in props:
                if required:
                    self.error(f"{kind} action '{name.value}' missing '{key}' key", name.span)
                return None
            value, span = props.pop(key)
            if (not isinstance(value, list) or len(value) != 4
                    or not all(isinstance(v, float) for v in value)):
                self.error(f"'{key}' must be [cx, cy, cz, radius]", span)
                return None
            return Region(Vec3(value[0], value[1], value[2]), value[3])

        if kind == "insert":
            act.interactable = take_str("interactable", required=True)
            act.final = take_pose("final", required=True)
            act.hologram = take_str("hologram", required=True)
            act.aidline = take_str("aidline")
        elif kind == "remove":
            act.target = take_str("target", required=True)
            clearance = take_num("clearance_m")
            if clearance is not None:
                act.clearance_m = clearance
        elif kind == "tool":
            act.tool = take_str("tool", required=True)
            act.region = take_region("region", required=True)
            active = take_num("required_active_s")
            if active is not None:
                act.required_active_s = active
        elif kind == "use":
            act.implement = take_str("implement", required=True)
            act.region = take_region("region", required=True)
            sweep = take_num("required_sweep_m")
            if sweep is not None:
                act.required_sweep_m = sweep
        elif kind == "quiz":
            act.question = take_str("question", required=True)
            if "choices" in props:
                value, span = props.pop("choices")
                if not isinstance(value, list) or not all(isinstance(c, str) for c in value):
                    self.error("'choices' must be a list of strings", span)
                else:
                    act.choices = value
            else:
                self.error(f"quiz action '{name.value}' missing 'choices' key", name.span)
            correct = take_num("correct", required=True)
            if correct is not None:
                act.correct = int(correct)

        for key, (_, span) in props.items():
            self.error(f"unknown {kind} property '{key}'", span)
        return act

    def parse_properties(self) -> dict[str, tuple[Value, Span]]:
        """Parse `IDENT = value` pairs up to and including the closing brace."""
        props: dict[str, tuple[Value, Span]] = {}
        while self.cur.kind is not TokenKind.RBRACE:
            if self.cur.kind is TokenKind.EOF:
                self.error("unexpected end of input, expected '}'")
                return props
            key_tok = self.cur
            if key_tok.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
                self.error(f"expected property name, got '{key_tok.value}'")
                self.recover_to_rbrace()
                return props
            self.bump()
            if self.expect(TokenKind.EQUALS, "'='") is None:
                self.recover_to_rbrace()
                return props
            value = self.parse_value()
            if value is None:
                self.recover_to_rbrace()
                return props
            if key_tok.value in props:
                self.error(f"duplicate property '{key_tok.value}'", key_tok.span)
            else:
                props[key_tok.value] = (value, key_tok.span)
        self.bump()
        return props

    def parse_value(self) -> Optional[Value]:
        tok = self.cur
        if tok.kind is TokenKind.STRING:
            self.bump()
            return tok.value
        if tok.kind is TokenKind.NUMBER:
            self.bump()
            return float(tok.value)
        if tok.kind is TokenKind.IDENT and tok.value == "pose":
            return self.parse_pose()
        if tok.kind is TokenKind.LBRACKET:
            self.bump()
            items: list[Value] = []
            while self.cur.kind is not TokenKind.RBRACKET:
                if self.cur.kind is TokenKind.EOF:
                    self.error("unterminated list")
                    return None
                item = self.parse_value()
                if item is None:
                    return None
                items.append(item)
                if self.cur.kind is TokenKind.COMMA:
                    self.bump()
                elif self.cur.kind is not TokenKind.RBRACKET:
                    self.error("expected ',' or ']' in list")
                    return None
            self.bump()
            return items
        self.error(f"expected a value, got '{tok.value or 'end of input'}'")
        return None

    def parse_pose(self) -> Optional[Pose]:
        self.bump()  # 'pose'
        if self.expect(TokenKind.LPAREN, "'('") is None:
            return None
        nums: list[float] = []
        while self.cur.kind is not TokenKind.RPAREN:
            tok = self.expect(TokenKind.NUMBER, "number in pose(...)")
            if tok is None:
                return None
            nums.append(float(tok.value))
            if self.cur.kind is TokenKind.COMMA:
                self.bump()
            elif self.cur.kind is not TokenKind.RPAREN:
                self.error("expected ',' or ')' in pose(...)")
                return None
        close = self.bump()
        if len(nums) != 7:
            self.error("pose(...) takes 7 numbers: px, py, pz, axis_x, axis_y, axis_z, angle_deg",
                       close.span)
            return None
        px, py, pz, ax, ay, az, angle = nums
        axis = Vec3(ax, ay, az)
        if axis.norm() == 0.0 and angle % 360.0 != 0.0:
            self.error("pose axis must be nonzero for a nonzero angle", close.span)
            return None
        rot = UnitQuat.from_axis_angle(axis, angle) if axis.norm() > 0 else UnitQuat.identity()
        return Pose(Vec3(px, py, pz), rot)


def _as_narration(value: Value) -> Optional[list[tuple[float, str]]]:
    if not isinstance(value, list):
        return None
    lines: list[tuple[float, str]] = []
    for item in value:
        if (not isinstance(item, list) or len(item) != 2
                or not isinstance(item[0], float) or not isinstance(item[1], str)):
            return None
        lines.append((item[0], item[1]))
    return lines


def parse_scenario(source: str) -> ScenarioDoc:
    """Parse scenario text; raises DslError carrying all diagnostics on failure."""
    tokens, lex_diags = tokenize_checked(source)
    parser = _Parser(tokens)
    doc = parser.parse_scenario()
    diags = lex_diags + parser.diagnostics
    errors = [d for d in diags if d.severity is Severity.ERROR]
    if errors or doc is None:
        raise DslError(diags if diags else [Diagnostic(
            Severity.ERROR, "parse failed", Span(1, 1, 0))])
    return doc


def tokenize_checked(source: str) -> tuple[list[Token], list[Diagnostic]]:
    return tokenize(source)


def validate(doc: ScenarioDoc) -> list[Diagnostic]:
    """Semantic checks; returns diagnostics (errors and warnings) in source order."""
    diags: list[Diagnostic] = []
    assets = {a.id: a for a in doc.assets}
    referenced: set[str] = set()

    def err(message: str, span: Span) -> None:
        diags.append(Diagnostic(Severity.ERROR, message, span))

    for asset in doc.assets:
        unknown = asset.tags - {"interactable", "tool", "storyteller_trigger",
                                "ar_visible", "ik_chain"}
        for tag in sorted(unknown):
            err(f"unknown tag '{tag}' on asset '{asset.id}'", asset.span)
        if asset.narration is not None and "storyteller_trigger" not in asset.tags:
            err(f"asset '{asset.id}' has narration but no storyteller_trigger tag", asset.span)
        if asset.ik is not None:
            if "ik_chain" not in asset.tags:
                err(f"asset '{asset.id}' has ik link lengths but no ik_chain tag", asset.span)
            if asset.ik[0] <= 0 or asset.ik[1] <= 0:
                err(f"asset '{asset.id}' ik link lengths must be positive", asset.span)

    seen_lessons: set[str] = set()
    any_action = False
    for lesson in doc.lessons:
        if lesson.id in seen_lessons:
            err(f"duplicate lesson id '{lesson.id}'", Span(0, 0, 0))
        seen_lessons.add(lesson.id)
        seen_stages: set[str] = set()
        for stage in lesson.stages:
            if stage.id in seen_stages:
                err(f"duplicate stage id '{stage.id}' in lesson '{lesson.id}'", Span(0, 0, 0))
            seen_stages.add(stage.id)
            seen_actions: set[str] = set()
            for act in stage.actions:
                any_action = True
                if act.id in seen_actions:
                    err(f"duplicate action id '{act.id}' in stage '{stage.id}'", act.span)
                seen_actions.add(act.id)
                for key, ref in (("interactable", act.interactable),
                                 ("target", act.target),
                                 ("tool", act.tool),
                                 ("implement", act.implement)):
                    if ref is None:
                        continue
                    referenced.add(ref)
                    if ref not in assets:
                        err(f"unknown asset '{ref}'", act.span)
                    elif key == "tool" and "tool" not in assets[ref].tags:
                        err(f"tool action '{act.id}' references asset '{ref}' "
                            "without the tool tag", act.span)
                    elif key in ("interactable", "target") and \
                            "interactable" not in assets[ref].tags:
                        err(f"{act.kind} action '{act.id}' references asset '{ref}' "
                            "without the interactable tag", act.span)
                if act.kind == "quiz" and act.choices is not None and act.correct is not None:
                    if not 0 <= act.correct < len(act.choices):
                        err(f"quiz correct index {act.correct} out of range "
                            f"(choices: {len(act.choices)})", act.span)
                if act.kind == "remove" and act.clearance_m <= 0:
                    err(f"remove clearance must be positive in action '{act.id}'", act.span)
                if act.region is not None and act.region.radius <= 0:
                    err(f"region radius must be positive in action '{act.id}'", act.span)
                if act.kind == "tool" and act.required_active_s <= 0:
                    err(f"required_active_s must be positive in action '{act.id}'", act.span)
                if act.kind == "use" and act.required_sweep_m <= 0:
                    err(f"required_sweep_m must be positive in action '{act.id}'", act.span)

    if not any_action:
        err("scenario declares no actions", Span(1, 1, 0))

    for asset in doc.assets:
        if asset.id not in referenced:
            diags.append(Diagnostic(
                Severity.WARNING, f"asset '{asset.id}' is never referenced", asset.span))
    return diags


@dataclass
class CompiledAction:
    path: str
    action: ActionDef


@dataclass
class RuntimeProgram:
    name: str
    actions: list[CompiledAction]
    assets: dict[str, AssetDef]
    digest: str

    def action_for_asset(self, asset_id: str) -> Optional[int]:
        """Index of the first action whose primary asset is the given one."""
        for i, compiled in enumerate(self.actions):
            act = compiled.action
            if asset_id in (act.interactable, act.target, act.tool, act.implement):
                return i
        return None


def compile_doc(doc: ScenarioDoc) -> RuntimeProgram:
    """Flatten the lesson/stage/action tree into an ordered program."""
    errors = [d for d in validate(doc) if d.severity is Severity.ERROR]
    if errors:
        raise DslError(errors)
    actions = [
        CompiledAction(f"{lesson.id}/{stage.id}/{act.id}", act)
        for lesson in doc.lessons
        for stage in lesson.stages
        for act in stage.actions
    ]
    canonical = render(doc)
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return RuntimeProgram(
        name=doc.name,
        actions=actions,
        assets={a.id: a for a in doc.assets},
        digest=digest,
    )


def load_program(source: str) -> RuntimeProgram:
    return compile_doc(parse_scenario(source))


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _fmt_pose(p: Pose) -> str:
    q = p.rotation
    vec = Vec3(q.x, q.y, q.z)
    s = vec.norm()
    if s < 1e-12:
        axis, angle = Vec3(0, 1, 0), 0.0
    else:
        axis = vec.scale(1.0 / s)
        angle = _round10(2.0 * math.degrees(math.atan2(s, q.w)))
    return ("pose({}, {}, {}, {}, {}, {}, {})".format(
        _fmt_num(p.position.x), _fmt_num(p.position.y), _fmt_num(p.position.z),
        _fmt_num(_round10(axis.x)), _fmt_num(_round10(axis.y)), _fmt_num(_round10(axis.z)),
        _fmt_num(angle)))


def _round10(v: float) -> float:
    return round(v, 10)


def render(doc: ScenarioDoc) -> str:
    """Emit canonical scenario text; parse(render(doc)) reproduces the doc."""
    out: list[str] = [f'scenario "{doc.name}" {{']
    for asset in doc.assets:
        parts = [f"  asset {asset.id} {{"]
        parts.append(f"    pose = {_fmt_pose(asset.initial_pose)}")
        if asset.tags:
            tag_list = ", ".join(f'"{t}"' for t in sorted(asset.tags))
            parts.append(f"    tags = [{tag_list}]")
        if asset.narration is not None:
            items = ", ".join(f'[{_fmt_num(d)}, "{t}"]' for d, t in asset.narration)
            parts.append(f"    narration = [{items}]")
        if asset.ik is not None:
            parts.append(f"    ik = [{_fmt_num(asset.ik[0])}, {_fmt_num(asset.ik[1])}]")
        parts.append("  }")
        out.extend(parts)
    for lesson in doc.lessons:
        out.append(f'  lesson {lesson.id} "{lesson.title}" {{')
        for stage in lesson.stages:
            out.append(f'    stage {stage.id} "{stage.title}" {{')
            for act in stage.actions:
                out.append(f"      action {act.id} {act.kind} {{")
                if act.kind == "insert":
                    out.append(f'        interactable = "{act.interactable}"')
                    out.append(f"        final = {_fmt_pose(act.final)}")
                    out.append(f'        hologram = "{act.hologram}"')
                    if act.aidline is not None:
                        out.append(f'        aidline = "{act.aidline}"')
                elif act.kind == "remove":
                    out.append(f'        target = "{act.target}"')
                    out.append(f"        clearance_m = {_fmt_num(act.clearance_m)}")
                elif act.kind == "tool":
                    out.append(f'        tool = "{act.tool}"')
                    r = act.region
                    out.append("        region = [{}, {}, {}, {}]".format(
                        _fmt_num(r.center.x), _fmt_num(r.center.y),
                        _fmt_num(r.center.z), _fmt_num(r.radius)))
                    out.append(f"        required_active_s = {_fmt_num(act.required_active_s)}")
                elif act.kind == "use":
                    out.append(f'        implement = "{act.implement}"')
                    r = act.region
                    out.append("        region = [{}, {}, {}, {}]".format(
                        _fmt_num(r.center.x), _fmt_num(r.center.y),
                        _fmt_num(r.center.z), _fmt_num(r.radius)))
                    out.append(f"        required_sweep_m = {_fmt_num(act.required_sweep_m)}")
                elif act.kind == "quiz":
                    out.append(f'        question = "{act.question}"')
                    choice_list = ", ".join(f'"{c}"' for c in act.choices)
                    out.append(f"        choices = [{choice_list}]")
                    out.append(f"        correct = {act.correct}")
                out.append("      }")
            out.append("    }")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
