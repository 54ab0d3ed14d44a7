"""
Line-oriented bench description language.

    # comment
    source spdc l=1 K=2 profile=uniform
    prepare A alpha=0.6+0.0i beta=0.8+0.0i
    element A sorter -> A odd
    element odd dove
    element odd sph
    element A pbs -> A ev
    element A bs odd
    element B parity_phase(pi)
    detect D1 A
    run trials=1000 seed=7 mode=projector

`A` and `B` name the entry paths of the two photons. Outputs after `->`
must be fresh names or inputs of the same element; inputs that a split or
merge does not re-emit are closed. sorter/pbs split one path into
(even|H, odd|V), or merge two paths with `element X pbs Y -> Z`.

program_from_layout() and layout_text() go the other way, from a built
bench back to program text.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from .apparatus import BenchLayout
from .config import Defaults, Tolerances
from .elements import ElementOp, ElementSpec, build, compose, kind_text, spec_label
from .errors import BenchSemanticError, BenchSyntaxError, LexicalError, LoweringError, WiringError
from .hilbert import OamWindow
from .models import ComplexPair, ProfileSpec, RunConfig, to_complex
from .spdc import Profile, profile_from_spec

logger = logging.getLogger(__name__)

_ALLOWED = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.+-*/(),=> \t")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_INT = re.compile(r"[+-]?\d{1,18}$")
_FLOAT = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL = re.compile(rf"[+-]?{_FLOAT}$")
_COMPLEX = re.compile(rf"([+-]?{_FLOAT})([+-])({_FLOAT})i$")
_ANGLE_PI = re.compile(r"([+-]?)pi(?:/(\d{1,9}))?$")
_CALL = re.compile(r"([a-z_]+)\((.*)\)$")

SPLIT_KINDS = ("sorter", "pbs")
SINGLE_ARM_KINDS = ("dove", "sph", "dp_sph", "parity_phase", "hwp", "qwp", "delay")
KINDS = SPLIT_KINDS + ("bs",) + SINGLE_ARM_KINDS
ENTRY_PATHS = ("A", "B")


# --- Program tree ---


class _Node(BaseModel):
    model_config = ConfigDict(frozen=True)


class SourceDecl(_Node):
    l: int
    K: int
    profile: ProfileSpec


class PrepareDecl(_Node):
    alpha: ComplexPair
    beta: ComplexPair


class ElementStmt(_Node):
    arm: str
    kind: str
    charge: int | None = None
    angle: float | None = None
    convention: str | None = None
    args: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()


class DetectStmt(_Node):
    name: str
    path: str


class RunDirective(_Node):
    trials: int
    seed: int
    mode: str


class BenchProgram(_Node):
    source: SourceDecl
    prepare: PrepareDecl | None = None
    elements: tuple[ElementStmt, ...] = ()
    detectors: tuple[DetectStmt, ...]
    run: RunDirective | None = None


# --- Lexing ---


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int


def _decode(text: str | bytes) -> str:
    if isinstance(text, str):
        return text
    try:
        return text.decode("utf-8")
    except UnicodeDecodeError as e:
        head = text[: e.start]
        line = head.count(b"\n") + 1
        column = e.start - (head.rfind(b"\n") + 1) + 1
        raise LexicalError("input is not valid UTF-8", line, column) from None


def tokenize(text: str | bytes) -> list[list[Token]]:
    """Split into per-line token lists, dropping comments and blank lines."""
    lines = []
    for lineno, raw in enumerate(_decode(text).split("\n"), start=1):
        if raw.endswith("\r"):
            raw = raw[:-1]
        code = raw.split("#", 1)[0]
        for col, ch in enumerate(code, start=1):
            if ch not in _ALLOWED:
                raise LexicalError(f"unexpected character {ch!r}", lineno, col)
        tokens = [Token(m.group(), lineno, m.start() + 1) for m in re.finditer(r"\S+", code)]
        if tokens:
            lines.append(tokens)
    return lines


# --- Literals ---


def _real(text: str) -> float | None:
    if not _REAL.match(text):
        return None
    value = float(text)
    return value if np.isfinite(value) else None


def _complex(text: str) -> ComplexPair | None:
    m = _COMPLEX.match(text)
    if m:
        re_part, sign, im_part = float(m.group(1)), m.group(2), float(m.group(3))
        if not (np.isfinite(re_part) and np.isfinite(im_part)):
            return None
        return (re_part, -im_part if sign == "-" else im_part)
    value = _real(text)
    return None if value is None else (value, 0.0)


def _angle(text: str) -> float | None:
    m = _ANGLE_PI.match(text)
    if m:
        divisor = int(m.group(2) or 1)
        if divisor == 0:
            return None
        value = np.pi / divisor
        return -value if m.group(1) == "-" else value
    return _real(text)


def format_complex(pair: ComplexPair) -> str:
    re_part, im_part = float(pair[0]), float(pair[1])
    sign = "-" if np.copysign(1.0, im_part) < 0 else "+"
    return f"{re_part!r}{sign}{abs(im_part)!r}i"


# --- Path bookkeeping ---


class _WiringFault(Exception):
    def __init__(self, message: str, token_index: int):
        super().__init__(message)
        self.token_index = token_index


class _Wiring:
    """
    Live path names and their (side, index). Indices are allocated per
    photon in order of first appearance; renames keep their index.
    """

    def __init__(self):
        self.live: dict[str, tuple[str, int]] = {name: (name, 0) for name in ENTRY_PATHS}
        self.n_paths = {name: 1 for name in ENTRY_PATHS}
        self.seen: set[str] = set(ENTRY_PATHS)

    def _new(self, side: str) -> int:
        index = self.n_paths[side]
        self.n_paths[side] += 1
        return index

    def _output(self, name: str, side: str, inputs: dict[str, int], position: int) -> int:
        if name in inputs:
            return inputs[name]
        if name in self.seen:
            raise _WiringFault(f"path reused: {name!r} is already wired", position)
        return self._new(side)

    def apply(self, stmt: ElementStmt) -> tuple[str, ElementSpec]:
        """Wire one element; token indices in faults count from the arm token (1)."""
        if stmt.arm not in self.live:
            raise _WiringFault(f"undeclared or closed path {stmt.arm!r}", 1)
        side, arm = self.live[stmt.arm]
        inputs = {stmt.arm: arm}
        for k, name in enumerate(stmt.args):
            if name not in self.live:
                raise _WiringFault(f"undeclared or closed path {name!r}", 3 + k)
            other_side, index = self.live[name]
            if other_side != side:
                raise _WiringFault(f"path {name!r} belongs to photon {other_side}, not {side}", 3 + k)
            if name in inputs:
                raise _WiringFault(f"path {name!r} used twice by one element", 3 + k)
            inputs[name] = index
        first_out = 3 + len(stmt.args) + 1
        outputs = []
        for k, name in enumerate(stmt.outputs):
            if name in stmt.outputs[:k]:
                raise _WiringFault(f"path reused: {name!r} appears twice", first_out + k)
            if stmt.kind in SINGLE_ARM_KINDS:
                # a rename keeps the arm's index
                if name not in inputs and name in self.seen:
                    raise _WiringFault(f"path reused: {name!r} is already wired", first_out + k)
                outputs.append(arm)
            else:
                outputs.append(self._output(name, side, inputs, first_out + k))

        if stmt.kind == "bs":
            spec = ElementSpec(kind="bs", ports=(arm, inputs[stmt.args[0]]), convention=stmt.convention or "symmetric")
            return side, spec
        if stmt.kind in SPLIT_KINDS:
            if stmt.args:
                ports = (outputs[0], arm, inputs[stmt.args[0]])
            else:
                ports = (arm, outputs[0], outputs[1])
            spec = ElementSpec(kind=stmt.kind, ports=ports)
        else:
            spec = ElementSpec(kind=stmt.kind, path=arm, charge=stmt.charge, angle=stmt.angle)
        for name in inputs:
            del self.live[name]
        for name, index in zip(stmt.outputs or (stmt.arm,), outputs or [arm]):
            self.live[name] = (side, index)
            self.seen.add(name)
        return side, spec


# --- Parsing ---


class _LineParser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Token | None:
        return None if self.at_end() else self.tokens[self.pos]

    def next(self, what: str) -> Token:
        if self.at_end():
            last = self.tokens[-1]
            raise BenchSyntaxError(f"expected {what} at end of line", last.line, last.column + len(last.text))
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def keyword(self, word: str) -> Token:
        token = self.next(repr(word))
        if token.text != word:
            raise BenchSyntaxError(f"expected {word!r}, got {token.text!r}", token.line, token.column)
        return token

    def keyed(self, key: str) -> tuple[Token, str]:
        token = self.next(f"{key}=...")
        if not token.text.startswith(key + "="):
            raise BenchSyntaxError(f"expected {key}=..., got {token.text!r}", token.line, token.column)
        return token, token.text[len(key) + 1 :]

    def keyed_int(self, key: str) -> tuple[Token, int]:
        token, value = self.keyed(key)
        if not _INT.match(value):
            raise BenchSyntaxError(f"{key} must be an integer, got {value!r}", token.line, token.column)
        return token, int(value)

    def keyed_complex(self, key: str) -> tuple[Token, ComplexPair]:
        token, value = self.keyed(key)
        pair = _complex(value)
        if pair is None:
            raise BenchSyntaxError(f"{key} must be a complex literal like 0.6+0.0i", token.line, token.column)
        return token, pair

    def name(self, what: str) -> Token:
        token = self.next(what)
        if not _NAME.match(token.text):
            raise BenchSyntaxError(f"expected {what}, got {token.text!r}", token.line, token.column)
        return token

    def done(self):
        if not self.at_end():
            token = self.tokens[self.pos]
            raise BenchSyntaxError(f"unexpected {token.text!r}", token.line, token.column)


def _semantic(message: str, token: Token) -> BenchSemanticError:
    return BenchSemanticError(message, token.line, token.column)


def _profile(token: Token, text: str) -> ProfileSpec:
    if text in ("uniform", "delta"):
        return ProfileSpec(kind=text)
    m = _CALL.match(text)
    if m and m.group(1) == "gaussian":
        width = _real(m.group(2))
        if width is None:
            raise BenchSyntaxError(f"bad gaussian width {m.group(2)!r}", token.line, token.column)
        if width <= 0:
            raise _semantic(f"gaussian width must be positive, got {width!r}", token)
        return ProfileSpec(kind="gaussian", width=width)
    if m and m.group(1) == "explicit":
        items = m.group(2).split(",")
        coeffs = [_complex(item) for item in items]
        if not m.group(2) or any(c is None for c in coeffs):
            raise BenchSyntaxError("explicit(...) needs comma-separated complex literals", token.line, token.column)
        return ProfileSpec(kind="explicit", coeffs=coeffs)
    raise BenchSyntaxError(f"unknown profile {text!r}", token.line, token.column)


def _parse_source(p: _LineParser) -> SourceDecl:
    p.keyword("spdc")
    _, l = p.keyed_int("l")
    k_token, K = p.keyed_int("K")
    prof_token, prof_text = p.keyed("profile")
    profile = _profile(prof_token, prof_text)
    p.done()
    if K < 1:
        raise _semantic(f"window half-width K must be at least 1, got {K}", k_token)
    if K > Defaults.MAX_WINDOW_K:
        raise _semantic(f"window half-width K={K} exceeds the maximum {Defaults.MAX_WINDOW_K}", k_token)
    return SourceDecl(l=l, K=K, profile=profile)


def _parse_prepare(p: _LineParser) -> PrepareDecl:
    p.keyword("A")
    _, alpha = p.keyed_complex("alpha")
    _, beta = p.keyed_complex("beta")
    p.done()
    return PrepareDecl(alpha=alpha, beta=beta)


def _parse_kind(token: Token) -> dict:
    text = token.text
    m = _CALL.match(text)
    base, arg = (m.group(1), m.group(2)) if m else (text, None)
    if base not in KINDS:
        raise BenchSyntaxError(f"unknown element kind {base!r}", token.line, token.column)
    if base == "sph":
        if arg is None:
            return {"kind": "sph", "charge": 1}
        if arg not in ("+1", "1", "-1"):
            raise BenchSyntaxError(f"sph charge must be +1 or -1, got {arg!r}", token.line, token.column)
        return {"kind": "sph", "charge": -1 if arg == "-1" else 1}
    if base == "bs":
        if arg is None:
            return {"kind": "bs", "convention": "symmetric"}
        if arg not in ("symmetric", "hadamard"):
            raise BenchSyntaxError(f"unknown beam-splitter convention {arg!r}", token.line, token.column)
        return {"kind": "bs", "convention": arg}
    if base in ("hwp", "qwp", "delay", "parity_phase"):
        angle = None if arg is None else _angle(arg)
        if angle is None:
            raise BenchSyntaxError(f"{base} needs an angle, e.g. {base}(pi/4)", token.line, token.column)
        return {"kind": base, "angle": angle}
    if arg is not None:
        raise BenchSyntaxError(f"{base} takes no parameter", token.line, token.column)
    return {"kind": base}


def _parse_element(p: _LineParser, wiring: _Wiring) -> ElementStmt:
    arm = p.name("path name")
    kind_token = p.next("element kind")
    fields = _parse_kind(kind_token)
    kind = fields["kind"]
    args = []
    while not p.at_end() and p.peek().text != "->":
        args.append(p.name("path name").text)
    outputs = []
    arrow = None
    if not p.at_end():
        arrow = p.keyword("->")
        while not p.at_end():
            outputs.append(p.name("path name").text)
        if not outputs:
            raise BenchSyntaxError("expected at least one path after '->'", arrow.line, arrow.column)

    def shape_error(message: str) -> BenchSyntaxError:
        where = arrow or kind_token
        return BenchSyntaxError(message, where.line, where.column)

    if kind == "bs":
        if len(args) != 1:
            raise BenchSyntaxError("bs takes exactly one partner path", kind_token.line, kind_token.column)
        if outputs:
            raise shape_error("bs keeps its path names; no '->' allowed")
    elif kind in SPLIT_KINDS:
        if len(args) > 1:
            raise BenchSyntaxError(f"{kind} takes at most one second input", kind_token.line, kind_token.column)
        wanted = 1 if args else 2
        if len(outputs) != wanted:
            form = "merge" if args else "split"
            raise shape_error(f"{kind} {form} needs exactly {wanted} output path(s)")
    else:
        if args:
            raise BenchSyntaxError(f"{kind} acts on one path", kind_token.line, kind_token.column)
        if len(outputs) > 1:
            raise shape_error(f"{kind} renames to at most one path")

    stmt = ElementStmt(arm=arm.text, args=tuple(args), outputs=tuple(outputs), **fields)
    try:
        wiring.apply(stmt)
    except _WiringFault as fault:
        raise _semantic(str(fault), p.tokens[fault.token_index]) from None
    return stmt


def _parse_run(p: _LineParser) -> RunDirective:
    t_token, trials = p.keyed_int("trials")
    s_token, seed = p.keyed_int("seed")
    m_token, mode = p.keyed("mode")
    p.done()
    if mode not in ("projector", "apparatus"):
        raise BenchSyntaxError(f"mode must be projector or apparatus, got {mode!r}", m_token.line, m_token.column)
    if trials < 0:
        raise _semantic("trials must be non-negative", t_token)
    if seed < 0:
        raise _semantic("seed must be non-negative", s_token)
    return RunDirective(trials=trials, seed=seed, mode=mode)


def parse(text: str | bytes) -> BenchProgram:
    """
    Parse a bench program.

    Raises LexicalError, BenchSyntaxError or BenchSemanticError, all
    carrying the 1-based line and column of the offending token.
    """
    source = prepare = run = None
    elements: list[ElementStmt] = []
    detectors: list[tuple[DetectStmt, Token, Token]] = []
    wiring = _Wiring()
    last_token = Token("", 1, 1)
    for tokens in tokenize(text):
        p = _LineParser(tokens)
        head = p.next("statement")
        last_token = head
        try:
            if head.text == "source":
                decl = _parse_source(p)
                if source is not None:
                    raise _semantic("duplicate source", head)
                source = decl
            elif head.text == "prepare":
                decl = _parse_prepare(p)
                if prepare is not None:
                    raise _semantic("duplicate prepare", head)
                prepare = decl
            elif head.text == "element":
                elements.append(_parse_element(p, wiring))
            elif head.text == "detect":
                name = p.name("detector name")
                path = p.name("path name")
                p.done()
                detectors.append((DetectStmt(name=name.text, path=path.text), name, path))
            elif head.text == "run":
                directive = _parse_run(p)
                if run is not None:
                    raise _semantic("duplicate run directive", head)
                run = directive
            else:
                raise BenchSyntaxError(f"unknown statement {head.text!r}", head.line, head.column)
        except ValidationError as e:
            raise BenchSemanticError(e.errors()[0]["msg"], head.line, head.column) from None

    if source is None:
        raise BenchSemanticError("program has no source", last_token.line, last_token.column)
    if not detectors:
        raise BenchSemanticError("program has no detector", last_token.line, last_token.column)
    names, paths = set(), set()
    for stmt, name_token, path_token in detectors:
        if stmt.name in names:
            raise _semantic(f"duplicate detector {stmt.name!r}", name_token)
        if stmt.path not in wiring.live:
            raise _semantic(f"undeclared or closed path {stmt.path!r}", path_token)
        if wiring.live[stmt.path][0] != "A":
            raise _semantic(f"detectors watch photon A; {stmt.path!r} belongs to B", path_token)
        if stmt.path in paths:
            raise _semantic(f"path reused: two detectors on {stmt.path!r}", path_token)
        names.add(stmt.name)
        paths.add(stmt.path)
    try:
        return BenchProgram(
            source=source,
            prepare=prepare,
            elements=tuple(elements),
            detectors=tuple(d for d, _, _ in detectors),
            run=run,
        )
    except ValidationError as e:
        raise BenchSemanticError(str(e.errors()[0]["msg"]), last_token.line, last_token.column) from None


# --- Printing ---


def _element_text(stmt: ElementStmt) -> str:
    parts = ["element", stmt.arm, kind_text(stmt.kind, stmt.charge, stmt.angle, stmt.convention), *stmt.args]
    if stmt.outputs:
        parts += ["->", *stmt.outputs]
    return " ".join(parts)


def _profile_text(spec: ProfileSpec) -> str:
    if spec.kind == "gaussian":
        return f"gaussian({spec.width!r})"
    if spec.kind == "explicit":
        return "explicit(" + ",".join(format_complex(c) for c in spec.coeffs) + ")"
    return spec.kind


def pretty_print(program: BenchProgram) -> str:
    """Canonical text; parse(pretty_print(p)) == p."""
    s = program.source
    lines = [f"source spdc l={s.l} K={s.K} profile={_profile_text(s.profile)}"]
    if program.prepare is not None:
        lines.append(
            f"prepare A alpha={format_complex(program.prepare.alpha)} beta={format_complex(program.prepare.beta)}"
        )
    lines += [_element_text(e) for e in program.elements]
    lines += [f"detect {d.name} {d.path}" for d in program.detectors]
    if program.run is not None:
        r = program.run
        lines.append(f"run trials={r.trials} seed={r.seed} mode={r.mode}")
    return "\n".join(lines) + "\n"


class _PathNames:
    """Names for one photon's path indices, handed out the way parse() numbers them."""

    def __init__(self, entry: str, prefix: str):
        self.prefix = prefix
        self.live: dict[int, str] = {0: entry}
        self.next_index = 1

    def name(self, index: int) -> str:
        if index not in self.live:
            raise WiringError(f"path {index} is used while no light can reach it")
        return self.live[index]

    def allocate(self, index: int) -> str:
        if index != self.next_index:
            raise WiringError(
                f"path {index} appears where a parsed program would number it {self.next_index}; "
                "new paths must appear in ascending order"
            )
        self.next_index += 1
        self.live[index] = f"{self.prefix}{index}"
        return self.live[index]

    def close(self, index: int):
        self.live.pop(index, None)


def _routing_statement(spec: ElementSpec, names: _PathNames) -> ElementStmt:
    entry, first, second = spec.ports
    if entry in names.live and all(p == entry or p not in names.live for p in (first, second)):
        arm = names.live[entry]
        outputs = tuple(arm if p == entry else names.allocate(p) for p in (first, second))
        if entry not in (first, second):
            names.close(entry)
        return ElementStmt(arm=arm, kind=spec.kind, outputs=outputs)
    if first in names.live and second in names.live:
        arm, arg = names.live[first], names.live[second]
        kept = names.live[entry] if entry in (first, second) else None
        for p in (first, second):
            if p != entry:
                names.close(p)
        out = kept or names.allocate(entry)
        return ElementStmt(arm=arm, kind=spec.kind, args=(arg,), outputs=(out,))
    raise WiringError(f"{spec_label(spec)} neither splits a lit path nor merges two")


def _spec_statements(spec: ElementSpec, names: _PathNames, n_paths: int) -> list[ElementStmt]:
    if spec.kind == "identity":
        return []
    if spec.kind in SPLIT_KINDS:
        return [_routing_statement(spec, names)]
    if spec.kind == "bs":
        a, b = spec.ports
        return [ElementStmt(arm=names.name(a), kind="bs", convention=spec.convention, args=(names.name(b),))]
    if spec.path is not None:
        paths = [spec.path]
    else:
        # an element on every path needs every path lit
        if len(names.live) != n_paths:
            raise WiringError(f"{spec_label(spec)} acts on all {n_paths} paths before they are all wired")
        paths = sorted(names.live)
    return [
        ElementStmt(arm=names.name(p), kind=spec.kind, charge=spec.charge, angle=spec.angle) for p in paths
    ]


def _side_statements(stages: tuple[ElementOp, ...], n_paths: int, names: _PathNames) -> list[ElementStmt]:
    out = []
    for op in stages:
        if not op.rebuildable:
            raise WiringError("an adjoint operator has no element description")
        for spec in op.specs:
            out += _spec_statements(spec, names, n_paths)
    if names.next_index != n_paths:
        raise WiringError(f"{n_paths - names.next_index} path(s) are never wired by an element")
    return out


def program_from_layout(
    layout: BenchLayout,
    source: SourceDecl | None = None,
    prepare: PrepareDecl | None = None,
    run: RunDirective | None = None,
    bob: ElementOp | None = None,
) -> BenchProgram:
    """
    Bench program that lowers back to `layout` and, when given, Bob's pipeline.

    Photon A's paths print as A, a1, a2, ... and photon B's as B, b1, ...
    by index. A new path must first appear as a sorter or PBS output, in
    index order, since that is how parse() numbers paths.

    Args:
        layout: photon A's bench, entering on path 0
        source: source declaration; a uniform l=1 source on the layout's
            window when omitted
        prepare: optional input-state statement
        run: optional run directive
        bob: optional pipeline on photon B

    Raises:
        WiringError: when the layout uses wiring the language cannot express
    """
    if layout.entry_path != 0:
        raise WiringError(f"bench programs enter on path 0, layout enters on {layout.entry_path}")
    source = source or SourceDecl(l=1, K=layout.window.K, profile=ProfileSpec())
    if source.K != layout.window.K:
        raise WiringError(f"source K={source.K} does not match the layout window K={layout.window.K}")
    names = _PathNames("A", "a")
    elements = _side_statements(layout.stages, layout.n_paths, names)
    if bob is not None:
        if bob.window != layout.window:
            raise WiringError(f"Bob's pipeline is on K={bob.window.K}, the layout on K={layout.window.K}")
        elements += _side_statements((bob,), bob.n_paths, _PathNames("B", "b"))
    detectors = tuple(DetectStmt(name=name, path=names.name(path)) for name, path in layout.detectors)
    return BenchProgram(source=source, prepare=prepare, elements=tuple(elements), detectors=detectors, run=run)


def layout_text(layout: BenchLayout, **kwargs) -> str:
    """pretty_print(program_from_layout(layout, **kwargs))."""
    return pretty_print(program_from_layout(layout, **kwargs))


# --- Lowering ---


@dataclass(frozen=True, eq=False)
class LoweredBench:
    program: BenchProgram
    profile: Profile
    layout: BenchLayout
    bob_op: ElementOp | None
    alpha: complex | None = None
    beta: complex | None = None

    def run_config(self) -> RunConfig:
        """RunConfig for the CLI; needs a prepare statement."""
        prog = self.program
        if prog.prepare is None:
            raise LoweringError("bench has no prepare statement")
        run = prog.run or RunDirective(trials=0, seed=0, mode="projector")
        return RunConfig(
            profile=prog.source.profile,
            l=prog.source.l,
            K=prog.source.K,
            alpha=prog.prepare.alpha,
            beta=prog.prepare.beta,
            trials=run.trials,
            seed=run.seed if prog.run else None,
            mode=run.mode,
        )


def _side_op(specs: list[ElementSpec], window: OamWindow, n_paths: int, side: str) -> ElementOp:
    ops = [build(spec, window, n_paths) for spec in specs]
    op = compose(ops, window, n_paths)
    if not op.is_total:
        raise LoweringError(
            f"photon {side} pipeline {op.label()} moves edge charges outside the window; "
            "every element chain must map the window into itself"
        )
    return op


def lower(program: BenchProgram) -> LoweredBench:
    """Build the profile, photon A's bench and photon B's pipeline."""
    source = program.source
    try:
        profile = profile_from_spec(source.profile, source.l, source.K)
    except ValueError as e:
        raise LoweringError(f"source profile: {e}") from e
    window = profile.window
    wiring = _Wiring()
    specs: dict[str, list[ElementSpec]] = {"A": [], "B": []}
    conventions = []
    for stmt in program.elements:
        try:
            side, spec = wiring.apply(stmt)
        except _WiringFault as fault:
            raise LoweringError(str(fault)) from None
        specs[side].append(spec)
        if spec.kind == "bs":
            conventions.append(spec.convention)

    n_a, n_b = wiring.n_paths["A"], wiring.n_paths["B"]
    op_a = _side_op(specs["A"], window, n_a, "A")
    bob_op = _side_op(specs["B"], window, n_b, "B") if specs["B"] else None
    detectors = tuple((d.name, wiring.live[d.path][1]) for d in program.detectors)
    layout = BenchLayout(window, n_a, (op_a,), detectors, 0, conventions[0] if conventions else "symmetric")

    alpha = beta = None
    if program.prepare is not None:
        alpha, beta = to_complex(program.prepare.alpha), to_complex(program.prepare.beta)
        norm = abs(alpha) ** 2 + abs(beta) ** 2
        if abs(norm - 1.0) > Tolerances.ATOL:
            raise LoweringError(f"prepare: |alpha|^2 + |beta|^2 = {norm}, expected 1")
    logger.info(f"lowered bench: {len(specs['A'])} element(s) on A over {n_a} path(s), {len(specs['B'])} on B")
    return LoweredBench(program, profile, layout, bob_op, alpha, beta)
