"""Line-based sequence language for gate programs (``.seq`` files).

Example::

    # echoed swap test between |1> and Fock 1
    set cutoffs 6,6
    set echo on
    PREP fock 1 a
    PREP fock 1 b
    R pi/2 0
    CBS 0.5tau 0
    R pi 0
    CBS 0.5tau pi
    R pi/2 0
    MEASURE spin

Header lines are ``set <key> <value>``; everything else is one instruction
per line. ``#`` starts a comment. Angles accept ``pi`` fractions
(``pi/2``, ``3pi/4``, ``-0.5pi``), durations accept the gate time ``tau``
(``tau``, ``0.5tau``, ``tau/2``) or seconds (``4e-4``, ``400us``, ``0.4ms``),
complex amplitudes are written ``re,im``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .fockspace import MODE_NAMES

OPCODES = ("PREP", "R", "CBS", "BS", "DISP", "BSB", "RSB", "JSB", "WAIT", "MEASURE")
HEADER_KEYS = ("cutoffs", "xi", "noise", "echo", "mode", "shots", "seed")
PREP_KINDS = ("fock", "coherent", "thermal", "spin")
MEASURE_TARGETS = ("all", "spin", "fock", "parity")


class ParseError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Duration:
    """A duration in seconds or in units of the CBS gate time."""

    value: float
    unit: str = "s"  # "s" or "tau"

    def seconds(self, tau: float) -> float:
        return self.value * tau if self.unit == "tau" else self.value


@dataclass(frozen=True)
class Instruction:
    opcode: str
    args: tuple
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SequenceProgram:
    header: dict = field(default_factory=dict)
    instructions: tuple[Instruction, ...] = ()

    @property
    def cutoffs(self) -> tuple[int, ...] | None:
        return self.header.get("cutoffs")

    @property
    def echo(self) -> bool:
        return bool(self.header.get("echo", False))


# ---------------------------------------------------------------------------
# token parsers

_NUM = r"(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
_PI_RE = re.compile(rf"^([+-]?)({_NUM})?\*?pi(?:/(\d+))?$")
_TAU_RE = re.compile(rf"^({_NUM})?\*?tau(?:/(\d+))?$")
_SECONDS_RE = re.compile(rf"^({_NUM})(s|ms|us)?$")
_SI = {None: 1.0, "s": 1.0, "ms": 1e-3, "us": 1e-6}


class _TokenError(Exception):
    pass


def parse_float(token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise _TokenError(f"malformed number {token!r}") from None
    if not math.isfinite(value) or token.strip().lower() in ("nan", "inf", "infinity"):
        raise _TokenError(f"malformed number {token!r}")
    return value


def parse_angle(token: str) -> float:
    m = _PI_RE.match(token)
    if m:
        sign, coef, den = m.groups()
        value = (float(coef) if coef else 1.0) * math.pi
        if den:
            if int(den) == 0:
                raise _TokenError(f"division by zero in angle {token!r}")
            value = value / int(den)
        return -value if sign == "-" else value
    return parse_float(token)


def parse_duration(token: str) -> Duration:
    m = _TAU_RE.match(token)
    if m:
        coef, den = m.groups()
        value = float(coef) if coef else 1.0
        if den:
            if int(den) == 0:
                raise _TokenError(f"division by zero in duration {token!r}")
            value = value / int(den)
        return Duration(value, "tau")
    m = _SECONDS_RE.match(token)
    if m:
        value = float(m.group(1))
        if not math.isfinite(value):
            raise _TokenError(f"malformed duration {token!r}")
        return Duration(value * _SI[m.group(2)], "s")
    raise _TokenError(f"malformed duration {token!r}")


def parse_complex(token: str) -> complex:
    parts = token.split(",")
    if len(parts) != 2:
        raise _TokenError(f"complex amplitude must be 're,im', got {token!r}")
    return complex(parse_float(parts[0]), parse_float(parts[1]))


def parse_int(token: str) -> int:
    if not re.fullmatch(r"[+-]?\d+", token):
        raise _TokenError(f"malformed integer {token!r}")
    return int(token)


def format_angle(value: float) -> str:
    """Canonical text for an angle; pi fractions when exact."""
    if value == 0:
        return "0"
    frac = Fraction(value / math.pi).limit_denominator(64)
    if frac != 0 and parse_angle(_pi_text(frac)) == value:
        return _pi_text(frac)
    return repr(float(value))


def _pi_text(frac: Fraction) -> str:
    sign = "-" if frac < 0 else ""
    num, den = abs(frac.numerator), frac.denominator
    text = f"{sign}{'' if num == 1 else num}pi"
    return text if den == 1 else f"{text}/{den}"


def format_duration(d: Duration) -> str:
    if d.unit == "tau":
        return "tau" if d.value == 1.0 else f"{d.value!r}tau"
    return repr(float(d.value))


def format_complex(z: complex) -> str:
    return f"{float(z.real)!r},{float(z.imag)!r}"


# ---------------------------------------------------------------------------
# instruction grammar


def _mode(token: str, declared: tuple[str, ...]) -> str:
    if token not in MODE_NAMES:
        raise _TokenError(f"unknown mode {token!r}")
    if token not in declared:
        raise _TokenError(f"undeclared mode {token!r}")
    return token


def _mode_pair(token: str, declared: tuple[str, ...]) -> tuple[str, str]:
    if len(token) != 2 or token[0] == token[1]:
        raise _TokenError(f"mode pair must be two distinct modes like 'ab', got {token!r}")
    return (_mode(token[0], declared), _mode(token[1], declared))


def _parse_args(opcode: str, tokens: list[str], declared: tuple[str, ...]) -> tuple:
    n = len(tokens)

    def arity(*allowed: int) -> None:
        if n not in allowed:
            want = " or ".join(str(a) for a in allowed)
            raise _TokenError(f"{opcode} takes {want} arguments, got {n}")

    if opcode == "PREP":
        if n < 1 or tokens[0] not in PREP_KINDS:
            raise _TokenError(f"PREP kind must be one of {', '.join(PREP_KINDS)}")
        kind = tokens[0]
        if kind == "spin":
            arity(2)
            if tokens[1] not in ("g", "e"):
                raise _TokenError(f"spin state must be g or e, got {tokens[1]!r}")
            return (kind, tokens[1])
        arity(3)
        if kind == "fock":
            value: Any = parse_int(tokens[1])
            if value < 0:
                raise _TokenError("Fock level must be >= 0")
        elif kind == "coherent":
            value = parse_complex(tokens[1])
        else:
            value = parse_float(tokens[1])
            if value < 0:
                raise _TokenError("thermal occupation must be >= 0")
        return (kind, value, _mode(tokens[2], declared))
    if opcode == "R":
        arity(2)
        return (parse_angle(tokens[0]), parse_angle(tokens[1]))
    if opcode in ("CBS", "BS"):
        arity(2, 3)
        d = parse_duration(tokens[0])
        if d.value < 0:
            raise _TokenError("duration must be >= 0")
        modes = _mode_pair(tokens[2], declared) if n == 3 else _mode_pair("ab", declared)
        return (d, parse_angle(tokens[1]), modes)
    if opcode == "DISP":
        arity(2)
        return (parse_complex(tokens[0]), _mode(tokens[1], declared))
    if opcode in ("BSB", "RSB"):
        arity(1)
        return (_mode(tokens[0], declared),)
    if opcode == "JSB":
        arity(2)
        omega0 = parse_float(tokens[0])
        if omega0 <= 0:
            raise _TokenError("JSB base Rabi frequency must be > 0")
        d = parse_duration(tokens[1])
        if d.value < 0:
            raise _TokenError("duration must be >= 0")
        _mode_pair("ab", declared)
        return (omega0, d)
    if opcode == "WAIT":
        arity(1)
        d = parse_duration(tokens[0])
        if d.value < 0:
            raise _TokenError("duration must be >= 0")
        return (d,)
    if opcode == "MEASURE":
        arity(0, 1, 2)
        if n == 0:
            return ("all",)
        target = tokens[0]
        if target not in MEASURE_TARGETS:
            raise _TokenError(f"MEASURE target must be one of {', '.join(MEASURE_TARGETS)}")
        if target in ("all", "spin"):
            arity(1)
            return (target,)
        arity(2)
        return (target, _mode(tokens[1], declared))
    raise _TokenError(f"unknown opcode {opcode}")


def _parse_header(key: str, tokens: list[str]) -> Any:
    if key not in HEADER_KEYS:
        raise _TokenError(f"unknown header key {key!r}")
    if len(tokens) != 1:
        raise _TokenError(f"set {key} takes exactly one value")
    value = tokens[0]
    if key == "cutoffs":
        cutoffs = tuple(parse_int(v) for v in value.split(","))
        if not 1 <= len(cutoffs) <= 3 or any(c < 1 for c in cutoffs):
            raise _TokenError("cutoffs must be 1 to 3 positive integers")
        return cutoffs
    if key == "xi":
        xi = parse_float(value)
        if xi <= 0:
            raise _TokenError("xi must be > 0")
        return xi
    if key == "echo":
        if value not in ("on", "off"):
            raise _TokenError("echo must be on or off")
        return value == "on"
    if key == "mode":
        if value not in ("exact", "sampled"):
            raise _TokenError("mode must be exact or sampled")
        return value
    if key == "shots":
        shots = parse_int(value)
        if shots < 1:
            raise _TokenError("shots must be >= 1")
        return shots
    if key == "seed":
        seed = parse_int(value)
        if not 0 <= seed < 2**64:
            raise _TokenError("seed must be a 64-bit unsigned integer")
        return seed
    if not re.fullmatch(r"[A-Za-z0-9_.\-/]+", value):
        raise _TokenError(f"malformed noise profile name {value!r}")
    return value


def parse(text: str | bytes) -> SequenceProgram:
    """Parse program text; every error carries its line and column."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text)[: exc.start]
            line = prefix.count(b"\n") + 1
            column = exc.start - (prefix.rfind(b"\n") + 1) + 1
            raise ParseError(line, column, "invalid UTF-8") from None
    header: dict = {}
    instructions: list[Instruction] = []
    measured = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", body)]
        if not tokens:
            continue
        word, col = tokens[0]
        try:
            if word == "set":
                if instructions:
                    raise ParseError(lineno, col, "header lines must precede instructions")
                if len(tokens) < 2:
                    raise ParseError(lineno, col, "set needs a key and a value")
                key = tokens[1][0]
                if key in header:
                    raise ParseError(lineno, tokens[1][1], f"duplicate header key {key!r}")
                header[key] = _parse_header(key, [t for t, _ in tokens[2:]])
                continue
            if word not in OPCODES:
                raise ParseError(lineno, col, f"unknown opcode {word}")
            declared = MODE_NAMES[: len(header.get("cutoffs", (1, 1)))]
            args = _parse_args(word, [t for t, _ in tokens[1:]], declared)
        except _TokenError as exc:
            raise ParseError(lineno, col, str(exc)) from None
        if word == "MEASURE":
            measured = True
        elif measured:
            raise ParseError(lineno, col, "MEASURE must be the terminal block")
        if word == "PREP" and any(i.opcode != "PREP" for i in instructions):
            raise ParseError(lineno, col, "PREP must precede all operations")
        instructions.append(Instruction(word, args, lineno, col))
    return SequenceProgram(header, tuple(instructions))


# ---------------------------------------------------------------------------
# printing


def format_instruction(ins: Instruction) -> str:
    op, args = ins.opcode, ins.args
    if op == "PREP":
        kind = args[0]
        if kind == "spin":
            return f"PREP spin {args[1]}"
        value = {"fock": str, "coherent": format_complex, "thermal": lambda v: repr(float(v))}[kind](args[1])
        return f"PREP {kind} {value} {args[2]}"
    if op == "R":
        return f"R {format_angle(args[0])} {format_angle(args[1])}"
    if op in ("CBS", "BS"):
        text = f"{op} {format_duration(args[0])} {format_angle(args[1])}"
        return text if tuple(args[2]) == ("a", "b") else f"{text} {''.join(args[2])}"
    if op == "DISP":
        return f"DISP {format_complex(args[0])} {args[1]}"
    if op in ("BSB", "RSB"):
        return f"{op} {args[0]}"
    if op == "JSB":
        return f"JSB {args[0]!r} {format_duration(args[1])}"
    if op == "WAIT":
        return f"WAIT {format_duration(args[0])}"
    if op == "MEASURE":
        return "MEASURE" if args == ("all",) else " ".join(("MEASURE", *args))
    raise ValueError(f"unknown opcode {op}")


def _format_header(key: str, value: Any) -> str:
    if key == "cutoffs":
        return ",".join(str(c) for c in value)
    if key == "echo":
        return "on" if value else "off"
    if key == "xi":
        return repr(float(value))
    return str(value)


def pretty_print(program: SequenceProgram) -> str:
    """Canonical text; ``parse(pretty_print(p)) == p``."""
    lines = [f"set {k} {_format_header(k, program.header[k])}" for k in HEADER_KEYS if k in program.header]
    lines.extend(format_instruction(i) for i in program.instructions)
    return "\n".join(lines) + "\n"


def execute(program: SequenceProgram, noise=None, shot_plan=None, profiles: dict | None = None):
    """Run a parsed program and return an :class:`~cbsim.results.ExperimentResult`.

    ``noise`` overrides the header's ``noise`` profile; otherwise the name is
    looked up in ``profiles`` (``name -> NoiseParams``), falling back to the
    shipped profiles. ``shot_plan`` likewise overrides ``mode/shots/seed``.
    """
    from .engine import run_program

    return run_program(program, noise=noise, shot_plan=shot_plan, profiles=profiles)
