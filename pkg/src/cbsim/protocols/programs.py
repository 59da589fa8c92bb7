"""Built-in gate sequences, expressed as sequence-language instructions.

Every protocol runs one of these lists through :class:`cbsim.engine.Simulator`,
and :func:`as_program` turns the same list into a ``.seq`` program, so the
shipped sequence files and the protocol functions cannot drift apart.

Instructions are listed in the order they are applied.
"""
from __future__ import annotations

import math

from ..seqlang import Duration, Instruction, SequenceProgram

HALF_PI = math.pi / 2


def rot(theta: float, phi: float = 0.0) -> Instruction:
    return Instruction("R", (float(theta), float(phi)))


def cbs(duration_tau: float = 1.0, upsilon: float = 0.0, modes=("a", "b")) -> Instruction:
    return Instruction("CBS", (Duration(float(duration_tau), "tau"), float(upsilon), tuple(modes)))


def cbs_block(echo: bool, duration_tau: float = 1.0, upsilon: float = 0.0, modes=("a", "b")) -> list[Instruction]:
    """One CBS segment, or its spin-echo form ``[U(t/2, u), R(pi, 0), U(t/2, u + pi)]``."""
    if not echo:
        return [cbs(duration_tau, upsilon, modes)]
    half = duration_tau / 2
    return [cbs(half, upsilon, modes), rot(math.pi, 0.0), cbs(half, upsilon + math.pi, modes)]


def prep(kind: str, value, mode: str) -> Instruction:
    return Instruction("PREP", (kind, value, mode))


def prep_spin(spin: str) -> Instruction:
    return Instruction("PREP", ("spin", spin))


def measure(*target: str) -> Instruction:
    return Instruction("MEASURE", tuple(target) or ("all",))


def swap_test_ops(phi: float, echo: bool = False) -> list[Instruction]:
    """``R(pi/2, 0)``, CBS, ``R(pi/2, phi)``; modes ``a`` and ``b`` hold the two inputs."""
    return [rot(HALF_PI, 0.0), *cbs_block(echo), rot(HALF_PI, phi)]


def parity_ops(echo: bool = False) -> list[Instruction]:
    """``R(pi/2, 0)``, CBS twice, ``R(pi/2, 0)``; mode ``b`` must start in vacuum.

    The echoed form splits the double gate into two halves of one gate time
    each, around a spin flip.
    """
    if echo:
        middle = cbs_block(True, duration_tau=2.0)
    else:
        middle = [cbs(), cbs()]
    return [rot(HALF_PI, 0.0), *middle, rot(HALF_PI, 0.0)]


def wigner_ops(alpha: complex, echo: bool = False) -> list[Instruction]:
    """Displace mode ``a`` by ``-alpha`` and read its parity."""
    return [Instruction("DISP", (-complex(alpha), "a")), *parity_ops(echo)]


def noon_phase(n: int) -> float:
    """Middle-pulse phase that yields a NOON state: 0 for odd ``n``, pi/2 for even."""
    return 0.0 if n % 2 else HALF_PI


def noon_ops(n: int, echo: bool = False, phi: float | None = None) -> list[Instruction]:
    """``R(pi/2, 0)``, CBS, ``R(pi/2, phi)``, CBS, ``R(pi/2, 0)`` from ``|g, n, 0>``."""
    phi = noon_phase(n) if phi is None else phi
    return [
        rot(HALF_PI, 0.0),
        *cbs_block(echo),
        rot(HALF_PI, phi),
        *cbs_block(echo),
        rot(HALF_PI, 0.0),
    ]


def fock_one_prep(mode: str) -> list[Instruction]:
    """Blue-sideband pi-pulse ``|g,0> -> |e,1>`` followed by a carrier flip back to ``|g>``."""
    return [Instruction("BSB", (mode,)), rot(math.pi, 0.0)]


def fredkin_ops(spin: int, n_a: int, n_b: int, echo: bool = False) -> list[Instruction]:
    """Prepare ``|s, n_a, n_b>`` (``n`` in {0, 1}) with sideband pulses, then one CBS gate."""
    ops: list[Instruction] = []
    if n_a:
        ops += fock_one_prep("a")
    if n_b:
        ops += fock_one_prep("b")
    if spin:
        ops.append(rot(math.pi, 0.0))
    return ops + cbs_block(echo)


def cswap_ops() -> list[Instruction]:
    """Controlled swap from two ``ac`` CBS gates and one ``ab`` gate at ``u = pi/2``."""
    return [cbs(1.0, 0.0, ("a", "c")), cbs(1.0, 0.0, ("a", "c")), cbs(1.0, HALF_PI, ("a", "b"))]


def as_program(preps: list[Instruction], ops: list[Instruction], header: dict, target=("spin",)) -> SequenceProgram:
    return SequenceProgram(dict(header), tuple(preps) + tuple(ops) + (measure(*target),))


def builtin_programs() -> dict[str, SequenceProgram]:
    """The canonical programs shipped as ``.seq`` files, keyed by file stem."""
    progs: dict[str, SequenceProgram] = {}
    progs["swaptest"] = as_program(
        [prep("fock", 1, "a"), prep("fock", 1, "b")], swap_test_ops(0.0), {"cutoffs": (6, 6)}
    )
    progs["swaptest_echo"] = as_program(
        [prep("fock", 1, "a"), prep("fock", 1, "b")], swap_test_ops(0.0, echo=True), {"cutoffs": (6, 6), "echo": True}
    )
    progs["overlap_coherent"] = as_program(
        [prep("coherent", complex(math.sqrt(1.8), 0.0), "a"), prep("fock", 2, "b")],
        swap_test_ops(0.0),
        {"cutoffs": (20, 20)},
    )
    progs["parity"] = as_program([prep("fock", 1, "a")], parity_ops(), {"cutoffs": (6, 6)})
    progs["parity_echo"] = as_program([prep("fock", 1, "a")], parity_ops(True), {"cutoffs": (6, 6), "echo": True})
    progs["wigner_point"] = as_program(
        [prep("fock", 1, "a")], wigner_ops(complex(0.5, 0.0)), {"cutoffs": (30, 30)}
    )
    for n in range(1, 5):
        cut = (n + 4, n + 4)
        progs[f"noon{n}"] = as_program([prep("fock", n, "a")], noon_ops(n), {"cutoffs": cut}, ("all",))
        progs[f"noon{n}_echo"] = as_program(
            [prep("fock", n, "a")], noon_ops(n, echo=True), {"cutoffs": cut, "echo": True}, ("all",)
        )
    progs["fredkin_e10"] = as_program([], fredkin_ops(1, 1, 0), {"cutoffs": (6, 6)}, ("all",))
    progs["cswap"] = as_program(
        [prep_spin("e"), prep("fock", 2, "a"), prep("fock", 1, "b")], cswap_ops(), {"cutoffs": (6, 6, 6)}, ("all",)
    )
    progs["jsb"] = as_program(
        [prep("fock", 1, "a")],
        [Instruction("JSB", (2 * math.pi * 5e3, Duration(100e-6, "s")))],
        {"cutoffs": (6, 6)},
    )
    return progs
