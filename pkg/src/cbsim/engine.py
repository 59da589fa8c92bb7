"""Executes sequence-language instructions on a hybrid state.

Pulses (``R``, ``DISP``, ``BSB``, ``RSB``) are instantaneous. Timed segments
(``CBS``, ``BS``, ``JSB``, ``WAIT``) are exact unitaries when the noise model
has no rates, and Lindblad evolutions otherwise. All protocols build their
sequences from :class:`~cbsim.seqlang.Instruction` and run them here, so a
``.seq`` file and the matching built-in protocol share one code path.
"""
from __future__ import annotations

import warnings
from typing import Iterable, Sequence

import numpy as np

from . import generators as gen
from .fockspace import (
    SPIN_E,
    SPIN_G,
    HybridState,
    LinearOperator,
    ModeLayout,
    TruncationWarning,
    apply,
    leakage,
)
from .noise import NOISELESS, NoiseParams, evolve, flip_readout
from .results import ExperimentResult, ShotPlan, sample_counts
from .seqlang import Duration, Instruction, SequenceProgram

DEFAULT_CUTOFFS = (8, 8)
LEAKAGE_WARN = 1e-8


class ExecutionError(RuntimeError):
    def __init__(self, instruction: Instruction, message: str):
        self.instruction = instruction
        super().__init__(f"line {instruction.line}, column {instruction.column} ({instruction.opcode}): {message}")


class Simulator:
    """Runs instructions on one layout with fixed coupling, noise and echo setting.

    Operators are cached per instruction arguments, so sweeping a phase or a
    displacement over many settings only builds what changes.
    """

    def __init__(
        self,
        layout: ModeLayout,
        xi: float = gen.DEFAULT_XI,
        noise: NoiseParams = NOISELESS,
        echo: bool = False,
    ):
        self.layout = layout
        self.xi = xi
        self.noise = noise
        self.echo = echo
        self.max_leakage = 0.0
        self._cache: dict = {}
        self._warned = False

    @property
    def tau(self) -> float:
        return gen.gate_time(self.xi)

    # -- preparation -------------------------------------------------------

    def initial_state(self, preps: Iterable[Instruction] = ()) -> HybridState:
        """Product state from ``PREP`` instructions on top of thermal modes."""
        spin = SPIN_G
        choices: dict[str, tuple] = {}
        for ins in preps:
            if ins.opcode != "PREP":
                raise ExecutionError(ins, "not a PREP instruction")
            if ins.args[0] == "spin":
                spin = SPIN_E if ins.args[1] == "e" else SPIN_G
            else:
                choices[ins.args[2]] = (ins.args[0], ins.args[1], ins)
        factors = []
        for mode in self.layout.modes:
            kind, value, ins = choices.get(mode, ("fock", 0, None))
            try:
                factors.append(self.mode_factor(mode, kind, value))
            except (ValueError, IndexError) as exc:
                if ins is None:
                    raise
                raise ExecutionError(ins, str(exc)) from None
        state = HybridState.product(self.layout, spin, factors)
        self._track(state, None)
        return state

    def mode_factor(self, mode: str, kind: str, value) -> np.ndarray:
        cutoff = self.layout.cutoff(mode)
        nbar = self.noise.nbar(mode)
        if kind == "thermal" or nbar == 0:
            return gen.mode_factor(kind, value, cutoff)
        base = gen.thermal_populations(nbar, cutoff)
        if kind == "fock":
            n = int(value)
            if n >= cutoff:
                raise IndexError(f"Fock level {n} outside [0, {cutoff})")
            # ideal sideband ladder shifts every thermal component up by n
            shifted = np.zeros(cutoff)
            shifted[n:] = base[: cutoff - n]
            return np.diag(shifted / shifted.sum()).astype(complex)
        d = gen.displacement_matrix(complex(value), cutoff)
        return d @ np.diag(base) @ d.conj().T

    # -- execution ---------------------------------------------------------

    def run(self, instructions: Sequence[Instruction], state: HybridState | None = None):
        """Apply ``instructions`` in order.

        Returns ``(final_state, measurements)``; ``measurements`` holds one
        ``(instruction, probabilities)`` pair per ``MEASURE``.
        """
        instructions = list(instructions)
        if state is None:
            preps = [i for i in instructions if i.opcode == "PREP"]
            state = self.initial_state(preps)
        measurements = []
        for ins in instructions:
            if ins.opcode == "PREP":
                continue
            if ins.opcode == "MEASURE":
                measurements.append((ins, self.measure(state, ins.args)))
                continue
            state = self.step(state, ins)
        return state, measurements

    def step(self, state: HybridState, ins: Instruction) -> HybridState:
        try:
            state = self._step(state, ins)
        except ExecutionError:
            raise
        except (ValueError, IndexError, KeyError) as exc:
            raise ExecutionError(ins, str(exc)) from None
        self._track(state, ins)
        return state

    def _seconds(self, d: Duration) -> float:
        return d.seconds(self.tau)

    def _step(self, state: HybridState, ins: Instruction) -> HybridState:
        op, args = ins.opcode, ins.args
        if op == "R":
            return apply(self._op(("R", args), lambda: gen.spin_rotation(gen.RotationParams(*args), self.layout)), state)
        if op == "DISP":
            return apply(self._op(("DISP", args), lambda: gen.displacement(args[0], args[1], self.layout)), state)
        if op in ("BSB", "RSB"):
            kind = "blue" if op == "BSB" else "red"
            return apply(self._op((op, args), lambda: gen.sideband_pi(kind, args[0], self.layout)), state)
        if op in ("CBS", "BS"):
            t = self._seconds(args[0])
            params = gen.CbsParams(self.xi, args[1], tuple(args[2]), t)
            if self.noise.has_dynamics:
                h = self._op(("H" + op, args[1], tuple(args[2])), lambda: self._segment_hamiltonian(op, params))
                return evolve(state, h, t, self.noise, self.echo)
            if op == "CBS":
                u = self._op(("CBS", t, args[1], tuple(args[2])), lambda: gen.u_cbs(params, self.layout))
            else:
                u = self._op(("BS", t, args[1], tuple(args[2])), lambda: gen.u_bs(t, args[1], tuple(args[2]), self.layout, self.xi))
            return apply(u, state)
        if op == "JSB":
            params = gen.JointSidebandParams(args[0], self._seconds(args[1]))
            if self.noise.has_dynamics:
                h = self._op(("HJSB", args[0]), lambda: gen.h_joint_sideband(params, self.layout))
                return evolve(state, h, params.duration, self.noise, self.echo)
            return apply(self._op(("JSB", args), lambda: gen.joint_sideband_u(params, self.layout)), state)
        if op == "WAIT":
            if self.noise.has_dynamics:
                return evolve(state, None, self._seconds(args[0]), self.noise, self.echo)
            return state
        raise ExecutionError(ins, f"cannot execute opcode {op}")

    def _segment_hamiltonian(self, op: str, params: gen.CbsParams) -> LinearOperator:
        if op == "CBS":
            return gen.h_cbs(params, self.layout)
        return gen.h_bs(params.xi, params.upsilon, params.modes, self.layout)

    def _op(self, key, build) -> LinearOperator:
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def _track(self, state: HybridState, ins: Instruction | None) -> None:
        leak = leakage(state)
        self.max_leakage = max(self.max_leakage, leak)
        if leak > LEAKAGE_WARN and not self._warned:
            self._warned = True
            where = "initial state" if ins is None else f"line {ins.line} ({ins.opcode})"
            warnings.warn(
                f"truncation leakage {leak:.2e} after {where}; increase the cutoffs",
                TruncationWarning,
                stacklevel=3,
            )

    # -- readout -----------------------------------------------------------

    def measure(self, state: HybridState, target: tuple) -> dict[str, np.ndarray]:
        """Outcome probabilities for a ``MEASURE`` target (no collapse)."""
        out = {}
        kind = target[0]
        if kind in ("all", "spin"):
            p_e = flip_readout(float(state.spin_probabilities()[1]), self.noise.detect_err)
            out["spin"] = np.array([1 - p_e, p_e])
        modes = self.layout.modes if kind == "all" else (target[1],) if kind in ("fock", "parity") else ()
        for mode in modes:
            dist = np.clip(state.mode_distribution(mode), 0, None)
            if kind in ("all", "fock"):
                out[f"fock_{mode}"] = dist
            if kind in ("all", "parity"):
                even = float(dist[::2].sum())
                out[f"parity_{mode}"] = np.array([even, 1 - even])
        return out


def program_layout(program: SequenceProgram) -> ModeLayout:
    return ModeLayout(program.cutoffs or DEFAULT_CUTOFFS)


def resolve_noise(program: SequenceProgram, noise: NoiseParams | None, profiles: dict | None) -> NoiseParams:
    if noise is not None:
        return noise
    name = program.header.get("noise")
    if name is None:
        return NOISELESS
    if profiles and name in profiles:
        return profiles[name]
    from .profiles import shipped_profile

    return shipped_profile(name)


def resolve_shot_plan(program: SequenceProgram, shot_plan: ShotPlan | None) -> ShotPlan:
    if shot_plan is not None:
        return shot_plan
    h = program.header
    return ShotPlan(h.get("mode", "exact"), h.get("shots", 300), h.get("seed", 0))


def run_program(
    program: SequenceProgram,
    noise: NoiseParams | None = None,
    shot_plan: ShotPlan | None = None,
    profiles: dict | None = None,
) -> ExperimentResult:
    return run_program_with_state(program, noise, shot_plan, profiles)[0]


def run_program_with_state(
    program: SequenceProgram,
    noise: NoiseParams | None = None,
    shot_plan: ShotPlan | None = None,
    profiles: dict | None = None,
) -> tuple[ExperimentResult, HybridState]:
    """Like :func:`run_program`, also returning the final (pre-measurement) state."""
    noise = resolve_noise(program, noise, profiles)
    plan = resolve_shot_plan(program, shot_plan)
    sim = Simulator(program_layout(program), program.header.get("xi", gen.DEFAULT_XI), noise, program.echo)
    state, measurements = sim.run(program.instructions)
    rng = plan.rng()
    rows = []
    derived = {}
    for ins, outcome in measurements:
        for key, probs in outcome.items():
            counts = sample_counts(probs / probs.sum(), plan.shots, rng) if plan.sampled else None
            labels = ("g", "e") if key == "spin" else ("even", "odd") if key.startswith("parity") else range(len(probs))
            for i, label in enumerate(labels):
                row = {"line": ins.line, "observable": key, "outcome": label, "probability": float(probs[i])}
                if counts is not None:
                    row["counts"] = int(counts[i])
                rows.append(row)
            derived[key] = probs
    return ExperimentResult(
        protocol="sequence",
        settings={"header": dict(program.header), "cutoffs": sim.layout.cutoffs, "noise": noise.to_dict()},
        rows=rows,
        derived=derived,
        leakage=sim.max_leakage,
        seed=int(plan.seed),
        shot_plan=plan.to_dict(),
    ), state
