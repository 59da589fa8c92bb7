"""Command-line front end: ``cbsim <subcommand> [options]``.

Every run writes three files to ``--out``:

``result.json``
    the :class:`~cbsim.results.ExperimentResult` plus the resolved config
``result.csv``
    one row per setting (phase, alpha, input state, ...)
``config.json``
    the resolved configuration, enough to replay the run

Outputs depend only on the arguments, the noise profile and the seed, so
re-running a command with the same seed reproduces them byte for byte.
"""
from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .engine import ExecutionError, run_program
from .noise import NOISELESS, NoiseParams, calibrate_motional_dephasing, predicted_coherence_time
from .profiles import ProfileError, load_profile, shipped_profile
from .results import ExperimentResult, ShotPlan, jsonable
from .seqlang import ParseError, parse, parse_duration

DEFAULT_SHOTS = {"fredkin": 10000, "swaptest": 300, "overlap": 300, "coherent": 500, "wigner": 600, "noon": 300}

# (mode, n, coherence time in s) for the two radial modes
PAPER_COHERENCE_TIMES = [("a", 1, 5.0e-3), ("a", 2, 1.2e-3), ("b", 1, 7.0e-3), ("b", 2, 1.4e-3)]


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're' or 're,im', got {text!r}")


def _recipe(text: str):
    kind, _, value = text.partition(":")
    try:
        if kind == "fock":
            return ("fock", int(value))
        if kind == "coherent":
            return ("coherent", _complex(value))
        if kind == "thermal":
            return ("thermal", float(value))
    except (ValueError, argparse.ArgumentTypeError):
        pass
    raise argparse.ArgumentTypeError(f"expected fock:N, coherent:RE[,IM] or thermal:NBAR, got {text!r}")


def _alpha_grid(text: str) -> np.ndarray:
    from .protocols.wigner import parse_alpha_grid

    try:
        return parse_alpha_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seconds(text: str) -> float:
    try:
        d = parse_duration(text)
    except Exception:
        raise argparse.ArgumentTypeError(f"malformed time {text!r}") from None
    if d.unit != "s":
        raise argparse.ArgumentTypeError("coherence times must be given in seconds (s, ms or us)")
    return d.value


def resolve_noise(spec: str | None, noiseless: bool = False) -> tuple[NoiseParams, str]:
    """Noise from a profile path or a shipped profile name (``paper``, ``paper.profile``)."""
    if noiseless or spec is None:
        return NOISELESS, "noiseless"
    path = Path(spec)
    if path.is_file():
        return load_profile(path), str(spec)
    name = path.name[: -len(".profile")] if path.name.endswith(".profile") else path.name
    if path.parent == Path(".") and name:
        try:
            return shipped_profile(name), f"shipped:{name}"
        except ProfileError:
            pass
    raise CliError(f"{spec}: no such noise profile")


def resolve_sequence(spec: str) -> tuple[bytes, str]:
    path = Path(spec)
    if path.is_file():
        return path.read_bytes(), str(spec)
    from importlib import resources

    name = path.name if path.name.endswith(".seq") else f"{path.name}.seq"
    ref = resources.files("cbsim") / "data" / "sequences" / name
    if path.parent == Path(".") and ref.is_file():
        return ref.read_bytes(), f"shipped:{name}"
    raise CliError(f"{spec}: no such sequence file")


# ---------------------------------------------------------------------------
# subcommands


def _plan(args, protocol: str) -> ShotPlan:
    shots = args.shots or DEFAULT_SHOTS.get(protocol, 300)
    return ShotPlan("sampled" if args.sampled else "exact", shots, args.seed)


def cmd_fredkin(args, noise):
    from .protocols import fredkin_table

    res = fredkin_table(noise, _plan(args, "fredkin"), args.cutoff)
    return res, [f"success_probability = {res.derived['success_probability']!r}"]


def cmd_swaptest(args, noise):
    from .protocols import swap_test

    phis = np.linspace(0, 2 * np.pi, args.phases, endpoint=False)
    res = swap_test(args.psi, args.m, phis, args.echo, noise, _plan(args, "swaptest"))
    return res, [f"contrast = {res.derived['contrast']!r} +- {res.errors['contrast']!r}"]


def cmd_overlap(args, noise):
    from .protocols import overlap_matrix

    phis = np.linspace(0, 2 * np.pi, args.phases, endpoint=False)
    res = overlap_matrix(args.n_max, args.echo, noise, _plan(args, "overlap"), phis)
    lines = [" ".join(f"{c:7.4f}" for c in row) for row in res.derived["contrast_matrix"]]
    return res, lines


def cmd_coherent(args, noise):
    from .protocols import reconstruct_coherent

    phis = np.linspace(0, 2 * np.pi, args.phases, endpoint=False)
    res = reconstruct_coherent(args.alpha, args.n_max, args.echo, noise, _plan(args, "coherent"), phis, args.cutoff)
    lam, err = res.derived["mean_photon_number"], res.errors["mean_photon_number"]
    return res, [f"|alpha|^2 = {lam!r} +- {err!r}"]


def cmd_wigner(args, noise):
    from .protocols import wigner_scan

    prep = ("fock", args.fock) if args.coherent is None else ("coherent", args.coherent)
    res = wigner_scan(prep, args.alphas, args.echo, noise, _plan(args, "wigner"), args.cutoff)
    lines = [f"W({r['alpha_re']!r}) = {r['W']!r}" for r in res.rows]
    return res, lines + res.flags


def cmd_noon(args, noise):
    from .protocols import noon_experiment

    res = noon_experiment(args.n, args.echo, noise, _plan(args, "noon"), args.omega0)
    d = res.derived
    return res, [
        f"F = {d['F']!r}",
        f"F_Q = {d['F_Q']!r}",
        f"F (tomography) = {d['F_tomography']!r}",
        f"F_Q (tomography) = {d['F_Q_tomography']!r}",
    ]


def cmd_run(args, noise_override):
    data, source = resolve_sequence(args.file)
    program = parse(data)
    noise = noise_override if args.noise or args.noiseless else None
    plan = None
    if args.sampled or args.shots or args.seed_given:
        h = program.header
        plan = ShotPlan(
            "sampled" if args.sampled else h.get("mode", "exact"),
            args.shots or h.get("shots", 300),
            args.seed if args.seed_given else h.get("seed", 0),
        )
    res = run_program(program, noise=noise, shot_plan=plan)
    res.settings["source"] = source
    lines = [f"{r['observable']}[{r['outcome']}] = {r['probability']!r}" for r in res.rows]
    return res, lines


def cmd_calibrate(args, noise):
    points = args.point or [(m, n, t) for m, n, t in PAPER_COHERENCE_TIMES]
    by_mode: dict[str, list] = {}
    for mode, n, tau in points:
        by_mode.setdefault(mode, []).append((int(n), float(tau)))
    rates = calibrate_motional_dephasing(by_mode)
    rows = []
    for mode, n, tau in points:
        rows.append(
            {
                "mode": mode,
                "n": int(n),
                "coherence_time": float(tau),
                "predicted": predicted_coherence_time(rates[mode], int(n)),
            }
        )
    derived = {f"deph_mode_{m}": g for m, g in sorted(rates.items())}
    res = ExperimentResult(protocol="calibrate", settings={"points": points}, rows=rows, derived=derived, seed=args.seed)
    return res, [f"{k} = {v!r}" for k, v in derived.items()]


COMMANDS = {
    "fredkin": cmd_fredkin,
    "swaptest": cmd_swaptest,
    "overlap": cmd_overlap,
    "coherent": cmd_coherent,
    "wigner": cmd_wigner,
    "noon": cmd_noon,
    "run": cmd_run,
    "calibrate": cmd_calibrate,
}


# ---------------------------------------------------------------------------
# parser


def _calib_point(text: str):
    parts = text.split(":")
    if len(parts) != 3 or parts[0] not in ("a", "b"):
        raise argparse.ArgumentTypeError(f"expected MODE:N:TIME like a:2:1.2ms, got {text!r}")
    try:
        n = int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed Fock level in {text!r}") from None
    return (parts[0], n, _seconds(parts[2]))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="cbsim-out", help="output directory (default: %(default)s)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed; drawn from entropy and recorded if omitted")
    common.add_argument("--noise", default=None, help="noise profile file or shipped name (paper, noiseless)")
    common.add_argument("--noiseless", action="store_true", help="ignore any noise profile")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="sampled", action="store_false", help="report Born probabilities (default)")
    mode.add_argument("--sampled", dest="sampled", action="store_true", help="draw finite shots per setting")
    common.set_defaults(sampled=False)
    common.add_argument("--shots", type=int, default=None, help="shots per setting in sampled mode")
    common.add_argument("--gnuplot", action="store_true", help="also write plot.gp for result.csv")

    parser = argparse.ArgumentParser(prog="cbsim", description="Conditional beam splitter gate simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fredkin", parents=[common], help="truth table of the CBS Fredkin gate")
    p.add_argument("--cutoff", type=int, default=6)

    p = sub.add_parser("swaptest", parents=[common], help="swap test against a Fock state")
    p.add_argument("--psi", type=_recipe, default=("fock", 0), help="fock:N, coherent:RE[,IM] or thermal:NBAR")
    p.add_argument("--m", type=int, default=0, help="Fock level of the reference mode")
    p.add_argument("--phases", type=int, default=24)
    p.add_argument("--echo", action="store_true")

    p = sub.add_parser("overlap", parents=[common], help="swap-test contrast matrix of Fock states")
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--phases", type=int, default=24)
    p.add_argument("--echo", action="store_true")

    p = sub.add_parser("coherent", parents=[common], help="coherent-state populations from swap tests")
    p.add_argument("--alpha", type=_complex, default=complex(math.sqrt(1.8), 0.0), help="RE[,IM]")
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--cutoff", type=int, default=20)
    p.add_argument("--phases", type=int, default=24)
    p.add_argument("--echo", action="store_true")

    p = sub.add_parser("wigner", parents=[common], help="displaced-parity Wigner scan")
    p.add_argument("--fock", type=int, default=0)
    p.add_argument("--coherent", type=_complex, default=None, help="scan a coherent state RE[,IM] instead")
    p.add_argument("--alphas", type=_alpha_grid, default=_alpha_grid("0:2.5:26"), help="start:stop:count")
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--echo", action="store_true")

    p = sub.add_parser("noon", parents=[common], help="NOON generation and tomography")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--echo", action="store_true")
    p.add_argument("--omega0", type=float, default=2 * math.pi * 5e3, help="joint sideband Rabi frequency (rad/s)")

    p = sub.add_parser("run", parents=[common], help="execute a .seq program")
    p.add_argument("file", help="program path or shipped program name")

    p = sub.add_parser("calibrate", parents=[common], help="fit motional dephasing rates")
    p.add_argument(
        "--point",
        type=_calib_point,
        action="append",
        help="MODE:N:TIME coherence time of (|0>+|N>); repeatable; defaults to the measured values",
    )
    return parser


def _gnuplot(res: ExperimentResult) -> str:
    cols = res.columns()
    x = cols[0] if cols else "1"
    ys = [c for c in cols[1:] if all(isinstance(r.get(c), (int, float)) for r in res.rows)]
    plots = ", ".join(f"'result.csv' using '{x}':'{y}' with linespoints title '{y}'" for y in ys[:4])
    return f"set datafile separator ','\nset key autotitle columnhead\nset xlabel '{x}'\nplot {plots}\n"


def write_outputs(out: Path, res: ExperimentResult, config: dict, gnuplot: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(res.to_json({"config": config}), encoding="utf-8")
    (out / "result.csv").write_text(res.to_csv(), encoding="utf-8")
    (out / "config.json").write_text(json.dumps(jsonable(config), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    if gnuplot:
        (out / "plot.gp").write_text(_gnuplot(res), encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = secrets.randbits(64)
    if not 0 <= args.seed < 2**64:
        print("cbsim: error: seed must be a 64-bit unsigned integer", file=sys.stderr)
        return 2
    if args.shots is not None and args.shots < 1:
        print("cbsim: error: --shots must be >= 1", file=sys.stderr)
        return 2
    try:
        noise, noise_source = resolve_noise(args.noise, args.noiseless)
        res, lines = COMMANDS[args.command](args, noise)
        skip = {"out", "gnuplot", "seed", "seed_given", "noise", "noiseless"}
        options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
        config = {
            "version": __version__,
            "options": options,
            "noise_source": noise_source if args.command != "run" or args.noise or args.noiseless else "program",
            "noise": noise.to_dict(),
            "seed": res.seed if res.seed is not None else args.seed,
            "shot_plan": res.shot_plan,
        }
        write_outputs(Path(args.out), res, config, args.gnuplot)
    except (CliError, ParseError, ProfileError, ExecutionError, ValueError, KeyError, IndexError, OSError) as exc:
        msg = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
        print(f"cbsim: error: {msg}", file=sys.stderr)
        return 1
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
