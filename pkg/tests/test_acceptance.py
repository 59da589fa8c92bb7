"""Acceptance criteria 1-10.

Each test prints one ``criterion N: PASS|FAIL`` line with the measured
numbers, then asserts. Tolerances are the contract values; reference
numbers from the experiment are printed next to the simulated ones but are
not asserted.
"""
import math
import os
import random
import time
import warnings
from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import poisson

from cbsim import generators as gen
from cbsim.cli import main as cli_main
from cbsim.fockspace import HybridState, ModeLayout, TruncationWarning, basis_index, expectation, number_operator
from cbsim.fockspace import partial_trace
from cbsim.noise import (
    NoiseParams,
    calibrate_motional_dephasing,
    evolve,
    predicted_coherence_time,
)
from cbsim.profiles import paper_profile
from cbsim.protocols import (
    ShotPlan,
    fit_wigner_mixture,
    fredkin_table,
    generate_noon,
    noon_experiment,
    noon_fidelity,
    reconstruct_coherent,
    swap_test,
    wigner_fock_analytic,
    wigner_scan,
)
from cbsim.protocols.common import make_simulator
from cbsim.protocols.programs import noon_ops, parity_ops, swap_test_ops
from cbsim.seqlang import ParseError, parse, pretty_print

import oracles
from test_seqlang import random_program

PHIS = np.linspace(0, 2 * np.pi, 24, endpoint=False)


@pytest.fixture
def report(capsys):
    """Print one verdict line per criterion, visible even when output is captured."""

    def emit(number: int, checks: dict[str, bool], details: str) -> None:
        ok = all(checks.values())
        failed = [name for name, passed in checks.items() if not passed]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {details}"
        if failed:
            line += f" | failed: {', '.join(failed)}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def test_criterion_01_cbs_oracle(report):
    start = time.perf_counter()
    lay = ModeLayout((8, 8))
    worst = 0.0
    for upsilon in (0.0, 0.7, math.pi / 2, math.pi, 4.0):
        u = gen.u_cbs(gen.CbsParams(upsilon=upsilon), lay).toarray()
        for n in range(8):
            for m in range(8):
                if n + m > 12:
                    continue
                exact = oracles.sector_cbs_action(n, m, gen.DEFAULT_XI, upsilon, gen.gate_time())
                col = u[:, basis_index("e", (n, m), lay)]
                ref = np.zeros(lay.dim, dtype=complex)
                for (j, k), amp in exact.items():
                    if j < 8 and k < 8:
                        ref[basis_index("e", (j, k), lay)] = amp
                    else:
                        # the exact evolution must not need levels beyond the cutoff
                        worst = max(worst, abs(amp))
                worst = max(worst, float(np.abs(col - ref).max()))
                g_col = u[:, basis_index("g", (n, m), lay)]
                g_ref = np.zeros(lay.dim)
                g_ref[basis_index("g", (n, m), lay)] = 1
                worst = max(worst, float(np.abs(g_col - g_ref).max()))
    elapsed = time.perf_counter() - start
    report(
        1,
        {"max |delta| <= 1e-8": worst <= 1e-8, "runtime < 10 s": elapsed < 10},
        f"max |delta| = {worst:.2e}, runtime {elapsed:.2f} s",
    )


def test_criterion_02_fredkin(report):
    ideal = fredkin_table()
    table = ideal.derived["table"]
    target = np.zeros((8, 8))
    from cbsim.protocols.fredkin import INPUTS, ideal_output

    for i, inp in enumerate(INPUTS):
        target[i, INPUTS.index(ideal_output(*inp))] = 1
    cell_err = float(np.abs(table - target).max())
    base = paper_profile()
    successes = []
    for factor in (1, 2, 4):
        noise = base.scaled(heat_a=factor, heat_b=factor)
        successes.append(fredkin_table(noise).derived["success_probability"])
    report(
        2,
        {
            "noiseless cells <= 1e-10": cell_err <= 1e-10,
            "noiseless success = 1": abs(ideal.derived["success_probability"] - 1) <= 1e-10,
            "paper profile success < 1": successes[0] < 1,
            "strictly decreasing with heating": successes[0] > successes[1] > successes[2],
        },
        f"noiseless max cell error {cell_err:.1e}; success at heating x1,x2,x4 = "
        + ", ".join(f"{s:.4f}" for s in successes)
        + " (experiment: 0.82 +- 0.01, not asserted)",
    )


def test_criterion_03_swap_test(report):
    start = time.perf_counter()
    worst = 0.0
    for echo in (False, True):
        for n in range(6):
            for m in range(6):
                res = swap_test(("fock", n), m, phis=PHIS, echo=echo)
                p = np.array([r["probability"] for r in res.rows])
                worst = max(worst, float(np.abs(p - oracles.ideal_swap_probability(float(n == m), m, PHIS)).max()))
    exact_time = time.perf_counter() - start
    sampled_ok = []
    details = []
    for n in range(6):
        res = swap_test(("fock", n), n, phis=PHIS, shot_plan=ShotPlan("sampled", 300, 1000 + n))
        c, se = res.derived["contrast"], res.errors["contrast"]
        sampled_ok.append(abs(c - 1) <= 3 * se)
        details.append(f"{c:.3f}+-{se:.3f}")
    report(
        3,
        {
            "exact |P - formula| <= 1e-9": worst <= 1e-9,
            "sampled diagonal within 3 SE": all(sampled_ok),
            "full matrix < 1 min": exact_time < 60,
        },
        f"exact max error {worst:.1e} (plain and echo, 72 pairs in {exact_time:.1f} s); "
        f"sampled diagonal contrasts {', '.join(details)}",
    )


def test_criterion_04_coherent(report):
    alpha = math.sqrt(1.8)
    exact = reconstruct_coherent(alpha, n_max=5, cutoff=20)
    lam = exact.derived["mean_photon_number"]
    sampled = reconstruct_coherent(alpha, n_max=5, cutoff=20, shot_plan=ShotPlan("sampled", 500, 44))
    lam_s, se = sampled.derived["mean_photon_number"], sampled.errors["mean_photon_number"]
    report(
        4,
        {"exact within 1e-3": abs(lam - 1.8) <= 1e-3, "sampled within 3 SE": abs(lam_s - 1.8) <= 3 * se},
        f"exact |alpha|^2 = {lam:.6f}; sampled {lam_s:.3f} +- {se:.3f} "
        "(experiment: 1.9(2) and 1.8(1), not asserted)",
    )


def test_criterion_05_wigner(report):
    alphas = np.linspace(0, 2.5, 26)
    grid = np.concatenate([alphas, alphas[1:] * np.exp(0.6j), alphas[1:] * 1j])
    worst = 0.0
    for n in range(7):
        res = wigner_scan(("fock", n), grid)
        worst = max(worst, float(np.abs(res.derived["W"] - wigner_fock_analytic(n, grid)).max()))
    synthetic = 0.9 * wigner_fock_analytic(2, alphas) + 0.1 * wigner_fock_analytic(3, alphas)
    weights, _ = fit_wigner_mixture(alphas, synthetic)
    expected = np.zeros(7)
    expected[2], expected[3] = 0.9, 0.1
    exact_err = float(np.abs(weights - expected).max())
    rho = np.diag([0, 0, 0.9, 0.1, 0, 0, 0]).astype(complex)
    scan = wigner_scan(rho, alphas, shot_plan=ShotPlan("sampled", 600, 55))
    w_s, err_s = fit_wigner_mixture(alphas, scan.derived["W"], scan.errors["W"])
    z = np.abs(w_s[[2, 3]] - [0.9, 0.1]) / np.maximum(err_s[[2, 3]], 1e-12)
    report(
        5,
        {
            "Fock scans within 1e-6": worst <= 1e-6,
            "exact mixture within 1e-6": exact_err <= 1e-6,
            "sampled mixture within 3 sigma": bool(np.all(z <= 3)),
        },
        f"max |W - analytic| = {worst:.1e}; exact weight error {exact_err:.1e}; sampled d2 = "
        f"{w_s[2]:.3f}+-{err_s[2]:.3f}, d3 = {w_s[3]:.3f}+-{err_s[3]:.3f}",
    )


def test_criterion_06_noon(report):
    checks = {}
    worst_f = worst_fq = 0.0
    for echo in (False, True):
        for n in range(1, 5):
            f, fq = noon_fidelity(generate_noon(n, echo), n)
            worst_f = max(worst_f, abs(f - 1))
            worst_fq = max(worst_fq, abs(fq - n**2))
    checks["noiseless F = 1"] = worst_f <= 1e-9
    checks["noiseless F_Q = n^2"] = worst_fq <= 1e-6

    profile = paper_profile()
    dephasing = NoiseParams(deph_mode_a=profile.deph_mode_a, deph_mode_b=profile.deph_mode_b)
    lines = []
    tomo_gap = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for label, noise in (("noiseless", None), ("dephasing", dephasing), ("paper", profile)):
            for echo in (False, True):
                fs = []
                for n in range(1, 5):
                    res = noon_experiment(n, echo, noise or NoiseParams())
                    d = res.derived
                    fs.append(d["F"])
                    tomo_gap[(label, echo, n)] = abs(d["F_tomography"] - d["F"])
                if noise is not None:
                    checks[f"{label} {'echo' if echo else 'plain'}: F decreasing"] = all(
                        a > b for a, b in zip(fs, fs[1:])
                    )
                lines.append(f"{label}/{'echo' if echo else 'plain'} F = " + ", ".join(f"{f:.4f}" for f in fs))
    for key, gap in sorted(tomo_gap.items(), key=str):
        label, echo, n = key
        checks[f"tomography {label}/{'echo' if echo else 'plain'} n={n} within 0.01"] = gap <= 0.01
    worst_gap = {
        label: max(g for (lab, _, _), g in tomo_gap.items() if lab == label) for label in ("noiseless", "dephasing", "paper")
    }
    report(
        6,
        checks,
        f"noiseless |F-1| = {worst_f:.1e}, |F_Q-n^2| = {worst_fq:.1e}; "
        + "; ".join(lines)
        + "; max tomography gap "
        + ", ".join(f"{k} {v:.4f}" for k, v in worst_gap.items()),
    )


def test_criterion_07_cswap(report):
    start = time.perf_counter()
    cut = 6
    lay = ModeLayout((cut, cut, cut))
    u = gen.cswap_composed(lay).toarray()
    perm = oracles.cswap_permutation(cut)
    worst = 0.0
    for s in range(2):
        for n in range(5):
            for m in range(5):
                i = oracles.flat_index(s, (n, m, 0), (cut,) * 3)
                worst = max(worst, float(np.abs(u[:, i] - perm[:, i]).max()))
    elapsed = time.perf_counter() - start
    report(
        7,
        {"max |delta| <= 1e-8": worst <= 1e-8, "runtime < 30 s": elapsed < 30},
        f"max |delta| = {worst:.1e} over 50 inputs, runtime {elapsed:.2f} s",
    )


def test_criterion_08_echo_identities(report):
    rng = np.random.default_rng(8)
    support, cut = 6, 11  # states live on levels < 6; the cutoff holds every reachable sector
    plain = make_simulator((cut, cut), None, False)
    echoed = make_simulator((cut, cut), None, True)
    lay = plain.layout
    n_tot = np.add.outer(np.arange(cut), np.arange(cut))
    worst = {"swap": 0.0, "parity": 0.0, "noon": 0.0}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for k in range(50):
            c = np.zeros((cut, cut), dtype=complex)
            c[:support, :support] = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
            c /= np.linalg.norm(c)
            psi = np.zeros(lay.dim, dtype=complex)
            psi[: cut * cut] = c.ravel()
            state = HybridState(lay, psi)
            # swap test: echoed P(g) at -phi equals plain P(e) at phi
            for phi in rng.uniform(0, 2 * np.pi, 3):
                p_plain = plain.run(swap_test_ops(phi), state)[0].spin_probabilities()[1]
                p_echo = echoed.run(swap_test_ops(-phi, True), state)[0].spin_probabilities()[0]
                worst["swap"] = max(worst["swap"], abs(p_plain - p_echo))
            # parity: even total parity shows up in e (plain) and in g (echo)
            even = float((np.abs(c) ** 2)[n_tot % 2 == 0].sum())
            p_plain = plain.run(parity_ops(), state)[0].spin_probabilities()[1]
            p_echo = echoed.run(parity_ops(True), state)[0].spin_probabilities()[0]
            worst["parity"] = max(worst["parity"], abs(p_plain - even), abs(p_echo - even))
            # NOON: same-parity superpositions of |n, 0>; identical motional
            # populations and coherence magnitudes (identical states for odd n)
            parity = k % 2
            levels = [j for j in range(1, support) if j % 2 == parity]
            amps = np.zeros(cut, dtype=complex)
            amps[levels] = rng.normal(size=len(levels)) + 1j * rng.normal(size=len(levels))
            amps /= np.linalg.norm(amps)
            v = np.zeros(lay.dim, dtype=complex)
            v[np.arange(cut) * cut] = amps
            start = HybridState(lay, v)
            n_ref = 1 if parity else 2
            r_p = partial_trace(plain.run(noon_ops(n_ref), start)[0].to_density(), ["a", "b"])
            r_e = partial_trace(echoed.run(noon_ops(n_ref, True), start)[0].to_density(), ["a", "b"])
            diff = np.abs(r_p - r_e).max() if parity else np.abs(np.abs(r_p) - np.abs(r_e)).max()
            worst["noon"] = max(worst["noon"], float(diff))
    report(
        8,
        {f"{k} <= 1e-9": v <= 1e-9 for k, v in worst.items()},
        "max deviation over 50 random states: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()),
    )


def test_criterion_09_noise(report):
    rng = np.random.default_rng(9)
    profile = paper_profile()
    lay = ModeLayout((4, 4))
    trace_err = 0.0
    min_eig = 1.0
    for k in range(6):
        v = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
        v /= np.linalg.norm(v)
        h = gen.h_cbs(gen.CbsParams(upsilon=rng.uniform(0, 2 * np.pi)), lay) if k % 2 else None
        rho = evolve(HybridState(lay, v), h, 1e-3, profile, echoed=bool(k % 3 == 0)).data
        trace_err = max(trace_err, abs(np.trace(rho) - 1))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(rho).min()))
    single = ModeLayout((6,))
    heated = evolve(HybridState.basis(single, "g", 0), None, 1e-3, NoiseParams(heat_a=19.9))
    growth = expectation(heated, number_operator(single, "a")).real / 1e-3

    def decay_time(n: int) -> float:
        lay_n = ModeLayout((n + 3,))
        psi = np.zeros(lay_n.dim, dtype=complex)
        psi[0] = psi[n] = 1 / math.sqrt(2)
        rho = evolve(HybridState(lay_n, psi), None, 1e-3, NoiseParams(deph_mode_a=profile.deph_mode_a)).data
        return -1e-3 / math.log(abs(rho[0, n]) / 0.5)

    ratio = decay_time(1) / decay_time(2)
    rates = calibrate_motional_dephasing({"a": [(1, 5.0e-3), (2, 1.2e-3)], "b": [(1, 7.0e-3), (2, 1.4e-3)]})
    tau2a = predicted_coherence_time(rates["a"], 2)
    tau2b = predicted_coherence_time(rates["b"], 2)
    report(
        9,
        {
            "trace preserved": trace_err <= 1e-9,
            "min eigenvalue >= -1e-9": min_eig >= -1e-9,
            "heating 19.9/s within 1%": abs(growth / 19.9 - 1) <= 0.01,
            "tau1/tau2 = 4 within 1%": abs(ratio / 4 - 1) <= 0.01,
            "tau2 in quoted bars": 0.9e-3 <= tau2a <= 1.5e-3 and 1.1e-3 <= tau2b <= 1.7e-3,
        },
        f"trace error {trace_err:.1e}, min eigenvalue {min_eig:.1e}, d<n>/dt = {growth:.3f}/s, "
        f"tau1/tau2 = {ratio:.4f}, predicted tau2 = {tau2a * 1e3:.3f} ms (a, 1.2(3)) and "
        f"{tau2b * 1e3:.3f} ms (b, 1.4(3))",
    )


def test_criterion_10_parser_cli(report, tmp_path):
    folder = resources.files("cbsim") / "data" / "sequences"
    shipped_ok = True
    count = 0
    for entry in folder.iterdir():
        if entry.name.endswith(".seq"):
            prog = parse(entry.read_bytes())
            shipped_ok &= parse(pretty_print(prog)) == prog
            count += 1
    rnd = random.Random(10)
    fuzz_ok = all(parse(pretty_print(p)) == p for p in (parse(random_program(rnd)) for _ in range(100)))
    crashes = 0
    byte_rng = np.random.default_rng(10)
    for _ in range(2000):
        data = byte_rng.integers(0, 256, size=int(byte_rng.integers(0, 120)), dtype=np.uint8).tobytes()
        try:
            parse(data)
        except ParseError:
            pass
        except Exception:
            crashes += 1
    golden = Path(__file__).parent / "golden" / "run_noon2_echo"
    identical = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for attempt in range(2):
            out = tmp_path / str(attempt)
            code = cli_main(["run", "noon2_echo.seq", "--noise", "paper.profile", "--seed", "1", "--out", str(out)])
            identical &= code == 0
            for name in ("result.json", "result.csv", "config.json"):
                identical &= (out / name).read_bytes() == (golden / name).read_bytes()
    report(
        10,
        {
            "shipped round trip": shipped_ok and count > 0,
            "fuzzed round trip": fuzz_ok,
            "no crash on bytes": crashes == 0,
            "golden reruns identical": identical,
        },
        f"{count} shipped programs, 100 fuzzed programs, 2000 random byte strings ({crashes} crashes), "
        "two reruns byte-identical to golden files",
    )
