"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import contextlib
import dataclasses
import io
import json
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import random_friction, random_psd, random_rank_deficient, random_state  # noqa: E402
from mcdiff.cli import main as cli_main  # noqa: E402
from mcdiff.closures import (  # noqa: E402
    MaxwellStefanClosure,
    NovelClosure,
    OnsagerClosure,
    flux_MS,
    ms_onsager,
    novel_onsager_matrix,
    structured_onsager,
)
from mcdiff.darken import (  # noqa: E402
    assemble_Bmol,
    darken_ms_diffusivities,
    recover_core_diagonal,
    ternary_explicit_fluxes,
)
from mcdiff.fickian import (  # noqa: E402
    fickian_ideal_isobaric,
    friction_sign_counterexample,
    posdiag_condition,
    spectrum,
)
from mcdiff.groupinv import adjugate, det_monotone, group_inverse, psd_on_subspace, rank_deficient  # noqa: E402
from mcdiff.mixture import driving_forces, make_state  # noqa: E402
from mcdiff.scenario import dumps, loads, sim_config  # noqa: E402
from mcdiff.simulator import ProjectedImageModel, run  # noqa: E402
from mcdiff.transforms import (  # noqa: E402
    ellipticity_certificate,
    friction_ellipticity_constant,
    fo_to_novel,
    max_ellipticity_constant,
    ms_to_fo,
    novel_to_ms,
    to_novel,
)

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
SEED = 20240917
EPS = np.finfo(float).eps


def _rel(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), np.finfo(float).tiny))


def criterion_1():
    """(B) -> (A) -> (C) -> (B) reproduces Maxwell-Stefan fluxes."""
    rng = np.random.default_rng(SEED + 1)
    start = time.perf_counter()
    worst = 0.0
    for k in range(200):
        n = 2 + k % 4
        state = random_state(rng, n)
        f = random_friction(rng, n)
        onsager = ms_to_fo(state, MaxwellStefanClosure(f)).closure
        novel = to_novel(state, onsager).closure
        f_back = novel_to_ms(state, novel).closure.f
        for g in rng.standard_normal((20, n)):
            worst = max(worst, _rel(flux_MS(state, f_back, g), flux_MS(state, f, g)))
    elapsed = time.perf_counter() - start
    return worst <= 1e-8 and elapsed <= 10.0, f"max rel flux error {worst:.2e} (tol 1e-8)", elapsed


def criterion_2():
    """Group inverse: defining equations, t-independence, completion determinant, adjugate."""
    rng = np.random.default_rng(SEED + 2)
    start = time.perf_counter()
    eq = t_dep = det_err = adj_err = 0.0
    for k in range(500):
        n = 2 + k % 5
        A, b, c = random_rank_deficient(rng, n)
        rdm = rank_deficient(A, b, c)
        res = group_inverse(rdm)
        X = res.Asharp
        nA, nX = np.linalg.norm(A), np.linalg.norm(X)
        eq = max(
            eq,
            np.linalg.norm(A @ X @ A - A) / nA,
            np.linalg.norm(X @ A @ X - X) / nX,
            np.linalg.norm(A @ X - X @ A) / (nA * nX),
        )
        for t in rng.uniform(0.1, 10.0, 2) * np.linalg.norm(A, np.inf):
            t_dep = max(t_dep, _rel(group_inverse(rdm, t).Asharp, X))
            det_err = max(det_err, abs(np.linalg.det(A + t * np.outer(b, rdm.c)) - res.D0 * t) / abs(res.D0 * t))
        for mat in (A, A + np.outer(b, rdm.c), rng.standard_normal((n, n))):
            adj = adjugate(mat)
            scale = np.linalg.norm(mat) * np.linalg.norm(adj) + abs(np.linalg.det(mat))
            adj_err = max(adj_err, np.linalg.norm(mat @ adj - np.linalg.det(mat) * np.eye(n)) / scale)
    elapsed = time.perf_counter() - start
    ok = eq <= 1e-10 and t_dep <= 1e-9 and det_err <= 1e-8 and adj_err <= 1e-9 and elapsed <= 5.0
    detail = f"equations {eq:.1e}, t-dependence {t_dep:.1e}, det {det_err:.1e}, adjugate {adj_err:.1e}"
    return ok, detail, elapsed


def criterion_3():
    """Explicit ternary inversion versus the group-inverse path; ternary K vanishes."""
    rng = np.random.default_rng(SEED + 3)
    start = time.perf_counter()
    flux_err = k_ratio = 0.0
    for _ in range(200):
        state = random_state(rng, 3)
        f = random_friction(rng, 3)
        g = rng.standard_normal(3)
        J, _ = ternary_explicit_fluxes(state, f, driving_forces(state, g))
        flux_err = max(flux_err, _rel(J, flux_MS(state, f, g)))
        novel = fo_to_novel(state, ms_to_fo(state, MaxwellStefanClosure(f)).closure).closure
        k_ratio = max(k_ratio, np.linalg.norm(novel.K) / np.linalg.norm(np.diag(novel.d)))
    elapsed = time.perf_counter() - start
    ok = flux_err <= 1e-11 and k_ratio <= 1e-10 and elapsed <= 2.0
    return ok, f"flux error {flux_err:.1e} (tol 1e-11), |K|/|D| {k_ratio:.1e} (tol 1e-10)", elapsed


def criterion_4():
    """Multicomponent Darken: recovery, binary reduction, dilute limit."""
    rng = np.random.default_rng(SEED + 4)
    start = time.perf_counter()
    recovery = binary = dilute = 0.0
    for k in range(200):
        n = 3 + k % 4
        x = rng.dirichlet(np.ones(n))
        d = rng.uniform(1e-10, 1e-8, n)
        B = assemble_Bmol(x, darken_ms_diffusivities(x, d))
        recovery = max(recovery, float(np.max(np.abs(recover_core_diagonal(x, B) - d) / d)))
        x2 = rng.dirichlet(np.ones(2))
        d2 = rng.uniform(1e-10, 1e-8, 2)
        exact = x2[0] * d2[1] + x2[1] * d2[0]
        binary = max(binary, abs(darken_ms_diffusivities(x2, d2)[0, 1] - exact) / (exact * EPS))
        eps = 1e-8
        j = int(rng.integers(n))
        xd = np.full(n, eps / (n - 1))
        xd[j] = 1.0 - eps
        table = darken_ms_diffusivities(xd, d)
        for i in range(n):
            if i != j:
                dilute = max(dilute, abs(table[i, j] - d[i]) / d[i])
    elapsed = time.perf_counter() - start
    ok = recovery <= 1e-10 and binary <= 4.0 and dilute <= 1e-6
    return ok, f"recovery {recovery:.1e}, binary {binary:.1f} ulp, dilute {dilute:.1e}", elapsed


def criterion_5():
    """Ellipticity constant 1/(sup|f| max M) for ms_to_fo outputs, with and without a supplied d0."""
    rng = np.random.default_rng(SEED + 5)
    start = time.perf_counter()
    worst_free = worst_given = np.inf
    hyp_ok = True
    for k in range(100):
        n = 2 + k % 5
        state = random_state(rng, n)
        msc = MaxwellStefanClosure(random_friction(rng, n))
        d0 = friction_ellipticity_constant(msc.f, state.M)
        L = ms_to_fo(state, msc).closure
        cert = ellipticity_certificate(state, L, d0)
        worst_free = min(worst_free, cert.min_excess_eig / np.linalg.norm(L.L, 2))
        # hypothesis (ii) holds with its largest constant; feed it to ms_to_fo
        d0_ii = max_ellipticity_constant(state, msc)
        hyp_ok &= ellipticity_certificate(state, msc, d0_ii).ok and d0_ii > 0
        L2 = ms_to_fo(state, msc, d0=d0_ii).closure
        cert2 = ellipticity_certificate(state, L2, d0)
        worst_given = min(worst_given, cert2.min_excess_eig / np.linalg.norm(L2.L, 2))
    elapsed = time.perf_counter() - start
    ok = worst_free >= -1e-9 and worst_given >= -1e-9 and hyp_ok
    return ok, f"min relative slack {worst_free:.2e} / {worst_given:.2e} (tol -1e-9)", elapsed


def criterion_6():
    """Sign results: counterexample, posdiag agreement, Fickian spectra, identical coefficients, det monotonicity."""
    rng = np.random.default_rng(SEED + 6)
    start = time.perf_counter()
    failures = []

    cx = friction_sign_counterexample(3.0, [1 / 3, 1 / 3, 1 / 3])
    f13 = cx.friction(cx.y0)[0, 2]
    if not (abs(f13 + 1.0) <= 1e-14 and psd_on_subspace(cx.tau(cx.y0), np.ones(3)).ok):
        failures.append("counterexample")

    mismatches = 0
    for k in range(500):
        n = 3 + k % 4
        state = random_state(rng, n)
        S = np.triu(rng.uniform(-1.0, 3.0, (n, n)), 1)
        S = S + S.T
        A_diag = -(S @ state.y)
        closure = OnsagerClosure(structured_onsager(state, A_diag, S), A_diag, S)
        d = fo_to_novel(state, closure).closure.d
        mismatches += int(not np.array_equal(posdiag_condition(state, S).ok, d >= 0))
    if mismatches:
        failures.append(f"posdiag {mismatches}/500")

    max_imag = 0.0
    min_real = np.inf
    for k in range(500):
        n = 2 + k % 5
        state = random_state(rng, n)
        if k % 2:
            L = ms_onsager(state, random_friction(rng, n))
        else:
            L = novel_onsager_matrix(state, NovelClosure(rng.uniform(0.1, 10.0, n), np.zeros((n, n))))
        D = fickian_ideal_isobaric(state, L).Dfick
        rep = spectrum(D)
        scale = np.abs(rep.eigenvalues).max()
        max_imag = max(max_imag, rep.max_imag / scale)
        min_real = min(min_real, rep.min_real / scale)
    if max_imag > 1e-8 or min_real < -1e-9:
        failures.append("spectra")

    ident = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 7))
        dbar = rng.uniform(0.1, 10.0)
        state = make_state(300.0, rng.uniform(0.5, 2.0), np.ones(n), rng.dirichlet(np.ones(n)))
        D = fickian_ideal_isobaric(state, ms_onsager(state, np.full((n, n), 1.0 / dbar))).Dfick
        ident = max(ident, float(np.max(np.abs(D - dbar * (np.eye(n) - state.x[:, None])))) / dbar)
    if ident > 1e-12:
        failures.append("identical coefficients")

    det_fail = 0
    for k in range(500):
        n = 2 + k % 5
        B = random_psd(rng, n)
        det_fail += int(not det_monotone(B + random_psd(rng, n, rank=int(rng.integers(1, n + 1))), B))
    if det_fail:
        failures.append(f"det monotone {det_fail}/500")

    elapsed = time.perf_counter() - start
    detail = (f"f13(y0)={f13:+.3f}, posdiag mismatches {mismatches}, spectra |Im| {max_imag:.1e} "
              f"min Re {min_real:.1e}, identical {ident:.1e}, det failures {det_fail}")
    return not failures, detail, elapsed


def criterion_7():
    """Ternary no-flux relaxation: invariants over 10^4 steps, MS versus projected image over 10^3."""
    start = time.perf_counter()
    sc = loads((SCENARIOS / "ternary_relaxation.json").read_text())
    config = dataclasses.replace(sim_config(sc), output_every=10_000)
    state, report = run(config, n_steps=10_000)
    uniform = float(np.max(np.ptp(state.y, axis=0)))
    ok_long = (report.max_mass_drift <= 1e-12 and report.lowest_fraction > 0
               and report.worst_zeta_ratio >= -1e-12 and uniform <= 1e-8)

    short = dataclasses.replace(config, output_every=1000, dt=report.dt)
    ms_state, _ = run(short, n_steps=1000)
    img_state, _ = run(dataclasses.replace(short, closure=ProjectedImageModel(config.closure.f)), n_steps=1000)
    agree = float(np.max(np.abs(ms_state.y - img_state.y)))
    elapsed = time.perf_counter() - start
    ok = ok_long and agree <= 1e-7 and elapsed <= 60.0
    detail = (f"mass drift {report.max_mass_drift:.1e}, min y {report.lowest_fraction:.3f}, "
              f"zeta ratio {report.worst_zeta_ratio:.1e}, spread {uniform:.1e}, image gap {agree:.1e}")
    return ok, detail, elapsed


def _cli(argv):
    return cli_main([str(a) for a in argv])


def criterion_8():
    """CLI documents round-trip byte-stably; malformed input gives exit 2."""
    start = time.perf_counter()
    problems = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for src in SCENARIOS.glob("*.json"):
            shutil.copy(src, tmp / src.name)

        def fixed_point(cmd, name, extra=(), key=None):
            # re-running a command on its own output must reproduce it; for
            # convert only the closure block is stable, the report names the source form
            one, two = tmp / f"{cmd}_{name}_1.json", tmp / f"{cmd}_{name}_2.json"
            codes = (_cli([cmd, "--input", tmp / name, "--output", one, *extra]),
                     _cli([cmd, "--input", one, "--output", two, *extra]))
            if codes != (0, 0):
                problems.append(f"{cmd} {name} {extra} exit {codes}")
                return one
            first, second = one.read_bytes(), two.read_bytes()
            if key is not None:
                first, second = (dumps(json.loads(b)[key]).encode() for b in (first, second))
            if first != second:
                problems.append(f"{cmd} {name} {extra}")
            return one

        for name in ("ternary_ms.json", "quaternary_novel.json"):
            for target in ("A", "B", "C"):
                fixed_point("convert", name, ("--target", target), key="closure")
            fixed_point("check", name)
        fixed_point("darken", "binary_darken.json")
        fixed_point("darken", "quaternary_novel.json")

        # B -> A -> B recovers the friction table up to float formatting
        a_doc = fixed_point("convert", "ternary_ms.json", ("--target", "A"), key="closure")
        back = tmp / "back.json"
        _cli(["convert", "--input", a_doc, "--output", back, "--target", "B"])
        f0 = json.loads((tmp / "ternary_ms.json").read_text())["closure"]["payload"]["f"]
        if not np.allclose(json.loads(back.read_text())["closure"]["payload"]["f"], f0, rtol=1e-9):
            problems.append("convert B->A->B")

        doc = json.loads((tmp / "ternary_relaxation.json").read_text())
        doc["sim"].update(t_end=0.5, output_every=10)
        (tmp / "short.json").write_text(json.dumps(doc))
        outs = []
        for k in range(2):
            with contextlib.redirect_stdout(io.StringIO()):
                code = _cli(["simulate", "--input", tmp / "short.json", "--output", tmp / f"sim{k}"])
            files = sorted((tmp / f"sim{k}").iterdir())
            outs.append((code, [p.name for p in files], [p.read_bytes() for p in files]))
        if outs[0] != outs[1] or outs[0][0] != 0:
            problems.append("simulate")

        (tmp / "junk.json").write_text("{")
        bad = json.loads((tmp / "ternary_ms.json").read_text())
        bad["state"]["y"] = [0.5, 0.6, 0.3]
        (tmp / "bad.json").write_text(json.dumps(bad))
        with contextlib.redirect_stderr(io.StringIO()), contextlib.redirect_stdout(io.StringIO()):
            codes = [
                _cli(["check", "--input", tmp / "junk.json"]),
                _cli(["convert", "--input", tmp / "bad.json", "--target", "A"]),
                _cli(["darken", "--input", tmp / "missing.json"]),
                _cli(["simulate", "--input", tmp / "ternary_ms.json", "--output", tmp / "nosim"]),
                _cli(["convert", "--input", tmp / "ternary_ms.json", "--target", "Z"]),
            ]
        if codes != [2] * len(codes):
            problems.append(f"exit codes {codes}")
    elapsed = time.perf_counter() - start
    return not problems, "all round trips stable" if not problems else "; ".join(problems), elapsed


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


def _line(k, ok, detail, elapsed):
    return f"CRITERION {k}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f} s) {detail}"


@pytest.mark.parametrize("k", range(1, 9))
def test_criterion(k, capsys):
    ok, detail, elapsed = CRITERIA[k - 1]()
    with capsys.disabled():
        print("\n" + _line(k, ok, detail, elapsed))
    assert ok, detail


if __name__ == "__main__":
    results = [(k, *fn()) for k, fn in enumerate(CRITERIA, start=1)]
    for row in results:
        print(_line(*row))
    sys.exit(0 if all(r[1] for r in results) else 1)
