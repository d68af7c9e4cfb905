"""Command-line interface: ``mcdiff <command> --input scenario.json [options]``.

Exit codes: 0 success, 1 internal error, 2 invalid input (a JSON error object
is written to stderr), 3 failed certificate under ``--strict`` or a monitor
breach during simulation.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .closures import MaxwellStefanClosure, OnsagerClosure, ms_matrix
from .darken import (
    SelfDiffusionModel,
    darken_ms_diffusivities,
    friction_from_ms_diffusivities,
    self_diffusion_mix,
    vignes_binary,
)
from .errors import MixtureError
from .fickian import (
    fickian_ideal_isobaric,
    fickian_molefraction_form,
    friction_sign_counterexample,
    onsager_to_ms_matrix,
    posdiag_condition,
    spectrum,
    z_matrix_test,
)
from .groupinv import psd_on_subspace
from .scenario import Scenario, ScenarioError, build_closure, closure_block, dumps, loads, sim_config
from .mixture import make_state
from .simulator import InvariantBreach, run
from .transforms import (
    convert,
    ellipticity_certificate,
    flux_residual,
    form_of,
    max_ellipticity_constant,
    ms_to_fo,
    onsager_matrix,
    friction_ellipticity_constant,
)

EXIT_OK, EXIT_INTERNAL, EXIT_VALIDATION, EXIT_CERTIFICATE = 0, 1, 2, 3
ROUNDTRIP_TOL = 1e-8


class CertificateFailure(Exception):
    def __init__(self, payload):
        super().__init__("certificate failure")
        self.payload = payload


def _read_scenario(args) -> Scenario:
    if args.input is None:
        raise ScenarioError("--input is required for this command")
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {args.input}: {exc.strerror}") from None
    return loads(text)


def _emit(args, doc):
    text = dumps(doc)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _probes(args, n):
    rng = np.random.default_rng(args.seed)
    return rng.standard_normal((n, args.probes))


def _natural_psd(state, closure):
    n = state.n_species
    if isinstance(closure, OnsagerClosure):
        return "L on e-perp", psd_on_subspace(closure.L, np.ones(n))
    if isinstance(closure, MaxwellStefanClosure):
        return "tau on e-perp", psd_on_subspace(closure.tau(state), np.ones(n))
    return "D on sqrt(x)-perp", psd_on_subspace(closure.D_matrix(state), np.sqrt(state.x))


def _ellipticity_block(state, closure):
    cert = ellipticity_certificate(state, closure, 0.0)
    return {
        "form": cert.form,
        "d0_max": max_ellipticity_constant(state, closure),
        "min_excess_eig": cert.min_excess_eig,
        "ok": cert.ok,
    }


def cmd_convert(args):
    sc = _read_scenario(args)
    state = sc.state()
    source = build_closure(sc, state)
    target = args.target.upper()
    result = convert(state, source, target)
    probes = _probes(args, state.n_species)
    L_src = onsager_matrix(state, source)
    back = convert(state, result.closure, form_of(source))
    report = {
        "source_form": form_of(source),
        "target_form": target,
        "probes": args.probes,
        "seed": args.seed,
        "flux_residual": flux_residual(L_src, onsager_matrix(state, result.closure), probes),
        "roundtrip_flux_residual": flux_residual(L_src, onsager_matrix(state, back.closure), probes),
        "ellipticity": _ellipticity_block(state, result.closure),
    }
    doc = dict(sc.doc)
    doc["closure"] = closure_block(result.closure)
    doc["report"] = report
    _emit(args, doc)
    failed = not report["ellipticity"]["ok"] or report["roundtrip_flux_residual"] > ROUNDTRIP_TOL
    if args.strict and failed:
        raise CertificateFailure(report)


def cmd_check(args):
    sc = _read_scenario(args)
    state = sc.state()
    closure = build_closure(sc, state, validate_closure=False)
    n = state.n_species
    label, cert = _natural_psd(state, closure)
    L = onsager_matrix(state, closure)
    report = {
        "form": form_of(closure),
        "psd": {"matrix": label, "min_eig": cert.min_eig, "ok": cert.ok},
        "kernel_residual": float(np.linalg.norm(L @ np.ones(n)) / max(np.linalg.norm(L), 1e-300)),
        "ellipticity": _ellipticity_block(state, closure),
    }
    if isinstance(closure, MaxwellStefanClosure):
        report["z_matrix"] = z_matrix_test(ms_matrix(state.y, closure.f))
        onsager = ms_to_fo(state, closure).closure
        if np.all(closure.f[~np.eye(n, dtype=bool)] > 0):
            d0 = friction_ellipticity_constant(closure.f, state.M)
            c = ellipticity_certificate(state, onsager, d0)
            report["friction_bound"] = {"d0": d0, "min_excess_eig": c.min_excess_eig, "ok": c.ok}
    else:
        B, residual = onsager_to_ms_matrix(state, L)
        report["z_matrix"] = z_matrix_test(B)
        report["ms_matrix_identity_residual"] = residual
        onsager = convert(state, closure, "A").closure
    if n >= 3:
        pd = posdiag_condition(state, onsager.S_off)
        report["posdiag"] = {"ok": pd.ok.tolist(), "slack": pd.slack.tolist()}
    doc = dict(sc.doc)
    doc["report"] = report
    _emit(args, doc)
    failed = not cert.ok or not report.get("friction_bound", {"ok": True})["ok"]
    if args.strict and failed:
        raise CertificateFailure(report)


def cmd_darken(args):
    sc = _read_scenario(args)
    state = sc.state()
    kind = sc.closure_kind()
    payload = sc.payload()
    x = state.x
    model = None
    if kind == "darken-self-diffusion":
        model = SelfDiffusionModel(np.asarray(payload["D_dilute"], dtype=float))
        d = self_diffusion_mix(model, x)
    elif kind in ("core-diagonal", "novel"):
        d = np.asarray(payload["d"], dtype=float)
    else:
        raise ScenarioError("darken needs a core-diagonal, novel or darken-self-diffusion closure")
    table = darken_ms_diffusivities(x, d)
    block = {
        "x": x.tolist(),
        "d": d.tolist(),
        "ms_diffusivities": table.tolist(),
        "friction": friction_from_ms_diffusivities(state, table).tolist(),
    }
    if state.n_species == 2:
        if model is not None:
            end1, end2 = model.D_dilute[1, 0], model.D_dilute[0, 1]
        else:
            end1, end2 = d[1], d[0]
        block["binary"] = {
            "darken": float(x[0] * d[1] + x[1] * d[0]),
            "table": float(table[0, 1]),
            "vignes": vignes_binary(end1, end2, float(x[0])),
            "endpoint_x1_to_1": float(end1),
            "endpoint_x2_to_1": float(end2),
        }
    doc = dict(sc.doc)
    doc["darken"] = block
    _emit(args, doc)


def cmd_counterexample(args):
    params = {}
    base = None
    if args.input is not None:
        try:
            base = json.loads(Path(args.input).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read {args.input}: {exc}") from None
        if not isinstance(base, dict):
            raise ScenarioError("document must be a JSON object")
        params = base.get("counterexample", {})
    a = float(args.a if args.a is not None else params.get("a", 3.0))
    y0 = np.asarray(args.y0 if args.y0 is not None else params.get("y0", [1 / 3, 1 / 3, 1 / 3]), dtype=float)
    rho = float(params.get("rho", 1.0))
    cx = friction_sign_counterexample(a, y0, rho)
    y = cx.y0
    state = make_state(300.0, rho, [1.0, 1.0, 1.0], y)
    tau = cx.tau(y)
    cert = psd_on_subspace(tau, np.ones(3))
    onsager = ms_to_fo(state, cx.ms_closure(y)).closure
    pd = posdiag_condition(state, onsager.S_off)
    lam = np.linalg.eigvalsh(cx.A)
    block = {
        "a": a,
        "y0": y.tolist(),
        "rho": rho,
        "friction": cx.friction(y).tolist(),
        "ms_friction": cx.ms_friction(y).tolist(),
        "tau": tau.tolist(),
        "tau_min_eig": cert.min_eig,
        "tau_psd": cert.ok,
        "A_eigenvalues": lam.tolist(),
        "z_matrix": z_matrix_test(ms_matrix(y, cx.ms_friction(y))),
        "posdiag": {"ok": pd.ok.tolist(), "slack": pd.slack.tolist()},
    }
    doc = dict(base) if base is not None else {}
    doc["counterexample"] = block
    _emit(args, doc)


def cmd_fickian(args):
    sc = _read_scenario(args)
    state = sc.state()
    closure = build_closure(sc, state)
    L = onsager_matrix(state, closure)
    fm = fickian_ideal_isobaric(state, L)
    eig_report = spectrum(fm)
    mol = fickian_molefraction_form(state, closure)
    D = fm.Dfick
    report = {
        "Dfick": D.tolist(),
        "D_molefraction": mol.Dfick.tolist(),
        "eigenvalues_real": eig_report.eigenvalues.real.tolist(),
        "max_imag": eig_report.max_imag,
        "min_real": eig_report.min_real,
        "spectrum_ok": eig_report.ok,
        "left_null_residual": float(np.linalg.norm(state.M @ D) / (np.linalg.norm(state.M) * np.linalg.norm(D))),
        "asymmetry": float(np.linalg.norm(D - D.T) / np.linalg.norm(D)),
    }
    doc = dict(sc.doc)
    doc["fickian"] = report
    _emit(args, doc)
    if args.strict and not eig_report.ok:
        raise CertificateFailure(report)


def _fmt(v) -> str:
    return repr(float(v))


def cmd_simulate(args):
    sc = _read_scenario(args)
    config = sim_config(sc)
    out_dir = Path(args.output or "simulation")
    out_dir.mkdir(parents=True, exist_ok=True)
    state, report = run(config)
    n = len(config.M)
    monitor = out_dir / "monitor.csv"
    with monitor.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "min_fraction"] + [f"mass_{i + 1}" for i in range(n)] + ["zeta_total"])
        for t, mf, mass, zeta in zip(report.t, report.min_fraction, report.mass, report.zeta_total):
            w.writerow([_fmt(t), _fmt(mf)] + [_fmt(m) for m in mass] + [_fmt(zeta)])
    files = [monitor.name]
    z = config.centers
    for k, (t, y) in enumerate(report.profiles):
        path = out_dir / f"profile_{k:05d}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["z"] + [f"y_{i + 1}" for i in range(n)])
            for zc, row in zip(z, y):
                w.writerow([_fmt(zc)] + [_fmt(v) for v in row])
        files.append(path.name)
    summary = {
        "steps": report.steps,
        "dt": report.dt,
        "t_final": state.t,
        "max_mass_drift": report.max_mass_drift,
        "lowest_fraction": report.lowest_fraction,
        "worst_zeta_ratio": report.worst_zeta_ratio,
        "files": files,
    }
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")


COMMANDS = {
    "convert": cmd_convert,
    "check": cmd_check,
    "darken": cmd_darken,
    "counterexample": cmd_counterexample,
    "fickian": cmd_fickian,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcdiff", description="Multicomponent diffusion closures.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", metavar="PATH")
        p.add_argument("--output", metavar="PATH")
        p.add_argument("--strict", action="store_true", help="exit 3 when a certificate fails")
        p.add_argument("--seed", type=int, default=0, help="seed for random gradient probes")
        p.add_argument("--probes", type=int, default=20, help="number of random gradient probes")
        if name == "convert":
            p.add_argument("--target", choices=["A", "B", "C", "a", "b", "c"], required=True)
        if name == "counterexample":
            p.add_argument("--a", type=float)
            p.add_argument("--y0", type=float, nargs=3)
    return parser


def _error(kind, message):
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    if args.seed < 0 or args.probes < 1:
        _error("InvalidParameter", "--seed must be >= 0 and --probes >= 1")
        return EXIT_VALIDATION
    try:
        COMMANDS[args.command](args)
    except CertificateFailure:
        return EXIT_CERTIFICATE
    except InvariantBreach as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_CERTIFICATE
    except MixtureError as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        _error("InternalError", f"{type(exc).__name__}: {exc}")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
