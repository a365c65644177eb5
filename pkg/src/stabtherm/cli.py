"""stabtherm command line: build models, thermalize, verify, compile.

Exit codes: 0 success, 2 config error, 3 capacity error, 4 numerical failure.
Energies are in units of the coupling lambda, temperatures as beta*lambda.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    CapacityError,
    ConfigError,
    ModelError,
    NumericalError,
    ParameterError,
    ScheduleError,
)
from .lindblad import DensityMatrix, evolve, gibbs_state, steady_states
from .pauli import PauliString
from .serialize import (
    config_hash,
    csv_text,
    hamiltonian_to_json,
    lattice_to_json,
    state_to_json,
    write_csv,
)
from .toric import (
    StabilizerHamiltonian,
    ToricLattice,
    all_excitation_ops,
    build_torus,
    eigenoperator_decomposition,
    fourier_form_check,
    loop_operators,
    single_vertex_model,
    single_stabilizer_model,
    toric_hamiltonian,
    vertex_string,
    plaquette_string,
)


# ---------------------------------------------------------------------------
# model construction helpers
# ---------------------------------------------------------------------------

def _build_model(spec: dict) -> tuple[StabilizerHamiltonian, ToricLattice | None]:
    kind = spec.get("type")
    if kind == "toric":
        L = int(spec.get("L", 2))
        lam_e = float(spec.get("lambda_e", 1.0))
        lam_m = float(spec.get("lambda_m", 1.0))
        lat = build_torus(L)
        return toric_hamiltonian(lat, lam_e, lam_m), lat
    if kind == "mini-vertex":
        return single_vertex_model(float(spec.get("lam", 1.0))), None
    if kind == "single-stabilizer":
        return single_stabilizer_model(spec["letters"], float(spec.get("lam", 1.0))), None
    raise ConfigError(f"unknown model type {spec.get('type')!r}")


def _model_spec_from_args(args) -> dict:
    if args.model == "toric":
        return {"type": "toric", "L": args.L,
                "lambda_e": args.lambda_e, "lambda_m": args.lambda_m}
    if args.model == "mini-vertex":
        return {"type": "mini-vertex", "lam": args.lambda_e}
    raise ConfigError(f"unknown model {args.model!r}")


def _full_decompositions(H: StabilizerHamiltonian):
    return [eigenoperator_decomposition(H, j, a)
            for j in range(H.n_qubits) for a in ("x", "z")]


def _observable_values(name: str, H, lat, rho: np.ndarray, beta: float) -> float:
    if name in ("A_v", "B_p") and lat is None:
        raise ConfigError(f"observable {name!r} requires a toric model")
    if name == "energy":
        return float(np.real(np.trace(H.to_dense() @ rho)))
    if name == "A_v":
        vals = [float(np.real(np.trace(vertex_string(lat, v).to_dense() @ rho)))
                for v in range(len(lat.vertices))]
        return float(np.mean(vals))
    if name == "B_p":
        vals = [float(np.real(np.trace(plaquette_string(lat, p).to_dense() @ rho)))
                for p in range(len(lat.plaquettes))]
        return float(np.mean(vals))
    if name == "gibbs_distance":
        from .lindblad import trace_distance

        return trace_distance(rho, gibbs_state(H.to_dense(), beta).mat)
    raise ConfigError(f"unknown observable {name!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_build_model(args) -> int:
    lat = build_torus(args.L)
    H = toric_hamiltonian(lat, args.lambda_e, args.lambda_m)
    doc = {"lattice": lattice_to_json(lat), "hamiltonian": hamiltonian_to_json(H)}
    text = json.dumps(doc, indent=2)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}")
    else:
        print(text)
    return 0


def cmd_decompose(args) -> int:
    lat = build_torus(args.L)
    H = toric_hamiltonian(lat, args.lambda_e, args.lambda_m)
    dec = eigenoperator_decomposition(H, args.site, args.axis)
    print(f"sigma^{args.axis}_{args.site} on toric L={args.L}: "
          f"{dec.m_components} Fourier components")
    print(f"{'eps_k':>12}  {'n_terms(a)':>10}  {'|coeffs|(a)':>12}  {'zero-mode':>9}")
    for c in dec.components:
        print(f"{c.epsilon:12.6g}  {len(c.lowering):10d}  "
              f"{c.lowering.norm_coeffs():12.6g}  {str(c.is_zero_mode):>9}")
    return 0


def cmd_thermalize(args) -> int:
    from .bath import davies_reduction

    model_spec = _model_spec_from_args(args)
    H, lat = _build_model(model_spec)
    gen = davies_reduction(H, _full_decompositions(H), args.beta, args.gamma0)
    dim = 1 << H.n_qubits
    rho = DensityMatrix.maximally_mixed(dim)
    times = np.linspace(0.0, args.t, args.points)
    names = args.observables.split(",") if args.observables else ["energy"]
    rows = []
    for i, t in enumerate(times):
        if i > 0:
            rho = evolve(gen, rho, times[i] - times[i - 1], method=args.method)
        rows.append([t] + [_observable_values(n, H, lat, rho.mat, args.beta)
                           for n in names])
    header = ["t"] + names
    if args.output:
        write_csv(args.output, header, rows)
        print(f"wrote {args.output}")
    else:
        print(csv_text(header, rows), end="")
    return 0


def cmd_steady_state(args) -> int:
    from .bath import davies_reduction

    model_spec = _model_spec_from_args(args)
    H, lat = _build_model(model_spec)
    gen = davies_reduction(H, _full_decompositions(H), args.beta, args.gamma0)
    ss = steady_states(gen)
    gs = gibbs_state(H.to_dense(), args.beta)
    out = {
        "kernel_dim": ss.kernel_dim,
        "unique": ss.unique,
        "kernel_residual": ss.residual,
        "trace_distance_to_gibbs": ss.states[0].distance(gs) if ss.states else None,
    }
    print(json.dumps(out, indent=2))
    if args.output:
        doc = dict(out)
        if ss.states:
            doc["state"] = state_to_json(ss.states[0].mat)
        Path(args.output).write_text(json.dumps(doc))
        print(f"wrote {args.output}")
    return 0


def cmd_verify(args) -> int:
    from .bath import davies_reduction
    from .verify import check_fixed_point_conditions, ergodicity_check

    if args.what != "appendix":
        raise ConfigError(f"unknown verification target {args.what!r}")
    if args.model != "toric":
        raise ConfigError("appendix verification runs on the toric model")
    lat = build_torus(args.L)
    H = toric_hamiltonian(lat, args.lambda_e, args.lambda_m)
    ops = all_excitation_ops(lat, H)
    gs = gibbs_state(H.to_dense(), args.beta)
    report = check_fixed_point_conditions(gs, ops, args.beta)
    summary = {
        "max_lowering": report.max_residual("lowering"),
        "max_raising": report.max_residual("raising"),
        "max_translation": report.max_residual("translation"),
    }
    doc = report.to_json()
    if args.ergodicity:
        gen = davies_reduction(H, _full_decompositions(H), args.beta, args.gamma0)
        erg = ergodicity_check(H, [j.op for j in gen.jumps],
                               loop_ops=loop_operators(lat))
        ss = steady_states(gen)
        doc["ergodicity"] = erg.to_json()
        doc["kernel_dim"] = ss.kernel_dim
        doc["trace_distance_to_gibbs"] = ss.states[0].distance(gs) if ss.states else None
        doc["ergodic"] = erg.ergodic
        summary["ergodic"] = erg.ergodic
        summary["kernel_dim"] = ss.kernel_dim
    print("fixed-point residuals on gibbs(H, beta):")
    for k, v in summary.items():
        print(f"  {k}: {v}")
    if args.output:
        Path(args.output).write_text(json.dumps(doc, indent=2))
        print(f"wrote {args.output}")
    return 0


def cmd_compile(args) -> int:
    from .circuits import compile_pauli_exponential

    p = PauliString.from_letters(args.pauli)
    sched = compile_pauli_exponential(p, args.phi)
    print(f"compiled exp(-i*{args.phi}*{args.pauli}): {len(sched)} gates "
          f"on {sched.n_qubits} qubits")
    if args.emit_schedule:
        Path(args.emit_schedule).write_text(sched.to_jsonl())
        print(f"wrote {args.emit_schedule}")
    return 0


def cmd_simulate_schedule(args) -> int:
    from .circuits import GateSchedule, simulate_schedule

    sched = GateSchedule.from_jsonl(Path(args.schedule).read_text())
    dim = 1 << sched.n_qubits
    if args.initial == "zero":
        psi = np.zeros(dim)
        psi[0] = 1.0
        rho0 = DensityMatrix.pure(psi)
    elif args.initial == "plus":
        rho0 = DensityMatrix.pure(np.ones(dim) / np.sqrt(dim))
    elif args.initial == "mixed":
        rho0 = DensityMatrix.maximally_mixed(dim)
    else:
        raise ConfigError(f"unknown initial state {args.initial!r}")
    out = simulate_schedule(sched, rho0)
    purity = float(np.real(np.trace(out.mat @ out.mat)))
    print(f"simulated {len(sched)} gates on {sched.n_qubits} qubits; "
          f"purity {purity:.6f}")
    if args.output:
        Path(args.output).write_text(json.dumps(state_to_json(out.mat)))
        print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# config-driven experiments
# ---------------------------------------------------------------------------

_EXPERIMENTS = ("gibbs-sweep", "verify-appendix", "steady-state", "thermalize")


def validate_config(cfg: dict) -> None:
    """Schema validation (the shipped JSON schema, enforced in code)."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    exp = cfg.get("experiment")
    if exp not in _EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {_EXPERIMENTS}, got {exp!r}")
    model = cfg.get("model")
    if not isinstance(model, dict) or "type" not in model:
        raise ConfigError("config.model must be an object with a 'type'")
    if model["type"] not in ("toric", "mini-vertex", "single-stabilizer"):
        raise ConfigError(f"unknown model type {model['type']!r}")
    for key in ("L",):
        if key in model and (not isinstance(model[key], int) or model[key] < 2):
            raise ConfigError("model.L must be an integer >= 2")
    for key in ("lambda_e", "lambda_m", "lam"):
        if key in model and not (isinstance(model[key], (int, float)) and model[key] > 0):
            raise ConfigError(f"model.{key} must be positive")
    dyn = cfg.get("dynamics", {})
    if not isinstance(dyn, dict):
        raise ConfigError("config.dynamics must be an object")
    for key in ("beta", "gamma0", "t"):
        if key in dyn and not (isinstance(dyn[key], (int, float)) and dyn[key] >= 0):
            raise ConfigError(f"dynamics.{key} must be a nonnegative number")
    if "beta_grid" in cfg:
        grid = cfg["beta_grid"]
        if (not isinstance(grid, list) or not grid
                or not all(isinstance(b, (int, float)) and b >= 0 for b in grid)):
            raise ConfigError("beta_grid must be a nonempty list of nonnegative numbers")
    obs = cfg.get("observables", [])
    if not isinstance(obs, list) or not all(isinstance(o, str) for o in obs):
        raise ConfigError("observables must be a list of names")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")


def cmd_run(args) -> int:
    cfg = json.loads(Path(args.config).read_text())
    validate_config(cfg)
    h = config_hash(cfg)
    outdir = Path(cfg.get("output_dir", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    result = {"config_hash": h, "stabtherm_version": __version__, "config": cfg}

    H, lat = _build_model(cfg["model"])
    dyn = cfg.get("dynamics", {})
    beta = float(dyn.get("beta", 1.0))
    observables = cfg.get("observables", [])
    exp = cfg["experiment"]

    if exp == "gibbs-sweep":
        grid = [float(b) for b in cfg.get("beta_grid", [beta])]
        rows = []
        for b in grid:
            rho = gibbs_state(H.to_dense(), b).mat
            rows.append([b] + [_observable_values(n, H, lat, rho, b) for n in observables])
        csv_path = outdir / "gibbs_sweep.csv"
        write_csv(csv_path, ["beta"] + observables, rows)
        result["csv"] = str(csv_path)
        result["rows"] = rows
    elif exp == "verify-appendix":
        from .verify import check_fixed_point_conditions

        ops = all_excitation_ops(lat, H)
        gs = gibbs_state(H.to_dense(), beta)
        report = check_fixed_point_conditions(gs, ops, beta)
        result["fixed_point_report"] = report.to_json()
        result["max_residual"] = report.max_residual()
    elif exp == "steady-state":
        from .bath import davies_reduction

        gen = davies_reduction(H, _full_decompositions(H), beta,
                               float(dyn.get("gamma0", 0.5)))
        ss = steady_states(gen)
        result["kernel_dim"] = ss.kernel_dim
        result["kernel_residual"] = ss.residual
        if ss.states:
            rho = ss.states[0].mat
            result["observables"] = {
                n: _observable_values(n, H, lat, rho, beta) for n in observables
            }
    elif exp == "thermalize":
        from .bath import davies_reduction

        gen = davies_reduction(H, _full_decompositions(H), beta,
                               float(dyn.get("gamma0", 0.5)))
        t_total = float(dyn.get("t", 1.0))
        n_points = int(dyn.get("points", 11))
        rho = DensityMatrix.maximally_mixed(1 << H.n_qubits)
        times = np.linspace(0.0, t_total, n_points)
        rows = []
        for i, t in enumerate(times):
            if i > 0:
                rho = evolve(gen, rho, times[i] - times[i - 1],
                             method=dyn.get("method", "auto"))
            rows.append([t] + [_observable_values(n, H, lat, rho.mat, beta)
                               for n in observables])
        csv_path = outdir / "thermalize.csv"
        write_csv(csv_path, ["t"] + observables, rows)
        result["csv"] = str(csv_path)

    # fitted quantities recorded for lineage whenever the full op set exists
    if lat is not None and H.n_qubits <= 10:
        ops = all_excitation_ops(lat, H)
        c, d, res = fourier_form_check(H, ops)
        result["fourier_form"] = {"prefactor": c, "constant": d, "residual": res}

    out_path = outdir / "result.json"
    out_path.write_text(json.dumps(result, indent=2, default=float))
    print(f"wrote {out_path} (config {h[:12]})")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stabtherm",
        description="Stabilizer-Hamiltonian thermalization toolkit "
                    "(energies in units of lambda, hbar = 1).",
    )
    ap.add_argument("--version", action="version", version=f"stabtherm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_model_args(p):
        p.add_argument("--model", default="toric", choices=["toric", "mini-vertex"])
        p.add_argument("--L", type=int, default=2)
        p.add_argument("--lambda-e", dest="lambda_e", type=float, default=1.0)
        p.add_argument("--lambda-m", dest="lambda_m", type=float, default=1.0)

    p = sub.add_parser("build-model", help="emit lattice + Hamiltonian JSON")
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--lambda-e", dest="lambda_e", type=float, default=1.0)
    p.add_argument("--lambda-m", dest="lambda_m", type=float, default=1.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build_model)

    p = sub.add_parser("decompose", help="Fourier components of a local Pauli")
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--lambda-e", dest="lambda_e", type=float, default=1.0)
    p.add_argument("--lambda-m", dest="lambda_m", type=float, default=1.0)
    p.add_argument("--site", type=int, required=True)
    p.add_argument("--axis", choices=["x", "y", "z"], required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("thermalize", help="evolve under the system-only thermal generator")
    add_model_args(p)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma0", type=float, default=0.5)
    p.add_argument("--t", type=float, default=10.0)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--method", default="auto", choices=["auto", "rk4", "expm", "krylov"])
    p.add_argument("--observables", default="energy,gibbs_distance")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_thermalize)

    p = sub.add_parser("steady-state", help="kernel of the thermal generator")
    add_model_args(p)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma0", type=float, default=0.5)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("verify", help="numerical Appendix checks")
    p.add_argument("what", choices=["appendix"])
    p.add_argument("--model", default="toric", choices=["toric"])
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--lambda-e", dest="lambda_e", type=float, default=1.0)
    p.add_argument("--lambda-m", dest="lambda_m", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma0", type=float, default=0.5)
    p.add_argument("--ergodicity", action="store_true",
                   help="also run the commutant-based ergodicity check")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compile", help="compile exp(-i phi P) to gates")
    p.add_argument("--pauli", required=True, help="letter string, e.g. ZZZZ")
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--emit-schedule", dest="emit_schedule")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate-schedule", help="run a schedule file exactly")
    p.add_argument("schedule")
    p.add_argument("--initial", default="plus", choices=["plus", "zero", "mixed"])
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate_schedule)

    p = sub.add_parser("run", help="run a JSON experiment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, ModelError, ScheduleError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except json.JSONDecodeError as exc:
        print(f"config error: bad JSON ({exc})", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
