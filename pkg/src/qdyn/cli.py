"""Command-line runner for the toolkit's tests and demos.

Every command writes one report: the toolkit version, the resolved
configuration, a pass/fail verdict, the results and the wall-clock time.
Exit status is 0 on pass, 1 on a failed verdict or numerical check, 2 on bad
input. Identical arguments give byte-identical reports apart from the
wall-clock line.
"""
from __future__ import annotations

import argparse
import enum
import json
import math
import os
import sys
import tempfile
import time
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__, matcore
from .causal import DEFAULT_DELTA, CollapseModel, collapse_locality_experiment
from .errors import IntegrationMismatchError, IsometryError, QdynError
from .lindblad import LindbladGenerator, amplitude_damping, cptp_certificate, dephasing, propagate, purity
from .maps import (LinearMap, compare_positivity_notions, density_preservation_test, depolarizing_map,
                   identity_map, is_completely_positive, is_positive_sampled, is_trace_preserving,
                   transpose_map, unitary_map)
from .nonlinear import (eq8_evolution, eq8_nonlinearity_witness, first_moment, from_linear,
                        jordan_evolved_reduced, jordan_states, linearity_defect, mean_field_rotation,
                        power_map, squared_expectation, bilinear_observable, weinberg_expectation)
from .sampling import haar_state, haar_unitary, random_density, trial_rngs
from .states import (CompositeState, Ensemble, eigen_ensemble, hjw_basis, match_ensembles, mix, purify,
                     random_ensemble, steer)

SIG_DIGITS = 12
NUMERICAL_FAILURES = (IntegrationMismatchError, IsometryError)

_QUBIT_BASES = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Y": np.array([[1, 1j], [1, -1j]], dtype=complex) / np.sqrt(2),
}
_NAMED_UNITARIES = {"X": matcore.pauli("X"), "Y": matcore.pauli("Y"), "Z": matcore.pauli("Z"),
                    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)}


class InputError(QdynError):
    """Command arguments that cannot be resolved."""


# ---------------------------------------------------------------- input helpers

def _check_dim(d: int) -> int:
    cap = matcore.max_dim()
    if d < 1 or d > cap:
        raise InputError(f"dimension {d} outside 1..{cap} (QDYN_MAX_DIM)")
    return d


def _json_arg(value: str) -> Any:
    """Inline JSON if the argument looks like it, otherwise a path to a JSON file."""
    text = value.strip()
    try:
        if text[:1] in "[{":
            return json.loads(text)
        with open(value, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {value!r}: {exc}") from exc


def _matrix_arg(value: str) -> np.ndarray:
    M = matcore.from_literal(_json_arg(value))
    _check_dim(M.shape[0])
    return M


def _ensemble_arg(value: str) -> Ensemble:
    E = Ensemble.from_dict(_json_arg(value))
    _check_dim(E.dim)
    return E


def _state_arg(value: str) -> CompositeState:
    data = _json_arg(value)
    if isinstance(data, dict):
        v = matcore.from_literal(data["vector"], vector=True)
        dims = tuple(int(d) for d in data["dims"])
    else:
        v = matcore.from_literal(data, vector=True)
        n = math.isqrt(v.size)
        if n * n != v.size:
            raise InputError("give {'vector': ..., 'dims': [dA, dB]} for a non-square composite")
        dims = (n, n)
    for d in dims:
        _check_dim(d)
    return CompositeState(v, dims)


def _basis_arg(value: str) -> np.ndarray:
    if value.upper() in _QUBIT_BASES:
        return _QUBIT_BASES[value.upper()]
    return np.array([matcore.from_literal(row, vector=True) for row in _json_arg(value)])


def _records_arg(value: str) -> np.ndarray:
    return np.array([float(x) for x in value.split(",")])


def _times_arg(value: str) -> List[float]:
    return [float(x) for x in value.split(",")]


def resolve_map(spec: str, dim: int, seed: int):
    """Named map or map file; linear maps come back as :class:`LinearMap`."""
    name, _, param = spec.partition(":")
    try:
        if name == "identity":
            return identity_map(dim)
        if name == "transpose":
            return transpose_map(dim)
        if name == "depolarizing":
            return depolarizing_map(dim, float(param))
        if name == "unitary":
            if param == "random":
                return unitary_map(haar_unitary(dim, np.random.default_rng(seed)))
            if param.upper() not in _NAMED_UNITARIES:
                raise InputError(f"unknown unitary {param!r}")
            if dim != 2:
                raise InputError(f"unitary:{param} acts on a qubit, not dim {dim}")
            return unitary_map(_NAMED_UNITARIES[param.upper()])
        if name == "power":
            k = int(param)
            if k < 2:
                raise InputError("power maps need k >= 2")
            return power_map(k, dim)
        if name == "mean-field":
            if dim != 2:
                raise InputError("mean-field acts on a qubit")
            return mean_field_rotation(matcore.pauli("Z"), matcore.pauli("X"), float(param))
    except ValueError as exc:
        if isinstance(exc, QdynError):
            raise
        raise InputError(f"bad parameter in map {spec!r}") from exc
    M = LinearMap.from_dict(_json_arg(spec))
    if M.dim != dim:
        raise InputError(f"map file has dim {M.dim} but --dim is {dim}")
    return M


def resolve_generator(spec: str) -> LindbladGenerator:
    name, _, param = spec.partition(":")
    if name in ("damping", "dephasing") and param:
        values = [float(x) for x in param.split(":")]
        return amplitude_damping(*values) if name == "damping" else dephasing(*values)
    G = LindbladGenerator.from_dict(_json_arg(spec))
    _check_dim(G.dim)
    return G


def _default_rho(dim: int, seed: int) -> np.ndarray:
    return random_density(dim, np.random.default_rng([seed, 1]))


# ---------------------------------------------------------------- report output

def clean(obj: Any) -> Any:
    """JSON-ready copy with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if np.all(obj.imag == 0):
                return clean(obj.real.tolist())
            return clean(matcore.to_literal(obj) if obj.ndim == 2 else [[z.real, z.imag] for z in obj])
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        x = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    return obj


def _text_lines(obj: Any, indent: int = 0) -> List[str]:
    pad = "  " * indent
    lines = []
    for key, value in obj.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_text_lines(value, indent + 1))
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            lines.append(f"{pad}{key}:")
            for item in value:
                sub = _text_lines(item, indent + 2)
                lines.append(f"{pad}  - " + sub[0].lstrip())
                lines.extend(sub[1:])
        else:
            lines.append(f"{pad}{key}: {json.dumps(value)}")
    return lines


def render(report: Dict[str, Any], fmt: str) -> str:
    if fmt == "structured":
        return json.dumps(report, indent=2) + "\n"
    return "\n".join(_text_lines(report)) + "\n"


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qdyn-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- commands

def _linear_only(M, command: str) -> LinearMap:
    if not isinstance(M, LinearMap):
        raise InputError(f"{command} needs a linear map, got {M.name}")
    return M


def cmd_check_map(args) -> tuple:
    M = _linear_only(resolve_map(args.map, args.dim, args.seed), "check-map")
    tol = args.tolerance
    tp = is_trace_preserving(M, tol)
    cp = is_completely_positive(M, tol)
    pos = is_positive_sampled(M, args.trials, args.seed, tol)
    results = {
        "trace_preserving": {"holds": tp.holds, "defect": tp.defect},
        "completely_positive": {"holds": cp.holds, "min_choi_eigenvalue": cp.min_eigenvalue,
                                "tolerance": cp.tolerance},
        "positive": {"status": pos.status, "min_output_eigenvalue": pos.min_eigenvalue, "trials": pos.trials,
                     "witness": pos.witness},
    }
    return tp.holds and cp.holds, results


def cmd_extend_test(args) -> tuple:
    M = _linear_only(resolve_map(args.map, args.dim, args.seed), "extend-test")
    e = _check_dim(args.dim if args.dim_prime is None else args.dim_prime)
    tol = args.tolerance
    rep = density_preservation_test(M, e, args.trials, args.seed, tol)
    both = compare_positivity_notions(M, e, args.trials, args.seed)
    results = {
        "dim_prime": e,
        "density_preserving": rep.holds,
        "trials_run": rep.trials,
        "min_output_eigenvalue": rep.min_eigenvalue,
        "problems": list(rep.problems),
        "witness": rep.witness,
        "completely_positive": both["completely_positive"],
        "min_choi_eigenvalue": both["min_choi_eigenvalue"],
    }
    return rep.holds, results


def _nonlinear_or_lifted(spec: str, dim: int, seed: int):
    M = resolve_map(spec, dim, seed)
    return from_linear(M) if isinstance(M, LinearMap) else M


def cmd_signal_test(args) -> tuple:
    M = _nonlinear_or_lifted(args.map, args.dim, args.seed)
    rho = _default_rho(args.dim, args.seed) if args.rho is None else _matrix_arg(args.rho)
    if rho.shape[0] != args.dim:
        raise InputError(f"rho has dim {rho.shape[0]} but --dim is {args.dim}")
    tol = args.tolerance
    rep = linearity_defect(M, rho, args.pairs, args.seed)
    E, F = rep.witness
    results = {
        "rho": rho,
        "defect": rep.defect,
        "ensemble_defect": rep.ensemble_defect,
        "direct_defect": rep.direct_defect,
        "witness": {"first": E.to_dict(), "second": F.to_dict()},
        "signalling_possible": rep.defect > tol,
    }
    return rep.defect <= tol, results


def cmd_jordan_test(args) -> tuple:
    M = _nonlinear_or_lifted(args.map, args.dim, args.seed)
    rng = np.random.default_rng([args.seed, 2])
    rho = _default_rho(args.dim, args.seed) if args.rho is None else _matrix_arg(args.rho)
    if args.ensemble is None:
        E = random_ensemble(rho, len(eigen_ensemble(rho)) + 1, rng)
    else:
        E = _ensemble_arg(args.ensemble)
    second = None if args.second is None else _ensemble_arg(args.second)
    s = np.full(len(E), 1.0 / len(E)) if args.records is None else _records_arg(args.records)
    tol = args.tolerance
    Pi_bar, Pi = jordan_states(E, rho, s)
    r = s.size
    reduced = [matcore.trace_distance(matcore.partial_trace(X, (rho.shape[0], r), "B"), rho) for X in (Pi_bar, Pi)]
    res = jordan_evolved_reduced(M, E, rho, s, second)
    results = {
        "rho": rho,
        "ensemble": E.to_dict(),
        "records": s,
        "reduced_state_error": {"correlated": reduced[0], "uncorrelated": reduced[1]},
        "evolved_correlated": res.rho_bar,
        "evolved_uncorrelated": res.rho,
        "distance": res.distance,
    }
    return res.distance <= tol and max(reduced) <= 1e-10, results


def cmd_eq8_demo(args) -> tuple:
    tol = args.tolerance
    worst = 0.0
    for rng in trial_rngs(args.seed, args.samples):
        dA, dB = (int(x) for x in rng.integers(2, 5, size=2))
        psi = CompositeState(haar_state(dA * dB, rng), (dA, dB))
        out = eq8_evolution(psi, rng.uniform(0.1, 10.0), rng.uniform(0.0, 5.0))
        worst = max(worst, matcore.trace_distance(out.reduced(0), psi.reduced(0)))
    psi1 = CompositeState([1, 0, 0, 0], (2, 2))
    psi2 = CompositeState([0, 0, 0, 1], (2, 2))
    c = 1 / np.sqrt(2)
    witness = eq8_nonlinearity_witness(args.theta, args.t, psi1, psi2, c, c)
    results = {
        "samples": args.samples,
        "max_reduced_state_change": worst,
        "fixture": "|00>, |11>, a = b = 1/sqrt(2)",
        "nonlinearity_witness": witness,
    }
    return worst <= tol and witness > tol, results


def cmd_hjw_steer(args) -> tuple:
    rng = np.random.default_rng([args.seed, 3])
    rho = _default_rho(args.dim, args.seed) if args.rho is None else _matrix_arg(args.rho)
    if args.ensemble is None:
        size = len(eigen_ensemble(rho)) + 2 if args.size is None else args.size
        E = random_ensemble(rho, size, rng)
    else:
        E = _ensemble_arg(args.ensemble)
    tol = args.tolerance
    built = hjw_basis(purify(rho), E)
    F = steer(built.state, built.basis)
    match = match_ensembles(E, F)
    results = {
        "rho": rho,
        "target": E.to_dict(),
        "factor_dims": list(built.state.dims),
        "basis": built.basis,
        "steered": F.to_dict(),
        "max_weight_error": match.max_weight_error,
        "min_overlap": match.min_overlap,
        "no_signalling_defect": matcore.trace_distance(mix(F), built.state.reduced(0)),
    }
    return match.max_weight_error <= tol and match.min_overlap >= 1 - tol, results


def cmd_lindblad(args) -> tuple:
    G = resolve_generator(args.gen)
    d = G.dim
    if args.rho0 is None:
        rho0 = np.zeros((d, d), dtype=complex)
        rho0[-1, -1] = 1.0
    else:
        rho0 = _matrix_arg(args.rho0)
    times = [0.0, args.t / 2, args.t] if args.cert_times is None else _times_arg(args.cert_times)
    rho_t = propagate(G, rho0, args.t)
    cert = cptp_certificate(G, times)
    results = {
        "generator": G.to_dict(),
        "rho0": rho0,
        "rho_t": rho_t,
        "trace": np.trace(rho_t).real,
        "purity": purity(rho_t),
        "certificate": [{"t": c.t, "trace_defect": c.trace_defect, "min_choi_eigenvalue": c.min_choi_eigenvalue,
                         "passed": c.passed} for c in cert],
    }
    return all(c.passed for c in cert), results


def cmd_weinberg_demo(args) -> tuple:
    A = _NAMED_UNITARIES[args.observable] if args.observable in ("X", "Y", "Z") else _matrix_arg(args.observable)
    tol = args.tolerance
    if A.shape[0] != 2:
        raise InputError("the demo distributions are on a qubit")
    D1 = Ensemble([0.5, 0.5], np.eye(2))
    D2 = Ensemble([0.5, 0.5], _QUBIT_BASES["X"])
    f, g = squared_expectation(A), bilinear_observable(A)
    v1, v2 = weinberg_expectation(D1, f), weinberg_expectation(D2, f)
    gap = matcore.trace_distance(first_moment(D1), first_moment(D2))
    results = {
        "first_moment_D1": first_moment(D1),
        "first_moment_D2": first_moment(D2),
        "first_moment_distance": gap,
        "squared_expectation": {"D1": v1, "D2": v2},
        "bilinear_expectation": {"D1": weinberg_expectation(D1, g), "D2": weinberg_expectation(D2, g)},
        "separation": abs(v1 - v2),
    }
    return gap <= tol and abs(v1 - v2) > tol, results


def cmd_collapse_locality(args) -> tuple:
    psi = CompositeState(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2)) if args.state is None else _state_arg(args.state)
    model = CollapseModel(args.mode)
    rep = collapse_locality_experiment(args.delta, psi, _basis_arg(args.basis_ii), _basis_arg(args.basis_i),
                                       model, args.trials, args.seed, args.t_i)
    results = {
        "state": {"vector": psi.vector, "dims": list(psi.dims)},
        "joint_exact": rep.exact,
        "joint_frequencies": rep.frequencies,
        "max_sigma": rep.max_sigma,
        "within_3sigma": rep.within_3sigma,
        "proper_at": rep.proper_at,
        "proper_at_measurement": rep.proper_at_measurement,
        "meets_threshold": rep.meets_threshold,
    }
    return rep.max_sigma <= args.tolerance, results


# ---------------------------------------------------------------- parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="base seed for every random draw")
    p.add_argument("--tolerance", type=float, default=None, help="override the command's verdict tolerance")
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, tolerance):
        p = sub.add_parser(name, parents=[_common()], help=help_text)
        p.set_defaults(func=func, tolerance=tolerance)
        return p

    map_help = ("identity, transpose, depolarizing:P, unitary:X|Y|Z|H|random, power:K, mean-field:S, "
                "or a map file")

    p = add("check-map", cmd_check_map, "trace preservation, positivity and complete positivity of a map", 1e-9)
    p.add_argument("--map", required=True, help=map_help)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--trials", type=int, default=200)

    p = add("extend-test", cmd_extend_test, "does M (x) id send density operators to density operators", 1e-9)
    p.add_argument("--map", required=True, help=map_help)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--dim-prime", type=int, default=None, help="ancilla dimension (default: --dim)")
    p.add_argument("--trials", type=int, default=500)

    p = add("signal-test", cmd_signal_test, "compare evolved ensembles of one density operator", 1e-10)
    p.add_argument("--map", required=True, help=map_help)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--rho", default=None, help="matrix literal or file (default: seeded random state)")

    p = add("jordan-test", cmd_jordan_test, "correlated vs uncorrelated record construction", 1e-10)
    p.add_argument("--map", required=True, help=map_help)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--rho", default=None)
    p.add_argument("--ensemble", default=None, help="ensemble file (default: seeded random rho-ensemble)")
    p.add_argument("--second", default=None, help="ensemble for the uncorrelated branch (default: eigen)")
    p.add_argument("--records", default=None, help="comma-separated record probabilities")

    p = add("eq8-demo", cmd_eq8_demo, "Schmidt-weight phase evolution: nonlinear, trivial reduced dynamics", 1e-12)
    p.add_argument("--theta", type=float, default=math.pi)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=20)

    p = add("hjw-steer", cmd_hjw_steer, "build and check the measurement that prepares an ensemble remotely", 1e-8)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--rho", default=None)
    p.add_argument("--ensemble", default=None)
    p.add_argument("--size", type=int, default=None, help="size of the random target ensemble")

    p = add("lindblad", cmd_lindblad, "propagate a master equation and certify the propagator", 1e-9)
    p.add_argument("--gen", required=True, help="damping:GAMMA[:OMEGA], dephasing:GAMMA or a generator file")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--rho0", default=None, help="initial state (default: |d-1><d-1|)")
    p.add_argument("--cert-times", default=None, help="comma-separated times (default: 0, t/2, t)")

    p = add("weinberg-demo", cmd_weinberg_demo, "same density operator, different nonlinear expectations", 1e-12)
    p.add_argument("--observable", default="Z", help="X, Y, Z or a qubit matrix literal")

    p = add("collapse-locality", cmd_collapse_locality, "simulate causal vs instantaneous collapse", 3.0)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="separation in lightseconds")
    p.add_argument("--mode", choices=[m.value for m in CollapseModel], default="causal")
    p.add_argument("--t-i", type=float, default=0.0, help="time of the O_I measurement")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--state", default=None, help="vector literal or {'vector', 'dims'} (default: Phi+)")
    p.add_argument("--basis-i", default="Z")
    p.add_argument("--basis-ii", default="Z")

    p = sub.add_parser("run", help="run a JSON experiment descriptor")
    p.add_argument("descriptor")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("text", "structured"), default=None)
    p.set_defaults(func=None)
    return parser


_DESCRIPTOR_ALIASES = {"tI": "t-i", "basisI": "basis-i", "basisII": "basis-ii"}


def descriptor_argv(descriptor: dict) -> List[str]:
    """Translate ``{"command": ..., key: value, ...}`` into command-line arguments."""
    if not isinstance(descriptor, dict) or "command" not in descriptor:
        raise InputError("descriptor must be an object with a 'command' key")
    argv = [str(descriptor["command"])]
    for key, value in descriptor.items():
        if key == "command":
            continue
        flag = _DESCRIPTOR_ALIASES.get(key, key.replace("_", "-"))
        if isinstance(value, (dict, list)):
            value = json.dumps(value)
        argv += [f"--{flag}", str(value)]
    return argv


def _config(args) -> Dict[str, Any]:
    skip = {"func", "out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def execute(args) -> int:
    start = time.perf_counter()
    for name in ("dim", "dim_prime"):
        value = getattr(args, name, None)
        if value is not None:
            _check_dim(value)
    passed, results = args.func(args)
    report = clean({
        "command": args.command,
        "version": __version__,
        "config": _config(args),
        "verdict": "pass" if passed else "fail",
        "results": results,
    })
    report["wall_clock_seconds"] = round(time.perf_counter() - start, 6)
    text = render(report, args.format)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0 if passed else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            argv2 = descriptor_argv(_json_arg(args.descriptor))
            if args.out is not None:
                argv2 += ["--out", args.out]
            if args.format is not None:
                argv2 += ["--format", args.format]
            args = parser.parse_args(argv2)
            if args.command == "run":
                raise InputError("descriptors cannot nest 'run'")
    except SystemExit as exc:
        return int(exc.code or 0)
    except QdynError as exc:
        print(f"qdyn: input error: {exc}", file=sys.stderr)
        return 2
    try:
        return execute(args)
    except NUMERICAL_FAILURES as exc:
        print(f"qdyn: numerical check failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TypeError) as exc:
        print(f"qdyn: input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
