"""Command-line front end.

Settings are resolved as: command-line flag, then ``--config`` file (flat
``key=value`` lines, ``#`` comments), then built-in defaults.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 resource or truncation error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, dfs
from .bath import DiscreteModes
from .gates import (
    NAMED_GATES,
    CommutingCoupling,
    GateKind,
    build_commuting,
    gate_report,
    hermitian_span_rank,
    lie_closure_rank,
)
from .oracle import FockTruncation, ResourceError, TruncationError, exact_fidelity, verify_eq_t4
from .perturbation import (
    PerturbationParams,
    QuadratureSettings,
    fidelity_curve,
    fidelity_values,
    kernel,
)
from .spin import collective_j, commutator_norm

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _gates(text: str) -> tuple[GateKind, ...]:
    return tuple(GateKind.parse(x.strip()) for x in str(text).split(",") if x.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Option:
    name: str
    type: object
    default: object
    help: str
    flag: bool = False  # store_true switch


COMMON = (
    Option("gate", GateKind.parse, GateKind.CNOT, "gate active during the run"),
    Option("lambda-ratio", float, 2000.0, "Lambda = lambda / epsilon"),
    Option("nu-c", float, 1e5, "nu_c = omega_c / epsilon (continuum bath)"),
    Option("modes", DiscreteModes.parse, None, 'discrete modes "g:w,g:w" (w in units of epsilon); replaces the continuum'),
    Option("t-max", float, 10.0, "largest eps*t"),
    Option("points", int, 200, "number of grid points"),
    Option("epsilon", float, 1.0, "perturbation strength (sets the time unit)"),
    Option("tau-eps", float, 1.0, "gate time as eps*tau"),
    Option("state", dfs.parse_state, None, 'initial DFS amplitudes "a0,a1,a2,a3"'),
    Option("step", float, None, "override the quadrature panel width (physical time)"),
    Option("method", str, "auto", "quadrature path: auto, direct or narrow"),
    Option("kernel", str, "spectral", "row-sum algorithm: spectral (FFT) or direct"),
    Option("out", str, None, "output CSV path (default: stdout)"),
    Option("threads", int, 1, "worker threads"),
    Option("seed", int, 0, "seed for randomized checks"),
)

VERIFY = (
    Option("tau", float, 1.0, "gate time"),
    Option("span-rank", _bool, False, "also report the rank of the coupling span", flag=True),
    Option("draws", int, 100, "random commuting couplings to check"),
    Option("seed", int, 0, "seed for the random draws"),
)

ORACLE = (
    Option("gates", _gates, (GateKind.IDLE, GateKind.CNOT), "comma-separated gates"),
    Option("lambda", float, 0.05, "physical coupling lambda"),
    Option("modes", DiscreteModes.parse, DiscreteModes(((1.0, 1.0),)), 'bath modes "g:w,g:w" (physical units)'),
    Option("eps-ladder", _floats, (0.02, 0.01, 0.005), "comma-separated epsilon values"),
    Option("tau", float, 1.0, "gate time (physical)"),
    Option("t-max", float, 5.0, "largest physical time"),
    Option("points", int, 21, "times per comparison"),
    Option("n-max", int, 15, "Fock cutoff per mode"),
    Option("bound", float, 5e-6, "max |dF| allowed at the smallest nonzero epsilon"),
    Option("min-exponent", float, 3.5, "smallest acceptable scaling exponent"),
    Option("t4-time", float, 2.0, "time of the operator-identity subcheck"),
    Option("t4-n-max", int, 12, "Fock cutoff of the operator-identity subcheck"),
    Option("out", str, None, "optional CSV path for the comparison table"),
    Option("threads", int, 1, "worker threads"),
)

DUMP = tuple(o for o in COMMON if o.name != "points") + (
    Option("points", int, 41, "samples per time axis"),
)


def _add_options(parser: argparse.ArgumentParser, options) -> None:
    parser.add_argument("--config", default=None, help="flat key=value settings file")
    for opt in options:
        dest = opt.name.replace("-", "_")
        if opt.flag:
            parser.add_argument(f"--{opt.name}", dest=dest, action="store_true", default=argparse.SUPPRESS, help=opt.help)
        else:
            parser.add_argument(f"--{opt.name}", dest=dest, default=argparse.SUPPRESS, help=opt.help)


def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve(ns: argparse.Namespace, options) -> dict:
    """Merge flags over the config file over defaults, converting each value."""
    file_values = read_config(ns.config) if getattr(ns, "config", None) else {}
    known = {o.name.replace("-", "_") for o in options}
    unknown = sorted(set(file_values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {}
    for opt in options:
        key = opt.name.replace("-", "_")
        if hasattr(ns, key):
            raw = getattr(ns, key)
        elif key in file_values:
            raw = file_values[key]
        else:
            cfg[key] = opt.default
            continue
        try:
            cfg[key] = opt.type(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {opt.name}: {raw!r} ({exc})") from None
    return cfg


# -- output helpers ------------------------------------------------------------


def fmt(x: float) -> str:
    """Shortest round-trip decimal form (at most 17 significant digits)."""
    return repr(float(x))


def _describe_value(v) -> str:
    if isinstance(v, GateKind):
        return v.value
    if isinstance(v, DiscreteModes):
        return ",".join(f"{fmt(g)}:{fmt(w)}" for g, w in v.modes)
    if isinstance(v, np.ndarray):
        return ",".join(f"{fmt(z.real)}{'+' if z.imag >= 0 else '-'}{fmt(abs(z.imag))}i" for z in v)
    if isinstance(v, float):
        return fmt(v)
    if isinstance(v, tuple):
        return ",".join(_describe_value(x) for x in v)
    return str(v)


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline="\n", encoding="utf-8"), True


def _positive(cfg, *names, allow_zero=()):
    for name in names:
        v = cfg[name]
        if v is None:
            continue
        if not np.isfinite(v) or v < 0 or (v == 0 and name not in allow_zero):
            raise ConfigError(f"{name.replace('_', '-')} must be positive, got {v!r}")


def _params(cfg) -> PerturbationParams:
    _positive(cfg, "lambda_ratio", "nu_c", "epsilon", "tau_eps", "t_max", allow_zero=("lambda_ratio", "epsilon", "t_max"))
    if cfg["points"] < 1:
        raise ConfigError("points must be at least 1")
    if cfg["threads"] < 1:
        raise ConfigError("threads must be at least 1")
    if cfg["method"] not in ("auto", "direct", "narrow"):
        raise ConfigError(f"unknown method {cfg['method']!r}")
    phi0 = cfg["state"]
    if phi0 is not None:
        norm = np.linalg.norm(phi0)
        if norm == 0:
            raise ConfigError("initial state must be nonzero")
        phi0 = phi0 / norm
    return PerturbationParams.dimensionless(
        lambda_ratio=cfg["lambda_ratio"],
        nu_c=cfg["nu_c"],
        epsilon=cfg["epsilon"],
        tau_eps=cfg["tau_eps"],
        gate=cfg["gate"],
        phi0=phi0,
        modes=cfg["modes"],
    )


def _settings(cfg) -> QuadratureSettings:
    if cfg["kernel"] not in ("spectral", "direct"):
        raise ConfigError(f"unknown kernel {cfg['kernel']!r}")
    return QuadratureSettings(step=cfg["step"], method=cfg["method"], threads=cfg["threads"], kernel=cfg["kernel"])


def _header(command: str, cfg, p: PerturbationParams, extra=()) -> list[str]:
    lines = [f"# program=dfszeno {__version__}", f"# command={command}"]
    skip = {"out", "threads", "state"}
    for key in sorted(cfg):
        if key in skip:
            continue
        if key == "modes" and cfg[key] is None:
            continue
        if key == "nu_c" and cfg["modes"] is not None:
            continue
        lines.append(f"# {key}={_describe_value(cfg[key])}")
    lines.append(f"# state={_describe_value(p.phi0_vec)}")
    lines.extend(f"# {k}={v}" for k, v in extra)
    return lines


# -- commands ----------------------------------------------------------------------


def cmd_verify_gates(cfg, stream=None) -> int:
    stream = stream or sys.stdout
    tau = cfg["tau"]
    if not (np.isfinite(tau) and tau > 0):
        raise ConfigError("tau must be positive")
    ok = True
    print(f"{'gate':<6}{'max_error':>14}{'leakage':>14}{'[H,Jz]':>14}  status", file=stream)
    for kind in NAMED_GATES:
        r = gate_report(kind, tau)
        ok &= r.ok
        print(
            f"{kind.value:<6}{r.max_error:>14.3e}{r.leakage:>14.3e}{r.commutator:>14.3e}  {'ok' if r.ok else 'FAIL'}",
            file=stream,
        )
    rng = np.random.default_rng(cfg["seed"])
    jz = collective_j("z")
    worst = max(
        (commutator_norm(build_commuting(CommutingCoupling.from_vector(rng.normal(size=22))), jz) for _ in range(cfg["draws"])),
        default=0.0,
    )
    draws_ok = worst < 1e-13
    ok &= draws_ok
    print(f"random commuting couplings: {cfg['draws']} draws, max [H,Jz] = {worst:.3e}  {'ok' if draws_ok else 'FAIL'}",
          file=stream)
    if cfg["span_rank"]:
        rank = hermitian_span_rank()
        print(f"span rank: {rank}", file=stream)
        print(f"span rank without Gxy: {hermitian_span_rank(exclude=('gxy',))}", file=stream)
        print(f"Lie closure rank without Gxy: {lie_closure_rank(exclude=('gxy',))}", file=stream)
        ok &= rank == 16
    print(f"{len(NAMED_GATES)} gates verified" if ok else "verification FAILED", file=stream)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_fidelity_curve(cfg, stream=None) -> int:
    stream = stream or sys.stdout
    p = _params(cfg)
    q = _settings(cfg)
    grid = np.linspace(0.0, cfg["t_max"], cfg["points"]) if cfg["points"] > 1 else np.array([0.0])
    curve = fidelity_curve(grid, p, q)
    extra = [
        ("quad_step", fmt(curve.plan.step)),
        ("quad_nodes", str(q.nodes)),
        ("quad_path", "narrow" if curve.plan.narrow else "direct"),
        ("mean_infidelity", fmt(curve.mean_infidelity())),
    ]
    lines = _header("fidelity-curve", cfg, p, extra)
    lines.append("eps_t,fidelity,infidelity,flag")
    for x, f, flag in zip(curve.eps_t, curve.fidelity, curve.flags):
        lines.append(f"{fmt(x)},{fmt(f)},{fmt(1.0 - f)},{flag}")
    out, close = _open_out(cfg["out"])
    try:
        out.write("\n".join(lines) + "\n")
    finally:
        if close:
            out.close()
    if cfg["out"] is not None:
        write_plot_script(cfg["out"], p)
        bad = sum(flag != "ok" for flag in curve.flags)
        print(
            f"wrote {cfg['out']} ({len(grid)} points, mean infidelity {curve.mean_infidelity():.6g}, "
            f"{bad} flagged, {curve.wall_time:.2f} s)",
            file=sys.stderr,
        )
    return EXIT_OK


def write_plot_script(csv_path, p: PerturbationParams) -> Path:
    """Emit a gnuplot script next to the CSV."""
    csv_path = Path(csv_path)
    script = csv_path.with_suffix(".gp")
    ratio = p.lam / p.epsilon if p.epsilon > 0 else 0.0
    text = "\n".join(
        [
            "set datafile separator ','",
            "set datafile commentschars '#'",
            "set key autotitle columnhead",
            "set xlabel 'eps t'",
            "set ylabel 'F'",
            f"set title 'gate {p.gate.value}, Lambda = {ratio:g}'",
            f"plot '{csv_path.name}' using 1:2 with lines title 'F'",
            "",
        ]
    )
    with open(script, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return script


def oracle_compare(cfg) -> dict:
    """Run the perturbative-vs-exact comparison; returns rows and summary numbers."""
    _positive(cfg, "lambda", "tau", "t_max", "bound", allow_zero=("lambda",))
    ladder = cfg["eps_ladder"]
    if any(e < 0 for e in ladder):
        raise ConfigError("eps-ladder entries must be non-negative")
    nonzero = sorted({e for e in ladder if e > 0}, reverse=True)
    trunc = FockTruncation(cfg["modes"].modes, cfg["n_max"])
    times = np.linspace(0.0, cfg["t_max"], max(cfg["points"], 2))
    rows = []
    worst = {}
    for gate in cfg["gates"]:
        for eps in ladder:
            p = PerturbationParams(epsilon=eps, lam=cfg["lambda"], spectrum=cfg["modes"], gate=gate, tau=cfg["tau"])
            fp = fidelity_values(times, p, QuadratureSettings(threads=cfg["threads"])).values
            fe = exact_fidelity(times, gate, cfg["tau"], eps, cfg["lambda"], trunc)
            delta = np.abs(fp - fe)
            worst[(gate, eps)] = float(delta.max())
            rows.extend((gate, eps, t, a, b, d) for t, a, b, d in zip(times, fp, fe, delta))
    exponents = {}
    for gate in cfg["gates"]:
        if len(nonzero) >= 2:
            d = np.array([worst[(gate, e)] for e in nonzero])
            exponents[gate] = float(np.polyfit(np.log(nonzero), np.log(np.maximum(d, 1e-300)), 1)[0])
        else:
            exponents[gate] = float("nan")
    smallest = nonzero[-1] if nonzero else None
    t4 = verify_eq_t4(cfg["t4_time"], cfg["lambda"], FockTruncation(cfg["modes"].modes[:1], cfg["t4_n_max"]))
    return {"rows": rows, "worst": worst, "exponents": exponents, "smallest": smallest, "t4": t4}


def cmd_oracle_compare(cfg, stream=None) -> int:
    stream = stream or sys.stdout
    res = oracle_compare(cfg)
    print(f"{'gate':<6}{'eps':>8}{'t':>8}{'F_pert':>22}{'F_exact':>22}{'|dF|':>12}", file=stream)
    for gate, eps, t, a, b, d in res["rows"]:
        print(f"{gate.value:<6}{eps:>8g}{t:>8.3f}{a:>22.15f}{b:>22.15f}{d:>12.3e}", file=stream)
    ok = True
    for gate, expo in res["exponents"].items():
        good = expo >= cfg["min_exponent"]
        ok &= good
        print(f"{gate.value}: eps-scaling exponent {expo:.3f}  {'ok' if good else 'FAIL'}", file=stream)
    if res["smallest"] is not None:
        for gate in cfg["gates"]:
            d = res["worst"][(gate, res["smallest"])]
            good = d < cfg["bound"]
            ok &= good
            print(f"{gate.value}: max |dF| at eps={res['smallest']:g} is {d:.3e}  {'ok' if good else 'FAIL'}", file=stream)
    t4_ok = res["t4"] < 1e-6
    ok &= t4_ok
    print(f"operator identity at t={cfg['t4_time']:g}: max error {res['t4']:.3e}  {'ok' if t4_ok else 'FAIL'}", file=stream)
    if cfg["out"] is not None:
        with open(cfg["out"], "w", newline="\n", encoding="utf-8") as fh:
            fh.write("gate,epsilon,t,f_perturbative,f_exact,abs_delta\n")
            for gate, eps, t, a, b, d in res["rows"]:
                fh.write(f"{gate.value},{fmt(eps)},{fmt(t)},{fmt(a)},{fmt(b)},{fmt(d)}\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_kernel_dump(cfg, stream=None) -> int:
    stream = stream or sys.stdout
    p = _params(cfg)
    n = cfg["points"]
    grid = np.linspace(0.0, cfg["t_max"], n) if n > 1 else np.array([0.0])
    scale = p.epsilon if p.epsilon > 0 else 1.0
    k = np.atleast_2d(kernel(grid / scale, grid / scale, p))
    lines = _header("kernel-dump", cfg, p)
    lines.append("eps_t1,eps_t2,re,im")
    for i, x in enumerate(grid):
        for j, y in enumerate(grid):
            lines.append(f"{fmt(x)},{fmt(y)},{fmt(k[i, j].real)},{fmt(k[i, j].imag)}")
    out, close = _open_out(cfg["out"])
    try:
        out.write("\n".join(lines) + "\n")
    finally:
        if close:
            out.close()
    return EXIT_OK


COMMANDS = {
    "verify-gates": (cmd_verify_gates, VERIFY, "check the gate Hamiltonians against their target unitaries"),
    "fidelity-curve": (cmd_fidelity_curve, COMMON, "second-order fidelity on a grid of eps*t, as CSV"),
    "oracle-compare": (cmd_oracle_compare, ORACLE, "perturbative vs exact truncated-Fock fidelity"),
    "kernel-dump": (cmd_kernel_dump, DUMP, "sample the correlation kernel K(t1, t2) as CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfszeno", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, options, help_text) in COMMANDS.items():
        _add_options(sub.add_parser(name, help=help_text, description=help_text), options)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    func, options, _ = COMMANDS[ns.command]
    try:
        cfg = resolve(ns, options)
        return func(cfg)
    except (ConfigError, OSError) as exc:
        print(f"dfszeno: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceError, TruncationError, MemoryError) as exc:
        print(f"dfszeno: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:
        print(f"dfszeno: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
