"""Command-line front end.

    geomphase --state coherent1 --eta 0.6 --beta2 1 --t 1 --oracle
    geomphase --state squeezed --r 1 --sweep t --range 0:20:2048
    geomphase --figure 3 --out fig3.csv
    geomphase verify

Exit codes: 0 success, 1 configuration error, 2 physics error (the output
carries an ``error`` field), 3 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import IndexOutOfRange, PhysicsError
from .fock_oracle import oracle_phases
from .laguerre import NonlinearModel
from .phases import PhaseDecomposition, geometric_phase, mean_level, phase_trajectory, weights
from .presets import FIGURES, get_preset
from .states import FAMILIES, NMAX_ENV, SQUEEZED, StateSpec, TruncationConfig
from .verify import failed, run_verify

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_VERIFY = 0, 1, 2, 3

SWEEP_COLUMNS = [
    "sweep_value",
    "curve_label",
    "chi",
    "delta",
    "gamma_unwrapped",
    "gamma_mod",
    "truncation_index",
    "error",
]
PHYSICS_FLAGS = ("state", "eta", "f_table", "beta2", "omega", "r", "phi", "t", "sweep", "range")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    family: str | None = None
    eta: float | None = None
    f_table: str | None = None
    f_values: tuple[float, ...] = field(default=(), repr=False)
    beta2: float = 0.0
    omega: float = math.pi / 4
    r: float = 0.0
    phi: float = 0.0
    t: float | None = None
    sweep: str | None = None
    range: tuple[float, float, int] | None = None
    figure: int | None = None
    n_max_cap: int = 512
    tail_tol: float = 1e-16
    oracle: bool = False
    fmt: str = "csv"
    out: str | None = None

    @property
    def trunc(self) -> TruncationConfig:
        return TruncationConfig(n_max_cap=self.n_max_cap, tail_tol=self.tail_tol)

    def model(self, eta: float | None = None) -> NonlinearModel:
        if eta is not None:
            return NonlinearModel.lamb_dicke(eta)
        if self.f_table is not None:
            return NonlinearModel.tabulated(self.f_values)
        if self.eta is not None:
            return NonlinearModel.lamb_dicke(self.eta)
        return NonlinearModel.identity()

    def spec(self, **changes) -> StateSpec:
        base = dict(
            family=self.family,
            beta=math.sqrt(self.beta2),
            r=self.r,
            phi=self.phi,
            omega=self.omega,
            model=self.model(),
        )
        base.update(changes)
        return StateSpec(**base)

    def header(self) -> dict:
        d = asdict(self)
        d.pop("f_values")
        d.pop("out")
        d["f_table_entries"] = len(self.f_values) if self.f_table else None
        d["format"] = d.pop("fmt")
        d["tail_consecutive"] = self.trunc.consecutive
        if self.figure is not None:
            p = get_preset(self.figure)
            d.update(
                family=p.family,
                etas=list(p.etas),
                beta2=p.beta2,
                omega=p.omega,
                r=p.r,
                t=p.t if p.sweep == "r" else None,
                sweep=p.sweep,
                range=[p.start, p.stop, p.steps],
            )
        elif self.range is not None:
            d["range"] = list(self.range)
        return d


_PI_RE = re.compile(r"^([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\*?pi(?:/((?:\d+(?:\.\d*)?|\.\d+)))?$")


def parse_real(text: str) -> float:
    """A float, or a multiple of pi such as ``pi/4``, ``2pi`` or ``-0.5*pi``."""
    s = text.strip().lower()
    try:
        val = float(s)
    except ValueError:
        m = _PI_RE.match(s)
        if not m:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        coef = m.group(1)
        coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        val = coef * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    if not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return val


def parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"range must be start:stop:steps, got {text!r}")
    start, stop = parse_real(parts[0]), parse_real(parts[1])
    try:
        steps = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"steps must be an integer, got {parts[2]!r}") from None
    if not start < stop:
        raise argparse.ArgumentTypeError(f"range needs start < stop, got {start} >= {stop}")
    if steps < 2:
        raise argparse.ArgumentTypeError(f"range needs at least 2 steps, got {steps}")
    return start, stop, steps


def read_f_table(path: str) -> tuple[float, ...]:
    """Numbers separated by whitespace or commas, starting with f(0); ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read f table {path!r}: {exc.strerror}") from None
    body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    tokens = [tok for tok in re.split(r"[\s,]+", body) if tok]
    try:
        values = tuple(float(tok) for tok in tokens)
    except ValueError as exc:
        raise ConfigError(f"f table {path!r}: {exc}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError(f"f table {path!r} must hold finite numbers")
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geomphase", description="Geometric phases of nonlinear coherent and squeezed states.")
    p.add_argument("--state", choices=FAMILIES)
    model = p.add_mutually_exclusive_group()
    model.add_argument("--eta", type=parse_real, help="Lamb-Dicke parameter (default: f = 1)")
    model.add_argument("--f-table", metavar="PATH", help="file with tabulated f(0), f(1), ...")
    p.add_argument("--beta2", type=parse_real, help="|beta|^2 (coherent families)")
    p.add_argument("--omega", type=parse_real, help="oscillator frequency (default pi/4)")
    p.add_argument("--r", type=parse_real, help="squeezing amplitude")
    p.add_argument("--phi", type=parse_real, help="squeezing phase")
    p.add_argument("--t", type=parse_real, help="evolution time")
    p.add_argument("--sweep", choices=("t", "r", "eta"))
    p.add_argument("--range", type=parse_range, metavar="START:STOP:STEPS")
    p.add_argument("--figure", type=int, choices=sorted(FIGURES))
    p.add_argument("--nmax", type=int, help=f"truncation cap on the Fock index (env {NMAX_ENV})")
    p.add_argument("--tail-tol", type=float)
    p.add_argument("--oracle", action="store_true", help="cross-check with the matrix oracle")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--out", metavar="PATH")
    return p


def build_verify_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geomphase verify", description="Run the invariant suite.")
    p.add_argument("--nmax", type=int)
    p.add_argument("--tail-tol", type=float)
    p.add_argument("--inject-pole", action="store_true", help="add a model with a pole of f")
    p.add_argument("--format", dest="fmt", choices=("text", "json"), default="text")
    p.add_argument("--out", metavar="PATH")
    return p


def _trunc_overrides(args) -> dict:
    out = {}
    raw = os.environ.get(NMAX_ENV)
    if raw is not None:
        try:
            out["n_max_cap"] = int(raw)
        except ValueError:
            raise ConfigError(f"{NMAX_ENV} must be an integer, got {raw!r}") from None
    if args.nmax is not None:
        out["n_max_cap"] = args.nmax
    if args.tail_tol is not None:
        out["tail_tol"] = args.tail_tol
    try:
        TruncationConfig(**out)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return out


def resolve_config(args) -> RunConfig:
    cfg = RunConfig(oracle=args.oracle, fmt=args.fmt, out=args.out, **_trunc_overrides(args))
    given = [name for name in PHYSICS_FLAGS if getattr(args, name) is not None]
    if args.figure is not None:
        if given:
            flags = ", ".join("--" + g.replace("_", "-") for g in given)
            raise ConfigError(f"--figure {args.figure} fixes all physical parameters; remove {flags}")
        if args.oracle:
            raise ConfigError("--oracle applies to single-point queries")
        cfg.figure = args.figure
        return cfg

    if args.state is None:
        raise ConfigError("--state is required (or use --figure)")
    cfg.family = args.state
    squeezed = args.state == SQUEEZED
    if squeezed and args.beta2 is not None:
        raise ConfigError("--beta2 applies to the coherent families")
    if not squeezed and (args.r is not None or args.phi is not None):
        raise ConfigError("--r/--phi apply to the squeezed family")
    if args.beta2 is not None:
        if args.beta2 < 0:
            raise ConfigError("--beta2 must be >= 0")
        cfg.beta2 = args.beta2
    if args.r is not None:
        if args.r < 0:
            raise ConfigError("--r must be >= 0")
        cfg.r = args.r
    if args.phi is not None:
        cfg.phi = args.phi
    if args.omega is not None:
        if not args.omega > 0:
            raise ConfigError("--omega must be > 0")
        cfg.omega = args.omega
    if args.eta is not None:
        if args.eta < 0:
            raise ConfigError("--eta must be >= 0")
        cfg.eta = args.eta
    if args.f_table is not None:
        cfg.f_table = args.f_table
        cfg.f_values = read_f_table(args.f_table)

    if args.sweep is None:
        if args.range is not None:
            raise ConfigError("--range needs --sweep")
        if args.t is None:
            raise ConfigError("--t is required for a single-point query")
        cfg.t = args.t
        return cfg

    if args.oracle:
        raise ConfigError("--oracle applies to single-point queries")
    if args.range is None:
        raise ConfigError("--sweep needs --range START:STOP:STEPS")
    cfg.sweep, cfg.range = args.sweep, args.range
    if args.sweep == "t":
        if args.t is not None:
            raise ConfigError("--t conflicts with --sweep t")
    else:
        if args.t is None:
            raise ConfigError(f"--sweep {args.sweep} needs a fixed --t")
        cfg.t = args.t
    if args.sweep == "r":
        if not squeezed:
            raise ConfigError("--sweep r applies to the squeezed family")
        if args.r is not None:
            raise ConfigError("--r conflicts with --sweep r")
        if cfg.range[0] < 0:
            raise ConfigError("r range must start at >= 0")
    if args.sweep == "eta":
        if args.eta is not None or args.f_table is not None:
            raise ConfigError("--sweep eta conflicts with --eta/--f-table")
        if cfg.range[0] < 0:
            raise ConfigError("eta range must start at >= 0")
    return cfg


def _error_fields(exc: BaseException) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def run_point(cfg: RunConfig) -> dict:
    """Phases of one state at one time.

    Raises PhysicsError unchanged; the caller maps it to an exit code.
    """
    spec = cfg.spec()
    trunc = cfg.trunc
    table = weights(spec, trunc)
    ph = geometric_phase(spec, trunc, cfg.t)
    rec = {
        "state": spec.family,
        "model": spec.model.label(),
        "t": cfg.t,
        **ph.as_dict(),
        "mean_level": mean_level(spec, trunc),
        "truncation_index": table.truncation_index,
    }
    if cfg.oracle:
        orc = oracle_phases(spec, cfg.t, trunc=trunc)
        rec.update(
            oracle_chi=orc.chi,
            oracle_delta=orc.delta,
            oracle_gamma=orc.gamma_unwrapped,
            oracle_gamma_connection=orc.gamma_connection,
            oracle_grid_points=orc.grid_points,
            abs_diff_chi=abs(ph.chi - orc.chi),
            abs_diff_delta=abs(ph.delta - orc.delta),
            abs_diff_gamma=abs(ph.gamma_unwrapped - orc.gamma_unwrapped),
            abs_diff_gamma_connection=abs(ph.gamma_unwrapped - orc.gamma_connection),
        )
    return rec


def _row(x, label, res, trunc_index) -> dict:
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(sweep_value=float(x), curve_label=label, truncation_index=trunc_index)
    if isinstance(res, PhaseDecomposition):
        row.update(res.as_dict())
    else:
        row["error"] = type(res).__name__
    return row


def _time_curve(spec, label, grid, trunc) -> list[dict]:
    try:
        table = weights(spec, trunc)
        results = phase_trajectory(spec, grid, trunc)
    except PhysicsError as exc:
        return [_row(x, label, exc, None) for x in grid]
    return [_row(x, label, res, table.truncation_index) for x, res in zip(grid, results)]


def _point_curve(make_spec, label, grid, t, trunc) -> list[dict]:
    rows = []
    for x in grid:
        try:
            spec = make_spec(float(x))
            table = weights(spec, trunc)
            (res,) = phase_trajectory(spec, [t], trunc)
            rows.append(_row(x, label, res, table.truncation_index))
        except PhysicsError as exc:
            rows.append(_row(x, label, exc, None))
    return rows


def run_sweep(cfg: RunConfig) -> list[dict]:
    """Rows in curve order, then in increasing sweep value.

    Rows where the phase does not exist carry the exception name in
    ``error`` and empty phase fields; the sweep always runs to the end.
    """
    trunc = cfg.trunc
    if cfg.figure is not None:
        preset = get_preset(cfg.figure)
        grid = preset.grid()
        rows = []
        for label, spec in preset.curves():
            if preset.sweep == "t":
                rows += _time_curve(spec, label, grid, trunc)
            else:
                rows += _point_curve(lambda r, s=spec: s.with_(r=r), label, grid, preset.t, trunc)
        return rows

    start, stop, steps = cfg.range
    grid = np.linspace(start, stop, steps)
    if cfg.sweep == "t":
        spec = cfg.spec()
        return _time_curve(spec, f"{spec.family} {spec.model.label()}", grid, trunc)
    if cfg.sweep == "r":
        spec = cfg.spec()
        label = f"{spec.family} {spec.model.label()}"
        return _point_curve(lambda r: spec.with_(r=r), label, grid, cfg.t, trunc)
    return _point_curve(
        lambda eta: cfg.spec(model=NonlinearModel.lamb_dicke(eta)), cfg.family, grid, cfg.t, trunc
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        # + 0.0 folds -0.0 into 0.0
        return format(float(value) + 0.0, ".17g")
    return str(value)


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, tuple):
        return list(value)
    return value


def to_json(header: dict, key: str, payload) -> str:
    if isinstance(payload, list):
        payload = [{k: _json_safe(v) for k, v in row.items()} for row in payload]
    else:
        payload = {k: _json_safe(v) for k, v in payload.items()}
    doc = {"config": {k: _json_safe(v) for k, v in header.items()}, key: payload}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _main_run(argv) -> int:
    cfg = resolve_config(build_parser().parse_args(argv))
    try:
        return _dispatch(cfg)
    except IndexOutOfRange as exc:
        raise ConfigError(f"f table too short: {exc}") from None


def _dispatch(cfg: RunConfig) -> int:
    if cfg.figure is not None or cfg.sweep is not None:
        rows = run_sweep(cfg)
        if cfg.fmt == "csv":
            text = to_csv(rows, SWEEP_COLUMNS)
        else:
            text = to_json(cfg.header(), "rows", rows)
        _emit(text, cfg.out)
        return EXIT_OK
    try:
        rec = run_point(cfg)
        code = EXIT_OK
    except PhysicsError as exc:
        rec = _error_fields(exc)
        code = EXIT_PHYSICS
        print(f"geomphase: {rec['error']}: {rec['message']}", file=sys.stderr)
    if cfg.fmt == "csv":
        text = to_csv([rec], list(rec))
    else:
        text = to_json(cfg.header(), "result", rec)
    _emit(text, cfg.out)
    return code


def _main_verify(argv) -> int:
    args = build_verify_parser().parse_args(argv)
    trunc = TruncationConfig(**_trunc_overrides(args))
    lines = []
    live = args.fmt == "text" and args.out is None
    results = run_verify(trunc, inject_pole=args.inject_pole, log=print if live else lines.append)
    n_fail = sum(r.status == "FAIL" for r in results)
    n_skip = sum(r.status == "SKIP" for r in results)
    summary = f"{len(results) - n_fail - n_skip} passed, {n_fail} failed, {n_skip} skipped"
    if args.fmt == "json":
        doc = {
            "n_max_cap": trunc.n_max_cap,
            "tail_tol": trunc.tail_tol,
            "checks": [r.as_dict() for r in results],
            "summary": summary,
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    elif live:
        print(summary)
    else:
        _emit("\n".join(lines + [summary]) + "\n", args.out)
    return EXIT_VERIFY if failed(results) else EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if argv and argv[0] == "verify":
            return _main_verify(argv[1:])
        return _main_run(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
