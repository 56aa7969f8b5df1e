"""Command-line driver.

Subcommands: ``curve``, ``check``, ``verify``, ``simulate`` and ``bruteforce``.
Each reads an optional JSON file (``--config``); explicit flags override
values from the file. Exit status is 0 on a Pass verdict, 2 on Fail and 1 on
any input or runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .construct import InfeasibleXi, cap_for, construct
from .deviation import (
    ExplosionGuard,
    KTooLarge,
    brute_force_best_deviation,
    check_equilibrium,
    deviator_count,
    extreme_gain,
)
from .model import (
    DomainError,
    Environment,
    ModelError,
    SignalModel,
    Strategy,
    build_environment,
    signal_from_pair,
)
from .oracle import NoBracket, alpha_grid, numeric_xi_bounds, verify_point
from .threshold import Segment, alpha_nl, classify, theta, xi_star
from .voteshare import InvalidTrials, exact_standard_error, fidelity, monte_carlo, thread_count

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
COMMANDS = ("curve", "check", "verify", "simulate", "bruteforce")

CURVE_COLUMNS = ("alpha", "segment", "xi_star", "xi_numeric_lower", "xi_numeric_upper", "theta", "alpha_nl", "p_hH", "p_lL")
VERIFY_COLUMNS = ("signal", "alpha", "segment", "xi_star", "xi_numeric_lower", "xi_numeric_upper", "abs_err", "passed")

# Signals used by ``verify`` when no signal is given: the worked example and three contrasting signal shapes.
REFERENCE_SIGNALS = {
    "example": SignalModel(0.7, 0.3, 0.2, 0.8),
    "sym80": signal_from_pair(0.8, 0.8),
    "hH60_lL90": signal_from_pair(0.6, 0.9),
    "hH50_lL60": signal_from_pair(0.5, 0.6),
}


class ParseError(ValueError):
    """Malformed input file or flag value."""


class ValidationError(ValueError):
    """Well-formed input that does not describe a valid run."""


@dataclass
class RunConfig:
    command: str
    env: dict[str, Any] = field(default_factory=dict)
    alpha: float | None = None
    grid: float = 0.005
    xi: float | None = None
    xi_factor: float | None = None
    n: int | None = None
    trials: int = 100_000
    seed: int = 0
    resolution: float = 1e-3
    tol: float = 2e-3
    numeric: bool = False
    k: int | None = None
    bf_grid: float = 0.25
    include_majority: bool = False
    slack: float = 0.05
    out: Path | None = None
    svg: Path | None = None
    report: Path | None = None
    workers: int | None = None
    signal: SignalModel | None = None
    environment: Environment | None = None


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _load_json(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return data


def _field(data: dict, name: str, kind):
    if name not in data or data[name] is None:
        return None
    try:
        return kind(data[name])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field '{name}': cannot read {data[name]!r} as {kind.__name__}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="antvote", description="Threshold curves and equilibrium checks for two-type majority voting.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON environment file")
        sp.add_argument("--phH", type=float, help="P(h | H)")
        sp.add_argument("--phL", type=float, help="P(h | L)")
        sp.add_argument("--pH", type=float, help="prior probability of H")
        sp.add_argument("--n", type=int, help="number of agents")
        sp.add_argument("--alpha", type=float, help="majority fraction")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, help="thread count (default: ANTVOTE_THREADS or CPU count)")
        sp.add_argument("--report", type=Path, help="write the JSON report here")

    sp = sub.add_parser("curve", help="emit the threshold curve as CSV (and optionally SVG)")
    common(sp)
    sp.add_argument("--grid", type=float, help="alpha step (default 0.005)")
    sp.add_argument("--numeric", action="store_true", help="fill the numeric bound columns (slow)")
    sp.add_argument("--resolution", type=float)
    sp.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    sp.add_argument("--svg", type=Path)

    sp = sub.add_parser("check", help="construct a profile and check the deviation conditions")
    common(sp)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--xi", type=float)
    g.add_argument("--xi-factor", type=float, dest="xi_factor", help="xi as a fraction of the segment cap (default 0.8)")

    sp = sub.add_parser("verify", help="compare the closed form with the numerical optimum")
    common(sp)
    sp.add_argument("--grid", type=float)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--resolution", type=float)
    sp.add_argument("--out", type=Path)

    sp = sub.add_parser("simulate", help="Monte Carlo fidelity against the exact value")
    common(sp)
    sp.add_argument("--trials", type=int)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--xi", type=float)
    g.add_argument("--xi-factor", type=float, dest="xi_factor")

    sp = sub.add_parser("bruteforce", help="exhaustive small-n coalition search")
    common(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--bf-grid", type=float, dest="bf_grid")
    sp.add_argument("--include-majority", action="store_true", default=None, dest="include_majority")
    sp.add_argument("--slack", type=float)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--xi", type=float)
    g.add_argument("--xi-factor", type=float, dest="xi_factor")
    return p


def parse_config(argv: Sequence[str] | None = None, *, ns: argparse.Namespace | None = None) -> RunConfig:
    """Merge the JSON file (if any) with the flags and validate the result."""
    if ns is None:
        ns = build_parser().parse_args(argv)
    data: dict[str, Any] = _load_json(ns.config) if getattr(ns, "config", None) else {}
    cfg = RunConfig(command=ns.command)
    env = {k: data[k] for k in ("n", "prior", "signal", "groups", "alpha", "gamma", "majority_utility", "minority_utility") if k in data}

    # file values first
    for name, kind in (("grid", float), ("xi", float), ("xi_factor", float), ("trials", int), ("seed", int),
                       ("resolution", float), ("tol", float), ("k", int), ("bf_grid", float), ("slack", float), ("workers", int)):
        v = _field(data, name, kind)
        if v is not None:
            setattr(cfg, name, v)
    if isinstance(data.get("include_majority"), bool):
        cfg.include_majority = data["include_majority"]

    # then flags
    if ns.phH is not None or ns.phL is not None:
        sig = dict(env.get("signal") or {})
        if ns.phH is not None:
            sig["phH"] = ns.phH
        if ns.phL is not None:
            sig["phL"] = ns.phL
        env["signal"] = sig
    if ns.pH is not None:
        env["prior"] = {"pH": ns.pH, "pL": 1.0 - ns.pH}
    if ns.n is not None:
        env["n"] = ns.n
    if ns.alpha is not None:
        env["alpha"] = ns.alpha
        env.pop("groups", None)  # an explicit alpha replaces the file's group split
    for name in ("grid", "xi", "xi_factor", "trials", "seed", "resolution", "tol", "k", "bf_grid", "slack", "workers", "include_majority"):
        v = getattr(ns, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(ns, "numeric", False):
        cfg.numeric = True
    for name in ("out", "svg", "report"):
        setattr(cfg, name, getattr(ns, name, None))
    if getattr(ns, "xi", None) is not None:
        cfg.xi_factor = None
    elif getattr(ns, "xi_factor", None) is not None:
        cfg.xi = None

    cfg.env = env
    cfg.n = env.get("n")
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    env = cfg.env
    if cfg.command not in COMMANDS:
        raise ValidationError(f"unknown command {cfg.command!r}")
    if cfg.command != "verify" and "signal" not in env:
        raise ValidationError("missing signal block (give --phH/--phL or a 'signal' object)")
    if "signal" in env:
        try:
            from .model import _signal  # shared parser for the signal block

            raw = _signal(env["signal"])
        except (ModelError, TypeError, ValueError) as exc:
            raise ValidationError(f"signal: {exc}") from exc
        cfg.signal = raw if raw.is_canonical else raw.swap()
    if cfg.grid <= 0 or cfg.grid >= 0.5:
        raise ValidationError(f"grid step must lie in (0, 1/2), got {cfg.grid}")
    if not 0 < cfg.resolution <= 0.1:
        raise ValidationError(f"resolution must lie in (0, 0.1], got {cfg.resolution}")
    if cfg.tol <= 0:
        raise ValidationError("tol must be positive")
    if cfg.xi is not None and cfg.xi < 0:
        raise ValidationError("xi must be nonnegative")
    if cfg.xi_factor is not None and not 0 <= cfg.xi_factor <= 1:
        raise ValidationError("xi-factor must lie in [0, 1]")
    if cfg.workers is not None and cfg.workers < 1:
        raise ValidationError("workers must be positive")

    if cfg.command in ("check", "simulate", "bruteforce"):
        if "n" not in env:
            raise ValidationError("missing n")
        if "prior" not in env:
            raise ValidationError("missing prior block (give --pH or a 'prior' object)")
        if "groups" not in env and "alpha" not in env:
            raise ValidationError("need either groups or --alpha")
        try:
            cfg.environment = build_environment(env)
        except ModelError as exc:
            raise ValidationError(str(exc)) from exc
        cfg.alpha = cfg.environment.alpha
    elif "alpha" in env or "groups" in env:
        if "groups" in env and "n" in env:
            try:
                e = build_environment({**env, "prior": env.get("prior", {"pH": 0.5})})
            except ModelError as exc:
                raise ValidationError(str(exc)) from exc
            cfg.alpha = e.alpha
        elif "alpha" in env:
            cfg.alpha = float(env["alpha"])


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _write_text(path: Path | None, text: str) -> None:
    """Single writer for every file artifact; ``None`` means stdout."""
    if path is None:
        sys.stdout.write(text)
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def _csv_text(columns: Sequence[str], rows: list[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o: Any):
    if isinstance(o, (Segment,)):
        return o.value
    if isinstance(o, Strategy):
        return {"bl": o.beta_l, "bh": o.beta_h}
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _summary(line: str) -> None:
    print(line, file=sys.stderr)


def _map(fn, items, workers):
    workers = workers or thread_count()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# curve
# ---------------------------------------------------------------------------

SEGMENT_COLORS = {
    Segment.STRONG_EQ: "#555555",
    Segment.FLAT: "#1f77b4",
    Segment.STEEP: "#2ca02c",
    Segment.NONLINEAR: "#ff7f0e",
    Segment.TAIL: "#d62728",
}


def curve_rows(s: SignalModel, step: float, *, numeric: bool = False, resolution: float = 1e-3, workers: int | None = None) -> list[tuple]:
    count = int(math.floor(0.5 / step + 1e-9))
    alphas = [round(0.5 + i * step, 12) for i in range(1, count + 1)]
    th, anl = theta(s), alpha_nl(s)

    def row(a: float) -> tuple:
        seg = classify(s, a)
        value = 1.0 if seg is Segment.STRONG_EQ else xi_star(s, a).xi_star
        lo = hi = None
        if numeric and seg is not Segment.STRONG_EQ:
            nb = numeric_xi_bounds(s, a, resolution)
            lo, hi = nb.lower, nb.upper
        return (_fmt(a), seg.value, _fmt(value), _fmt(lo), _fmt(hi), _fmt(th), _fmt(anl), _fmt(s.p_hH), _fmt(s.p_lL))

    return _map(row, alphas, workers)


def curve_svg(rows: list[tuple], title: str = "") -> str:
    """Dependency-free plot of xi* against alpha, one polyline per segment run."""
    W, H, pad = 640, 400, 50
    pts = [(float(r[0]), r[1], float(r[2])) for r in rows if r[1] != Segment.STRONG_EQ.value]
    ymax = max([p[2] for p in pts] + [0.05]) * 1.1

    def X(a):
        return pad + (a - 0.5) / 0.5 * (W - 2 * pad)

    def Y(v):
        return H - pad - v / ymax * (H - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
        f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle" font-size="13">alpha</text>',
        f'<text x="14" y="{H / 2}" font-size="13" transform="rotate(-90 14 {H / 2})" text-anchor="middle">xi*</text>',
    ]
    if title:
        parts.append(f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="14">{title}</text>')
    for t in (0.5, 0.6, 0.7, 0.8, 0.9, 1.0):
        parts.append(f'<text x="{X(t):.1f}" y="{H - pad + 16}" text-anchor="middle" font-size="11">{t:.1f}</text>')
    for frac in (0.0, 0.5, 1.0):
        v = frac * ymax / 1.1
        parts.append(f'<text x="{pad - 6}" y="{Y(v) + 4:.1f}" text-anchor="end" font-size="11">{v:.3f}</text>')
    runs: list[tuple[str, list]] = []
    for a, seg, v in pts:
        if runs and runs[-1][0] == seg:
            runs[-1][1].append((a, v))
        else:
            runs.append((seg, [(a, v)]))
    for seg, run in runs:
        color = SEGMENT_COLORS[Segment(seg)]
        coords = " ".join(f"{X(a):.2f},{Y(v):.2f}" for a, v in run)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"><title>{seg}</title></polyline>')
    for i, (seg, color) in enumerate((s.value, c) for s, c in SEGMENT_COLORS.items() if s is not Segment.STRONG_EQ):
        y = pad + 16 * i
        parts.append(f'<rect x="{W - pad - 90}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{W - pad - 75}" y="{y}" font-size="11">{seg}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def run_curve(cfg: RunConfig) -> int:
    s = cfg.signal
    rows = curve_rows(s, cfg.grid, numeric=cfg.numeric, resolution=cfg.resolution, workers=cfg.workers)
    _write_text(cfg.out, _csv_text(CURVE_COLUMNS, rows))
    if cfg.svg is not None:
        _write_text(cfg.svg, curve_svg(rows, f"p_hH={s.p_hH:g}, p_lL={s.p_lL:g}"))
    segs = []
    for r in rows:
        if not segs or segs[-1] != r[1]:
            segs.append(r[1])
    _summary(f"curve: {len(rows)} rows, segments {' -> '.join(segs)}, theta={theta(s):.6f}")
    return EXIT_PASS


# ---------------------------------------------------------------------------
# check / simulate / bruteforce
# ---------------------------------------------------------------------------


def _target_xi(cfg: RunConfig, env: Environment) -> float:
    if cfg.xi is not None:
        return cfg.xi
    factor = 0.8 if cfg.xi_factor is None else cfg.xi_factor
    return factor * cap_for(env)


def _profile_for(cfg: RunConfig, env: Environment, xi: float):
    """Use the file's explicit groups when given; otherwise build the segment's construction."""
    if "groups" in cfg.env:
        return env.profile, None
    res = construct(env, xi)
    return res.profile, res


def run_check(cfg: RunConfig) -> int:
    env = cfg.environment
    xi = _target_xi(cfg, env)
    profile, res = _profile_for(cfg, env, xi)
    rep = check_equilibrium(env, profile, xi)
    out = {
        "command": "check",
        "alpha": env.alpha,
        "segment": classify(env.signal, env.alpha).value,
        "cap": cap_for(env),
        "construction": None if res is None else {"majority_strategy": res.majority_strategy, "delta_push": res.delta_push, "note": res.note},
        "profile": [{"count": b.count, "type": b.agent_type.value, "strategy": b.strategy} for b in profile.blocks],
        **rep.as_dict(),
    }
    if cfg.report:
        _write_text(cfg.report, _json_text(out))
    print(_json_text(out), end="")
    _summary(f"check: {rep.verdict} (n={rep.n}, k={rep.k}, fidelity={rep.base_fidelity:.6f}, max gain={rep.max_gain:.3g}, eps={rep.epsilon_bound:.3g})")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def run_simulate(cfg: RunConfig) -> int:
    env = cfg.environment
    if not isinstance(cfg.trials, int) or cfg.trials < 1:
        raise InvalidTrials(f"trials must be a positive integer, got {cfg.trials!r}")
    if "groups" in cfg.env:
        profile = env.profile
    else:
        profile, _ = _profile_for(cfg, env, _target_xi(cfg, env))
    fr = fidelity(env, profile)
    exact = fr.fidelity
    mc = monte_carlo(env, profile, cfg.trials, cfg.seed, workers=cfg.workers)
    se = exact_standard_error(env, fr.win, cfg.trials)
    z = abs(mc.fidelity - exact) / se if se > 0 else (0.0 if mc.fidelity == exact else math.inf)
    verdict = "Pass" if z <= 3.0 else "Fail"
    out = {"command": "simulate", "exact_fidelity": exact, "exact_se": se, "z": z, "verdict": verdict, **asdict(mc)}
    if cfg.report:
        _write_text(cfg.report, _json_text(out))
    print(_json_text(out), end="")
    _summary(f"simulate: {verdict} (exact={exact:.6f}, mc={mc.fidelity:.6f} +/- {mc.se_fidelity:.2g})")
    return EXIT_PASS if verdict == "Pass" else EXIT_FAIL


def run_bruteforce(cfg: RunConfig) -> int:
    env = cfg.environment
    if "groups" in cfg.env:
        profile = env.profile
        k = cfg.k if cfg.k is not None else deviator_count(_target_xi(cfg, env), env.n)
    else:
        k = cfg.k
        xi = k / env.n if k is not None else _target_xi(cfg, env)
        if k is None:
            k = deviator_count(xi, env.n)
        profile, _ = _profile_for(cfg, env, min(xi, cap_for(env) * (1 - 1e-9)))
    bf = brute_force_best_deviation(env, profile, k, cfg.bf_grid, include_majority=cfg.include_majority)
    ext = extreme_gain(env, profile, k)
    ok = bf.best_gain <= ext + cfg.slack and bf.majority_improving_witness is None
    verdict = "Pass" if ok else "Fail"
    out = {
        "command": "bruteforce",
        "k": k,
        "best_gain": bf.best_gain,
        "witness": bf.witness,
        "evaluated": bf.evaluated,
        "extreme_gain": ext,
        "max_majority_gain": bf.max_majority_gain,
        "majority_improving_witness": bf.majority_improving_witness,
        "verdict": verdict,
    }
    if cfg.report:
        _write_text(cfg.report, _json_text(out))
    print(_json_text(out), end="")
    _summary(f"bruteforce: {verdict} (best={bf.best_gain:.4g}, extreme={ext:.4g}, evaluated={bf.evaluated})")
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def run_verify(cfg: RunConfig) -> int:
    signals = {"given": cfg.signal} if cfg.signal is not None else dict(REFERENCE_SIGNALS)
    tasks = [(name, s, a) for name, s in signals.items() for a in alpha_grid(s, cfg.grid)]
    pts = _map(lambda t: (t[0], verify_point(t[1], t[2], cfg.tol, cfg.resolution)), tasks, cfg.workers)
    rows = [
        (name, _fmt(p.alpha), p.segment.value, _fmt(p.closed), _fmt(p.lower), _fmt(p.upper), _fmt(p.abs_err), int(p.passed))
        for name, p in pts
    ]
    if cfg.out is not None:
        _write_text(cfg.out, _csv_text(VERIFY_COLUMNS, rows))
    max_err = max((p.abs_err for _, p in pts), default=0.0)
    failed = [(n, p.alpha) for n, p in pts if not p.passed]
    verdict = "Pass" if not failed else "Fail"
    out = {"command": "verify", "points": len(pts), "max_abs_err": max_err, "tol": cfg.tol, "failed": failed, "verdict": verdict}
    if cfg.report:
        _write_text(cfg.report, _json_text(out))
    print(f"max |closed - numeric| = {max_err:.3e} over {len(pts)} points (tol {cfg.tol:g}): {verdict}")
    return EXIT_PASS if verdict == "Pass" else EXIT_FAIL


RUNNERS = {"curve": run_curve, "check": run_check, "verify": run_verify, "simulate": run_simulate, "bruteforce": run_bruteforce}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    try:
        cfg = parse_config(ns=ns)
        if cfg.workers:
            os.environ["ANTVOTE_THREADS"] = str(cfg.workers)
        return RUNNERS[cfg.command](cfg)
    except (ParseError, ValidationError, ModelError, DomainError, InfeasibleXi, InvalidTrials, KTooLarge,
            ExplosionGuard, NoBracket, OSError) as exc:
        print(f"antvote: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
