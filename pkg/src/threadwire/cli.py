"""Experiment harness: config parsing, task dispatch, sweeps, CSV export.

Config files are plain-text INI (section headers + key=value).  Every output
file embeds the sha256 digest of the config plus the effective seed, so
identical config + seed reproduce byte-identical bodies.

Exit codes: 0 success, 2 config error, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4

TASKS = ("solve", "sweep", "iso-check", "rado", "levelset", "curve-check")


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


# ---------------------------------------------------------------------------
# formatting helpers


def _fmt(v) -> str:
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _write_csv(path: Path, digest: str, header: Sequence[str],
               rows: Sequence[Sequence], footer: Sequence[str] = ()) -> None:
    buf = io.StringIO()
    buf.write(f"# {digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    for line in footer:
        buf.write(f"# {line}\n")
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------------------
# config handling


def load_config(path: str, seed_override: Optional[int],
                tol_overrides: Dict[str, float]):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = p.read_bytes()
    cfg = configparser.ConfigParser()
    try:
        cfg.read_string(raw.decode())
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    seed = seed_override
    if seed is None:
        seed = cfg.getint("run", "seed", fallback=0)
    digest = hashlib.sha256(
        raw + f"|seed={seed}|tol={sorted(tol_overrides.items())}".encode()
    ).hexdigest()
    return cfg, seed, f"config_digest={digest} seed={seed}"


def _require(cfg, section: str):
    if section not in cfg:
        raise ConfigError(f"missing [{section}] section")
    return cfg[section]


def _tol(tols: Dict[str, float], key: str, default: float) -> float:
    return float(tols.get(key, default))


def _build_wire(cfg):
    from .curves import CurveError, wire_from_config

    try:
        return wire_from_config(dict(_require(cfg, "wire")))
    except CurveError as exc:
        raise ConfigError(f"invalid wire config: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid wire config: {exc}") from exc


# ---------------------------------------------------------------------------
# solve / sweep


_SOLVE_HEADER = [
    "lam", "D", "area", "thread_len", "wire_seg_len", "ell_M", "kappa",
    "kappa_residual", "conformality", "r_max", "constraint_gap", "mu",
    "converged", "kappa_ok", "hull_ok", "near_wire_ok", "slicewise_ok",
]


def _solve_point(wire_cfg: Dict[str, str], lam: float, profile: str,
                 nx: int, rows: int, seed: int, n_slices: int,
                 kappa_tol: float, slack: float) -> Tuple[List, Dict]:
    """One deterministic solve + verification pass (worker-safe)."""
    from .curves import TubularChart, wire_from_config
    from .solver import (SolverSettings, ThreadProblem, build_competitor_P0,
                         minimize, verify_convex_hull, verify_near_wire,
                         verify_slicewise)

    wire = wire_from_config(wire_cfg)
    settings = SolverSettings(seed=seed)
    prob = ThreadProblem(wire=wire, lam=lam, settings=settings)
    init = build_competitor_P0(wire, lam, profile=profile, nx=nx, rows=rows)
    cres, rep = minimize(prob, init)
    chart = TubularChart(wire)
    kappa_ok = rep.kappa >= -kappa_tol
    hull_margin, hull_ok = verify_convex_hull(cres)
    nw = verify_near_wire(cres, chart, lam, slack=slack)
    sw = verify_slicewise(cres, chart, n_slices=n_slices)
    rep.r_max = nw["r_max"]
    row = [lam, rep.D, rep.area, rep.thread_len, rep.wire_seg_len, rep.ell_M,
           rep.kappa, rep.kappa_residual, rep.conformality, rep.r_max,
           rep.constraint_gap, rep.mu, rep.converged, kappa_ok, hull_ok,
           nw["holds"], sw["holds"]]
    extras = {"crescent": cres, "report": rep, "hull_margin": hull_margin,
              "verdicts": (kappa_ok, hull_ok, nw["holds"], sw["holds"])}
    return row, extras


def _sweep_worker(args):
    row, extras = _solve_point(*args)
    return row, extras["verdicts"]


def task_solve(cfg, seed, digest, outdir: Path, tols) -> int:
    from .solver import dump_mesh

    sec = _require(cfg, "solve")
    wire_cfg = dict(_require(cfg, "wire"))
    try:
        if "lam" in sec:
            lam = float(sec["lam"])
        elif "L" in sec:
            from .curves import wire_from_config
            lam = wire_from_config(wire_cfg).total_length - float(sec["L"])
        else:
            raise ConfigError("[solve] needs lam or L")
        profile = sec.get("profile", "hugging")
        nx = int(sec.get("nx", 96))
        rows = int(sec.get("rows", 10))
        n_slices = int(sec.get("n_slices", 50))
        want_dump = sec.getboolean("dump_mesh", fallback=False)
    except ValueError as exc:
        raise ConfigError(f"invalid [solve] value: {exc}") from exc

    row, extras = _solve_point(wire_cfg, lam, profile, nx, rows, seed,
                               n_slices, _tol(tols, "kappa_tol", 1e-3),
                               _tol(tols, "near_wire_slack", 0.5))
    _write_csv(outdir / "solve.csv", digest, _SOLVE_HEADER, [row])
    if want_dump:
        dump_mesh(extras["crescent"], outdir / "mesh.txt")
    return EXIT_OK if all(extras["verdicts"]) else EXIT_VERIFICATION


def task_sweep(cfg, seed, digest, outdir: Path, tols, jobs: int) -> int:
    sec = _require(cfg, "sweep")
    wire_cfg = dict(_require(cfg, "wire"))
    try:
        lams = sorted(float(x) for x in sec["lams"].split(","))
        profile = sec.get("profile", "hugging")
        nx = int(sec.get("nx", 96))
        rows = int(sec.get("rows", 10))
        n_slices = int(sec.get("n_slices", 10))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid [sweep] section: {exc}") from exc
    if not lams:
        raise ConfigError("[sweep] lams is empty")

    args = [(wire_cfg, lam, profile, nx, rows, seed, n_slices,
             _tol(tols, "kappa_tol", 1e-3), _tol(tols, "near_wire_slack", 0.5))
            for lam in lams]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, args))
    else:
        results = [_sweep_worker(a) for a in args]

    out_rows = [row for row, _ in results]
    all_ok = all(all(v) for _, v in results)
    footer = []
    if len(lams) >= 2:
        lg, lr = np.log(lams), np.log([r[9] for r in out_rows])   # r_max col
        slope = float(np.polyfit(lg, lr, 1)[0])
        footer.append(f"slope_r_max={_fmt(slope)}")
        footer.append(f"A_over_lam_smallest={_fmt(out_rows[0][2] / lams[0])}")
    _write_csv(outdir / "sweep.csv", digest, _SOLVE_HEADER, out_rows, footer)
    return EXIT_OK if all_ok else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# iso-check


def task_iso_check(cfg, seed, digest, outdir: Path, tols) -> int:
    from .isoperimetry import (StripRegion, interval_iso, iso_bound_1,
                               iso_bound_2, load_polygons_csv,
                               random_interval_union, random_staircase,
                               region_area, weighted_perimeter)

    sec = _require(cfg, "iso")
    try:
        Y = float(sec.get("Y", "1.0"))
        m = float(sec.get("m", "0.0"))
    except ValueError as exc:
        raise ConfigError(f"invalid [iso] value: {exc}") from exc

    regions = []
    if "polygons" in sec:
        path = Path(sec["polygons"])
        if not path.is_file():
            raise ConfigError(f"polygon file not found: {path}")
        loops = load_polygons_csv(path)
        regions = [StripRegion(Y=Y, m=m, polygons=(lp,)) for lp in loops]
    else:
        try:
            count = int(sec.get("count", "100"))
        except ValueError as exc:
            raise ConfigError(f"invalid [iso] count: {exc}") from exc
        rng = np.random.default_rng(seed)
        regions = [StripRegion(Y=Y, m=m, polygons=(random_staircase(rng, Y),),
                               validate=False)
                   for _ in range(count)]

    rows = []
    violations = 0
    for i, K in enumerate(regions):
        A = region_area(K)
        P = weighted_perimeter(K)
        l1, r1, ok1 = iso_bound_1(K)
        l2, r2, applicable, ok2 = iso_bound_2(K)
        rows.append([i, A, P, l1, r1, ok1, l2, r2, applicable, ok2])
        if not ok1 or not ok2:
            violations += 1

    n_intervals = int(sec.get("intervals", "0"))
    int_viol = 0
    if n_intervals:
        rng = np.random.default_rng(seed + 1)
        for _ in range(n_intervals):
            J = random_interval_union(rng, Y)
            _, _, ok = interval_iso(J, m)
            if not ok:
                int_viol += 1

    footer = [f"violations={violations}", f"interval_violations={int_viol}"]
    _write_csv(outdir / "iso.csv", digest,
               ["region", "area", "perimeter", "bound1_lhs", "bound1_rhs",
                "bound1_ok", "bound2_lhs", "bound2_rhs", "bound2_applicable",
                "bound2_ok"],
               rows, footer)
    return EXIT_OK if violations == 0 and int_viol == 0 else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# rado / levelset


def _field_from_section(sec, seed):
    from .harmonic import harmonic_polynomial, solve_harmonic

    rings = int(sec.get("rings", "64"))
    sectors = int(sec.get("sectors", str(2 * rings)))
    if "degree" in sec:
        k = int(sec["degree"])
        part = sec.get("part", "re")
        data = harmonic_polynomial(k, part)
        label = f"{part}(z^{k})"
    elif "coefficients" in sec:
        coeffs = [float(c) for c in sec["coefficients"].split(",")]

        def data(th):
            return sum(c * np.cos((i + 1) * th)
                       for i, c in enumerate(coeffs))

        label = "cosine-series"
    else:
        raise ConfigError("need degree or coefficients")
    return solve_harmonic(data, rings=rings, sectors=sectors), label


def task_rado(cfg, seed, digest, outdir: Path, tols) -> int:
    from .harmonic import sign_changes, vanishing_order

    sec = _require(cfg, "rado")
    try:
        field, label = _field_from_section(sec, seed)
        k = int(sec.get("degree", "1"))
        level = float(sec.get("level", "0.0"))
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"invalid [rado] section: {exc}") from exc

    m = vanishing_order(field, (0.0, 0.0))
    sc = sign_changes(field, level)
    holds = sc >= 2 * (m + 1)
    exact = (m == k - 1) and (sc == 2 * (m + 1))
    _write_csv(outdir / "rado.csv", digest,
               ["data", "k", "m", "sign_changes", "holds", "exact"],
               [[label, k, m, sc, holds, exact]])
    return EXIT_OK if holds else EXIT_VERIFICATION


def task_levelset(cfg, seed, digest, outdir: Path, tols) -> int:
    from .harmonic import extract_level_graph

    sec = _require(cfg, "levelset")
    try:
        field, label = _field_from_section(sec, seed)
        levels = [float(x) for x in sec.get("levels", "0.0").split(",")]
        want_dump = sec.getboolean("dump_polylines", fallback=False)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"invalid [levelset] section: {exc}") from exc

    rows = []
    poly_rows = []
    for a in levels:
        g = extract_level_graph(field, a)
        interior_valences = [n.valence for n in g.nodes if n.kind == "interior"]
        rows.append([label, a, g.n_components, len(g.nodes), len(g.edges),
                     g.cycles, g.degenerate,
                     max(interior_valences) if interior_valences else 0])
        if want_dump:
            for ei, ed in enumerate(g.edges):
                for px, py in ed.polyline:
                    poly_rows.append([a, ei, px, py])
    _write_csv(outdir / "levelset.csv", digest,
               ["data", "level", "components", "nodes", "edges", "cycles",
                "degenerate", "max_interior_valence"],
               rows)
    if poly_rows:
        _write_csv(outdir / "levelset_polylines.csv", digest,
                   ["level", "edge", "x", "y"], poly_rows)
    ok = all(not r[6] and r[5] == 0 for r in rows)   # non-degenerate, acyclic
    return EXIT_OK if ok else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# curve-check


def task_curve_check(cfg, seed, digest, outdir: Path, tols) -> int:
    from .curves import (export_curve_csv, frame_ode_residual,
                         genericity_check, parallel_frame, polyline_and_pipe)

    wire = _build_wire(cfg)
    sec = cfg["curve-check"] if "curve-check" in cfg else {}
    try:
        epsilons = [float(x) for x in
                    str(sec.get("epsilons", "0.2,0.1,0.05")).split(",")]
        residual_tol = _tol(tols, "frame_residual_tol", 1e-6)
    except ValueError as exc:
        raise ConfigError(f"invalid [curve-check] value: {exc}") from exc

    frame = parallel_frame(wire)
    residual = frame_ode_residual(frame)
    rep = genericity_check(wire)
    rows = []
    for eps in sorted(epsilons, reverse=True):
        _, dev = polyline_and_pipe(wire, eps)
        rows.append([eps, dev, dev / (eps * eps)])
    _write_csv(outdir / "curve.csv", digest,
               ["epsilon", "deviation", "deviation_over_eps2"], rows,
               [f"frame_residual={_fmt(residual)}",
                f"genericity_passed={_fmt(rep.passed)}",
                f"kappa_max={_fmt(wire.kappa_max)}",
                f"total_length={_fmt(wire.total_length)}"])
    export_curve_csv(wire, outdir / "curve_samples.csv")
    ok = residual <= residual_tol and rep.passed
    return EXIT_OK if ok else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# entry point


def _parse_tol_overrides(pairs: Sequence[str]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for p in pairs:
        if "=" not in p:
            raise ConfigError(f"--tol-override expects KEY=VAL, got {p!r}")
        k, v = p.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise ConfigError(f"non-numeric tolerance {p!r}") from exc
    return out


def run(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(
        prog="threadwire",
        description="thread-problem experiment harness")
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default="out")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--tol-override", action="append", default=[],
                    metavar="KEY=VAL")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    try:
        tols = _parse_tol_overrides(args.tol_override)
        cfg, seed, digest = load_config(args.config, args.seed, tols)
        task_in_cfg = cfg.get("run", "task", fallback=args.task)
        if task_in_cfg != args.task:
            raise ConfigError(
                f"config task {task_in_cfg!r} does not match {args.task!r}")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        outdir = Path(args.out)
        # validate fully before creating any output
        if args.task == "solve":
            runner = lambda: task_solve(cfg, seed, digest, outdir, tols)
        elif args.task == "sweep":
            runner = lambda: task_sweep(cfg, seed, digest, outdir, tols,
                                        args.jobs)
        elif args.task == "iso-check":
            runner = lambda: task_iso_check(cfg, seed, digest, outdir, tols)
        elif args.task == "rado":
            runner = lambda: task_rado(cfg, seed, digest, outdir, tols)
        elif args.task == "levelset":
            runner = lambda: task_levelset(cfg, seed, digest, outdir, tols)
        else:
            runner = lambda: task_curve_check(cfg, seed, digest, outdir, tols)
        outdir.mkdir(parents=True, exist_ok=True)
        return runner()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:   # numerical / module failures
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
