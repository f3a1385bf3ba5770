"""Batch command line: quasimode, sweep, cluster, propagate, report.

Exit codes: 0 every verdict PASS, 3 some FAIL, 4 only PASS/INCONCLUSIVE with at
least one INCONCLUSIVE, 2 usage or input errors (one line on stderr).
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import io as sio
from .grid import lp_norm, make_grid
from .hermite import (cluster_eigenpairs, cluster_norm_2_to_inf, cluster_norm_2_to_p, count_cluster,
                      discretize_split, level_width)
from .propagator import (admissible, dispersive_ratio, duhamel_energy_check, evolve, localized_delta,
                         propagation_grid, strichartz_quotient)
from .quantize import Kind, residual
from .quasimodes import FAMILY_NAMES, get_family
from .scaling import Verdict, fit_power, parallel_map, sweep
from .symbols import BUILTIN_NAMES, builtin_symbol

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 2, 3, 4
STABILITY = 0.30


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers

_DYADIC = re.compile(r"^\s*2\^(-?\d+)\s*$")


def parse_h_value(s: str) -> float:
    m = _DYADIC.match(s)
    if m:
        return 2.0 ** int(m.group(1))
    try:
        v = float(Fraction(s.strip()))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse h value {s!r}")
    return v


def parse_h(spec: str) -> list[float]:
    """``2^-a..2^-b`` (every power of two in between) or a comma list."""
    if ".." in spec:
        a, b = spec.split("..", 1)
        ma, mb = _DYADIC.match(a), _DYADIC.match(b)
        if not (ma and mb):
            raise UsageError(f"h range must look like 2^-a..2^-b, got {spec!r}")
        ea, eb = int(ma.group(1)), int(mb.group(1))
        step = 1 if eb >= ea else -1
        hs = [2.0**e for e in range(ea, eb + step, step)]
    else:
        hs = [parse_h_value(x) for x in spec.split(",") if x.strip()]
    if not hs or any(not 0 < h <= 1 for h in hs):
        raise UsageError(f"h values must lie in (0, 1], got {spec!r}")
    return hs


def parse_p_list(items) -> list[float]:
    out = []
    for item in items:
        for s in str(item).split(","):
            s = s.strip()
            if not s:
                continue
            if s.lower() in ("inf", "infinity"):
                out.append(math.inf)
                continue
            try:
                v = float(Fraction(s))
            except (ValueError, ZeroDivisionError):
                raise UsageError(f"cannot parse exponent {s!r}")
            if v < 1:
                raise UsageError(f"exponent must be >= 1, got {s}")
            out.append(v)
    return out


def parse_floats(items) -> list[float]:
    out = []
    for item in items:
        for s in str(item).split(","):
            if s.strip():
                try:
                    out.append(float(Fraction(s.strip())))
                except (ValueError, ZeroDivisionError):
                    raise UsageError(f"cannot parse number {s!r}")
    return out


def p_label(p: float) -> str:
    return "inf" if math.isinf(p) else sio.fmt_float(p)


def exit_code(verdicts) -> int:
    vs = list(verdicts)
    if any(v is Verdict.FAIL for v in vs):
        return EXIT_FAIL
    if any(v is Verdict.INCONCLUSIVE for v in vs):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _out_dir(cfg) -> Path:
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _stability_verdict(values) -> Verdict:
    v = np.asarray(values, dtype=float)
    med = float(np.median(v))
    return Verdict.PASS if np.all(np.abs(v / med - 1) <= STABILITY) else Verdict.FAIL


# ---------------------------------------------------------------------------
# commands

def cmd_quasimode(cfg) -> int:
    if not cfg.family:
        raise UsageError("quasimode needs --family")
    fam = get_family(cfg.family, cfg.n)
    hs = parse_h(cfg.h) if cfg.h else [2.0**-e for e in range(fam.default_h[0], fam.default_h[1] + 1)]
    ps = parse_p_list(cfg.p or ["2", "inf"])
    out = _out_dir(cfg)

    def one(h):
        u = fam.build(h, cfg.L, cfg.N)
        return u, [lp_norm(u, p) for p in ps], residual(fam.symbol_at(h), u, h, Kind(cfg.kind))

    rows = []
    for h, (u, norms, res) in zip(hs, parallel_map(one, hs)):
        rows.append([h, u.grid.N, res] + norms)
        if cfg.dump:
            sio.dump_field(out / f"{fam.name}_n{fam.n}_h{h:.17g}.sclb", u)
    header = ["h", "N", "residual"] + [f"norm_p{p_label(p)}" for p in ps]
    sio.write_csv(out / f"{fam.name}_n{fam.n}_norms.csv", header, rows)
    return EXIT_OK


def cmd_sweep(cfg) -> int:
    if not cfg.family:
        raise UsageError("sweep needs --family")
    fam = get_family(cfg.family, cfg.n)
    hs = parse_h(cfg.h) if cfg.h else [2.0**-e for e in range(fam.default_h[0], fam.default_h[1] + 1)]
    if len(hs) < 3:
        raise UsageError("a sweep needs at least 3 values of h")
    ps = parse_p_list(cfg.p or ["2", "inf"])
    tol = 0.05 if cfg.tol is None else cfg.tol
    reports = sweep(fam, ps, hs, model=cfg.model, tol=tol, L=cfg.L, N=cfg.N)
    out = _out_dir(cfg)
    cls = fam.classify()
    doc = {"command": "sweep", "family": fam.name, "n": fam.n, "case": fam.case.value,
           "classification": cls.as_dict(), "model": cfg.model, "tol": tol,
           "reports": [r.as_dict() for r in reports]}
    sio.write_json(out / f"sweep_{fam.name}_n{fam.n}.json", doc)
    rows = []
    for r in reports:
        for h, v in zip(r.h, r.norms):
            rows.append([fam.name, fam.n, p_label(r.p), "point", h, v, None, None, None, None])
        rows.append([fam.name, fam.n, p_label(r.p), "summary", None, None, r.slope, r.stderr, r.predicted.mu,
                     r.verdict.value])
    sio.write_csv(out / f"sweep_{fam.name}_n{fam.n}.csv",
                  ["family", "n", "p", "row", "h", "norm", "slope", "stderr", "predicted", "verdict"], rows)
    for r in reports:
        print(f"{fam.name} n={fam.n} p={p_label(r.p)} slope={r.slope:.4f} stderr={r.stderr:.2g} "
              f"predicted={r.predicted.mu:.4f} {r.verdict.value}")
    return exit_code(r.verdict for r in reports)


def _cluster_grid(n: int, lam: float, L: Optional[float], N: Optional[int]):
    L = lam + 6.0 if L is None else L
    if N is None:
        N = 64
        while math.pi * N / (2 * L) < 1.3 * (lam + 1):
            N *= 2
    return make_grid(n, L, N, 1.0)


def count_grid(n: int, h: float, L: Optional[float] = None, N: Optional[int] = None):
    """Grid for counting eigenvalues of (hD)^2 + |x|^2 near 1."""
    if n == 1:
        L = 2.5 if L is None else L
        N = N or (1 << max(3, math.ceil(math.log2(3 * L / (math.pi * h)))))
    else:
        N = N or {2: 64, 3: 16}[n]
        L = math.sqrt(math.pi * h * N / 2) if L is None else L
    return make_grid(n, L, N, h)


def cmd_cluster(cfg) -> int:
    n = cfg.n or 1
    out = _out_dir(cfg)
    doc = {"command": "cluster", "n": n}
    verdicts = []
    if cfg.h:
        hs = parse_h(cfg.h)
        sym = builtin_symbol("harmonic", n, {"E": 0.0})
        counts = []
        for h in hs:
            g = count_grid(n, h, cfg.L, cfg.N)
            counts.append(count_cluster(discretize_split(g, sym.kinetic, sym.potential), 1.0, h))
        doc["counts"] = [{"h": h, "count": c} for h, c in zip(hs, counts)]
        if len(hs) >= 3 and min(counts) > 0:
            f = fit_power(hs, counts)
            doc["count_slope"] = f.slope
            doc["count_slope_stderr"] = f.stderr
            doc["predicted_count_slope"] = n - 1
            if n > 1:
                tol = 0.15 if cfg.tol is None else cfg.tol
                ok = abs(f.slope - (n - 1)) <= tol
                verdicts.append(Verdict.PASS if ok else Verdict.FAIL)
        if n == 1:
            verdicts.append(Verdict.PASS if max(counts) <= 2 else Verdict.FAIL)
        rows = [[h, c] for h, c in zip(hs, counts)]
        sio.write_csv(out / f"cluster_counts_n{n}.csv", ["h", "count"], rows)
    else:
        if cfg.levels:
            lams = [math.sqrt(2 * int(m) + n) for m in parse_floats(cfg.levels)]
            widths = [level_width(l) for l in lams]
        elif cfg.lam:
            lams = parse_floats(cfg.lam)
            widths = [1.0 if cfg.width is None else cfg.width] * len(lams)
        else:
            raise UsageError("cluster needs --h (counting) or --lam/--levels (norms)")
        ps = parse_p_list(cfg.p or ["inf"])
        if any(p < 2 for p in ps):
            raise UsageError("cluster norms need p >= 2")
        rows, per_p = [], {p: [] for p in ps}
        for lam, w in zip(lams, widths):
            c = cluster_eigenpairs(n, lam, w, _cluster_grid(n, lam, cfg.L, cfg.N))
            for p in ps:
                v = cluster_norm_2_to_inf(c) if math.isinf(p) else cluster_norm_2_to_p(c, p, seed=cfg.seed).value
                per_p[p].append(v)
                rows.append([lam, w, c.size, p_label(p), v])
        doc["points"] = [{"lam": r[0], "width": r[1], "size": r[2], "p": r[3], "norm": r[4]} for r in rows]
        fits = {}
        for p, vals in per_p.items():
            if len(lams) >= 3 and min(vals) > 0:
                inv = [1.0 / l for l in lams]  # fit against log(lam) as a power of 1/lam
                f = fit_power(inv, vals)
                entry = {"slope": f.slope, "stderr": f.stderr}
                if min(lams) > 2:
                    fl = fit_power(inv, vals, "power_log")
                    entry.update(log_model_slope=fl.slope, log_coef=fl.log_coef)
                fits[p_label(p)] = entry
        doc["fits_vs_log_lam"] = fits
        sio.write_csv(out / f"cluster_norms_n{n}.csv", ["lam", "width", "size", "p", "norm"], rows)
    sio.write_json(out / f"cluster_n{n}.json", doc)
    return exit_code(verdicts)


def cmd_propagate(cfg) -> int:
    check = cfg.check or "dispersive"
    k = cfg.k or cfg.n or 1
    hs = parse_h(cfg.h) if cfg.h else [2.0**-e for e in range(4, 10)]
    sym = builtin_symbol("schrodinger", k) if not cfg.symbol else _symbol_from_cfg(cfg, k)
    out = _out_dir(cfg)
    doc = {"command": "propagate", "check": check, "k": k, "symbol": sym.name}
    verdicts = []
    if check == "strichartz":
        ps, qs = parse_p_list(cfg.p or ["6"]), parse_p_list(cfg.q or ["6"])
        if len(ps) != 1 or len(qs) != 1:
            raise UsageError("strichartz needs exactly one --p and one --q")
        p, q = ps[0], qs[0]
        if not admissible(p, q, k):
            raise UsageError(f"pair ({p_label(p)}, {p_label(q)}) is not admissible for k={k}: need 2/p + k/q = k/2")
        log_mode = p == 2 and math.isinf(q)
        vals = parallel_map(lambda h: strichartz_quotient(sym, None, h, p, q, log_mode=log_mode), hs)
        doc.update(p=p, q=q, log_mode=log_mode, table=[{"h": h, "quotient": v} for h, v in zip(hs, vals)])
        verdicts.append(_stability_verdict(vals))
    elif check == "dispersive":
        def one(h):
            ts = np.geomspace(h, 0.5, 24)
            return dispersive_ratio(sym, h, ts)

        tables = parallel_map(one, hs)
        sups = [max(r for _, r in tab) for tab in tables]
        doc["table"] = [{"h": h, "t": t, "ratio": r} for h, tab in zip(hs, tables) for t, r in tab]
        doc["sup_ratio"] = [{"h": h, "sup": s} for h, s in zip(hs, sups)]
        verdicts.append(_stability_verdict(sups))
    elif check == "unitarity":
        rows = []
        for h in hs:
            g = propagation_grid(k, h, 0.5)
            run = evolve(sym, localized_delta(g), h, 0.5, h / 8)
            rows.append({"h": h, "max_step_defect": run.unitarity_defect})
        doc["table"] = rows
        verdicts.append(Verdict.PASS if all(r["max_step_defect"] <= 1e-10 for r in rows) else Verdict.FAIL)
    elif check == "duhamel":
        rows = []
        for h in hs:
            g = propagation_grid(k, h, 0.5)
            u0 = localized_delta(g).normalized()
            lhs, rhs = duhamel_energy_check(sym, u0, u0, h, 0.25, h / 8)
            rows.append({"h": h, "lhs": lhs, "rhs": rhs})
        doc["table"] = rows
        verdicts.append(Verdict.PASS if all(r["lhs"] <= r["rhs"] * (1 + 1e-6) for r in rows) else Verdict.FAIL)
    else:
        raise UsageError(f"unknown check {check!r}; expected dispersive, strichartz, unitarity or duhamel")
    doc["verdict"] = verdicts[0].value
    sio.write_json(out / f"propagate_{check}_k{k}.json", doc)
    return exit_code(verdicts)


def _symbol_from_cfg(cfg, n):
    name = cfg.symbol
    if name not in BUILTIN_NAMES:
        raise UsageError(f"unknown symbol {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")
    return builtin_symbol(name, n)


def report_series(docs: list[dict]) -> list[dict]:
    """Curves and measured points per (family, n), in first-seen order."""
    series, seen = [], {}
    for d in docs:
        for r in d.get("reports", []):
            key = (r["family"], int(r["n"]))
            if key not in seen:
                fam = get_family(*key)
                curve = []
                for i in range(0, 51):
                    t = 0.01 * i
                    p = math.inf if t == 0 else 1.0 / t
                    curve.append((t, fam.predicted_mu(p)))
                seen[key] = {"label": f"{key[0]} n={key[1]}", "curve": curve, "points": []}
                series.append(seen[key])
            p = _as_float(r["p"])
            seen[key]["points"].append((0.0 if math.isinf(p) else 1.0 / p, _as_float(r["slope"])))
    for s in series:
        s["points"].sort()
    return series


def _as_float(v) -> float:
    return float(v)  # reports store infinities as the string "inf"


def cmd_report(cfg) -> int:
    from .plot import exponent_svg

    paths = [Path(p) for p in cfg.inputs]
    if not paths:
        raise UsageError("report needs at least one input JSON file")
    docs = []
    for p in sorted(paths):
        try:
            docs.append(json.loads(p.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read report {p}: {e}")
    rows = []
    for d in docs:
        for r in d.get("reports", []):
            rows.append({k: r[k] for k in ("family", "n", "p", "slope", "stderr", "predicted", "literal_predicted",
                                           "correction", "verdict")})
    if not rows:
        raise UsageError("input files contain no sweep reports")
    rows.sort(key=lambda r: (r["family"], int(r["n"]), _as_float(r["p"])))
    out = _out_dir(cfg)
    sio.write_json(out / "summary.json", {"command": "report", "rows": rows})
    (out / "summary.svg").write_text(exponent_svg(report_series(docs)), encoding="utf-8")
    return exit_code(Verdict(r["verdict"]) for r in rows if r["verdict"])


COMMANDS = {"quasimode": cmd_quasimode, "sweep": cmd_sweep, "cluster": cmd_cluster,
            "propagate": cmd_propagate, "report": cmd_report}


class _Parser(argparse.ArgumentParser):
    """Usage errors as one line on stderr, exit code 2."""

    def error(self, message):
        msg = " ".join(message.split())
        self.exit(EXIT_USAGE, f"{self.prog}: error: {msg}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sclb", description="Semiclassical L^p growth laboratory.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value config file; flags override it")
        sp.add_argument("--family", help="one of " + ", ".join(FAMILY_NAMES))
        sp.add_argument("--symbol")
        sp.add_argument("--n", type=int)
        sp.add_argument("--h", help="dyadic range 2^-a..2^-b or comma list")
        sp.add_argument("--p", action="append", help="comma list, 'inf' allowed")
        sp.add_argument("--q", action="append")
        sp.add_argument("--L", type=float)
        sp.add_argument("--N", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--model", choices=("power", "power_log"))
        sp.add_argument("--kind", choices=("weyl", "left"), help="quantization used for residuals")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--dump", action="store_true", default=None)
        sp.add_argument("--check", choices=("dispersive", "strichartz", "unitarity", "duhamel"))
        sp.add_argument("--k", type=int)
        sp.add_argument("--lam", action="append")
        sp.add_argument("--levels", action="append")
        sp.add_argument("--width", type=float)
        if name == "report":
            sp.add_argument("inputs", nargs="*")
    return ap


def config_from_args(ns) -> sio.RunConfig:
    cfg = sio.RunConfig.load(ns.config) if ns.config else sio.RunConfig()
    cfg.command = ns.command
    for key in ("family", "symbol", "n", "h", "L", "N", "tol", "model", "seed", "out", "dump", "check", "k",
                "width", "kind"):
        v = getattr(ns, key, None)
        if v is not None:
            setattr(cfg, key, v)
    for key in ("p", "q", "lam", "levels", "inputs"):
        v = getattr(ns, key, None)
        if v:
            setattr(cfg, key, list(v))
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, ValueError, OSError) as e:
        msg = " ".join(str(e).split())
        print(f"sclb {ns.command}: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
