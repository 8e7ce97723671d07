"""``crsf`` command line: mksurf, sample, verify, closedform, bench."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .closed_forms import curved_cylinder_ratio, p_tau, p_tau_terms, wired_cylinder_loop_pgf
from .connection import (ConnectionError_, U1Connection, connection_from_face_curvature,
                         format_connection, parse_connection, realize_flat)
from .graph import GraphError, WeightedGraph, format_graph, parse_graph
from .sampler import (CurvatureConditionError, SamplerConfig, SamplerError, alpha_const, alpha_inc,
                      alpha_lc, alpha_lc0, sample_many, worker_count)
from .surfaces import (KINDS, SurfaceError, SurfaceModel, classify_cycle, enclosed_faces,
                       format_surface, make_surface, parse_surface)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
           "#bcbd22", "#7f7f7f"]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    samples: int = 0
    params: dict = field(default_factory=dict)

    def header(self) -> str:
        cfg = json.dumps(asdict(self), sort_keys=True, default=str)
        return f"# crsf {__version__}\n# config: {cfg}\n# seed: {self.seed}\n"


# ---------------------------------------------------------------------------
# mksurf


def _kv(tokens: list[str]) -> dict:
    out = {}
    for t in tokens:
        if "=" not in t:
            raise UsageError(f"expected key=value, got {t!r}")
        k, v = t.split("=", 1)
        out[k] = v
    return out


def _scale_curvature(surf: SurfaceModel, scale: float) -> SurfaceModel:
    """Face curvatures times ``scale``; on closed surfaces the polar cap keeps Gauss-Bonnet."""
    if scale == 1.0:
        return surf
    K = scale * surf.face_curvature
    ext = surf.exterior_curvature
    if surf.closed:
        ext = 2 * math.pi * surf.euler_char - float(K.sum())
    return replace(surf, face_curvature=K, exterior_curvature=ext)


def _surface_connection(g: WeightedGraph, surf: SurfaceModel, monodromy) -> U1Connection:
    if surf.kind in ("sphere", "hyperbolic_ball"):
        return connection_from_face_curvature(g, surf)
    mono = [0.0] * surf.ncuts if monodromy is None else list(monodromy)
    if len(mono) != surf.ncuts:
        raise UsageError(f"surface has {surf.ncuts} cuts; got {len(mono)} monodromies")
    return realize_flat(g, surf.cut_crossings, mono)


def cmd_mksurf(args) -> int:
    spec = _kv(args.spec)
    kind = spec.pop("kind", None)
    if kind not in KINDS:
        raise UsageError(f"kind must be one of {', '.join(KINDS)}; got {kind!r}")
    g, surf = make_surface(kind, **spec)
    mono = [float(x) for x in args.monodromy.split(",")] if args.monodromy else None
    surf = _scale_curvature(surf, args.curvature_scale)
    conn = _surface_connection(g, surf, mono)
    rc = RunConfig("mksurf", 0, 0, {"kind": kind, **spec, "curvature_scale": args.curvature_scale,
                                    "monodromy": args.monodromy})
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.prefix or kind
    files = {".graph": format_graph(g), ".surf": format_surface(surf), ".conn": format_connection(conn)}
    for ext, text in files.items():
        (out / (stem + ext)).write_text(rc.header() + text)
    print(f"{kind}: {g.vertex_count} vertices, {g.edge_count} edges, {len(surf.faces)} faces, "
          f"{surf.ncuts} cuts")
    total = surf.total_curvature()
    line = f"total curvature {total:.12g}"
    if surf.closed:
        resid = total - 2 * math.pi * surf.euler_char
        line += f" (2 pi chi = {2 * math.pi * surf.euler_char:.12g}, residual {resid:.2e})"
    print(line)
    for ext in files:
        print(f"wrote {out / (stem + ext)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample


def _load(args):
    gpath = Path(args.graph)
    if not gpath.is_file():
        raise UsageError(f"graph file {gpath} not found")
    spath = Path(args.surface) if args.surface else gpath.with_suffix(".surf")
    cpath = Path(args.conn) if args.conn else gpath.with_suffix(".conn")
    g = parse_graph(gpath.read_text())
    surf = parse_surface(spath.read_text(), g.edge_count) if spath.is_file() else None
    conn = parse_connection(cpath.read_text()) if cpath.is_file() else None
    return g, surf, conn


def _alpha_for(args, g, surf, conn):
    m = args.measure
    if m == "const":
        return alpha_const(args.alpha)
    if surf is None:
        raise UsageError(f"measure {m} needs a surface file")
    if m == "inc":
        if surf.ncuts == 0:
            raise UsageError(f"inc on {surf.kind}: every cycle is contractible, so the incompressible "
                             "measure gives every CRSF weight zero (empty support)")
        return alpha_inc(surf, args.alpha if args.alpha is not None else 0.5)
    if conn is None or not isinstance(conn, U1Connection):
        raise UsageError(f"measure {m} needs a U(1) connection file")
    if m == "lc":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return alpha_lc(conn, surf, truncate=args.truncate)
    if m == "lc0":
        contractible = surf.kind in ("sphere", "hyperbolic_ball") or (
            surf.kind == "planar_punctured" and surf.ncuts == 0)
        if not contractible:
            raise UsageError(f"lc0 on {surf.kind}: the squared-curvature weight needs single-valued "
                             "angle lifts, which only a contractible (or punctured-sphere) chart provides")
        if args.eps is None:
            raise UsageError("lc0 needs --eps")
        return alpha_lc0(conn, args.eps)
    raise UsageError(f"unknown measure {m!r}")


def _dirichlet(args, g, surf) -> frozenset:
    mode = args.boundary
    if mode == "auto":
        mode = "dirichlet" if surf is not None and surf.kind == "cylinder_wired" else "free"
    if mode == "free":
        return frozenset()
    if surf is None or not surf.boundary:
        raise UsageError("--boundary dirichlet needs a surface with boundary vertices")
    return frozenset(surf.boundary)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def sample_rows(g, surf, conn, batch, offset: int = 0):
    """One CSV row per sample: id, loop count, then per-loop fields joined with ';'."""
    ang = conn.oe_angle if isinstance(conn, U1Connection) else None
    for i in range(len(batch)):
        cycles = sorted(batch.crsf(i).cycles_in(g), key=lambda c: min(c))
        hom, th, ln, area = [], [], [], []
        for c in cycles:
            if surf is not None and surf.ncuts:
                hom.append(":".join(str(int(x)) for x in classify_cycle(surf, c)))
            else:
                hom.append("")
            th.append(_fmt(float(ang[list(c)].sum())) if ang is not None else "")
            ln.append(str(len(c)))
            if surf is not None:
                f = enclosed_faces(g, surf, c)
                area.append("" if f is None else str(len(f)))
            else:
                area.append("")
        yield [offset + i, len(cycles), ";".join(hom), ";".join(th), ";".join(ln), ";".join(area)]


def render_svg(g, surf, crsf, cycles_only: bool = False, stroke: float = 1.0, rc: RunConfig | None = None) -> str:
    pos = np.asarray(surf.positions, dtype=float)
    skip_v = set()
    if surf.kind == "cylinder_wired":
        skip_v = set(surf.boundary)
    skip_e = set()
    if surf.kind == "torus":
        skip_e = set(np.flatnonzero(np.any(surf.cut_crossings != 0, axis=1)).tolist())
    shown = [v for v in range(g.vertex_count) if v not in skip_v]
    lo, hi = pos[shown].min(axis=0), pos[shown].max(axis=0)
    span = max(float((hi - lo).max()), 1e-9)
    size, pad = 800.0, 20.0
    scale = (size - 2 * pad) / span

    def xy(v):
        x, y = pos[v]
        return pad + (x - lo[0]) * scale, size - pad - (y - lo[1]) * scale

    comp = crsf.component_ids(g)
    on_cycle = {int(oe) >> 1 for c in crsf.cycles_in(g) for oe in c}
    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
              f'viewBox="0 0 {size:.0f} {size:.0f}">\n')
    if rc is not None:
        out.write("<!--\n" + rc.header().replace("--", "- -") + "-->\n")
    out.write('<rect width="100%" height="100%" fill="white"/>\n')
    for v, oe in enumerate(crsf.parent):
        if oe < 0:
            continue
        e = int(oe) >> 1
        w = int(g.head[oe])
        if e in skip_e or v in skip_v or w in skip_v:
            continue
        bold = e in on_cycle
        if cycles_only and not bold:
            continue
        (x0, y0), (x1, y1) = xy(v), xy(w)
        color = PALETTE[int(comp[v]) % len(PALETTE)]
        width = stroke * (3.0 if bold else 1.0)
        out.write(f'<polyline points="{x0:.2f},{y0:.2f} {x1:.2f},{y1:.2f}" stroke="{color}" '
                  f'stroke-width="{width:.2f}" fill="none" stroke-linecap="round"/>\n')
    out.write("</svg>\n")
    return out.getvalue()


def cmd_sample(args) -> int:
    if args.samples <= 0:
        raise UsageError("--samples must be positive")
    out = Path(args.out)
    if not out.parent.exists():
        raise UsageError(f"output directory {out.parent} does not exist")
    g, surf, conn = _load(args)
    alpha = _alpha_for(args, g, surf, conn)
    dirichlet = _dirichlet(args, g, surf)
    single = args.measure == "lc0"
    cfg = SamplerConfig(seed=args.seed, dirichlet=dirichlet, condition_single_loop=single,
                        max_steps=args.max_steps, threads=worker_count())
    rc = RunConfig("sample", args.seed, args.samples,
                   {"graph": args.graph, "measure": args.measure, "eps": args.eps, "alpha": args.alpha,
                    "boundary": sorted(dirichlet), "truncate": args.truncate})
    t0 = time.perf_counter()
    chunk = max(1, args.chunk)
    hist: dict[int, int] = {}
    first = None
    with out.open("w", newline="") as fh:
        fh.write(rc.header())
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "n_loops", "homology", "theta", "edge_count", "area"])
        for start in range(0, args.samples, chunk):
            n = min(chunk, args.samples - start)
            batch = sample_many(g, alpha, cfg, n, offset=start)
            if first is None:
                first = batch.crsf(0)
            for row in sample_rows(g, surf, conn, batch, start):
                hist[row[1]] = hist.get(row[1], 0) + 1
                w.writerow(row)
    dt = time.perf_counter() - t0
    print(f"{args.samples} samples of {alpha.tag} in {dt:.2f} s -> {out}")
    print("loop-count histogram:")
    for k in sorted(hist):
        print(f"  {k:3d} loops: {hist[k]:8d}  ({hist[k] / args.samples:.4f})")
    if args.svg:
        if surf is None:
            raise UsageError("--svg needs a surface file (vertex positions)")
        Path(args.svg).write_text(render_svg(g, surf, first, args.cycles_only, args.stroke, rc))
        print(f"wrote {args.svg}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _verify_suite(name: str, seed: int, samples: int):
    from . import oracle as O
    from .closed_forms import wired_cylinder_loop_pgf as pgf
    from .connection import SU2Connection, random_su2
    from .graph import build_graph
    from .surfaces import make_planar_grid, make_wired_cylinder
    rng = np.random.default_rng(seed)
    reports = []
    if name == "det":
        worst, ok = 0.0, True
        for _ in range(200):
            g = O.random_fixture_graph(rng)
            r = O.check_det_identity(g, U1Connection(rng.uniform(-np.pi, np.pi, g.edge_count)))
            worst, ok = max(worst, r.max_error), ok and r.passed
        reports.append(O.Report("det identity (U1), 200 random graphs", ok, worst))
    elif name == "su2":
        worst, ok = 0.0, True
        for _ in range(100):
            g = O.random_fixture_graph(rng)
            r = O.check_det_identity(g, SU2Connection(random_su2(rng, g.edge_count)))
            worst, ok = max(worst, r.max_error), ok and r.passed
        reports.append(O.Report("Z(Phi)^2 = det (SU2), 100 random graphs", ok, worst))
    elif name == "lerw":
        tri = build_graph([(0, 1), (1, 2), (2, 0)])
        reports.append(O.check_lerw_lemma(tri, U1Connection([0.8, 0.0, 0.0]), samples, seed))
        g, surf = make_planar_grid(3, 3)
        conn = connection_from_face_curvature(g, surf, [0.9, 0.0, 0.0, 0.0])
        reports.append(O.check_lerw_lemma(g, conn, samples, seed))
    elif name in ("markov", "restriction", "domination"):
        idx = {"markov": 0, "restriction": 1, "domination": 2}[name]
        reports.append(O.check_markov_restriction_domination(seed)[idx])
    elif name == "pgf":
        g, surf = make_wired_cylinder(4, 4)
        fam = O.cycle_families(g, O.cycle_weight_fn(g, surf, "inc", False), surf.boundary)
        exact = fam.loop_count_distribution()
        formula = pgf(4, 4)
        k = max(len(exact), len(formula))
        err = float(np.abs(np.pad(exact, (0, k - len(exact))) - np.pad(formula, (0, k - len(formula)))).max())
        reports.append(O.Report("wired cylinder pgf n=m=4 vs enumeration", err <= 1e-9, err))
    else:
        raise UsageError(f"unknown suite {name!r}")
    return reports


SUITES = ["det", "su2", "lerw", "markov", "restriction", "domination", "pgf"]


def cmd_verify(args) -> int:
    names = SUITES if args.suite == "all" else [args.suite]
    rc = RunConfig("verify", args.seed, args.samples, {"suite": args.suite})
    rows = []
    ok = True
    for name in names:
        for r in _verify_suite(name, args.seed, args.samples):
            print(r.line())
            rows.append([name, r.name, "PASS" if r.passed else "FAIL", f"{r.max_error:.6e}"])
            ok = ok and r.passed
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(rc.header())
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["suite", "check", "result", "max_error"])
            w.writerows(rows)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# closedform


def cmd_closedform(args) -> int:
    rc = RunConfig("closedform", 0, 0, {k: v for k, v in vars(args).items() if k != "func"})
    rows: list[list] = []
    if args.what == "pgf":
        coef = wired_cylinder_loop_pgf(args.n, args.m)
        header = ["k", "probability"]
        rows = [[k, repr(float(p))] for k, p in enumerate(coef)]
    elif args.what == "ptau":
        header = ["tau", "X", "value", "terms", "tail_bound"]
        for tau in args.tau:
            J, bound = p_tau_terms(tau, args.X)
            rows.append([tau, args.X, repr(p_tau(tau, args.X)), J, f"{bound:.3e}"])
    else:
        header = ["n", "c", "ratio"]
        for c in args.c:
            rows.append([args.n, c, repr(curved_cylinder_ratio(args.n, c))])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        fh.write(rc.header())
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args) -> int:
    from .surfaces import make_planar_grid, make_torus_grid
    sizes = [int(x) for x in args.sizes.split(",")]
    rows = []
    print(f"{'measure':>12} {'n':>4} {'|V|':>6} {'ms/sample':>10} {'steps/sample':>13}")
    for measure in ("alpha=1", "inc", f"lc0({args.eps:g})"):
        ts, Vs, ss = [], [], []
        for n in sizes:
            if measure == "alpha=1":
                g, surf = make_torus_grid(n, n)
                a, cfg = alpha_const(1.0), SamplerConfig(seed=args.seed)
            elif measure == "inc":
                g, surf = make_torus_grid(n, n)
                a, cfg = alpha_inc(surf), SamplerConfig(seed=args.seed)
            else:
                g, surf = make_planar_grid(n, n)
                # uniform curvature with total 0.9/sqrt(eps), so eps*theta^2 stays below 0.81
                K = np.full(len(surf.faces), 0.9 / math.sqrt(args.eps) / len(surf.faces))
                conn = connection_from_face_curvature(g, surf, K)
                a = alpha_lc0(conn, args.eps)
                cfg = SamplerConfig(seed=args.seed, condition_single_loop=True)
            sample_many(g, a, cfg, 1)  # compile / warm up
            t0 = time.perf_counter()
            b = sample_many(g, a, cfg, args.samples)
            dt = (time.perf_counter() - t0) / args.samples
            ts.append(dt)
            Vs.append(g.vertex_count)
            ss.append(float(b.steps.mean()))
            # wall times go to stdout only, so the CSV is reproducible
            rows.append([measure, n, g.vertex_count, args.samples, repr(float(b.steps.mean()))])
            print(f"{measure:>12} {n:4d} {g.vertex_count:6d} {dt * 1e3:10.4f} {b.steps.mean():13.1f}")
        if len(sizes) > 1:
            slope = np.polyfit(np.log(Vs), np.log(ts), 1)[0]
            sslope = np.polyfit(np.log(Vs), np.log(ss), 1)[0]
            print(f"{measure:>12} observed exponent in |V|: time {slope:.2f}, steps {sslope:.2f}")
    if args.out:
        rc = RunConfig("bench", args.seed, args.samples, {"sizes": sizes, "eps": args.eps})
        with open(args.out, "w", newline="") as fh:
            fh.write(rc.header())
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["measure", "n", "vertices", "samples", "steps_per_sample"])
            w.writerows(rows)
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crsf", description=__doc__)
    p.add_argument("--version", action="version", version=f"crsf {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("mksurf", help="build graph, surface and connection files")
    s.add_argument("spec", nargs="+", help="kind=<kind> followed by key=value parameters")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--prefix", default=None)
    s.add_argument("--curvature-scale", type=float, default=1.0)
    s.add_argument("--monodromy", default=None, help="comma-separated lifts, one per cut")
    s.set_defaults(func=cmd_mksurf)

    s = sub.add_parser("sample", help="draw CRSFs and write per-sample loop statistics")
    s.add_argument("--graph", required=True)
    s.add_argument("--surface", default=None)
    s.add_argument("--conn", default=None)
    s.add_argument("--measure", choices=["inc", "lc", "lc0", "const"], required=True)
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--alpha", type=float, default=None, help="keep probability for const / inc")
    s.add_argument("--truncate", action="store_true", help="lc: give weight 0 to cycles beyond pi/2")
    s.add_argument("--boundary", choices=["auto", "free", "dirichlet"], default="auto")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=1)
    s.add_argument("--max-steps", type=int, default=10 ** 9)
    s.add_argument("--chunk", type=int, default=10000)
    s.add_argument("--out", required=True)
    s.add_argument("--svg", default=None)
    s.add_argument("--cycles-only", action="store_true")
    s.add_argument("--stroke", type=float, default=1.0)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("verify", help="run oracle checks")
    s.add_argument("--suite", choices=SUITES + ["all"], default="all")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=0, help="Monte Carlo walks for the lerw suite")
    s.add_argument("--csv", default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("closedform", help="cylinder closed forms as CSV")
    s.add_argument("what", choices=["pgf", "ptau", "ratio"])
    s.add_argument("--n", type=int, default=16)
    s.add_argument("--m", type=int, default=16)
    s.add_argument("--tau", type=float, nargs="+", default=[1.0])
    s.add_argument("--X", type=float, default=0.0)
    s.add_argument("--c", type=float, nargs="+", default=[0.1, 0.2, 0.4])
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_closedform)

    s = sub.add_parser("bench", help="sampler timings across grid sizes")
    s.add_argument("--sizes", default="8,16,32")
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--eps", type=float, default=1e-4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"crsf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SurfaceError, GraphError, ConnectionError_) as exc:
        print(f"crsf: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CurvatureConditionError as exc:
        print(f"crsf: curvature condition violated: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SamplerError as exc:
        print(f"crsf: sampling failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
