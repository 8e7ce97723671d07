"""Draw one sample per measure/surface pair as SVG (plus its CSV) under figures/.

    python3 scripts/make_figures.py [--out figures] [--seed 0]
"""
import argparse
from pathlib import Path

from crsf.cli import main as crsf

RUNS = [
    # (surface spec, mksurf flags, sample flags, stem)
    (["kind=torus", "n=32", "m=32"], [], ["--measure", "inc"], "torus_inc"),
    (["kind=cylinder_wired", "n=32", "m=32"], [], ["--measure", "inc"], "cylinder_inc"),
    (["kind=sphere", "k=48"], ["--curvature-scale", "0.02"], ["--measure", "lc"], "sphere_lc"),
    (["kind=sphere", "k=32"], ["--curvature-scale", "0.02"], ["--measure", "lc0", "--eps", "1"], "sphere_lc0"),
    (["kind=hyperbolic_ball", "radius=2", "k=40"], [], ["--measure", "lc", "--truncate"], "hyperbolic_lc"),
]


def run(out: Path, seed: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for spec, mk, samp, stem in RUNS:
        if crsf(["mksurf", *spec, *mk, "--out-dir", str(out), "--prefix", stem]):
            raise SystemExit(f"mksurf failed for {stem}")
        for variant, extra in (("", []), ("_cycles", ["--cycles-only"])):
            code = crsf(["sample", "--graph", str(out / f"{stem}.graph"), *samp, "--seed", str(seed),
                         "--samples", "1", "--out", str(out / f"{stem}{variant}.csv"),
                         "--svg", str(out / f"{stem}{variant}.svg"), *extra])
            if code:
                raise SystemExit(f"sample failed for {stem}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="figures")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    run(Path(a.out), a.seed)
