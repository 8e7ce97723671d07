"""Sampler timings across torus / planar grid sizes (wraps ``crsf bench``).

    python3 scripts/bench.py [--sizes 8,16,32,64] [--samples 200]
"""
import sys

from crsf.cli import main

if __name__ == "__main__":
    args = sys.argv[1:] or ["--sizes", "8,16,32,64", "--samples", "200"]
    sys.exit(main(["bench", *args]))
