"""Small end-to-end pipeline demo: field, density, path, clock, time
change, with the invariant checks printed at the end.

    python scripts/demo_run.py [outdir]

Uses a level-4 field on a 32x32 grid and a half-second horizon so the
whole run takes a few seconds; artifacts land in runs/demo by default.
"""

import sys
from pathlib import Path

from liouville.config import RunConfig
from liouville.pipeline import checks_passed, run_pipeline


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else "runs/demo"
    cfg = RunConfig(gamma=0.5, level=4, grid_halfwidth=2.0, grid_size=32,
                    horizon=0.5, dt=1e-3, annuli=(2, 3), n_paths=1, seed=7,
                    output_dir=outdir)
    manifest = run_pipeline(cfg)
    for name, val in sorted(manifest["checks"].items()):
        if isinstance(val, bool):
            print(f"{'PASS' if val else 'FAIL'}  {name}")
    print(f"artifacts in {Path(outdir).resolve()}:")
    for name in sorted(manifest["artifacts"]):
        print(f"  {name}")
    return 0 if checks_passed(manifest) else 1


if __name__ == "__main__":
    sys.exit(main())
