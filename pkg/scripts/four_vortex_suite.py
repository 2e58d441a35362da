#!/usr/bin/env python3
"""Run the four-vortex benchmark end to end.

Produces, under results/ (or a directory given as the first argument):

  vortex_method1.csv / vortex_method2.csv / vortex_rk2.csv
      300-step trajectories of the two implicit schemes and the explicit
      reference at h = 1.0,
  vortex_drift_all.csv
      500-step energy-drift comparison of all three methods,
  vortex_drift_symplectic.csv
      500-step zoom onto the two implicit schemes only.

The CSVs feed the plotting front end (plots/render.py).
"""

import json
import pathlib
import sys
import tempfile

from diracflow.cli import main as cli

CONFIG_DIR = pathlib.Path(__file__).resolve().parent.parent / "configs"


def _with_steps(src: pathlib.Path, steps: int, workdir: pathlib.Path) -> pathlib.Path:
    cfg = json.loads(src.read_text())
    cfg["steps"] = steps
    out = workdir / f"{src.stem}_{steps}.json"
    out.write_text(json.dumps(cfg))
    return out


def run(outdir="results"):
    outdir = pathlib.Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = ("four_vortex_method1", "four_vortex_method2", "four_vortex_rk2")

    for name, shorthand in zip(names, ("method1", "method2", "rk2")):
        rc = cli(["simulate", "--config", str(CONFIG_DIR / f"{name}.json"),
                  "--out", str(outdir / f"vortex_{shorthand}.csv")])
        if rc:
            return rc

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        long_cfgs = [_with_steps(CONFIG_DIR / f"{n}.json", 500, tmp) for n in names]
        rc = cli(["compare", "--configs", *map(str, long_cfgs),
                  "--out", str(outdir / "vortex_drift_all.csv")])
        if rc:
            return rc
        rc = cli(["compare", "--configs", *map(str, long_cfgs[:2]),
                  "--out", str(outdir / "vortex_drift_symplectic.csv")])
        if rc:
            return rc

    for p in sorted(outdir.glob("vortex_*.csv")):
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(run(*sys.argv[1:]))
