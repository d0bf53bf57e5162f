"""Radius against aspect ratio for one crystal, then critical aspect ratios over
a range of N with a power-law fit."""
import argparse
import json
from pathlib import Path

from iontransport import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--output", default="results/transition_scan")
    p.add_argument("--n-ions", type=int, default=30)
    p.add_argument("--n-range", default="[20, 30, 40, 50, 60]")
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    a = p.parse_args()
    out = Path(a.output)
    cli.run(cli.load_config(overrides=[
        "experiment=scan-transition", f"crystal.n_ions={a.n_ions}",
        f"crystal.n_range={a.n_range}", f"scan.points={a.points}",
        f"disorder.base_seed={a.seed}", f"workers={a.workers}", f"output.directory={out}"]))
    print(out / "scan.csv")
    print(json.dumps(json.loads((out / "scan.json").read_text()).get("power_law"), indent=2))


if __name__ == "__main__":
    main()
