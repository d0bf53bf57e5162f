"""Ensemble conductivity against disorder strength at fixed N on each path."""
import argparse
from pathlib import Path

from iontransport import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--output", default="results/kappa_vs_disorder")
    p.add_argument("--n-ions", type=int, default=60)
    p.add_argument("--d-range", default="[0, 0.005, 0.01, 0.02, 0.05]")
    p.add_argument("--realizations", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    a = p.parse_args()
    for path in ("1D", "2D", "3D"):
        out = Path(a.output) / path
        cfg = cli.load_config(overrides=[
            "experiment=sweep-disorder", f"crystal.phase_path={path}",
            f"crystal.n_ions={a.n_ions}", f"disorder.d_range={a.d_range}",
            f"disorder.realizations={a.realizations}", f"disorder.base_seed={a.seed}",
            f"workers={a.workers}", f"output.directory={out}"])
        cli.run(cfg)
        print(out / "sweep_summary.csv")


if __name__ == "__main__":
    main()
