"""Conductivity against crystal length on the three aspect-ratio paths, ordered
and disordered. Writes one sweep directory per (path, d)."""
import argparse
from pathlib import Path

from iontransport import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--output", default="results/kappa_vs_length")
    p.add_argument("--n-range", default="[20, 30, 40, 50, 60]")
    p.add_argument("--d", type=float, nargs="+", default=[0.0, 0.02])
    p.add_argument("--realizations", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    a = p.parse_args()
    for path in ("1D", "2D", "3D"):
        for d in a.d:
            out = Path(a.output) / f"{path}_d{d:g}"
            cfg = cli.load_config(overrides=[
                "experiment=sweep-length", f"crystal.phase_path={path}",
                f"crystal.n_range={a.n_range}", f"disorder.d={d}",
                f"disorder.realizations={a.realizations}", f"disorder.base_seed={a.seed}",
                f"workers={a.workers}", f"output.directory={out}"])
            cli.run(cfg)
            print(out / "sweep_summary.csv")


if __name__ == "__main__":
    main()
