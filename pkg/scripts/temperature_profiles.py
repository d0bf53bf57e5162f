"""Local temperature profiles of one crystal at several disorder strengths,
plus the ensemble central gradient against d."""
import argparse
from pathlib import Path

from iontransport import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--output", default="results/temperature_profiles")
    p.add_argument("--path", default="3D")
    p.add_argument("--n-ions", type=int, default=40)
    p.add_argument("--d", type=float, nargs="+", default=[0.0, 0.01, 0.05, 0.1, 0.2])
    p.add_argument("--realizations", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    a = p.parse_args()
    common = [f"crystal.phase_path={a.path}", f"crystal.n_ions={a.n_ions}",
              f"disorder.base_seed={a.seed}", f"workers={a.workers}"]
    for d in a.d:
        out = Path(a.output) / f"profile_d{d:g}"
        cli.run(cli.load_config(overrides=common + [
            "experiment=profile", f"disorder.d={d}", f"output.directory={out}"]))
        print(out / "profile.csv")
    out = Path(a.output) / "gradient_vs_d"
    cli.run(cli.load_config(overrides=common + [
        "experiment=sweep-disorder", f"disorder.d_range={list(a.d)}",
        f"disorder.realizations={a.realizations}", f"output.directory={out}"]))
    print(out / "sweep_summary.csv")


if __name__ == "__main__":
    main()
