"""Per-mode heat currents of an N = 100 linear chain at several disorder levels.
Each transport.json holds the (re_omega, q_dot) list."""
import argparse
from pathlib import Path

from iontransport import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--output", default="results/mode_currents")
    p.add_argument("--n-ions", type=int, default=100)
    p.add_argument("--d", type=float, nargs="+", default=[0.0, 0.005, 0.02])
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    for d in a.d:
        out = Path(a.output) / f"d{d:g}"
        cli.run(cli.load_config(overrides=[
            "experiment=transport", "crystal.phase_path=1D", f"crystal.n_ions={a.n_ions}",
            f"disorder.d={d}", f"disorder.base_seed={a.seed}", f"output.directory={out}"]))
        print(out / "transport.json")


if __name__ == "__main__":
    main()
