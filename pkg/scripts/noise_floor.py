"""Achieved test RMSE against the injected noise level on linear fixtures.

    python scripts/noise_floor.py --levels 0,0.02,0.05,0.1
"""

import argparse
import tempfile

from t2g import experiment, synth
from t2g.config import ExperimentConfig
from t2g.errors import NoiseFloorViolation


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="0,0.02,0.05,0.1", help="comma-separated noise_std values")
    ap.add_argument("--seed", type=int, default=2019, help="fixture seed")
    args = ap.parse_args()

    cfg = ExperimentConfig()
    print(f"{'noise_std':>9} {'rmse_norm':>10} {'margin':>9}")
    for level in (float(x) for x in args.levels.split(",")):
        with tempfile.TemporaryDirectory() as tmp:
            fx = synth.generate(synth.SynthSpec(mapping="linear", noise_std=level, seed=args.seed), tmp)
            report = experiment.run_experiment(fx.ground_dir, fx.satellite, cfg)
            try:
                margin = f"{synth.oracle_rmse(synth.load_manifest(fx.manifest), report):+.5f}"
            except NoiseFloorViolation:
                margin = "below"
        print(f"{level:>9g} {report.averaged_rmse_normalized:>10.5f} {margin:>9}")


if __name__ == "__main__":
    main()
