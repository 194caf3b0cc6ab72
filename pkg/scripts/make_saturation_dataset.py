"""Generate data/saturation_synthetic.csv, a synthetic saturation curve.

Parameters: R_0 = 10200 counts/s, E_s = 0.05 pJ, alpha = 5.5 counts/s/pJ,
tau_p = 13 ps, tau_r = 10 ns; 16 log-spaced pulse energies in 0.5..200 pJ,
Poisson counts over 1 s per point.
"""
import csv
import sys
from pathlib import Path

import numpy as np

from photongun.emitter import SaturationParams, detected_rate

PARAMS = SaturationParams(R_0=10200.0, E_s=0.05, alpha=5.5, tau_p=13e-12, tau_r=10e-9)
INTEGRATION_S = 1.0
SEED = 2016


def main(path="data/saturation_synthetic.csv"):
    rng = np.random.default_rng(SEED)
    E = np.geomspace(0.5, 200.0, 16)
    counts = rng.poisson(detected_rate(E, PARAMS) * INTEGRATION_S)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["E_p_pJ", "rate_cps"])
        for e, c in zip(E, counts):
            w.writerow([f"{e:.6g}", f"{c / INTEGRATION_S:.6g}"])


if __name__ == "__main__":
    main(*sys.argv[1:])
