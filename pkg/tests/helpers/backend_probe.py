"""Prints a JSON digest of a few kernel-driven results for the active backend."""
import json
import sys

import numpy as np

from thermolab import backend_name
from thermolab.analysis import first_conjugate_time, green_slope
from thermolab.cocycle import KappaProfile, cocycle_matrix
from thermolab.flow import integrate_orbit
from thermolab.geometry import PhasePoint
from thermolab.model import KAPPA_TILDE_GAUGE, System, named_system


def main():
    s, m = named_system("S3")
    orbit = integrate_orbit(s, m, PhasePoint(0.5, 1.0, 0.3), (-8.0, 8.0))
    jets = System(s, m, KAPPA_TILDE_GAUGE).jets(np.linspace(0, 6, 5), 1.0, np.linspace(0, 3, 5))
    out = {
        "backend": backend_name(),
        "steps": orbit.stats.steps,
        "state": list(orbit.raw(3.7)),
        "cocycle": cocycle_matrix(orbit, KAPPA_TILDE_GAUGE, 2.0).matrix.ravel().tolist(),
        "green": green_slope(orbit, "unstable", KAPPA_TILDE_GAUGE, (2.0, 4.0, 8.0)).slope,
        "conjugate": first_conjugate_time(KappaProfile.constant(1.0), 4.0).time,
        "jets": jets.ravel().tolist(),
    }
    json.dump(out, sys.stdout)


if __name__ == "__main__":
    main()
