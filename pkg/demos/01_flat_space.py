"""Warmup in flat space.

The volume ratio along a straight line in R^n is exactly t^n, the
volume-dynamics invariant rho vanishes, and adding a linear weight
e^{a.x} moves the whole effect into rho = <a, v> without touching the
fitted constant or the curvature trace.
"""

import numpy as np

import geoflow.asymptotics as asym
import geoflow.catalog as cat
import geoflow.rho as rh


def main():
    sys = cat.builtin("euclidean:3")
    x0 = np.zeros(3)
    p0 = np.array([0.6, -0.8, 0.5])

    ts = [0.05, 0.2, 0.5, 1.0]
    log_r = rh.log_volume_ratios(sys, x0, p0, ts)
    print("flat R^3, straight line with speed |p| = %.3f" % np.linalg.norm(p0))
    print("  t        r(t)          t^3")
    for t, lr in zip(ts, log_r):
        print("  %.2f  %12.9f  %12.9f" % (t, np.exp(lr), t ** 3))
    print("  rho = %.2e (should vanish)" % rh.rho(sys, x0, p0))

    fit = asym.fit_expansion(sys, x0, p0)
    print("  fitted C = %.9f   trace = %.2e" % (fit.constant, fit.trace_r))

    weighted = cat.builtin("euclidean:3:psi=0.3*x1 - 0.2*x2 + 0.5*x3")
    a = np.array([0.3, -0.2, 0.5])
    print("\nsame line under the weight e^{a.x}:")
    print("  rho        = %.9f" % rh.rho(weighted, x0, p0))
    print("  <a, v>     = %.9f" % float(a @ p0))
    wfit = asym.fit_expansion(weighted, x0, p0)
    spread = float(np.max(wfit.h_values) - np.min(wfit.h_values))
    print("  fitted C   = %.9f   h spread = %.1e" % (wfit.constant, spread))
    print("  the rho factor absorbs the weight exactly")


if __name__ == "__main__":
    main()
