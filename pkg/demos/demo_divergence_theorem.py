"""
The divergence theorem on a figure, past a thin singular set
============================================================

For a continuous field differentiable off a thin set, the gauge integral of
the divergence over a figure equals the outward boundary flux.  The third
field below has an unbounded, wildly oscillating derivative along the whole
segment {x = 0}; cells touching the segment are tagged on it, where the
divergence takes its prescribed finite value.
"""

from rigidity.corpus import DIVERGENCE_FIELDS
from rigidity.gauge_integral import boundary_flux, divergence_integral_2d

for name in ("linear_radial", "rotation", "singular_x"):
    entry = DIVERGENCE_FIELDS[name]
    res = divergence_integral_2d(entry["field"], entry["figure"], entry["thin"],
                                 tol=1e-5)
    flux = boundary_flux(entry["field"], entry["figure"])
    print(f"{name}:")
    print(f"  interior gauge integral of div v : {res.value:.10f} "
          f"({res.refinement_levels} refinement levels)")
    print(f"  outward boundary flux            : {flux:.10f}")
    print(f"  |difference|                     : {abs(res.value - flux):.2e}")
    print(f"  exact value                      : {entry['exact']:.10f}")
    if entry["thin"].segments:
        print("  thin set: the segment x = 0; the absolute sums grew from",
              f"{res.absolute_sum_history[0]:.2f} to",
              f"{res.absolute_sum_history[-1]:.2f} while the value settled")
    print()
