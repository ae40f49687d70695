"""Phase-plane picture behind the intersection dichotomy.

The Emden-Fowler change of variables turns the radial equation for f(u) = u
into an autonomous planar system whose origin is the singular solution.  If
the origin is a focus, regular orbits spiral into it and u - u* changes sign
infinitely often; if it is a node, they approach without crossing.

    python demos/phase_plane_and_intersections.py
"""
import math

from gelfand import (classify_fixed_point, classify_regime, count_intersections, exact_singular,
                     find_radius, make_khessian, make_nonlinearity, orbit_from_solution, solve_ivp,
                     winding_angle)


def main():
    identity = make_nonlinearity("identity")
    for d, k in ((3, 1), (9, 1), (10, 1), (11, 1), (12, 2)):
        params = make_khessian(d, k)
        kind, (m1, m2) = classify_fixed_point(params)
        regime = classify_regime(params).tag
        print(f"(d={d:2d}, k={k}) {kind:13s} regime={regime:16s} eigenvalues {m1:.4g}, {m2:.4g}")

    print("\nintersections of the rho = 20 solution with u* on (1e-6, R)")
    for d, k in ((3, 1), (5, 2), (11, 1)):
        params = make_khessian(d, k)
        R = find_radius(params, identity, 20.0, 0.0)
        traj = solve_ivp(params, identity, 20.0, R)
        rep = count_intersections(traj, exact_singular(params), 1e-6, R)
        turns = winding_angle(orbit_from_solution(traj)) / (2 * math.pi)
        radii = ", ".join(f"{r:.3e}" for r in rep.crossing_radii)
        print(f"  (d={d:2d}, k={k}) count={rep.count} (stable: {rep.grid_stability}), "
              f"orbit winds {turns:+.2f} turns")
        if radii:
            print(f"      crossing radii: {radii}")


if __name__ == "__main__":
    main()
