"""Walk through the two-line fixture by hand.

Line 1 is [0, 1, 2] and line 2 is [0, -2, 1] on the grid {0, 0.5, 1}.
A path from (0, line 2) to (x, line 1) picks one jump time s and collects
f2(s) - f2(0) + f1(x) - f1(s).
"""
from lpplab import BoundaryData, LatticePoint, fixture_ensemble, geodesic, lpp_profile
from lpplab.env import refine
from lpplab.sheet import boundary_data, maximizer_indices, raw_difference_profile, z_processes

E = fixture_ensemble("E2")
start = LatticePoint(0, 2)

print("grid:", E.grid.points.tolist())
print("passage values to line 1:", lpp_profile(E, start, 1).values.tolist())

geo = geodesic(E, start, LatticePoint(2, 1))
print("leftmost geodesic to x=1 jumps at x =", [E.grid.point(i) for i in geo.jump_indices])

# boundary data at the column x = 0.5: how far below the top line each line sits
print("boundary data at x=0.5:", boundary_data(E, start, 1, 2).values.tolist())

b = BoundaryData(0, [0.3, 0.0])
for i, z in enumerate(z_processes(E, b), start=1):
    print(f"Z_{i}:", [round(v, 12) for v in z.values.tolist()])
print("smallest maximizing line per x:", maximizer_indices(E, b).tolist())

# the difference profile needs the start 0.25, which is a grid point after refining
R = refine(E, 2)
D = raw_difference_profile(R, LatticePoint(0, 2), LatticePoint(1, 2))
for x, v in zip(D.x, D.values):
    print(f"D({x:.2f}) = {v:+.2f}")
