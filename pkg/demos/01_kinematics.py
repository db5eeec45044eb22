"""Inverse and forward kinematics of the synthetic hexapod.

Moves the platform to a few poses, prints the leg lengths, solves the
forward problem back and shows how a single leg change maps into pose.
"""

import numpy as np

from hexapose import Pose6, fgm, igm, leg_jacobian
from hexapose.simulator import default_geometry

np.set_printoptions(precision=6, suppress=True)
geom = default_geometry()

print("zero-pose leg lengths [mm]:", igm(geom, Pose6()))
print("reference pose (platform 40 mm lower):", igm(geom, Pose6(tz=-40.0)))

pose = Pose6.from_degrees(12.0, -5.0, 8.0, 1.0, -0.5, 1.5)
q = igm(geom, pose)
back = fgm(geom, q)
print("\npose       :", pose.as_array())
print("legs       :", q)
print("FGM back   :", back.as_array())
print("max error  :", np.abs(back.as_array() - pose.as_array()).max())

# A 10 um extension of leg 1, exact versus linearised.
dq = np.zeros(6)
dq[0] = 10e-3
exact = fgm(geom, igm(geom, Pose6()) + dq).as_array()
linear = np.linalg.solve(leg_jacobian(geom, Pose6()), dq)
print("\nleg 1 +10 um, exact  :", exact * [1e3, 1e3, 1e3, 1e6, 1e6, 1e6], "(um, urad)")
print("leg 1 +10 um, linear :", linear * [1e3, 1e3, 1e3, 1e6, 1e6, 1e6])
