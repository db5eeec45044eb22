"""From probed points to a platform frame.

Each of three balls is probed with 9 noisy points and sphere-fitted. The
ball relation is set up at the origin, then a displaced platform is
measured and its frame recovered.
"""

import numpy as np

from hexapose import Pose6, fit_sphere, frame_from_balls, establish_relation, pose_to_transform
from hexapose.geometry import compose, inverse, rotation_angle
from hexapose.simulator import default_cmm_placement, probe_pattern, triangle_layout

rng = np.random.default_rng(3)
sigma = 1e-3
layout = triangle_layout(150.0)
pattern = probe_pattern(9, 12.7, 110.0)


def measure(frame):
    centers = []
    for c in frame.apply(layout.ball_positions):
        fit = fit_sphere(c + pattern + rng.normal(0, sigma, pattern.shape))
        centers.append(fit.center)
    return np.array(centers), fit


origin = default_cmm_placement()
centers, last = measure(origin)
print(f"last ball: radius {last.radius:.5f} mm, residual rms {last.rms_residual * 1e3:.2f} um")
relation = establish_relation(centers, origin)
print("ball triangle edges [mm]:", np.round(relation.edge_lengths, 4))

moved = compose(origin, pose_to_transform(Pose6.from_degrees(5, -3, 2, 0.2, 0.1, -0.3)))
centers, _ = measure(moved)
est = frame_from_balls(relation, centers)
err = compose(inverse(moved), est)
print(f"frame error: {np.linalg.norm(err.translation) * 1e3:.2f} um, "
      f"{rotation_angle(err.rotation) * 1e6:.1f} urad")
