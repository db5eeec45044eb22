"""Scaling a reference-pose leg deflection to another leg length.

A leg is an aluminium segment of fixed length plus a steel segment that
takes up the rest. A deflection measured at one length implies a leg
temperature rise, which then expands a longer or shorter leg differently.
"""

import numpy as np

from hexapose import LegThermalModel
from hexapose.thermal import implied_leg_temperature_rise, scale_deflection, scale_deflection_ratio

model = LegThermalModel(alpha_al=23e-6, alpha_st=12e-6, l_al=200.0)

q_ref = np.full(6, 500.0)
q_meas = np.full(6, 550.0)
dq_ref = model.expansion(q_ref, 1.0)

print("1 K on a 500 mm leg  :", dq_ref[0] * 1e3, "um")
print("implied rise          :", implied_leg_temperature_rise(model, dq_ref, q_ref)[0], "K")
print("scaled to 550 mm      :", scale_deflection(model, dq_ref, q_ref, q_meas)[0] * 1e3, "um")
print("rate-ratio form       :", scale_deflection_ratio(model, dq_ref, q_ref, q_meas)[0] * 1e3, "um")

print("\nper-leg example, legs heated unevenly:")
delta_t = np.array([1.0, 2.0, 0.5, 0.5, 2.0, 1.0])
dq_ref = model.expansion(q_ref, delta_t)
q_meas = np.array([480.0, 510.0, 530.0, 470.0, 495.0, 505.0])
for i, (d, s) in enumerate(zip(dq_ref, scale_deflection(model, dq_ref, q_ref, q_meas)), start=1):
    print(f"  leg {i}: {d * 1e3:6.2f} um at 500 mm -> {s * 1e3:6.2f} um at {q_meas[i - 1]:.0f} mm")
