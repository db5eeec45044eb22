"""Two-segment leg expansion model.

Each leg is an Aluminium segment of fixed length ``l_al`` in series with a
Steel segment that takes up the rest of the leg, ``q - l_al``. Both
segments of a leg share one temperature change, so a leg of length ``q``
grows by ``(alpha_al * l_al + alpha_st * (q - l_al)) * dT``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSegmentError, SanityBoundError

ALPHA_ALUMINIUM = 23e-6  # 1/K, handbook value
ALPHA_STEEL = 12e-6  # 1/K, handbook value
DEFLECTION_BOUND = 1.0  # mm


def _per_leg(value, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (6,)).copy()
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LegThermalModel:
    """Material data of the six legs. Scalars are shared by all legs."""

    alpha_al: float | np.ndarray = ALPHA_ALUMINIUM
    alpha_st: float | np.ndarray = ALPHA_STEEL
    l_al: float | np.ndarray = 200.0

    def __post_init__(self):
        for name in ("alpha_al", "alpha_st", "l_al"):
            object.__setattr__(self, name, _per_leg(getattr(self, name), name))

    def steel_length(self, q) -> np.ndarray:
        return np.asarray(q, dtype=float) - self.l_al

    def _checked_steel_length(self, q) -> np.ndarray:
        steel = self.steel_length(q)
        if np.any(steel <= 0.0):
            bad = int(np.argmin(steel))
            raise NonPositiveSegmentError(
                f"leg {bad + 1}: Steel segment length {steel[bad]:.6g} mm is not positive"
            )
        return steel

    def expansion_rate(self, q) -> np.ndarray:
        """Leg growth per kelvin (mm/K) at leg lengths ``q``."""
        steel = self._checked_steel_length(q)
        return self.alpha_al * self.l_al + self.alpha_st * steel

    def expansion(self, q, delta_t) -> np.ndarray:
        """Leg growth (mm) for per-leg temperature changes ``delta_t`` (K)."""
        return self.expansion_rate(q) * np.asarray(delta_t, dtype=float)

    def to_dict(self) -> dict:
        def plain(arr):
            return float(arr[0]) if np.all(arr == arr[0]) else arr.tolist()

        return {
            "alpha_al_per_K": plain(self.alpha_al),
            "alpha_st_per_K": plain(self.alpha_st),
            "l_al_mm": plain(self.l_al),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LegThermalModel":
        return cls(
            alpha_al=data.get("alpha_al_per_K", ALPHA_ALUMINIUM),
            alpha_st=data.get("alpha_st_per_K", ALPHA_STEEL),
            l_al=data["l_al_mm"],
        )


def _check_deflection(dq):
    dq = np.asarray(dq, dtype=float)
    if not np.all(np.isfinite(dq)):
        raise SanityBoundError("leg deflections must be finite")
    if np.any(np.abs(dq) >= DEFLECTION_BOUND):
        bad = int(np.argmax(np.abs(dq)))
        raise SanityBoundError(
            f"leg {bad + 1} deflection {dq[bad]:.4g} mm exceeds the thermal sanity bound; "
            "were the two measurements taken at the same pose?"
        )
    return dq


def reference_deflection(q_r_t1, q_r_t2) -> np.ndarray:
    """Leg growth at the reference pose between the two temperature states.

    Signed ``t2 - t1`` so heating gives positive values.
    """
    dq = np.asarray(q_r_t2, dtype=float) - np.asarray(q_r_t1, dtype=float)
    return _check_deflection(dq)


def scale_deflection(model: LegThermalModel, dq_ref, q_ref, q_meas) -> np.ndarray:
    """Carry leg deflections measured at one pose over to other leg lengths.

    The reference deflection is split into its Aluminium and Steel shares
    using the material data. The Aluminium share is kept as is (its length
    never changes) while the Steel share is rescaled by the ratio of Steel
    segment lengths at the two poses.
    """
    dq_ref = _check_deflection(dq_ref)
    steel_ref = model._checked_steel_length(q_ref)
    steel_meas = model._checked_steel_length(q_meas)
    al_rate = model.alpha_al * model.l_al
    dq_al = dq_ref * al_rate / (al_rate + model.alpha_st * steel_ref)
    dq_st = (dq_ref - dq_al) * steel_meas / steel_ref
    return dq_al + dq_st


def scale_deflection_ratio(model: LegThermalModel, dq_ref, q_ref, q_meas) -> np.ndarray:
    """Same mapping as :func:`scale_deflection`, written as one expansion-rate ratio."""
    dq_ref = _check_deflection(dq_ref)
    return dq_ref * model.expansion_rate(q_meas) / model.expansion_rate(q_ref)


def implied_leg_temperature_rise(model: LegThermalModel, dq_ref, q_ref) -> np.ndarray:
    """Uniform per-leg temperature change (K) that explains ``dq_ref``."""
    dq_ref = _check_deflection(dq_ref)
    return dq_ref / model.expansion_rate(q_ref)
