#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "distflow/error.hpp"

namespace distflow {

/// Per-unit base quantities. z_base is in ohm, derived as kV^2 / MVA.
struct BaseUnits {
    double s_base_mva = 1.0;
    double v_base_kv = 1.0;
    double z_base_ohm = 1.0;
};

/// Builds a base from voltage and power. A stated impedance base, if given,
/// must agree with kV^2 / MVA to within 0.5%, which absorbs table rounding.
[[nodiscard]] inline BaseUnits make_base(double v_base_kv, double s_base_mva,
                                         std::optional<double> z_base_ohm = std::nullopt) {
    if (!(v_base_kv > 0.0) || !(s_base_mva > 0.0)) {
        throw Error(Errc::InvalidArgument, "base voltage and power must be positive");
    }
    const double derived = v_base_kv * v_base_kv / s_base_mva;
    double z = derived;
    if (z_base_ohm) {
        if (!(*z_base_ohm > 0.0)) throw Error(Errc::InvalidArgument, "impedance base must be positive");
        if (std::abs(*z_base_ohm - derived) > 0.005 * derived) {
            throw Error(Errc::InvalidArgument, "impedance base " + std::to_string(*z_base_ohm) +
                                                   " inconsistent with kV^2/MVA = " + std::to_string(derived));
        }
        z = *z_base_ohm;
    }
    return BaseUnits{s_base_mva, v_base_kv, z};
}

[[nodiscard]] inline double to_per_unit(double ohms, const BaseUnits& base) { return ohms / base.z_base_ohm; }

}  // namespace distflow
