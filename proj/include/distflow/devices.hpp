#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "distflow/error.hpp"

namespace distflow {

using Complex = std::complex<double>;

/// Constant consumption p + iq, applied as the injection -(p + iq).
struct FixedLoad {
    double p = 0.0;
    double q = 0.0;
};

/// Peak apparent consumption served at power factor 0.9 lagging.
struct PeakLoad {
    double s_peak = 0.0;
};

/// Shunt capacitor with reactive injection anywhere in [0, q_cap].
/// `discrete` marks a switched bank restricted to {0, q_cap}; no solver in
/// this library accepts it.
struct Capacitor {
    double q_cap = 0.0;
    bool discrete = false;
};

/// Inverter with real output p >= 0 and apparent power |s| <= s_nameplate.
struct Photovoltaic {
    double s_nameplate = 0.0;
};

using DeviceSpec = std::variant<FixedLoad, PeakLoad, Capacitor, Photovoltaic>;

/// Power factor used for peak loads.
inline constexpr double peak_power_factor = 0.9;

/// Reactive fraction sin(arccos 0.9) of a peak load.
[[nodiscard]] inline double peak_reactive_fraction() {
    static const double value = std::sin(std::acos(peak_power_factor));
    return value;
}

/// The fixed consumption a device imposes, as a consumption (positive = load).
[[nodiscard]] inline Complex fixed_consumption(const DeviceSpec& d) {
    if (const auto* f = std::get_if<FixedLoad>(&d)) return {f->p, f->q};
    if (const auto* pk = std::get_if<PeakLoad>(&d)) {
        return {peak_power_factor * pk->s_peak, pk->s_peak * peak_reactive_fraction()};
    }
    return {0.0, 0.0};
}

[[nodiscard]] inline bool is_controllable(const DeviceSpec& d) {
    return std::holds_alternative<Capacitor>(d) || std::holds_alternative<Photovoltaic>(d);
}

/// Per-bus device lists for buses 1..n. Bus 0 never carries devices.
class DevicePortfolio {
public:
    DevicePortfolio() = default;
    explicit DevicePortfolio(std::size_t bus_count) : devices_(bus_count) {}

    [[nodiscard]] std::size_t bus_count() const noexcept { return devices_.size(); }

    void add(std::size_t bus, DeviceSpec device) {
        if (bus == 0) throw Error(Errc::InvalidBus, "devices cannot be placed at the substation");
        if (bus >= devices_.size()) throw Error(Errc::InvalidBus, "bus " + std::to_string(bus) + " out of range");
        const bool negative = std::visit(
            [](const auto& dev) {
                using T = std::decay_t<decltype(dev)>;
                if constexpr (std::is_same_v<T, PeakLoad>) return dev.s_peak < 0.0;
                else if constexpr (std::is_same_v<T, Capacitor>) return dev.q_cap < 0.0;
                else if constexpr (std::is_same_v<T, Photovoltaic>) return dev.s_nameplate < 0.0;
                else return false;
            },
            device);
        if (negative) throw Error(Errc::InvalidArgument, "device ratings must be nonnegative");
        devices_[bus].push_back(device);
    }

    [[nodiscard]] std::span<const DeviceSpec> at(std::size_t bus) const { return devices_.at(bus); }

    /// Copy with every capacitor and PV rating multiplied by eta.
    [[nodiscard]] DevicePortfolio scaled(double eta) const {
        if (eta < 0.0) throw Error(Errc::NegativeScale, "eta = " + std::to_string(eta));
        DevicePortfolio out = *this;
        for (auto& list : out.devices_) {
            for (auto& d : list) {
                if (auto* c = std::get_if<Capacitor>(&d)) c->q_cap *= eta;
                if (auto* pv = std::get_if<Photovoltaic>(&d)) pv->s_nameplate *= eta;
            }
        }
        return out;
    }

    [[nodiscard]] double total_pv() const { return sum_if<Photovoltaic>([](const Photovoltaic& d) { return d.s_nameplate; }); }
    [[nodiscard]] double total_capacitor() const { return sum_if<Capacitor>([](const Capacitor& d) { return d.q_cap; }); }
    [[nodiscard]] double total_peak_load() const { return sum_if<PeakLoad>([](const PeakLoad& d) { return d.s_peak; }); }

private:
    template <class T, class F>
    [[nodiscard]] double sum_if(F f) const {
        double total = 0.0;
        for (const auto& list : devices_) {
            for (const auto& d : list) {
                if (const auto* t = std::get_if<T>(&d)) total += f(*t);
            }
        }
        return total;
    }

    std::vector<std::vector<DeviceSpec>> devices_;
};

/// Upper bounds on bus injections, one entry per bus (entry 0 unused).
struct InjectionBounds {
    std::vector<double> p_up;
    std::vector<double> q_up;

    [[nodiscard]] std::vector<Complex> as_complex() const {
        std::vector<Complex> s(p_up.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = {p_up[i], q_up[i]};
        return s;
    }
};

/// Injection upper bounds with PV and capacitor ratings scaled by eta:
/// p_up = -fixed real load + eta * PV, q_up = -fixed reactive load + eta * (PV + capacitor).
[[nodiscard]] inline InjectionBounds injection_bounds(const DevicePortfolio& portfolio, double eta) {
    if (eta < 0.0) throw Error(Errc::NegativeScale, "eta = " + std::to_string(eta));
    InjectionBounds b{std::vector<double>(portfolio.bus_count(), 0.0),
                      std::vector<double>(portfolio.bus_count(), 0.0)};
    for (std::size_t i = 1; i < portfolio.bus_count(); ++i) {
        double load_p = 0.0, load_q = 0.0, pv = 0.0, cap = 0.0;
        for (const auto& d : portfolio.at(i)) {
            const Complex c = fixed_consumption(d);
            load_p += c.real();
            load_q += c.imag();
            if (const auto* v = std::get_if<Photovoltaic>(&d)) pv += v->s_nameplate;
            if (const auto* v = std::get_if<Capacitor>(&d)) cap += v->q_cap;
        }
        b.p_up[i] = -load_p + eta * pv;
        b.q_up[i] = -load_q + eta * (pv + cap);
    }
    return b;
}

/// Fixed (uncontrollable) injection at a bus: minus the summed fixed consumption.
[[nodiscard]] inline Complex fixed_injection(std::span<const DeviceSpec> devices) {
    Complex total{0.0, 0.0};
    for (const auto& d : devices) total -= fixed_consumption(d);
    return total;
}

/// Whether s decomposes into per-device injections from each bus's device sets.
///
/// Capacitors are treated as the continuous interval [0, q_cap]. The PV sets
/// are scaled copies of one convex half-disk, so their Minkowski sum is the
/// half-disk of the summed rating; the capacitor shift is chosen to minimize
/// the remaining distance.
[[nodiscard]] inline bool injection_feasible(const DevicePortfolio& portfolio, std::span<const Complex> s,
                                             double tol = 1e-9) {
    if (s.size() != portfolio.bus_count()) {
        throw Error(Errc::InvalidArgument, "injection vector must have one entry per bus");
    }
    for (std::size_t i = 1; i < s.size(); ++i) {
        double pv = 0.0, cap = 0.0;
        for (const auto& d : portfolio.at(i)) {
            if (const auto* v = std::get_if<Photovoltaic>(&d)) pv += v->s_nameplate;
            if (const auto* v = std::get_if<Capacitor>(&d)) cap += v->q_cap;
        }
        const Complex rest = s[i] - fixed_injection(portfolio.at(i));
        const double a = rest.real();
        const double b = rest.imag();
        const double c = std::clamp(b, 0.0, cap);
        if (a < -tol) return false;
        const double radius = std::hypot(std::max(a, 0.0), b - c);
        if (radius > pv + tol * std::max(1.0, pv)) return false;
    }
    return true;
}

}  // namespace distflow
