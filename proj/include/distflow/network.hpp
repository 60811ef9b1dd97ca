#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distflow/error.hpp"

namespace distflow {

/// Bus index in 0..n. Bus 0 is the substation.
struct BusId {
    std::size_t value = 0;

    constexpr BusId() = default;
    constexpr explicit BusId(std::size_t v) : value(v) {}

    friend constexpr auto operator<=>(BusId, BusId) = default;
};

/// A line between two buses with per-unit series impedance r + ix.
/// Inside a RadialNetwork, `from` is the child and `to` the parent.
struct Line {
    BusId from;
    BusId to;
    double r = 0.0;
    double x = 0.0;
};

/// Immutable radial network.
///
/// Every non-root bus i has exactly one upstream line (i, parent(i)), so
/// per-line data is indexed by the child bus. Per-line vectors therefore have
/// n + 1 entries and entry 0 is unused (kept at zero).
class RadialNetwork {
public:
    RadialNetwork() = default;

    [[nodiscard]] std::size_t bus_count() const noexcept { return parent_.size(); }
    [[nodiscard]] std::size_t line_count() const noexcept { return bus_count() == 0 ? 0 : bus_count() - 1; }

    [[nodiscard]] std::size_t parent(std::size_t bus) const { return parent_.at(bus); }
    [[nodiscard]] std::span<const std::size_t> children(std::size_t bus) const { return children_.at(bus); }
    [[nodiscard]] bool is_leaf(std::size_t bus) const { return bus != 0 && children_.at(bus).empty(); }

    [[nodiscard]] double r(std::size_t bus) const { return r_.at(bus); }
    [[nodiscard]] double x(std::size_t bus) const { return x_.at(bus); }
    [[nodiscard]] Line line(std::size_t bus) const {
        return Line{BusId{bus}, BusId{parent_.at(bus)}, r_.at(bus), x_.at(bus)};
    }
    [[nodiscard]] std::vector<Line> lines() const {
        std::vector<Line> out;
        out.reserve(line_count());
        for (std::size_t i = 1; i < bus_count(); ++i) out.push_back(line(i));
        return out;
    }

    [[nodiscard]] double v0() const noexcept { return v0_; }
    [[nodiscard]] double vmin(std::size_t bus) const { return vmin_.at(bus); }
    [[nodiscard]] double vmax(std::size_t bus) const { return vmax_.at(bus); }
    [[nodiscard]] const std::vector<double>& vmin() const noexcept { return vmin_; }
    [[nodiscard]] const std::vector<double>& vmax() const noexcept { return vmax_; }

    /// Buses in breadth-first order starting at the root.
    [[nodiscard]] std::span<const std::size_t> order() const noexcept { return order_; }

    /// Leaf buses in ascending index order.
    [[nodiscard]] std::span<const std::size_t> leaves() const noexcept { return leaves_; }

    /// Root path of a bus as the child-bus indices of its lines, starting with
    /// the line leaving `bus` and ending with the line entering bus 0.
    [[nodiscard]] std::span<const std::size_t> path(std::size_t bus) const { return paths_.at(bus); }
    [[nodiscard]] std::vector<Line> path_lines(std::size_t bus) const {
        std::vector<Line> out;
        for (auto k : path(bus)) out.push_back(line(k));
        return out;
    }

    /// Number of lines on the root path.
    [[nodiscard]] std::size_t depth(std::size_t bus) const { return paths_.at(bus).size(); }

    /// Optional external names (file labels); empty when not supplied.
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::string label(std::size_t bus) const {
        return bus < labels_.size() ? labels_[bus] : std::to_string(bus);
    }

    /// Copy of this network with the given voltage bounds.
    [[nodiscard]] RadialNetwork with_voltage_bounds(std::vector<double> vmin, std::vector<double> vmax) const;

    /// Copy of this network with a different substation voltage.
    [[nodiscard]] RadialNetwork with_v0(double v0) const {
        RadialNetwork copy = *this;
        copy.v0_ = v0;
        return copy;
    }

    void set_labels(std::vector<std::string> labels) { labels_ = std::move(labels); }

private:
    friend RadialNetwork build_network(const std::vector<BusId>&, const std::vector<Line>&, double,
                                       const std::vector<double>&, const std::vector<double>&);

    std::vector<std::size_t> parent_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<double> r_;
    std::vector<double> x_;
    double v0_ = 1.0;
    std::vector<double> vmin_;
    std::vector<double> vmax_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> leaves_;
    std::vector<std::vector<std::size_t>> paths_;
    std::vector<std::string> labels_;
};

namespace detail {

inline void validate_voltage_bounds(const std::vector<double>& vmin, std::size_t bus_count) {
    for (std::size_t i = 1; i < bus_count; ++i) {
        if (!(vmin[i] > 0.0)) {
            throw Error(Errc::NonpositiveVoltageLowerBound, "bus " + std::to_string(i));
        }
    }
}

}  // namespace detail

/// Validates a radial network and precomputes its tree tables.
///
/// `buses` must be exactly {0, ..., n} in any order. Lines may be given in
/// either orientation and are reoriented toward bus 0. `vmin` and `vmax` hold
/// one squared-voltage bound per bus; entry 0 is ignored.
[[nodiscard]] inline RadialNetwork build_network(const std::vector<BusId>& buses, const std::vector<Line>& lines,
                                                 double v0, const std::vector<double>& vmin,
                                                 const std::vector<double>& vmax) {
    const std::size_t count = buses.size();
    std::vector<bool> seen(count, false);
    for (auto b : buses) {
        if (b.value >= count || seen[b.value]) {
            throw Error(Errc::InvalidBus, "bus ids must be exactly 0..n without repeats");
        }
        seen[b.value] = true;
    }
    if (count == 0 || !seen[0]) throw Error(Errc::InvalidBus, "bus 0 missing");
    if (vmin.size() != count || vmax.size() != count) {
        throw Error(Errc::InvalidArgument, "voltage bound vectors must have one entry per bus");
    }
    if (!(v0 > 0.0)) throw Error(Errc::NonpositiveVoltage, "substation voltage must be positive");

    for (const auto& l : lines) {
        if (l.from.value >= count || l.to.value >= count) {
            throw Error(Errc::InvalidBus, "line references unknown bus");
        }
        if (!(l.r > 0.0) || !(l.x > 0.0)) {
            throw Error(Errc::NonpositiveImpedance,
                        "line " + std::to_string(l.from.value) + "-" + std::to_string(l.to.value));
        }
    }
    {
        std::vector<std::pair<std::size_t, std::size_t>> keys;
        keys.reserve(lines.size());
        for (const auto& l : lines) {
            keys.emplace_back(std::min(l.from.value, l.to.value), std::max(l.from.value, l.to.value));
        }
        std::sort(keys.begin(), keys.end());
        auto dup = std::adjacent_find(keys.begin(), keys.end());
        if (dup != keys.end()) {
            throw Error(Errc::DuplicateLine,
                        "line " + std::to_string(dup->first) + "-" + std::to_string(dup->second));
        }
    }
    detail::validate_voltage_bounds(vmin, count);

    struct Edge {
        std::size_t to;
        std::size_t line;
    };
    std::vector<std::vector<Edge>> adj(count);
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto a = lines[k].from.value;
        const auto b = lines[k].to.value;
        if (a == b) throw Error(Errc::CycleDetected, "self loop at bus " + std::to_string(a));
        adj[a].push_back({b, k});
        adj[b].push_back({a, k});
    }

    constexpr auto none = std::numeric_limits<std::size_t>::max();
    RadialNetwork net;
    net.parent_.assign(count, none);
    net.children_.assign(count, {});
    net.r_.assign(count, 0.0);
    net.x_.assign(count, 0.0);
    std::vector<std::size_t> via(count, none);
    std::vector<bool> visited(count, false);
    visited[0] = true;
    net.parent_[0] = 0;
    net.order_.push_back(0);
    for (std::size_t head = 0; head < net.order_.size(); ++head) {
        const auto u = net.order_[head];
        for (const auto& e : adj[u]) {
            if (e.line == via[u]) continue;
            if (visited[e.to]) {
                throw Error(Errc::CycleDetected, "cycle through bus " + std::to_string(e.to));
            }
            visited[e.to] = true;
            via[e.to] = e.line;
            net.parent_[e.to] = u;
            net.r_[e.to] = lines[e.line].r;
            net.x_[e.to] = lines[e.line].x;
            net.order_.push_back(e.to);
        }
    }
    if (net.order_.size() != count) {
        for (std::size_t i = 0; i < count; ++i) {
            if (!visited[i]) throw Error(Errc::Disconnected, "bus " + std::to_string(i) + " unreachable");
        }
    }

    for (std::size_t i = 1; i < count; ++i) net.children_[net.parent_[i]].push_back(i);
    for (auto& c : net.children_) std::sort(c.begin(), c.end());
    for (std::size_t i = 1; i < count; ++i) {
        if (net.children_[i].empty()) net.leaves_.push_back(i);
    }
    net.paths_.assign(count, {});
    for (auto u : net.order_) {
        if (u == 0) continue;
        auto& p = net.paths_[u];
        p.reserve(net.paths_[net.parent_[u]].size() + 1);
        p.push_back(u);
        const auto& up = net.paths_[net.parent_[u]];
        p.insert(p.end(), up.begin(), up.end());
    }
    net.v0_ = v0;
    net.vmin_ = vmin;
    net.vmax_ = vmax;
    net.vmin_[0] = v0;
    net.vmax_[0] = v0;
    return net;
}

inline RadialNetwork RadialNetwork::with_voltage_bounds(std::vector<double> vmin, std::vector<double> vmax) const {
    if (vmin.size() != bus_count() || vmax.size() != bus_count()) {
        throw Error(Errc::InvalidArgument, "voltage bound vectors must have one entry per bus");
    }
    detail::validate_voltage_bounds(vmin, bus_count());
    RadialNetwork copy = *this;
    copy.vmin_ = std::move(vmin);
    copy.vmax_ = std::move(vmax);
    copy.vmin_[0] = v0_;
    copy.vmax_[0] = v0_;
    return copy;
}

/// Convenience overload: buses 0..lines.size() with uniform voltage bounds.
[[nodiscard]] inline RadialNetwork build_network(const std::vector<Line>& lines, double v0 = 1.0,
                                                 double vmin = 0.81, double vmax = 1.21) {
    const std::size_t count = lines.size() + 1;
    std::vector<BusId> buses;
    buses.reserve(count);
    for (std::size_t i = 0; i < count; ++i) buses.emplace_back(i);
    return build_network(buses, lines, v0, std::vector<double>(count, vmin), std::vector<double>(count, vmax));
}

}  // namespace distflow
