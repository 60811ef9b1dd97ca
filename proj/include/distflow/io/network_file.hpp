#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "distflow/devices.hpp"
#include "distflow/error.hpp"
#include "distflow/network.hpp"
#include "distflow/units.hpp"

namespace distflow::io {

/// A network file parsed into per-unit form.
struct LoadedNetwork {
    std::string name;
    BaseUnits base;
    RadialNetwork network;
    DevicePortfolio portfolio;
    /// Devices listed at the substation bus. They do not enter the OPF (bus 0
    /// injections are free) but are kept so table totals can be checked.
    std::vector<DeviceSpec> substation_devices;
};

struct LoadOptions {
    /// Impedance (pu) substituted for zero r or x entries, which model closed switches.
    double zero_impedance_pu = 1e-6;
    /// Optional override for the voltage bounds of every bus.
    std::optional<std::pair<double, double>> voltage_bounds;
};

namespace detail {

struct Statement {
    std::size_t line = 0;
    std::string keyword;
    std::vector<std::string> positional;
    std::map<std::string, std::string> named;
};

inline std::vector<Statement> tokenize(std::string_view text) {
    std::vector<Statement> out;
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream words(raw);
        std::string word;
        Statement st;
        st.line = lineno;
        while (words >> word) {
            if (st.keyword.empty()) {
                st.keyword = word;
                continue;
            }
            const auto eq = word.find('=');
            if (eq == std::string::npos) {
                st.positional.push_back(word);
                continue;
            }
            const auto key = word.substr(0, eq);
            if (key.empty() || eq + 1 == word.size()) throw ParseError(lineno, "malformed key=value token '" + word + "'");
            if (!st.named.emplace(key, word.substr(eq + 1)).second) throw ParseError(lineno, "repeated key '" + key + "'");
        }
        if (!st.keyword.empty()) out.push_back(std::move(st));
    }
    return out;
}

inline double to_number(const Statement& st, const std::string& token) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw ParseError(st.line, "expected a number, got '" + token + "'");
    }
    return value;
}

class Reader {
public:
    explicit Reader(const Statement& st) : st_(st) {}

    double number(const std::string& key) {
        auto it = st_.named.find(key);
        if (it == st_.named.end()) throw ParseError(st_.line, "'" + st_.keyword + "' requires " + key + "=");
        used_.insert(key);
        return to_number(st_, it->second);
    }

    std::optional<double> maybe(const std::string& key) {
        auto it = st_.named.find(key);
        if (it == st_.named.end()) return std::nullopt;
        used_.insert(key);
        return to_number(st_, it->second);
    }

    std::optional<std::string> text(const std::string& key) {
        auto it = st_.named.find(key);
        if (it == st_.named.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    [[nodiscard]] bool has(const std::string& key) const { return st_.named.count(key) != 0; }

    void positional(std::size_t count) const {
        if (st_.positional.size() != count) {
            throw ParseError(st_.line, "'" + st_.keyword + "' expects " + std::to_string(count) + " positional field(s)");
        }
    }

    void done() const {
        for (const auto& [key, value] : st_.named) {
            if (!used_.count(key)) throw ParseError(st_.line, "unknown key '" + key + "' for '" + st_.keyword + "'");
        }
    }

private:
    const Statement& st_;
    std::set<std::string> used_;
};

/// Orders labels numerically when both parse as integers, otherwise lexically.
inline bool label_less(const std::string& a, const std::string& b) {
    auto numeric = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
    };
    if (numeric(a) && numeric(b)) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    }
    if (numeric(a) != numeric(b)) return numeric(a);
    return a < b;
}

}  // namespace detail

/// Parses a network document.
///
/// Grammar, one statement per line, `#` starts a comment:
///   network <name>
///   base kv=<kV> mva=<MVA> [z_ohm=<ohm>]
///   substation bus=<id> v0=<pu^2> [regulator=<factor>]
///   voltage vmin=<pu^2> vmax=<pu^2>
///   bus <id> [vmin=<pu^2>] [vmax=<pu^2>]
///   line <a> <b> r_ohm=<ohm> x_ohm=<ohm>       (or r_pu= x_pu=, not mixed in one file)
///   load <bus> peak_mva=<MVA>                   (or p_mw=<MW> q_mvar=<MVAR>)
///   capacitor <bus> mvar=<MVAR> [switched=yes]
///   pv <bus> mw=<MW>
[[nodiscard]] inline LoadedNetwork parse_network_text(std::string_view text, const LoadOptions& options = {}) {
    const auto statements = detail::tokenize(text);

    LoadedNetwork out;
    std::optional<BaseUnits> base;
    std::optional<std::string> substation;
    double v0 = 1.0;
    double vmin_default = 0.81, vmax_default = 1.21;
    std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> bus_bounds;
    enum class ImpedanceUnits { Unset, Ohm, PerUnit } units = ImpedanceUnits::Unset;

    struct RawLine {
        std::size_t line;
        std::string a, b;
        double r, x;
    };
    struct RawDevice {
        std::size_t line;
        std::string bus;
        DeviceSpec device;
    };
    std::vector<RawLine> raw_lines;
    std::vector<RawDevice> raw_devices;
    std::set<std::string, decltype(&detail::label_less)> labels(&detail::label_less);

    auto need_base = [&](const detail::Statement& st) -> const BaseUnits& {
        if (!base) throw ParseError(st.line, "'base' must precede '" + st.keyword + "'");
        return *base;
    };

    for (const auto& st : statements) {
        detail::Reader rd(st);
        if (st.keyword == "network") {
            rd.positional(1);
            out.name = st.positional[0];
        } else if (st.keyword == "base") {
            rd.positional(0);
            const double kv = rd.number("kv");
            const double mva = rd.number("mva");
            const auto z = rd.maybe("z_ohm");
            try {
                base = make_base(kv, mva, z);
            } catch (const Error& e) {
                throw ParseError(st.line, e.what());
            }
        } else if (st.keyword == "substation") {
            rd.positional(0);
            substation = rd.text("bus");
            if (!substation) throw ParseError(st.line, "'substation' requires bus=");
            v0 = rd.number("v0");
            if (auto reg = rd.maybe("regulator")) v0 *= (*reg) * (*reg);
            labels.insert(*substation);
        } else if (st.keyword == "voltage") {
            rd.positional(0);
            vmin_default = rd.number("vmin");
            vmax_default = rd.number("vmax");
        } else if (st.keyword == "bus") {
            rd.positional(1);
            auto& entry = bus_bounds[st.positional[0]];
            entry.first = rd.maybe("vmin");
            entry.second = rd.maybe("vmax");
            labels.insert(st.positional[0]);
        } else if (st.keyword == "line") {
            rd.positional(2);
            RawLine l{st.line, st.positional[0], st.positional[1], 0.0, 0.0};
            const bool ohm = rd.has("r_ohm") || rd.has("x_ohm");
            const bool pu = rd.has("r_pu") || rd.has("x_pu");
            if (ohm == pu) throw ParseError(st.line, "line needs either r_ohm/x_ohm or r_pu/x_pu");
            const auto kind = ohm ? ImpedanceUnits::Ohm : ImpedanceUnits::PerUnit;
            if (units != ImpedanceUnits::Unset && units != kind) {
                throw ParseError(st.line, "ohm and per-unit impedances cannot be mixed in one file");
            }
            units = kind;
            if (ohm) {
                const auto& b = need_base(st);
                l.r = to_per_unit(rd.number("r_ohm"), b);
                l.x = to_per_unit(rd.number("x_ohm"), b);
            } else {
                l.r = rd.number("r_pu");
                l.x = rd.number("x_pu");
            }
            if (l.r == 0.0) l.r = options.zero_impedance_pu;
            if (l.x == 0.0) l.x = options.zero_impedance_pu;
            labels.insert(l.a);
            labels.insert(l.b);
            raw_lines.push_back(std::move(l));
        } else if (st.keyword == "load") {
            rd.positional(1);
            const auto& b = need_base(st);
            if (rd.has("peak_mva")) {
                raw_devices.push_back({st.line, st.positional[0], PeakLoad{rd.number("peak_mva") / b.s_base_mva}});
            } else {
                const double p = rd.number("p_mw") / b.s_base_mva;
                const double q = rd.number("q_mvar") / b.s_base_mva;
                raw_devices.push_back({st.line, st.positional[0], FixedLoad{p, q}});
            }
        } else if (st.keyword == "capacitor") {
            rd.positional(1);
            const auto& b = need_base(st);
            Capacitor c{rd.number("mvar") / b.s_base_mva, false};
            if (auto sw = rd.text("switched")) {
                if (*sw != "yes" && *sw != "no") throw ParseError(st.line, "switched= takes yes or no");
                c.discrete = *sw == "yes";
            }
            raw_devices.push_back({st.line, st.positional[0], c});
        } else if (st.keyword == "pv") {
            rd.positional(1);
            const auto& b = need_base(st);
            raw_devices.push_back({st.line, st.positional[0], Photovoltaic{rd.number("mw") / b.s_base_mva}});
        } else {
            throw ParseError(st.line, "unknown statement '" + st.keyword + "'");
        }
        rd.done();
    }

    if (!substation) throw ParseError(statements.empty() ? 0 : statements.back().line, "missing 'substation' statement");
    if (!base) base = BaseUnits{};
    out.base = *base;

    std::map<std::string, std::size_t> index;
    std::vector<std::string> names{*substation};
    index[*substation] = 0;
    for (const auto& l : labels) {
        if (l == *substation) continue;
        index[l] = names.size();
        names.push_back(l);
    }

    const std::size_t count = names.size();
    std::vector<BusId> buses;
    for (std::size_t i = 0; i < count; ++i) buses.emplace_back(i);
    std::vector<Line> lines;
    for (const auto& l : raw_lines) lines.push_back(Line{BusId{index[l.a]}, BusId{index[l.b]}, l.r, l.x});
    std::vector<double> vmin(count, vmin_default), vmax(count, vmax_default);
    for (const auto& [label, bounds] : bus_bounds) {
        const auto i = index[label];
        if (bounds.first) vmin[i] = *bounds.first;
        if (bounds.second) vmax[i] = *bounds.second;
    }
    if (options.voltage_bounds) {
        std::fill(vmin.begin(), vmin.end(), options.voltage_bounds->first);
        std::fill(vmax.begin(), vmax.end(), options.voltage_bounds->second);
    }
    out.network = build_network(buses, lines, v0, vmin, vmax);
    out.network.set_labels(names);

    out.portfolio = DevicePortfolio(count);
    for (const auto& d : raw_devices) {
        auto it = index.find(d.bus);
        if (it == index.end()) throw ParseError(d.line, "device at unknown bus '" + d.bus + "'");
        if (it->second == 0) {
            out.substation_devices.push_back(d.device);
        } else {
            out.portfolio.add(it->second, d.device);
        }
    }
    return out;
}

[[nodiscard]] inline LoadedNetwork load_network_file(const std::string& path, const LoadOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto net = parse_network_text(buffer.str(), options);
    if (net.name.empty()) net.name = path;
    return net;
}

}  // namespace distflow::io
