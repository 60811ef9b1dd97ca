#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "distflow/c1.hpp"
#include "distflow/devices.hpp"
#include "distflow/error.hpp"
#include "distflow/exactness.hpp"
#include "distflow/io/datasets.hpp"
#include "distflow/io/network_file.hpp"
#include "distflow/lindistflow.hpp"
#include "distflow/objective.hpp"
#include "distflow/opf.hpp"
#include "distflow/powerflow.hpp"
#include "distflow/rng.hpp"
#include "distflow/version.hpp"

namespace distflow {

struct MarginSection {
    MarginResult margin;
    C1Report c1_at_nominal;
    SufficientConditions conditions;
};

struct ExactnessSection {
    std::string variant;
    double eta = 1.0;
    socp::SolveStatus status = socp::SolveStatus::SlowProgress;
    int iterations = 0;
    socp::SolverResiduals residuals;
    double objective = 0.0;
    double line_losses = 0.0;
    std::optional<ExactnessReport> exactness;
    /// max |v_socp - v_pf| after re-solving the power flow at the optimal injections.
    std::optional<double> roundtrip_voltage_error;
    FlowState state;
};

struct GapSample {
    std::uint64_t index = 0;
    bool converged = false;
    bool feasible = false;
    double eps = 0.0;
};

struct GapReport {
    std::size_t samples = 0;
    std::size_t feasible_samples = 0;
    double eps_estimate = 0.0;
    std::uint64_t seed = 0;
    double eta = 1.0;
    std::vector<GapSample> records;
};

struct ExperimentReport {
    std::string network;
    std::string experiment;
    std::string tool_version = std::string(version);
    std::optional<std::uint64_t> seed;
    /// File label of each bus index, when the network came from a file.
    std::vector<std::string> bus_labels;
    std::optional<MarginSection> margin;
    std::optional<ExactnessSection> exactness;
    std::optional<GapReport> gap;
    /// Wall-clock seconds per phase. Kept apart from the reproducible fields.
    std::map<std::string, double> runtimes;
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Worker count for sampling: an explicit request, else DISTFLOW_THREADS, else the hardware count.
[[nodiscard]] inline unsigned resolve_thread_count(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("DISTFLOW_THREADS")) {
        char* end = nullptr;
        const long value = std::strtol(env, &end, 10);
        if (end != env && value > 0) return static_cast<unsigned>(value);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

[[nodiscard]] inline ExperimentReport run_margin_experiment(const io::LoadedNetwork& data, double tol = 1e-4) {
    ExperimentReport rep;
    rep.network = data.name;
    rep.experiment = "margin";
    rep.bus_labels = data.network.labels();
    detail::Stopwatch clock;
    MarginSection sec;
    sec.margin = c1_margin(data.network, data.portfolio, tol);
    rep.runtimes["margin"] = clock.seconds();
    const auto bounds = injection_bounds(data.portfolio, 1.0);
    sec.c1_at_nominal = check_c1(data.network, bounds);
    sec.conditions = check_sufficient_conditions(data.network, bounds);
    rep.margin = sec;
    rep.runtimes["total"] = clock.seconds();
    return rep;
}

[[nodiscard]] inline ExperimentReport run_margin_experiment(std::string_view dataset, double tol = 1e-4) {
    return run_margin_experiment(io::embedded_dataset(dataset), tol);
}

/// Loss-minimizing OPF at device scale eta, exactness check and power-flow round trip.
[[nodiscard]] inline ExperimentReport run_exactness_experiment(const io::LoadedNetwork& data, const Variant& variant,
                                                               double eta = 1.0,
                                                               const socp::SolverOptions& options = {},
                                                               double exactness_tol = 1e-6) {
    ExperimentReport rep;
    rep.network = data.name;
    rep.experiment = "exactness";
    rep.bus_labels = data.network.labels();
    const auto portfolio = data.portfolio.scaled(eta);
    detail::Stopwatch clock;
    const auto result = solve_opf(data.network, portfolio, Objective::losses(data.network), variant, options,
                                  exactness_tol);
    rep.runtimes["solve"] = clock.seconds();

    ExactnessSection sec;
    sec.variant = variant.name();
    sec.eta = eta;
    sec.status = result.solution.status;
    sec.iterations = result.solution.iterations;
    sec.residuals = result.solution.residuals;
    sec.objective = result.solution.objective;
    sec.exactness = result.exactness;
    sec.state = result.state;
    if (result.solution.status == socp::SolveStatus::Optimal) {
        sec.line_losses = line_losses(data.network, result.state);
        detail::Stopwatch pf_clock;
        try {
            const auto pf = sweep_solve(data.network, result.state.s);
            double err = 0.0;
            for (std::size_t i = 0; i < pf.v.size(); ++i) err = std::max(err, std::abs(pf.v[i] - result.state.v[i]));
            sec.roundtrip_voltage_error = err;
        } catch (const Error& e) {
            if (e.code() != Errc::NotConverged) throw;
        }
        rep.runtimes["roundtrip"] = pf_clock.seconds();
    }
    rep.exactness = std::move(sec);
    rep.runtimes["total"] = clock.seconds();
    return rep;
}

[[nodiscard]] inline ExperimentReport run_exactness_experiment(std::string_view dataset, const Variant& variant,
                                                               double eta = 1.0,
                                                               const socp::SolverOptions& options = {}) {
    return run_exactness_experiment(io::embedded_dataset(dataset), variant, eta, options);
}

/// Operating point used when no injections are given: fixed loads, capacitors at
/// full rating and PV at full real output with zero reactive power, all device
/// ratings scaled by eta.
[[nodiscard]] inline std::vector<Complex> nominal_injections(const DevicePortfolio& portfolio, double eta = 1.0) {
    const auto scaled = portfolio.scaled(eta);
    std::vector<Complex> s(scaled.bus_count());
    for (std::size_t i = 1; i < s.size(); ++i) {
        s[i] = fixed_injection(scaled.at(i));
        for (const auto& d : scaled.at(i)) {
            if (const auto* c = std::get_if<Capacitor>(&d)) s[i] += Complex{0.0, c->q_cap};
            if (const auto* pv = std::get_if<Photovoltaic>(&d)) s[i] += Complex{pv->s_nameplate, 0.0};
        }
    }
    return s;
}

/// One random injection vector: fixed loads as given, each capacitor uniform on
/// [0, q_cap], each PV uniform on its half-disk by rejection.
[[nodiscard]] inline std::vector<Complex> sample_injections(const DevicePortfolio& portfolio, SampleStream& rng) {
    std::vector<Complex> s(portfolio.bus_count());
    for (std::size_t i = 1; i < s.size(); ++i) {
        Complex total = fixed_injection(portfolio.at(i));
        for (const auto& d : portfolio.at(i)) {
            if (const auto* c = std::get_if<Capacitor>(&d)) {
                total += Complex{0.0, rng.uniform(0.0, c->q_cap)};
            } else if (const auto* pv = std::get_if<Photovoltaic>(&d)) {
                const double r = pv->s_nameplate;
                if (r == 0.0) continue;
                for (;;) {
                    const double p = rng.uniform(0.0, r);
                    const double q = rng.uniform(-r, r);
                    if (p * p + q * q <= r * r) {
                        total += Complex{p, q};
                        break;
                    }
                }
            }
        }
        s[i] = total;
    }
    return s;
}

/// Evaluates one sample: sweep, bound filter, and ||v_hat(s) - v||_inf.
[[nodiscard]] inline GapSample evaluate_gap_sample(const RadialNetwork& net, const DevicePortfolio& portfolio,
                                                   std::uint64_t seed, std::uint64_t index) {
    GapSample out;
    out.index = index;
    SampleStream rng(seed, index);
    const auto s = sample_injections(portfolio, rng);
    FlowState st;
    try {
        st = sweep_solve(net, s);
    } catch (const Error& e) {
        if (e.code() != Errc::NotConverged) throw;
        return out;
    }
    out.converged = true;
    bool inside = injection_feasible(portfolio, s);
    for (std::size_t i = 1; inside && i < net.bus_count(); ++i) {
        inside = st.v[i] >= net.vmin(i) && st.v[i] <= net.vmax(i);
    }
    out.feasible = inside;
    if (!inside) return out;
    const auto vh = hat_v(net, s);
    for (std::size_t i = 0; i < vh.size(); ++i) out.eps = std::max(out.eps, std::abs(vh[i] - st.v[i]));
    return out;
}

/// Monte Carlo estimate of the modification gap over OPF-feasible injection samples.
[[nodiscard]] inline GapReport run_gap_experiment(const io::LoadedNetwork& data, std::size_t samples,
                                                  std::uint64_t seed, double eta = 1.0, unsigned threads = 0) {
    if (samples == 0) throw Error(Errc::InvalidArgument, "at least one sample is required");
    const auto portfolio = data.portfolio.scaled(eta);
    GapReport rep;
    rep.samples = samples;
    rep.seed = seed;
    rep.eta = eta;
    rep.records.resize(samples);

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_thread_count(threads), samples));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(workers);
    auto work = [&](unsigned w) {
        try {
            for (std::size_t k = next++; k < samples; k = next++) {
                rep.records[k] = evaluate_gap_sample(data.network, portfolio, seed, k);
            }
        } catch (...) {
            failures[w] = std::current_exception();
            next = samples;
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    for (const auto& r : rep.records) {
        if (!r.feasible) continue;
        ++rep.feasible_samples;
        rep.eps_estimate = std::max(rep.eps_estimate, r.eps);
    }
    if (rep.feasible_samples == 0) {
        throw Error(Errc::NoFeasibleSamples, "none of " + std::to_string(samples) + " samples was OPF-feasible");
    }
    return rep;
}

[[nodiscard]] inline GapReport run_gap_experiment(std::string_view dataset, std::size_t samples, std::uint64_t seed,
                                                  double eta = 1.0, unsigned threads = 0) {
    return run_gap_experiment(io::embedded_dataset(dataset), samples, seed, eta, threads);
}

}  // namespace distflow
