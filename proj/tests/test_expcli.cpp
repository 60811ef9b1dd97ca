#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "distflow/experiments.hpp"
#include "distflow/io/datasets.hpp"
#include "distflow/io/network_file.hpp"
#include "distflow/lindistflow.hpp"
#include "distflow/powerflow.hpp"
#include "distflow/report.hpp"

using namespace distflow;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::Io;
}

ParseError parse_error_of(std::string_view text) {
    try {
        (void)io::parse_network_text(text);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("expected a parse error");
    return ParseError(0, "");
}

const char* small_feeder = R"(network tiny
base kv=12 mva=1 z_ohm=144
substation bus=10 v0=1.0
voltage vmin=0.81 vmax=1.21
line 10 2 r_ohm=1.44 x_ohm=2.88
line 2 7 r_ohm=1.44 x_ohm=1.44
bus 7 vmax=1.1
load 2 p_mw=0.2 q_mvar=0.1
load 7 peak_mva=0.5
capacitor 7 mvar=0.3 switched=no
pv 2 mw=0.4
)";

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

int run_cli(const std::string& args) {
    const std::string cmd = env_or_empty("DISTFLOW_CLI") + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("network file converts units and orders buses with the substation first", "[io]") {
    const auto data = io::parse_network_text(small_feeder);
    CHECK(data.name == "tiny");
    const auto& net = data.network;
    REQUIRE(net.bus_count() == 3);
    CHECK(net.labels() == std::vector<std::string>{"10", "2", "7"});
    CHECK_THAT(net.r(1), WithinAbs(0.01, 1e-15));
    CHECK_THAT(net.x(1), WithinAbs(0.02, 1e-15));
    CHECK_THAT(net.r(2), WithinAbs(0.01, 1e-15));
    CHECK(net.parent(2) == 1);
    CHECK(net.vmax(2) == 1.1);
    CHECK(net.vmax(1) == 1.21);
    CHECK(net.vmin(2) == 0.81);

    CHECK_THAT(data.portfolio.total_pv(), WithinAbs(0.4, 1e-15));
    CHECK_THAT(data.portfolio.total_capacitor(), WithinAbs(0.3, 1e-15));
    CHECK_THAT(data.portfolio.total_peak_load(), WithinAbs(0.5, 1e-15));
    // peak load at power factor 0.9
    const Complex s7 = fixed_injection(data.portfolio.at(2));
    CHECK_THAT(s7.real(), WithinAbs(-0.45, 1e-15));
    CHECK_THAT(s7.imag(), WithinAbs(-0.5 * std::sqrt(1.0 - 0.81), 1e-15));
}

TEST_CASE("per-unit impedances and zero entries", "[io]") {
    const auto data = io::parse_network_text(
        "substation bus=0 v0=1.0\nline 0 1 r_pu=0.02 x_pu=0\nline 1 2 r_pu=0.01 x_pu=0.03\n");
    CHECK(data.network.r(1) == 0.02);
    CHECK(data.network.x(1) == 1e-6);
    const auto custom = io::parse_network_text("substation bus=0 v0=1.0\nline 0 1 r_pu=0 x_pu=0.1\n",
                                               io::LoadOptions{1e-5, std::nullopt});
    CHECK(custom.network.r(1) == 1e-5);
}

TEST_CASE("regulator ratio squares into the substation voltage", "[io]") {
    const auto data = io::parse_network_text("substation bus=0 v0=1.0 regulator=1.05\nline 0 1 r_pu=0.1 x_pu=0.1\n");
    CHECK_THAT(data.network.v0(), WithinAbs(1.1025, 1e-15));
}

TEST_CASE("voltage bound override replaces every bus", "[io]") {
    const auto data = io::parse_network_text(small_feeder, io::LoadOptions{1e-6, std::pair{0.9, 1.05}});
    for (std::size_t i = 1; i < data.network.bus_count(); ++i) {
        CHECK(data.network.vmin(i) == 0.9);
        CHECK(data.network.vmax(i) == 1.05);
    }
}

TEST_CASE("parse errors carry the source line", "[io]") {
    auto e = parse_error_of("substation bus=0 v0=1\n\n# comment\nfeeder 0 1\n");
    CHECK(e.line() == 4);
    CHECK_THAT(e.reason(), ContainsSubstring("unknown statement"));

    e = parse_error_of("substation bus=0 v0=1\nline 0 1 r_pu=0.1 x_pu=0.1 colour=red\n");
    CHECK(e.line() == 2);
    CHECK_THAT(e.reason(), ContainsSubstring("unknown key"));

    e = parse_error_of("base kv=12 mva=1\nsubstation bus=0 v0=1\nline 0 1 r_pu=0.1 x_pu=0.1\nline 1 2 r_ohm=1 x_ohm=1\n");
    CHECK(e.line() == 4);
    CHECK_THAT(e.reason(), ContainsSubstring("cannot be mixed"));

    e = parse_error_of("substation bus=0 v0=1\nline 0 1 r_ohm=1 x_ohm=1\n");
    CHECK(e.line() == 2);
    CHECK_THAT(e.reason(), ContainsSubstring("must precede"));

    e = parse_error_of("substation bus=0 v0=1\nline 0 1 r_pu=0.1\n");
    CHECK(e.line() == 2);

    e = parse_error_of("line 0 1 r_pu=0.1 x_pu=0.1\n");
    CHECK_THAT(e.reason(), ContainsSubstring("substation"));

    e = parse_error_of("base kv=12 mva=1\nsubstation bus=0 v0=1\nline 0 1 r_pu=0.1 x_pu=0.1\npv 5 mw=1\n");
    CHECK(e.line() == 4);
    CHECK_THAT(e.reason(), ContainsSubstring("unknown bus"));

    e = parse_error_of("base kv=12 mva=1\nsubstation bus=0 v0=1\nline 0 1 r_pu=0.1 x_pu=0.1\ncapacitor 1 mvar=1 switched=maybe\n");
    CHECK(e.line() == 4);

    e = parse_error_of("substation bus=0 v0=abc\n");
    CHECK(e.line() == 1);
}

TEST_CASE("topology errors surface with their own codes", "[io]") {
    CHECK(code_of([] {
              (void)io::parse_network_text(
                  "substation bus=0 v0=1\nline 0 1 r_pu=0.1 x_pu=0.1\nline 1 2 r_pu=0.1 x_pu=0.1\n"
                  "line 2 1 r_pu=0.1 x_pu=0.1\n");
          }) != Errc::ParseError);
    CHECK(code_of([] {
              (void)io::parse_network_text("substation bus=0 v0=1\nline 0 1 r_pu=-0.1 x_pu=0.1\n");
          }) == Errc::NonpositiveImpedance);
    CHECK(code_of([] {
              (void)io::parse_network_text(
                  "substation bus=0 v0=1\nline 0 1 r_pu=0.1 x_pu=0.1\nline 2 3 r_pu=0.1 x_pu=0.1\n");
          }) == Errc::Disconnected);
}

TEST_CASE("embedded dataset totals", "[datasets]") {
    CHECK(io::dataset_names() == std::vector<std::string>{"sce47", "sce56"});

    const auto d47 = io::embedded_dataset("sce47");
    CHECK(d47.network.bus_count() == 47);
    CHECK(d47.network.line_count() == 46);
    const double mva47 = d47.base.s_base_mva;
    CHECK_THAT(d47.portfolio.total_pv() * mva47, WithinAbs(6.4, 1e-9));
    double cap47 = d47.portfolio.total_capacitor();
    for (const auto& d : d47.substation_devices) {
        if (const auto* c = std::get_if<Capacitor>(&d)) cap47 += c->q_cap;
    }
    CHECK_THAT(cap47 * mva47, WithinAbs(10.8, 1e-9));

    const auto d56 = io::embedded_dataset("sce56");
    CHECK(d56.network.bus_count() == 56);
    CHECK(d56.network.line_count() == 55);
    const double mva56 = d56.base.s_base_mva;
    CHECK_THAT(d56.portfolio.total_capacitor() * mva56, WithinAbs(2.4, 1e-9));
    CHECK_THAT(d56.portfolio.total_pv() * mva56, WithinAbs(5.0, 1e-9));
    CHECK(d56.substation_devices.empty());
    CHECK_THAT(d56.portfolio.total_peak_load() * mva56, WithinAbs(3.835, 1e-3));

    CHECK(code_of([] { (void)io::embedded_dataset("sce99"); }) == Errc::UnknownDataset);
}

TEST_CASE("dataset files on disk match the embedded copies", "[datasets]") {
    const auto dir = env_or_empty("DISTFLOW_DATA_DIR");
    if (dir.empty()) SKIP("DISTFLOW_DATA_DIR not set");
    for (const auto& name : io::dataset_names()) {
        const auto path = std::filesystem::path(dir) / (name + ".net");
        CHECK(slurp(path) == io::dataset_text(name));
        const auto disk = io::load_network_file(path.string());
        CHECK(disk.name == name);
        CHECK(disk.network.bus_count() == io::embedded_dataset(name).network.bus_count());
    }
    CHECK(code_of([&] { (void)io::load_network_file(dir + "/absent.net"); }) == Errc::Io);
}

TEST_CASE("sample streams are reproducible and independent", "[rng]") {
    SampleStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    for (int k = 0; k < 100; ++k) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    SampleStream e(7, 3);
    CHECK(e.uniform() != c.uniform());
    SampleStream f(7, 3);
    CHECK(f.uniform() != d.uniform());
    // mt19937_64 with the derived seed, top 53 bits
    std::mt19937_64 ref(splitmix64(7 ^ splitmix64(3)));
    SampleStream g(7, 3);
    CHECK(g.uniform() == static_cast<double>(ref() >> 11) * 0x1.0p-53);
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("samples respect the device sets", "[gap]") {
    const auto data = io::embedded_dataset("sce47");
    for (std::uint64_t k = 0; k < 200; ++k) {
        SampleStream rng(11, k);
        const auto s = sample_injections(data.portfolio, rng);
        CHECK(injection_feasible(data.portfolio, s));
    }
}

TEST_CASE("nominal injections use full device ratings", "[gap]") {
    const auto data = io::parse_network_text(small_feeder);
    const auto s = nominal_injections(data.portfolio, 0.5);
    CHECK_THAT(s[1].real(), WithinAbs(-0.2 + 0.2, 1e-15));
    CHECK_THAT(s[1].imag(), WithinAbs(-0.1, 1e-15));
    CHECK_THAT(s[2].imag(), WithinAbs(-0.5 * std::sqrt(0.19) + 0.15, 1e-15));
}

TEST_CASE("gap samples match an independent recomputation", "[gap]") {
    const auto data = io::embedded_dataset("sce47");
    const auto rep = run_gap_experiment(data, 150, 5, 1.0, 1);
    REQUIRE(rep.records.size() == 150);
    CHECK(rep.feasible_samples > 0);
    double worst = 0.0;
    for (const auto& r : rep.records) {
        CHECK(r.eps >= 0.0);
        if (!r.feasible) {
            CHECK(r.eps == 0.0);
            continue;
        }
        SampleStream rng(5, r.index);
        const auto s = sample_injections(data.portfolio, rng);
        const auto v = sweep_solve(data.network, s).v;
        const auto vh = hat_v(data.network, s);
        double eps = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) eps = std::max(eps, std::abs(vh[i] - v[i]));
        CHECK(r.eps == eps);
        worst = std::max(worst, eps);
    }
    CHECK(rep.eps_estimate == worst);
}

TEST_CASE("gap results do not depend on the thread count", "[gap]") {
    const auto data = io::embedded_dataset("sce56");
    const auto one = run_gap_experiment(data, 120, 9, 1.0, 1);
    const auto three = run_gap_experiment(data, 120, 9, 1.0, 3);
    CHECK(to_json(one).dump() == to_json(three).dump());
    CHECK(one.eps_estimate > 0.0);
}

TEST_CASE("a feeder without devices has zero gap", "[gap]") {
    const auto data = io::parse_network_text("substation bus=0 v0=1\nline 0 1 r_pu=0.01 x_pu=0.02\nline 1 2 r_pu=0.01 x_pu=0.01\n");
    const auto rep = run_gap_experiment(data, 20, 1, 1.0, 1);
    CHECK(rep.feasible_samples == 20);
    CHECK(rep.eps_estimate == 0.0);
}

TEST_CASE("gap experiment rejects empty runs and infeasible bounds", "[gap]") {
    const auto data = io::embedded_dataset("sce56");
    CHECK(code_of([&] { (void)run_gap_experiment(data, 0, 1); }) == Errc::InvalidArgument);
    const auto tight = io::embedded_dataset("sce56", io::LoadOptions{1e-6, std::pair{0.999, 1.0}});
    CHECK(code_of([&] { (void)run_gap_experiment(tight, 10, 1, 1.0, 1); }) == Errc::NoFeasibleSamples);
}

TEST_CASE("reports are deterministic apart from runtimes", "[report]") {
    const auto a = to_json(run_margin_experiment("sce47"));
    const auto b = to_json(run_margin_experiment("sce47"));
    CHECK(a.at("schema") == report_schema);
    CHECK(a.contains("runtimes"));
    auto strip = [](nlohmann::json j) {
        j.erase("runtimes");
        return j.dump();
    };
    CHECK(strip(a) == strip(b));
    CHECK(a.at("results").at("c1_margin").at("kind") == "finite");
    CHECK(a.at("bus_labels").size() == 47);
}

TEST_CASE("margin CSV has a header and one summary row", "[report]") {
    const auto rep = run_margin_experiment("sce56");
    std::ostringstream out;
    write_csv(out, rep);
    std::istringstream in(out.str());
    std::string header, row, extra;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "network,kind,eta_star,c1_at_nominal,cond_i,cond_ii,cond_iii,cond_iv,cond_v");
    CHECK(row.rfind("sce56,finite,", 0) == 0);
    CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("solve report CSV lists every line", "[report]") {
    const auto rep = run_exactness_experiment("sce56", Variant::socp_m());
    std::ostringstream out;
    write_csv(out, rep);
    std::istringstream in(out.str());
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    CHECK(line == "bus,label,p,q,v,P,Q,ell,gap");
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 55);
    const auto j = to_json(rep);
    CHECK(j.at("results").at("solve").at("status") == "optimal");
    CHECK(j.at("results").at("solve").at("exactness").at("exact") == true);
}

TEST_CASE("flow states round-trip through JSON text exactly", "[report]") {
    const auto data = io::embedded_dataset("sce47");
    const auto st = sweep_solve(data.network, nominal_injections(data.portfolio));
    const auto back = state_from_json(nlohmann::json::parse(state_to_json(st).dump()));
    CHECK(back.s == st.s);
    CHECK(back.S == st.S);
    CHECK(back.v == st.v);
    CHECK(back.ell == st.ell);
    CHECK(back.s0 == st.s0);
    CHECK(code_of([] { (void)state_from_json(nlohmann::json{{"s", 1}}); }) == Errc::ParseError);
}

TEST_CASE("command-line exit codes", "[cli]") {
    if (env_or_empty("DISTFLOW_CLI").empty()) SKIP("DISTFLOW_CLI not set");
    const auto dir = std::filesystem::temp_directory_path() / "distflow_cli_test";
    std::filesystem::create_directories(dir);
    const auto out = (dir / "margin.json").string();

    CHECK(run_cli("margin --dataset sce47 --out " + out) == 0);
    const auto doc = nlohmann::json::parse(slurp(out));
    CHECK(doc.at("schema") == report_schema);
    const double eta = doc.at("results").at("c1_margin").at("eta_star").get<double>();
    CHECK(eta > 2.4);

    CHECK(run_cli("check-c1 --dataset sce56 --strict") == 0);
    CHECK(run_cli("check-c1 --dataset sce56 --eta 1.5 --strict") == 1);
    CHECK(run_cli("check-c1 --dataset sce56 --eta 1.5") == 0);
    CHECK(run_cli("margin --dataset sce99") == 2);
    CHECK(run_cli("margin --network " + (dir / "absent.net").string()) == 2);
    CHECK(run_cli("margin") == 2);
    CHECK(run_cli("solve --dataset sce47 --variant nonsense") == 2);
    CHECK(run_cli("--help") == 0);

    const auto dataDir = env_or_empty("DISTFLOW_DATA_DIR");
    if (!dataDir.empty()) CHECK(run_cli("check-c1 --network " + dataDir + "/sce47.net --strict") == 0);
    std::filesystem::remove_all(dir);
}
