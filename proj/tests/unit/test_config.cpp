#include "cavsync/config.hpp"

#include <doctest.h>

#include <fstream>
#include <string>

using namespace cavsync;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string message_of(const std::string& text) {
    try {
        (void)parse_config_string(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = R"(units = "hz_over_2pi"
[run]
mode = "transient"
[physics]
kappa = 160e3
gamma = 2e6
g = 1.6e3
[spectrum]
n_classes = 5
total_emitters = 100
sigma = 1e6
[time]
t_end = 1e-6
dt_output = 1e-9
)";

}  // namespace

TEST_CASE("fig2a config parses") {
    const auto c = parse_config_string(read_file(CAVSYNC_SOURCE_DIR "/configs/fig2a.toml"));
    CHECK(c.mode == RunMode::Transient);
    CHECK(c.spectrum.n_classes == 220);
    CHECK(c.spectrum.total_emitters == 100'000'000);
    CHECK(c.g == doctest::Approx(two_pi * 1.6e3));
    CHECK(c.params.kappa == doctest::Approx(two_pi * 160e3));
    CHECK(c.drive.amplitude == doctest::Approx(two_pi * 3e7));
    CHECK(c.drive.t_off == doctest::Approx(0.2e-6));
    CHECK(c.integrator.rel_tol == 1e-8);
    CHECK(c.integrator.abs_tol == 1e-10);
}

TEST_CASE("empty config names the missing key") {
    CHECK(message_of("").find("units") != std::string::npos);
}

TEST_CASE("negative coupling is rejected with its line") {
    std::string t = kMinimal;
    t.replace(t.find("g = 1.6e3"), 9, "g = -1");
    const auto m = message_of(t);
    CHECK(m.find("physics.g") != std::string::npos);
    CHECK(m.find("line 7") != std::string::npos);
}

TEST_CASE("unknown keys and bad types") {
    CHECK(message_of(std::string(kMinimal) + "[physics2]\nx = 1\n").find("unknown key") != std::string::npos);
    std::string t = kMinimal;
    t.replace(t.find("n_classes = 5"), 13, "n_classes = \"5\"");
    CHECK(message_of(t).find("expects an integer") != std::string::npos);
    CHECK(message_of(std::string(kMinimal) + "[physics]\n").find("duplicate") != std::string::npos);
    std::string u = kMinimal;
    u.replace(u.find("hz_over_2pi"), 11, "rad_per_s");
    CHECK_FALSE(message_of(u).empty());
}

TEST_CASE("missing mode-specific key") {
    std::string t = kMinimal;
    t.erase(t.find("t_end = 1e-6\n"), 13);
    CHECK(message_of(t).find("time.t_end") != std::string::npos);
}

TEST_CASE("overrides win and are recorded") {
    const auto c = parse_config_string(kMinimal, {"physics.eta=2e6", "model.kernel=scalar"});
    CHECK(c.params.eta == doctest::Approx(two_pi * 2e6));
    CHECK(c.eom.kernel == KernelChoice::Scalar);
    CHECK(c.overrides.size() == 2);
    CHECK_THROWS_AS(parse_config_string(kMinimal, {"physics.eta"}), ConfigError);
}

TEST_CASE("resolved document contains defaults") {
    const auto c = parse_config_string(kMinimal);
    CHECK(c.resolved.find("integrator", "rel_tol") != nullptr);
    CHECK(c.resolved.find("steady", "ss_tol") != nullptr);
    const auto again = parse_config_string(c.resolved.to_toml());
    CHECK(again.spectrum.sigma == c.spectrum.sigma);
    CHECK(again.integrator.max_step == c.integrator.max_step);
}

TEST_CASE("values") {
    CHECK(std::get<std::int64_t>(parse_config_value("1_000", 1).v) == 1000);
    CHECK(std::get<double>(parse_config_value("1.5e3", 1).v) == 1500.0);
    CHECK(std::get<bool>(parse_config_value("true", 1).v));
    CHECK(std::get<std::string>(parse_config_value("\"a b\"", 1).v) == "a b");
    CHECK(std::get<ConfigArray>(parse_config_value("[1, 2.5, 3]", 1).v).size() == 3);
    CHECK_THROWS_AS(parse_config_value("[1, 2", 4), ConfigError);
}

TEST_CASE("every shipped config loads") {
    for (const char* name : {"fig2a", "fig2e", "power_law_1e8", "power_law_1e9", "sweep_gamma_0p2MHz",
                             "sweep_gamma_20MHz", "oracle_n2", "analyze_fig2a"}) {
        CAPTURE(name);
        CHECK_NOTHROW((void)parse_config_string(
            read_file(std::string(CAVSYNC_SOURCE_DIR "/configs/") + name + ".toml")));
    }
}
