#include <cmath>
#include <numeric>

#include "doctest.h"
#include "glova/bench.hpp"
#include "glova/error.hpp"
#include "glova/variation.hpp"

using namespace glova;

TEST_SUITE("variation") {

namespace {

CornerGrid standard_grid() {
    return {{ProcessCorner::TT, ProcessCorner::SS, ProcessCorner::FF, ProcessCorner::SF, ProcessCorner::FS},
            {0.8, 0.9},
            {-40.0, 27.0, 80.0}};
}

DesignSpace one_device_space() {
    return DesignSpace({{"W", ParamKind::width, 0.5, 8.0, ParamScale::linear},
                        {"L", ParamKind::length, 0.5, 8.0, ParamScale::linear}});
}

VarianceModel one_device_model(double pelgrom) {
    VarianceModel m;
    m.devices = {{"M1", 0, 1}};
    m.dims = {{"dvt", 0, pelgrom}};
    m.global_sigmas = {0.0};
    return m;
}

}  // namespace

TEST_CASE("corner enumeration sizes") {
    CHECK(enumerate_corners(VerificationMethod::C, standard_grid()).size() == 30);
    CHECK(enumerate_corners(VerificationMethod::CMCL, standard_grid()).size() == 30);
    const auto gl = enumerate_corners(VerificationMethod::CMCGL, standard_grid());
    REQUIRE(gl.size() == 6);
    for (const auto& c : gl) CHECK(c.process == ProcessCorner::GLOBAL_MC);
    CornerGrid single{{ProcessCorner::SS}, {0.8}, {80.0}};
    CHECK(enumerate_corners(VerificationMethod::C, single).size() == 1);
}

TEST_CASE("corner enumeration is process-major") {
    const auto c = enumerate_corners(VerificationMethod::C, standard_grid());
    CHECK(c[0] == PvtCorner{ProcessCorner::TT, 0.8, -40.0});
    CHECK(c[1] == PvtCorner{ProcessCorner::TT, 0.8, 27.0});
    CHECK(c[3] == PvtCorner{ProcessCorner::TT, 0.9, -40.0});
    CHECK(c[6] == PvtCorner{ProcessCorner::SS, 0.8, -40.0});
    CHECK(c[29] == PvtCorner{ProcessCorner::FS, 0.9, 80.0});
    CHECK(c[6].label() == "SS/0.8V/-40C");
}

TEST_CASE("corner enumeration rejects bad grids") {
    CHECK_THROWS_AS(enumerate_corners(VerificationMethod::C, {{ProcessCorner::TT}, {}, {27.0}}), ConfigError);
    CHECK_THROWS_AS(enumerate_corners(VerificationMethod::C, {{}, {0.9}, {27.0}}), ConfigError);
    CHECK_THROWS_AS(enumerate_corners(VerificationMethod::CMCL, {{ProcessCorner::GLOBAL_MC}, {0.9}, {27.0}}),
                    ConfigError);
}

TEST_CASE("method and process names round-trip") {
    for (auto m : {VerificationMethod::C, VerificationMethod::CMCL, VerificationMethod::CMCGL})
        CHECK(parse_method(to_string(m)) == m);
    CHECK(parse_method("C-MC_L") == VerificationMethod::CMCL);
    CHECK(parse_method("C-MC_G-L") == VerificationMethod::CMCGL);
    CHECK_THROWS_AS(parse_method("MC"), ConfigError);
    CHECK(parse_process("GLOBAL_MC") == ProcessCorner::GLOBAL_MC);
    CHECK_THROWS_AS(parse_process("XX"), ConfigError);
}

TEST_CASE("Pelgrom substitution and scaling") {
    const auto space = one_device_space();
    const auto model = one_device_model(4.0);
    // W = L = 2 -> W*L = 4 -> sigma = 4 / 2
    const double u = (2.0 - 0.5) / 7.5;
    CHECK(local_sigma(DesignVector({u, u}), space, model)[0] == doctest::Approx(2.0));
    const double u2 = (4.0 - 0.5) / 7.5;
    CHECK(local_sigma(DesignVector({u2, u2}), space, model)[0] == doctest::Approx(1.0));
}

TEST_CASE("SAL local sigma matches hand-computed sizes") {
    const auto bench = resolve_benchmark("sal");
    const auto sigma = local_sigma(DesignVector::filled(bench.space.dimension(), 0.5), bench.space,
                                   bench.variance);
    const double w = std::sqrt(0.28 * 32.8), l = std::sqrt(0.03 * 0.33);
    REQUIRE(sigma.size() == 6);
    for (double s : sigma) CHECK(s == doctest::Approx(2.5 / std::sqrt(w * l)).epsilon(1e-12));
}

TEST_CASE("C mode draws exact zeros") {
    RngStream rng(1, "test");
    const double local[] = {1.0, 2.0}, global[] = {3.0, 4.0};
    for (const auto& c : sample_mismatch_set(local, global, 4, VerificationMethod::C, rng)) {
        CHECK(c.h == std::vector<double>{0.0, 0.0});
        CHECK(c.global == std::vector<double>{0.0, 0.0});
    }
}

TEST_CASE("CMCL has no global part") {
    RngStream rng(2, "test");
    const double local[] = {1.0}, global[] = {5.0};
    for (const auto& c : sample_mismatch_set(local, global, 5, VerificationMethod::CMCL, rng))
        CHECK(c.global[0] == 0.0);
}

TEST_CASE("degenerate global sigma gives zero h1") {
    RngStream rng(3, "test");
    const double local[] = {0.5, 0.5}, global[] = {0.0, 0.0};
    const auto set = sample_mismatch_set(local, global, 50, VerificationMethod::CMCGL, rng);
    double var = 0.0;
    for (const auto& c : set) {
        CHECK(c.global == std::vector<double>{0.0, 0.0});
        var += c.h[0] * c.h[0];
    }
    CHECK(var / 50.0 == doctest::Approx(0.25).epsilon(0.5));
}

TEST_CASE("degenerate local sigma repeats h1") {
    RngStream rng(4, "test");
    const double local[] = {0.0, 0.0, 0.0}, global[] = {1.0, 2.0, 3.0};
    const auto set = sample_mismatch_set(local, global, 5, VerificationMethod::CMCGL, rng);
    REQUIRE(set.size() == 5);
    for (const auto& c : set) {
        CHECK(c.h == set[0].global);
        CHECK(c.global == set[0].global);
    }
    CHECK(set[0].global[0] != 0.0);
}

TEST_CASE("law of total variance over single-element sets") {
    RngStream rng(5, "test");
    const double local[] = {0.2}, global[] = {0.1};  // variances 0.04 and 0.01
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double h = sample_mismatch_set(local, global, 1, VerificationMethod::CMCGL, rng)[0].h[0];
        s += h;
        s2 += h * h;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(var == doctest::Approx(0.05).epsilon(0.05));
}

TEST_CASE("sampling is reproducible per stream key") {
    const double local[] = {1.0, 1.0}, global[] = {1.0, 1.0};
    RngStream a(9, "k", 3, 4), b(9, "k", 3, 4), c(9, "k", 3, 5);
    const auto sa = sample_mismatch_set(local, global, 3, VerificationMethod::CMCGL, a);
    const auto sb = sample_mismatch_set(local, global, 3, VerificationMethod::CMCGL, b);
    const auto sc = sample_mismatch_set(local, global, 3, VerificationMethod::CMCGL, c);
    CHECK(sa[2].h == sb[2].h);
    CHECK(sa[2].h != sc[2].h);
}

TEST_CASE("variance model validation") {
    auto m = one_device_model(1.0);
    m.global_sigmas = {};
    CHECK_THROWS_AS(m.validate(one_device_space()), ConfigError);
    m = one_device_model(-1.0);
    CHECK_THROWS_AS(m.validate(one_device_space()), ConfigError);
    m = one_device_model(1.0);
    m.devices[0].length_param = 7;
    CHECK_THROWS_AS(m.validate(one_device_space()), ConfigError);
    const double local[] = {1.0, 1.0}, global[] = {1.0};
    RngStream rng(0, "x");
    CHECK_THROWS_AS(sample_mismatch_set(local, global, 1, VerificationMethod::CMCGL, rng), StructuralError);
}

}  // TEST_SUITE
