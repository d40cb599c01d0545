#include <gtest/gtest.h>

#include <cmath>

#include "hybridkinetics/conservation.hpp"
#include "hybridkinetics/models.hpp"
#include "hybridkinetics/ode.hpp"
#include "support.hpp"

using namespace hybridkinetics;

namespace {

struct Decay {
    void operator()(double, std::span<const double> x, std::span<double> dx) const { dx[0] = -x[0]; }
};

double decay_endpoint(const IntegratorConfig& cfg) {
    const std::vector<double> x0{1.0};
    const std::vector<double> grid{1.0};
    return integrate(Decay{}, x0, 0.0, 1.0, cfg, grid).values[0];
}

} // namespace

TEST(Integrate, ExponentialDecay) {
    EXPECT_NEAR(decay_endpoint({}), std::exp(-1.0), 1e-6);
}

TEST(Integrate, ZeroFieldIsConstant) {
    const std::vector<double> x0{3.0, 0.5};
    const auto grid = uniform_grid(10, 11);
    const auto res = integrate([](double, std::span<const double>, std::span<double> dx) { dx[0] = dx[1] = 0.0; }, x0,
                               0.0, 10.0, {}, grid);
    ASSERT_EQ(res.sample_times.size(), 11u);
    for (std::size_t i = 0; i < 11; ++i) {
        EXPECT_EQ(res.values[2 * i], 3.0);
        EXPECT_EQ(res.values[2 * i + 1], 0.5);
    }
}

TEST(Integrate, DenseOutputTracksSolution) {
    const std::vector<double> x0{1.0};
    const auto grid = uniform_grid(5, 501);
    IntegratorConfig cfg;
    cfg.rtol = 1e-8;
    cfg.atol = 1e-12;
    const auto res = integrate(Decay{}, x0, 0.0, 5.0, cfg, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(res.values[i], std::exp(-grid[i]), 1e-6);
}

TEST(Integrate, FifthOrderConvergenceUnderStepHalving) {
    // Steps are pinned by max_step (tolerances loose enough never to reject), so the global
    // error of the propagated fifth-order solution should fall ~32x per halving.
    IntegratorConfig cfg;
    cfg.rtol = 1.0;
    cfg.atol = 1.0;
    double prev = 0.0;
    for (double h : {0.2, 0.1, 0.05}) {
        cfg.max_step = h;
        const double err = std::abs(decay_endpoint(cfg) - std::exp(-1.0));
        if (prev > 0.0) EXPECT_GE(prev / err, 8.0) << "h = " << h;
        prev = err;
    }
}

TEST(Integrate, TighterToleranceSmallerError) {
    IntegratorConfig loose, tight;
    loose.rtol = 1e-4;
    loose.atol = 1e-8;
    tight.rtol = 1e-9;
    tight.atol = 1e-13;
    const double e_loose = std::abs(decay_endpoint(loose) - std::exp(-1.0));
    const double e_tight = std::abs(decay_endpoint(tight) - std::exp(-1.0));
    EXPECT_LT(e_tight, e_loose);
    EXPECT_LT(e_tight, 1e-9);
}

TEST(Integrate, BlowUpRaisesStiffnessError) {
    const std::vector<double> x0{1.0};
    const std::vector<double> grid{};
    EXPECT_THROW(integrate([](double, std::span<const double> x, std::span<double> dx) { dx[0] = x[0] * x[0]; }, x0, 0.0,
                           2.0, {}, grid),
                 StiffnessError);
}

TEST(Integrate, ForcedNegativeExcursionRaisesStiffnessError) {
    const std::vector<double> x0{1.0};
    const std::vector<double> grid{};
    EXPECT_THROW(integrate([](double, std::span<const double>, std::span<double> dx) { dx[0] = -1.0; }, x0, 0.0, 2.0, {},
                           grid),
                 StiffnessError);
}

TEST(Integrate, Preconditions) {
    const std::vector<double> x0{1.0};
    const std::vector<double> grid{};
    EXPECT_THROW(integrate(Decay{}, x0, 1.0, 0.0, {}, grid), PreconditionError);
    IntegratorConfig bad;
    bad.rtol = 0.0;
    EXPECT_THROW(integrate(Decay{}, x0, 0.0, 1.0, bad, grid), PreconditionError);
}

TEST(VectorFieldCook, Examples) {
    const auto doc = cook_model();
    const ScaledNetwork kin(doc.network, *doc.partition);
    const double n = kin.scale();
    // The flow is in concentration units; multiply by N for molecules per time.
    EXPECT_NEAR(vector_field(kin, {{0.0}, {0, 1}})[0] * n, 4000.0, 1e-9);
    EXPECT_NEAR(vector_field(kin, {{4000.0 / n}, {0, 1}})[0] * n, 0.0, 1e-9);
    EXPECT_NEAR(vector_field(kin, {{2000.0 / n}, {1, 0}})[0] * n, -2000.0, 1e-9);
    const auto empty = hktest::model("MODEL e\nSPECIES A B\nRXN r: A -> B @ 1\nPARTITION CONTINUOUS DISCRETE A B SCALE 1\n");
    const ScaledNetwork ek(empty.network, *empty.partition);
    EXPECT_TRUE(vector_field(ek, {{}, {3, 0}}).empty());
}

TEST(VectorFieldCook, RelaxationFromZero) {
    const auto doc = cook_model();
    const ScaledNetwork kin(doc.network, *doc.partition);
    FlowField field(kin, {0, 1});
    const std::vector<double> x0{0.0};
    const std::vector<double> grid{1.0};
    const auto res = integrate(field, x0, 0.0, 1.0, {}, grid);
    const double expect = 4000.0 * (1.0 - std::exp(-1.0));
    EXPECT_NEAR(res.values[0] * kin.scale() / expect, 1.0, 1e-3);
    EXPECT_NEAR(expect, 2528.482, 1e-3);
}

TEST(SimulateOde, PhageConservationDrift) {
    const auto doc = lambda_phage_model(PhageParams::variant_a());
    const auto grid = uniform_grid(500, 501);
    const auto tr = simulate_ode(doc, 500, {}, grid);
    EXPECT_EQ(tr.units, TrajectoryUnits::concentration);
    const double v0 = tr.at(0, "D") + tr.at(0, "D1") + tr.at(0, "D2");
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i)
        worst = std::max(worst, std::abs(tr.at(i, "D") + tr.at(i, "D1") + tr.at(i, "D2") - v0) / v0);
    EXPECT_LT(worst, 1e-5);
    for (double v : tr.values) EXPECT_GE(v, 0.0);
}

TEST(SimulateOde, RequiresAllContinuous) {
    const auto doc = cook_model();
    const std::vector<double> grid{0.0};
    EXPECT_THROW(simulate_ode(doc, 1, {}, grid), PreconditionError);
}

TEST(SimulateOde, DeterministicAndHeaderSuffix) {
    const auto doc = lambda_phage_model(PhageParams::variant_a());
    const auto grid = uniform_grid(50, 11);
    const auto a = simulate_ode(doc, 50, {}, grid);
    const auto b = simulate_ode(doc, 50, {}, grid);
    EXPECT_EQ(a, b);
    std::ostringstream os;
    write_trajectory_csv(os, a);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,C,C2,D,D1,D2#units=concentration");
}
