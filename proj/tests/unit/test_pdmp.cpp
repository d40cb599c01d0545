#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hybridkinetics/models.hpp"
#include "hybridkinetics/ode.hpp"
#include "hybridkinetics/pdmp.hpp"
#include "support.hpp"

using namespace hybridkinetics;

namespace {

// Jump hazard equal to elapsed time: Clock flows at unit speed, A -> B fires at rate x_Clock.
ModelDocument clock_model() {
    return hktest::model("MODEL clock\nSPECIES Clock Src A B\nINIT Src=1 A=1\n"
                         "RXN tick: Src -> Src + Clock @ 1\nRXN fire: A + Clock -> B + Clock @ 1\n"
                         "PARTITION CONTINUOUS Clock DISCRETE Src A B SCALE 1\n");
}

} // namespace

TEST(HybridModelSplit, CookAndPhage) {
    const auto cook = cook_model();
    const HybridModel cm(cook.network, *cook.partition);
    EXPECT_EQ(cm.flow_reactions(), (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(cm.jump_reactions(), (std::vector<std::size_t>{0, 1}));
    EXPECT_FALSE(cm.hazard_reads_continuous());
    const auto phage = lambda_phage_model(PhageParams::variant_b());
    const HybridModel pm(phage.network, *phage.partition);
    EXPECT_EQ(pm.flow_reactions(), (std::vector<std::size_t>{0, 1, 6, 7}));
    EXPECT_EQ(pm.jump_reactions(), (std::vector<std::size_t>{2, 3, 4, 5}));
    EXPECT_TRUE(pm.hazard_reads_continuous());
    // every RC reaction flows
    const auto cls = classify_reactions(phage.network, *phage.partition);
    for (auto r : pm.jump_reactions()) EXPECT_NE(cls[r], ReactionClass::RC);
}

TEST(JumpIntensity, CookTelegraph) {
    const auto cook = cook_model();
    const HybridModel m(cook.network, *cook.partition);
    EXPECT_DOUBLE_EQ(jump_intensity(m, {{0.0}, {1, 0}}).total, 20.0);
    EXPECT_DOUBLE_EQ(jump_intensity(m, {{3.0}, {0, 1}}).total, 10.0);
    const auto phage = lambda_phage_model(PhageParams::variant_a());
    const HybridModel pm(phage.network, *phage.partition);
    EXPECT_EQ(jump_intensity(pm, {{1, 1, 1, 0, 0}, {}}).total, 0.0);
}

TEST(NextJump, ConstantHazardIsExponential) {
    const auto cook = cook_model();
    const HybridModel m(cook.network, *cook.partition);
    RngStream rng(17);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto r = next_jump(m, {{0.0}, {1, 0}}, 0.0, 1e9, rng, {});
        const auto& j = std::get<NextJump>(r);
        ASSERT_EQ(j.reaction, 0u);
        sum += j.time;
    }
    EXPECT_NEAR(sum / n / 0.05, 1.0, 0.01);
}

TEST(NextJump, ZeroHazardNeverFires) {
    const auto doc = hktest::model("MODEL z\nSPECIES P G\nINIT P=5\nRXN d: P -> @ 1\nRXN g: G -> @ 1\n"
                                   "PARTITION CONTINUOUS P DISCRETE G SCALE 10\n");
    const HybridModel m(doc.network, *doc.partition);
    RngStream rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto r = next_jump(m, {{0.5}, {0}}, 0.0, 3.0, rng, {});
        ASSERT_TRUE(std::holds_alternative<NoJumpBefore>(r));
        EXPECT_NEAR(std::get<NoJumpBefore>(r).x_c[0], 0.5 * std::exp(-3.0), 1e-6);
    }
}

TEST(NextJump, LinearHazardMedian) {
    const auto doc = clock_model();
    const HybridModel m(doc.network, *doc.partition);
    EXPECT_TRUE(m.hazard_reads_continuous());
    RngStream rng(23);
    const int n = 100000;
    std::vector<double> times;
    times.reserve(n);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto r = next_jump(m, {{0.0}, {1, 1, 0}}, 0.0, 50.0, rng, {});
        const auto& j = std::get<NextJump>(r);
        times.push_back(j.time);
        worst = std::max(worst, j.hazard_residual);
    }
    std::nth_element(times.begin(), times.begin() + n / 2, times.end());
    EXPECT_NEAR(times[n / 2] / std::sqrt(2 * std::log(2.0)), 1.0, 0.01);
    EXPECT_LE(worst, 1e-9);
}

TEST(ApplyHybridJump, PhageBinding) {
    auto p = PhageParams::variant_b();
    p.scale = 100;
    const auto doc = lambda_phage_model(p);
    const HybridModel m(doc.network, *doc.partition);
    const auto out = apply_hybrid_jump(m, {{0.3, 0.50}, {1, 0, 0}}, 2);
    EXPECT_EQ(out.x_d, (std::vector<Count>{0, 1, 0}));
    EXPECT_NEAR(out.x_c[1], 0.49, 1e-15);
    EXPECT_EQ(out.x_c[0], 0.3);
    const auto off = apply_hybrid_jump(m, {{0.3, 0.50}, {1, 0, 0}}, 2, false);
    EXPECT_EQ(off.x_c, (std::vector<double>{0.3, 0.50}));
    EXPECT_THROW(apply_hybrid_jump(m, {{0.3, 0.5}, {0, 0, 1}}, 2), InfeasibleJumpError);
    const auto clamp = apply_hybrid_jump(m, {{0.3, 0.004}, {1, 0, 0}}, 2);
    EXPECT_EQ(clamp.x_c[1], 0.0);
}

TEST(ApplyHybridJump, CookSwitchLeavesProtein) {
    const auto cook = cook_model();
    const HybridModel m(cook.network, *cook.partition);
    const auto out = apply_hybrid_jump(m, {{1.25}, {1, 0}}, 0);
    EXPECT_EQ(out.x_c[0], 1.25);
    EXPECT_EQ(out.x_d, (std::vector<Count>{0, 1}));
}

TEST(SimulatePdmp, CookColumnsAndGeneStates) {
    const auto doc = cook_model();
    const auto grid = uniform_grid(20, 2001);
    const auto tr = simulate_pdmp(doc, 20, 5, {}, grid);
    EXPECT_EQ(tr.columns, (std::vector<std::string>{"P", "G", "G*"}));
    EXPECT_EQ(tr.units, TrajectoryUnits::hybrid);
    EXPECT_GT(tr.jump_count, 100u);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double g = tr.at(i, "G"), gs = tr.at(i, "G*");
        ASSERT_TRUE((g == 0 || g == 1) && g + gs == 1.0);
        ASSERT_GE(tr.at(i, "P"), 0.0);
    }
}

TEST(SimulatePdmp, PhagePromoterConserved) {
    const auto doc = lambda_phage_model(PhageParams::variant_b());
    const auto grid = uniform_grid(400, 4001);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto tr = simulate_pdmp(doc, 400, seed, {}, grid);
        for (std::size_t i = 0; i < tr.size(); ++i)
            ASSERT_EQ(tr.at(i, "D") + tr.at(i, "D1") + tr.at(i, "D2"), 1.0);
        EXPECT_LE(tr.max_hazard_residual, 1e-9);
    }
}

TEST(SimulatePdmp, SegmentsSolveTheFlow) {
    // Re-integrate each recorded inter-jump segment and compare with the next pre-jump state.
    const auto doc = lambda_phage_model(PhageParams::variant_b());
    const HybridModel m(doc.network, *doc.partition);
    PdmpConfig cfg;
    cfg.record_jumps = true;
    cfg.ode.rtol = 1e-9;
    cfg.ode.atol = 1e-12;
    const std::vector<double> grid{0.0};
    const auto tr = simulate_pdmp(m, doc.initial, 400, 3, cfg, grid);
    ASSERT_GT(tr.jumps.size(), 3u);
    for (std::size_t k = 0; k + 1 < tr.jumps.size(); ++k) {
        const auto& a = tr.jumps[k];
        const auto& b = tr.jumps[k + 1];
        HybridState x{{a.state[0], a.state[1]},
                      {static_cast<Count>(a.state[2]), static_cast<Count>(a.state[3]), static_cast<Count>(a.state[4])}};
        FlowField field(m.kinetics(), x.x_d);
        const std::vector<double> none;
        const auto res = integrate(field, x.x_c, a.time, b.time, cfg.ode, none);
        // undo b's displacement to recover its pre-jump continuous state
        const auto dj = m.kinetics().concentration_jump(b.reaction);
        for (std::size_t j = 0; j < 2; ++j) {
            const double pre = b.state[j] - dj[j];
            if (b.state[j] == 0.0) continue; // clamped
            ASSERT_NEAR(res.final_state[j], pre, 1e-6 * std::max(1.0, std::abs(pre))) << "segment " << k;
        }
        // discrete part is constant on the segment and changes only by the jump
        for (std::size_t j = 2; j < 5; ++j)
            ASSERT_EQ(b.state[j] - a.state[j], doc.network.reactions()[b.reaction].jump[j]);
    }
}

TEST(SimulatePdmp, NoJumpReactionsMatchesOdeBitForBit) {
    const auto doc = lambda_phage_model(PhageParams::variant_a());
    const auto grid = uniform_grid(300, 301);
    IntegratorConfig ode;
    ode.rtol = 1e-7;
    PdmpConfig cfg;
    cfg.ode = ode;
    const auto a = simulate_pdmp(doc, 300, 1, cfg, grid);
    const auto b = simulate_ode(doc, 300, ode, grid);
    EXPECT_EQ(a, b);
    std::ostringstream sa, sb;
    write_trajectory_csv(sa, a);
    write_trajectory_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(SimulatePdmp, ReproducibleAndSeedSensitive) {
    const auto doc = lambda_phage_model(PhageParams::variant_b());
    const auto grid = uniform_grid(200, 201);
    const auto a = simulate_pdmp(doc, 200, 8, {}, grid);
    const auto b = simulate_pdmp(doc, 200, 8, {}, grid);
    const auto c = simulate_pdmp(doc, 200, 9, {}, grid);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(SimulatePdmp, RequiresPartition) {
    const auto doc = hktest::model("MODEL m\nA -> B @ 1\nINIT A=3\n");
    const std::vector<double> grid{0.0};
    EXPECT_THROW(simulate_pdmp(doc, 1, 1, {}, grid), PreconditionError);
}

TEST(SimulatePdmp, RunawayCap) {
    const auto doc = cook_model();
    PdmpConfig cfg;
    cfg.max_jumps = 10;
    const std::vector<double> grid{0.0};
    EXPECT_THROW(simulate_pdmp(doc, 100, 1, cfg, grid), RunawayError);
}
