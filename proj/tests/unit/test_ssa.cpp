#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hybridkinetics/conservation.hpp"
#include "hybridkinetics/models.hpp"
#include "hybridkinetics/ssa.hpp"
#include "support.hpp"

using namespace hybridkinetics;

TEST(SsaStep, ConstantRateWaitingTimeMean) {
    const auto doc = hktest::model("MODEL m\nSPECIES S P\nINIT S=1\nRXN r: S -> S + P @ 2\n");
    const ScaledNetwork kin(doc.network, Partition::all_discrete(2));
    RngStream rng(1);
    const int n = 1'000'000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto step = ssa_step(kin, doc.initial, 0.0, rng);
        sum += std::get<SsaJump>(step).time;
    }
    EXPECT_NEAR(sum / n / 0.5, 1.0, 0.005);
}

TEST(SsaStep, AbsorbedWhenNothingCanFire) {
    const auto doc = hktest::model("MODEL m\nA -> B @ 1\nB -> @ 1\n");
    RngStream rng(1);
    EXPECT_TRUE(std::holds_alternative<Absorbed>(ssa_step(doc.network, doc.initial, 0.0, rng)));
}

TEST(SsaStep, SelectionFrequencies) {
    const auto doc = hktest::model("MODEL m\nSPECIES S A B\nINIT S=1\nRXN one: S -> S + A @ 1\nRXN three: S -> S + B @ 3\n");
    const ScaledNetwork kin(doc.network, Partition::all_discrete(3));
    RngStream rng(2);
    const int n = 1'000'000;
    int first = 0;
    for (int i = 0; i < n; ++i) first += std::get<SsaJump>(ssa_step(kin, doc.initial, 0.0, rng)).reaction == 0;
    EXPECT_NEAR(static_cast<double>(first) / n, 0.25, 0.005);
}

TEST(SimulateSsa, SingleSampleAtZero) {
    const auto doc = cook_model();
    const std::vector<double> grid{0.0};
    const auto tr = simulate_ssa(doc, 1e-9, 3, grid);
    ASSERT_EQ(tr.size(), 1u);
    EXPECT_EQ(tr.row(0)[0], 1.0);
    EXPECT_EQ(tr.row(0)[1], 0.0);
    EXPECT_EQ(tr.row(0)[2], 0.0);
}

TEST(SimulateSsa, PhagePromoterConservedAtEverySample) {
    const auto doc = lambda_phage_model(PhageParams::variant_b());
    const auto grid = uniform_grid(500, 5001);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto tr = simulate_ssa(doc, 500, seed, grid);
        for (std::size_t i = 0; i < tr.size(); ++i)
            ASSERT_EQ(tr.at(i, "D") + tr.at(i, "D1") + tr.at(i, "D2"), 1.0);
    }
}

TEST(SimulateSsa, BirthDeathStationaryMean) {
    const auto doc = hktest::model("MODEL bd\nSPECIES P\nRXN birth: -> P @ 5\nRXN death: P -> @ 1\n");
    const auto grid = uniform_grid(500, 50001);
    double avg = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        const auto tr = simulate_ssa(doc, 500, 100 + s, grid);
        double sum = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (tr.sample_times[i] < 50) continue;
            sum += tr.row(i)[0];
            ++n;
        }
        avg += sum / n / seeds;
    }
    EXPECT_NEAR(avg / 5.0, 1.0, 0.03);
}

TEST(SimulateSsa, ZeroOrderHoldMatchesJumpRecords) {
    const auto doc = cook_model();
    const auto grid = uniform_grid(2, 401);
    SsaConfig cfg;
    cfg.record_jumps = true;
    const auto tr = simulate_ssa(doc, 2, 9, grid, cfg);
    ASSERT_EQ(tr.jumps.size(), tr.jump_count);
    std::size_t j = 0;
    std::vector<double> state{1, 0, 0};
    for (std::size_t i = 0; i < tr.size(); ++i) {
        while (j < tr.jumps.size() && tr.jumps[j].time <= tr.sample_times[i]) state = tr.jumps[j++].state;
        ASSERT_EQ(std::vector<double>(tr.row(i).begin(), tr.row(i).end()), state) << "sample " << i;
    }
    for (std::size_t k = 1; k < tr.jumps.size(); ++k) ASSERT_GT(tr.jumps[k].time, tr.jumps[k - 1].time);
}

TEST(SimulateSsa, ConservationAlongJumpChain) {
    for (const auto& doc : {cook_model(), lambda_phage_model(PhageParams::variant_b())}) {
        const auto laws = detect_conservation_laws(doc.network);
        SsaConfig cfg;
        cfg.record_jumps = true;
        const std::vector<double> grid{0.0};
        const auto tr = simulate_ssa(doc, 20, 4, grid, cfg);
        for (const auto& v : laws) {
            const Count v0 = dot(v, doc.initial.counts);
            for (const auto& j : tr.jumps) {
                std::vector<Count> c(j.state.begin(), j.state.end());
                ASSERT_EQ(dot(v, c), v0);
            }
        }
    }
}

TEST(SimulateSsa, ReproducibleBytes) {
    const auto doc = lambda_phage_model(PhageParams::variant_b());
    const auto grid = uniform_grid(100, 101);
    std::ostringstream a, b, c;
    write_trajectory_csv(a, simulate_ssa(doc, 100, 77, grid));
    write_trajectory_csv(b, simulate_ssa(doc, 100, 77, grid));
    write_trajectory_csv(c, simulate_ssa(doc, 100, 78, grid));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
}

TEST(SimulateSsa, RunawayCap) {
    SsaConfig cfg;
    cfg.max_jumps = 1000;
    const std::vector<double> grid{0.0};
    EXPECT_THROW(simulate_ssa(cook_model(), 10, 1, grid, cfg), RunawayError);
}

TEST(SimulateSsa, Preconditions) {
    const auto doc = cook_model();
    const std::vector<double> bad{0.0, 2.0};
    EXPECT_THROW(simulate_ssa(doc, 1, 1, bad), PreconditionError);
    const std::vector<double> grid{0.0};
    EXPECT_THROW(simulate_ssa(doc, 0, 1, grid), PreconditionError);
}

TEST(SimulateSsa, CsvFormat) {
    const auto doc = cook_model();
    const auto tr = simulate_ssa(doc, 1, 5, uniform_grid(1, 3));
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    std::istringstream in(os.str());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "t,G,G*,P");
    std::string row;
    int rows = 0;
    while (std::getline(in, row)) {
        ++rows;
        EXPECT_EQ(std::count(row.begin(), row.end(), ','), 3);
    }
    EXPECT_EQ(rows, 3);
}

TEST(Generator, ConstantFunctionEstimateIsExactlyZero) {
    const auto doc = cook_model();
    const auto g = generator_consistency_check(doc.network, [](const SystemState&) { return 1.0; }, {{0, 1, 0}}, 1e-3,
                                               1000, 5);
    EXPECT_EQ(g.estimate, 0.0);
    EXPECT_EQ(g.analytic, 0.0);
    EXPECT_EQ(g.standard_error, 0.0);
}

TEST(Generator, CookActivation) {
    const auto doc = cook_model();
    const auto g = generator_consistency_check(
        doc.network, [](const SystemState& s) { return static_cast<double>(s.counts[1]); }, {{1, 0, 0}}, 1e-3, 200000,
        6);
    EXPECT_DOUBLE_EQ(g.analytic, 20.0);
    EXPECT_TRUE(g.agrees()) << g.estimate << " +- " << g.standard_error;
}
