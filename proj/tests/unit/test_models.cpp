#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "hybridkinetics/conservation.hpp"
#include "hybridkinetics/models.hpp"
#include "hybridkinetics/pdmp.hpp"
#include "hybridkinetics/ssa.hpp"

using namespace hybridkinetics;

TEST(PhageModel, VariantDefaults) {
    const auto a = lambda_phage_model(PhageParams::variant_a());
    EXPECT_EQ(a.name, "lambda_phage_a");
    EXPECT_EQ(a.network.reaction_count(), 8u);
    ASSERT_TRUE(a.partition);
    EXPECT_TRUE(a.partition->discrete_species().empty());
    EXPECT_EQ(a.partition->scale(), 1000.0);
    EXPECT_EQ(a.initial.counts, (std::vector<Count>{1000, 0, 1000, 0, 0}));

    const auto b = lambda_phage_model(PhageParams::variant_b());
    EXPECT_EQ(b.partition->discrete_species(), (std::vector<std::size_t>{2, 3, 4}));
    EXPECT_EQ(b.partition->scale(), 10.0);
    EXPECT_EQ(b.initial.counts, (std::vector<Count>{100, 0, 1, 0, 0}));
    EXPECT_EQ(b.network.parameters().at("k4"), 0.3);
    EXPECT_EQ(b.network.parameters().at("k5"), 0.005);
}

TEST(PhageModel, PromoterConservationLaw) {
    const auto doc = lambda_phage_model(PhageParams::variant_b());
    const auto laws = detect_conservation_laws(doc.network);
    ASSERT_EQ(laws.size(), 1u);
    EXPECT_EQ(laws[0], (ConservationLaw{0, 0, 1, 1, 1}));
}

TEST(PhageModel, BurstSize) {
    auto p = PhageParams::variant_b();
    p.n_burst = 4;
    const auto doc = lambda_phage_model(p);
    EXPECT_EQ(doc.network.reactions()[6].jump[0], 4);
    p.n_burst = 0;
    EXPECT_THROW(lambda_phage_model(p), ConfigurationError);
}

TEST(CookModel, DefaultsAndLaw) {
    const auto doc = cook_model();
    EXPECT_EQ(doc.initial.counts, (std::vector<Count>{1, 0, 0}));
    EXPECT_EQ(doc.partition->continuous_species(), (std::vector<std::size_t>{2}));
    const auto laws = detect_conservation_laws(doc.network);
    ASSERT_EQ(laws.size(), 1u);
    EXPECT_EQ(laws[0], (ConservationLaw{1, 1, 0}));
}

TEST(CookModel, GeneStaysBinaryUnderBothEngines) {
    const auto doc = cook_model();
    const auto grid = uniform_grid(5, 501);
    const auto s = simulate_ssa(doc, 5, 3, grid, {});
    const auto p = simulate_pdmp(doc, 5, 3, {}, grid);
    for (const auto* tr : {&s, &p})
        for (std::size_t i = 0; i < tr->size(); ++i) {
            const double g = tr->at(i, "G");
            ASSERT_TRUE(g == 0.0 || g == 1.0);
            ASSERT_EQ(g + tr->at(i, "G*"), 1.0);
        }
}

TEST(CookModel, StationaryMean) {
    EXPECT_NEAR(cook_stationary_mean({}), 8000.0 / 3.0, 1e-9);
    CookParams p;
    p.k1 = p.km1 = 5;
    EXPECT_NEAR(cook_stationary_mean(p), 2000.0, 1e-9);
    p.k1 = 0;
    EXPECT_EQ(cook_stationary_mean(p), 0.0);
    p = {};
    p.k3 = 0;
    EXPECT_THROW(cook_stationary_mean(p), PreconditionError);
    p = {};
    p.k1 = p.km1 = 0;
    EXPECT_THROW(cook_stationary_mean(p), PreconditionError);
}

TEST(Builtins, ValidateCleanAndRoundTrip) {
    for (const char* name : {"cook", "lambda_phage_a", "lambda_phage_b"}) {
        const auto doc = builtin_model(name);
        for (const auto& d : validate_model(doc, {true})) EXPECT_NE(d.severity, Severity::error) << d.to_string();
        EXPECT_EQ(parse_model_or_throw(serialize_model(doc)), doc) << name;
    }
    EXPECT_THROW(builtin_model("nope"), ConfigurationError);
}

TEST(Builtins, ShippedFilesMatchBuilders) {
    for (const char* name : {"cook", "lambda_phage_a", "lambda_phage_b"}) {
        std::ifstream in(std::string(HK_SOURCE_DIR) + "/models/" + name + ".rxn");
        ASSERT_TRUE(in) << name;
        std::ostringstream ss;
        ss << in.rdbuf();
        EXPECT_EQ(ss.str(), serialize_model(builtin_model(name))) << name;
    }
}
