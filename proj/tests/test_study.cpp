// Monte-Carlo properties of the full procedure on the independent design,
// n = p = 200, a = 3, 200 replicates. The study runs once and is shared.

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace moce;
using namespace moce::sim;

namespace {

struct Study {
    SimConfig config;
    std::vector<ReplicateRecord> records;
    SimReport report;
};

const Study& study()
{
    static const Study s = [] {
        Study out;
        out.config.n = 200;
        out.config.p = 200;
        out.config.a = 3;
        out.config.replicates = 200;
        out.config.groups = {{1, 0}, {5, 0}, {5, 2}, {5, 3}, {50, 0}};
        out.report = run_study(out.config, 1, &out.records);
        return out;
    }();
    return s;
}

const PowerEntry& entry(Index size, Index signals)
{
    for (const auto& e : study().report.power)
        if (e.spec.size == size && e.spec.signals == signals) return e;
    throw std::logic_error("no such group spec");
}

} // namespace

TEST(Study, EveryReplicateAccountedFor)
{
    const auto& r = study().report;
    EXPECT_EQ(r.successes + static_cast<Index>(r.failures.size()), r.config.replicates);
    EXPECT_EQ(r.successes, 200);
}

TEST(Study, StrongSignalsRarelyMissed)
{
    // signals above lambda_s * sigma that the expanded model leaves out
    Index strong = 0, missed = 0;
    const auto& s = study();
    const double threshold = lambda_s(s.config.p, s.config.n);
    for (const auto& rec : s.records) {
        if (!rec.ok) continue;
        const auto ds = generate_dataset(s.config, rec.index);
        strong += static_cast<Index>(signal_strength(ds.beta_star, threshold, ds.sigma).signal_set.size());
        missed += rec.strong_missed;
    }
    ASSERT_GT(strong, 0);
    EXPECT_LT(static_cast<double>(missed) / static_cast<double>(strong), 0.05) << missed << " of " << strong;
}

TEST(Study, RemainderIsSmall)
{
    int small = 0, total = 0;
    for (const auto& rec : study().records) {
        if (!rec.ok) continue;
        ++total;
        if (std::hypot(rec.remainder_expanded, rec.remainder_complement) < 0.5) ++small;
    }
    EXPECT_GE(small, static_cast<int>(0.9 * total)) << small << " of " << total;
}

TEST(Study, ExpandedErrorWithinRate)
{
    double worst = 0.0;
    for (const auto& rec : study().records)
        if (rec.ok) worst = std::max(worst, rec.l2_ratio);
    EXPECT_LT(worst, 10.0);
}

TEST(Study, TraceStatisticTypeOneError)
{
    for (Index g : {5, 50}) {
        const auto& e = entry(g, 0);
        EXPECT_GE(e.wbs_rate(), 0.02) << "|G|=" << g;
        EXPECT_LE(e.wbs_rate(), 0.09) << "|G|=" << g;
    }
}

TEST(Study, PowerGrowsWithSignals)
{
    const auto &e0 = entry(5, 0), &e2 = entry(5, 2), &e3 = entry(5, 3);
    EXPECT_LE(e0.wbs_rate(), e2.wbs_rate());
    EXPECT_LE(e2.wbs_rate(), e3.wbs_rate());
    EXPECT_LE(e0.w1_rate(), e2.w1_rate());
    EXPECT_LE(e2.w1_rate(), e3.w1_rate());
}

TEST(Study, SingletonDecisionsAgree)
{
    int agree = 0, total = 0;
    for (const auto& rec : study().records) {
        if (!rec.ok) continue;
        const auto& go = rec.groups[0];
        ASSERT_EQ(go.spec.size, 1);
        if (!go.w1_ok || !go.wbs_ok) continue;
        ++total;
        if ((go.w1_p < 0.05) == (go.wbs_p < 0.05)) ++agree;
    }
    EXPECT_GE(agree, static_cast<int>(0.9 * total)) << agree << " of " << total;
}

TEST(Study, OracleCoverage)
{
    const double cp95 = study().report.oracle.cp[1];
    EXPECT_GE(cp95, 0.90);
    EXPECT_LE(cp95, 0.98);
}

TEST(Study, RidgeLevelsOrdered)
{
    EXPECT_EQ(study().report.tau_a_below_tau_c, 1.0);
}

TEST(Study, SingleRecordIsFast)
{
    for (const auto& rec : study().records) EXPECT_LT(rec.seconds, 5.0) << "replicate " << rec.index;
}

TEST(Design, AutoregressiveCorrelationOverReplicates)
{
    SimConfig c;
    c.alpha = 0.3;
    double mean = 0.0;
    for (Index r = 0; r < 50; ++r) {
        const auto ds = generate_dataset(c, r);
        double lag1 = 0.0;
        for (Index j = 0; j + 1 < c.p; ++j) lag1 += ds.data.x.col(j).dot(ds.data.x.col(j + 1)) / static_cast<double>(c.n);
        mean += lag1 / static_cast<double>(c.p - 1);
    }
    EXPECT_NEAR(mean / 50.0, 0.3, 0.08);
}
