#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "lesionfuse/stats.hpp"
#include "oracles.hpp"

using namespace lesionfuse;

namespace {

PairedSamples pairs(const std::vector<double>& a, const std::vector<double>& b) {
    PairedSamples s;
    s.label_a = "a";
    s.label_b = "b";
    for (std::size_t i = 0; i < a.size(); ++i) s.values.emplace_back(a[i], b[i]);
    return s;
}

} // namespace

TEST_CASE("wilcoxon hand cases") {
    // All five differences positive: W+ = 15, two-sided p = 2/32.
    const auto r = wilcoxon_signed_rank(pairs({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}));
    CHECK(r.method == "exact");
    CHECK(r.w_plus == Catch::Approx(15.0));
    CHECK(r.w_statistic == Catch::Approx(0.0));
    CHECK(r.p_value == Catch::Approx(0.0625));
    CHECK(r.n_effective == 5);
    CHECK_FALSE(r.significant_at(0.05));
    CHECK(r.significant_at(0.07));

    // Perfectly symmetric differences: p = 1.
    const auto sym = wilcoxon_signed_rank(pairs({1, -1, 2, -2}, {0, 0, 0, 0}));
    CHECK(sym.p_value == Catch::Approx(1.0));

    // All tied: flagged, never significant.
    const auto tied = wilcoxon_signed_rank(pairs({3, 3, 3}, {3, 3, 3}));
    CHECK(tied.no_difference);
    CHECK(tied.p_value == Catch::Approx(1.0));
    CHECK_FALSE(tied.significant_at(0.99));
}

TEST_CASE("wilcoxon zero handling and modes") {
    // Discard drops zero pairs from the ranking entirely.
    const auto d = wilcoxon_signed_rank(pairs({1, 2, 3, 4}, {1, 0, 0, 0}));
    CHECK(d.n_effective == 3);

    // Pratt keeps zeros in the ranking, so non-zero ranks shift up.
    const auto p = wilcoxon_signed_rank(pairs({1, 2, 3, 4}, {1, 0, 0, 0}), 0.01,
                                        TestMode::TwoSided, ZeroPolicy::Pratt);
    CHECK(p.n_effective == 3);
    CHECK(p.w_plus > d.w_plus);

    // One-sided tails are complementary at the observed point.
    const auto s = pairs({5, 6, 7, 8, 9}, {1, 1, 1, 1, 1});
    const auto g = wilcoxon_signed_rank(s, 0.01, TestMode::Greater);
    const auto l = wilcoxon_signed_rank(s, 0.01, TestMode::Less);
    CHECK(g.p_value < l.p_value);
    CHECK(g.p_value == Catch::Approx(1.0 / 32.0));

    CHECK_THROWS_AS(wilcoxon_signed_rank(pairs({}, {})), InvalidArgument);
    CHECK_THROWS_AS(wilcoxon_signed_rank(pairs({1.0 / 0.0}, {0})), InvalidArgument);
}

TEST_CASE("exact p matches the convolution oracle on random samples") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> n_dist(2, 9);
    std::uniform_int_distribution<int> v_dist(-4, 4);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = n_dist(rng);
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = v_dist(rng);
            b[i] = v_dist(rng);
        }
        const auto s = pairs(a, b);
        const auto r = wilcoxon_signed_rank(s);
        if (r.no_difference) continue;
        REQUIRE(r.method == "exact");

        std::vector<double> diffs, abs_d;
        for (const auto& [x, y] : s.values)
            if (x != y) diffs.push_back(x - y);
        for (double d : diffs) abs_d.push_back(std::abs(d));
        const auto ranks = detail::midranks(abs_d);
        CHECK(r.p_value ==
              Catch::Approx(oracle::wilcoxon_two_sided_p(ranks, r.w_plus)).epsilon(1e-12));
    }
}

TEST_CASE("normal approximation engages past the exact limit") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> noise(0.4, 1.0);
    std::vector<double> a(40), b(40, 0.0);
    for (auto& x : a) x = noise(rng);
    const auto r = wilcoxon_signed_rank(pairs(a, b));
    CHECK(r.method == "normal-approx");
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value <= 1.0);

    // Forcing a small exact limit flips the same data to the approximation.
    const auto small = pairs({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    const auto approx = wilcoxon_signed_rank(small, 0.01, TestMode::TwoSided,
                                             ZeroPolicy::Discard, 3);
    CHECK(approx.method == "normal-approx");
    // Should still land near the exact 0.0625.
    CHECK(approx.p_value == Catch::Approx(0.0625).margin(0.02));
}

TEST_CASE("aggregate computes mean and sample std, skipping NA") {
    MetricReport r1, r2, r3;
    r1.set("Dice", 0.8);
    r2.set("Dice", 0.6);
    r3.set("Dice", std::nullopt);
    r1.set("HD", 2.0);
    r2.set("HD", std::nullopt);
    r3.set("HD", std::nullopt);

    const auto agg = aggregate({r1, r2, r3});
    REQUIRE(agg.size() == 2);
    CHECK(agg[0].first == "Dice");
    CHECK(*agg[0].second.mean == Catch::Approx(0.7));
    CHECK(*agg[0].second.stddev ==
          Catch::Approx(std::sqrt((0.01 + 0.01) / 1.0)));
    CHECK(agg[0].second.n == 2);
    CHECK(agg[1].first == "HD");
    CHECK(*agg[1].second.mean == Catch::Approx(2.0));
    CHECK(*agg[1].second.stddev == Catch::Approx(0.0));
    CHECK(agg[1].second.n == 1);

    MetricReport all_na;
    all_na.set("Dice", std::nullopt);
    const auto empty = aggregate({all_na});
    CHECK_FALSE(empty[0].second.mean.has_value());
    CHECK(empty[0].second.n == 0);

    CHECK_THROWS_AS(aggregate({}), InvalidArgument);
}

TEST_CASE("all_vs_all comparison matrix") {
    std::mt19937_64 rng(31);
    std::vector<LabelVolume> raters;
    std::bernoulli_distribution bit(0.4);
    for (int r = 0; r < 3; ++r) {
        LabelVolume v({5, 4, 3}, {1, 1, 1});
        for (auto& x : v.data()) x = bit(rng) ? kLesion : kBackground;
        raters.push_back(std::move(v));
    }
    const std::vector<std::string> names{"r1", "r2", "r3"};
    const auto m = all_vs_all(raters, names, Label::Lesion, {"Dice", "IoU"});

    REQUIRE(m.metrics == std::vector<std::string>{"Dice", "IoU"});
    REQUIRE(m.cells.size() == 2);
    for (std::size_t g = 0; g < 3; ++g) {
        CHECK_FALSE(m.cells[0][g][g].has_value());
        for (std::size_t r = 0; r < 3; ++r) {
            if (g == r) continue;
            const auto want = full_report(raters[r], raters[g], Label::Lesion).get("Dice");
            CHECK(m.cells[0][g][r] == want);
            // Dice is symmetric in pred/gt.
            CHECK(*m.cells[0][g][r] == Catch::Approx(*m.cells[0][r][g]));
        }
    }

    CHECK_THROWS_AS(all_vs_all({raters[0]}, {"r1"}, Label::Lesion, {}), InvalidArgument);
    CHECK_THROWS_AS(all_vs_all(raters, {"r1", "r2"}, Label::Lesion, {}), InvalidArgument);
}

TEST_CASE("stratified split honours the per-centre quota") {
    std::vector<Subject> subjects;
    for (const char* c : {"01", "07", "08"})
        for (int i = 1; i <= 5; ++i)
            subjects.push_back({std::string(c) + "_" + std::to_string(i), c});

    const SplitPlan plan = stratified_split(subjects, {}, 42);
    CHECK(plan.assignment.size() == 15);
    CHECK(plan.ids(Split::Train).size() == 9);
    CHECK(plan.ids(Split::Validation).size() == 3);
    CHECK(plan.ids(Split::Test).size() == 3);

    // Quota holds per centre, not only in total.
    for (const char* c : {"01", "07", "08"}) {
        std::size_t tr = 0, va = 0, te = 0;
        for (const auto& [sub, sp] : plan.assignment) {
            if (sub.centre != c) continue;
            if (sp == Split::Train) ++tr;
            if (sp == Split::Validation) ++va;
            if (sp == Split::Test) ++te;
        }
        CHECK(tr == 3);
        CHECK(va == 1);
        CHECK(te == 1);
    }

    // Deterministic under the same seed, and every subject appears once.
    const SplitPlan again = stratified_split(subjects, {}, 42);
    for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
        CHECK(plan.assignment[i].first.id == again.assignment[i].first.id);
        CHECK(plan.assignment[i].second == again.assignment[i].second);
    }
    std::set<std::string> seen;
    for (const auto& [sub, sp] : plan.assignment) seen.insert(sub.id);
    CHECK(seen.size() == 15);

    subjects.pop_back();
    CHECK_THROWS_AS(stratified_split(subjects, {}, 1), InvalidArgument);
}

TEST_CASE("fold enumeration size and distinctness") {
    std::vector<Subject> subjects;
    for (const char* c : {"01", "07", "08"})
        for (int i = 1; i <= 5; ++i)
            subjects.push_back({std::string(c) + "_" + std::to_string(i), c});

    const auto folds = enumerate_folds(subjects, {});
    // 5!/3! = 20 assignments per centre, three centres.
    CHECK(folds.size() == 20 * 20 * 20);

    std::set<std::string> keys;
    for (const auto& f : folds) {
        std::string k;
        for (const auto& [sub, sp] : f.assignment) k += sub.id + split_name(sp) + ";";
        keys.insert(k);
    }
    CHECK(keys.size() == folds.size());

    // Single-centre sanity: C(5,3)*C(2,1) = 20.
    std::vector<Subject> one(subjects.begin(), subjects.begin() + 5);
    CHECK(enumerate_folds(one, {}).size() == 20);
}
