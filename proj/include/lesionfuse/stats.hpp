#ifndef LESIONFUSE_STATS_HPP
#define LESIONFUSE_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lesionfuse/errors.hpp"
#include "lesionfuse/metrics.hpp"
#include "lesionfuse/volume.hpp"

namespace lesionfuse {

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test

struct PairedSamples {
    std::string label_a, label_b;
    std::vector<std::pair<double, double>> values;
};

enum class TestMode { TwoSided, Greater, Less };

struct WilcoxonResult {
    double w_statistic = 0.0;   // min(W+, W-)
    double w_plus = 0.0;
    double p_value = 1.0;
    std::string method;         // "exact" or "normal-approx"
    std::size_t n_effective = 0;
    bool no_difference = false; // every pair was tied
    bool significant_at(double alpha) const { return !no_difference && p_value < alpha; }
};

enum class ZeroPolicy { Discard, Pratt };

namespace detail {

// Midranks of |d|, optionally keeping zero differences in the ranking
// (Pratt) while they still contribute to neither sign sum.
inline std::vector<double> midranks(const std::vector<double>& abs_values) {
    const std::size_t n = abs_values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_values[a] < abs_values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_values[order[j + 1]] == abs_values[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

// P(W+ <= w) and P(W+ >= w) by full enumeration of sign assignments.
inline void exact_tail_probs(const std::vector<double>& ranks, double w, double& p_le,
                             double& p_ge) {
    const std::size_t n = ranks.size();
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t le = 0, ge = 0;
    const double eps = 1e-12;
    for (std::uint64_t m = 0; m < total; ++m) {
        double wp = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (m & (std::uint64_t{1} << i)) wp += ranks[i];
        if (wp <= w + eps) ++le;
        if (wp >= w - eps) ++ge;
    }
    p_le = static_cast<double>(le) / static_cast<double>(total);
    p_ge = static_cast<double>(ge) / static_cast<double>(total);
}

} // namespace detail

inline WilcoxonResult wilcoxon_signed_rank(const PairedSamples& s, double alpha = 0.01,
                                           TestMode mode = TestMode::TwoSided,
                                           ZeroPolicy zeros = ZeroPolicy::Discard,
                                           std::size_t exact_limit = 25) {
    if (s.values.empty()) throw InvalidArgument("wilcoxon: no pairs");
    (void)alpha;

    std::vector<double> diffs;
    for (const auto& [a, b] : s.values) {
        if (!std::isfinite(a) || !std::isfinite(b))
            throw InvalidArgument("wilcoxon: non-finite value");
        const double d = a - b;
        if (d != 0.0 || zeros == ZeroPolicy::Pratt) diffs.push_back(d);
    }

    WilcoxonResult r;
    if (diffs.empty() || std::all_of(diffs.begin(), diffs.end(), [](double d) { return d == 0.0; })) {
        r.method = "exact";
        r.p_value = 1.0;
        r.no_difference = true;
        return r;
    }

    std::vector<double> abs_d(diffs.size());
    std::transform(diffs.begin(), diffs.end(), abs_d.begin(), [](double d) { return std::abs(d); });
    const std::vector<double> ranks = detail::midranks(abs_d);

    double w_plus = 0.0, w_minus = 0.0;
    std::vector<double> nonzero_ranks;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (diffs[i] > 0) w_plus += ranks[i];
        else if (diffs[i] < 0) w_minus += ranks[i];
        if (diffs[i] != 0.0) nonzero_ranks.push_back(ranks[i]);
    }
    r.w_plus = w_plus;
    r.w_statistic = std::min(w_plus, w_minus);
    r.n_effective = nonzero_ranks.size();

    if (r.n_effective <= exact_limit) {
        r.method = "exact";
        // Under Pratt, zero ranks are fixed contributions of 0 to both sums;
        // enumeration runs over the signs of the non-zero differences only.
        double p_le, p_ge;
        detail::exact_tail_probs(nonzero_ranks, w_plus, p_le, p_ge);
        switch (mode) {
            case TestMode::TwoSided: r.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge)); break;
            case TestMode::Greater: r.p_value = p_ge; break; // H1: a > b, large W+
            case TestMode::Less: r.p_value = p_le; break;
        }
        return r;
    }

    r.method = "normal-approx";
    const double n = static_cast<double>(r.n_effective);
    const double mean = n * (n + 1.0) / 4.0;
    double tie_term = 0.0;
    {
        std::map<double, std::size_t> counts;
        for (double ad : abs_d)
            if (ad != 0.0) ++counts[ad];
        for (const auto& [v, t] : counts)
            tie_term += static_cast<double>(t) * t * t - static_cast<double>(t);
    }
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    const double sd = std::sqrt(var);
    auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    // Continuity correction of 0.5 toward the mean.
    const double zl = (w_plus - mean + 0.5) / sd;
    const double zg = (w_plus - mean - 0.5) / sd;
    const double p_le = phi(zl);
    const double p_ge = 1.0 - phi(zg);
    switch (mode) {
        case TestMode::TwoSided: r.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge)); break;
        case TestMode::Greater: r.p_value = p_ge; break;
        case TestMode::Less: r.p_value = p_le; break;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Report aggregation

struct AggregateEntry {
    MetricValue mean;
    MetricValue stddev; // sample std (n-1); 0 for a single defined value
    std::size_t n = 0;
};

// Per-metric mean/std over the defined values of a report collection.
inline std::vector<std::pair<std::string, AggregateEntry>> aggregate(
    const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw InvalidArgument("aggregate: no reports");
    std::vector<std::pair<std::string, AggregateEntry>> out;
    std::vector<std::string> names;
    for (const auto& e : reports.front().entries) names.push_back(e.first);
    for (const auto& name : names) {
        std::vector<double> vals;
        for (const auto& r : reports)
            if (auto v = r.get(name)) vals.push_back(*v);
        AggregateEntry agg;
        agg.n = vals.size();
        if (!vals.empty()) {
            const double mean =
                std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
            agg.mean = mean;
            if (vals.size() > 1) {
                double ss = 0.0;
                for (double v : vals) ss += (v - mean) * (v - mean);
                agg.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
            } else {
                agg.stddev = 0.0;
            }
        }
        out.emplace_back(name, agg);
    }
    return out;
}

// ---------------------------------------------------------------------------
// All-vs-all rater comparison

struct ComparisonMatrix {
    std::vector<std::string> rater_names;
    std::vector<std::string> metrics;
    // cells[m][g][r]: metric m with rater g as ground truth, rater r evaluated.
    std::vector<std::vector<std::vector<MetricValue>>> cells;
};

// Every rater takes a turn as ground truth; the diagonal is left undefined.
inline ComparisonMatrix all_vs_all(const std::vector<LabelVolume>& raters,
                                   const std::vector<std::string>& names, Label c,
                                   const std::vector<std::string>& metric_subset,
                                   const ReportOptions& opt = {}) {
    if (raters.size() < 2) throw InvalidArgument("all_vs_all: need at least two raters");
    if (names.size() != raters.size())
        throw InvalidArgument("all_vs_all: name count mismatch");
    for (std::size_t i = 1; i < raters.size(); ++i)
        require_same_dims(raters[i].dims(), raters[0].dims(), "rater " + names[i]);

    ComparisonMatrix m;
    m.rater_names = names;
    m.metrics = metric_subset.empty() ? metric_names() : metric_subset;
    const std::size_t n = raters.size();
    m.cells.assign(m.metrics.size(),
                   std::vector<std::vector<MetricValue>>(n, std::vector<MetricValue>(n)));
    for (std::size_t g = 0; g < n; ++g)
        for (std::size_t r = 0; r < n; ++r) {
            if (g == r) continue;
            const MetricReport rep = full_report(raters[r], raters[g], c, opt);
            for (std::size_t k = 0; k < m.metrics.size(); ++k)
                m.cells[k][g][r] = rep.get(m.metrics[k]);
        }
    return m;
}

// ---------------------------------------------------------------------------
// Per-centre stratified splits

enum class Split { Train, Validation, Test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "?";
}

struct Subject {
    std::string id;
    std::string centre;
};

struct SplitPlan {
    std::vector<std::pair<Subject, Split>> assignment;

    std::vector<std::string> ids(Split s) const {
        std::vector<std::string> out;
        for (const auto& [sub, sp] : assignment)
            if (sp == s) out.push_back(sub.id);
        return out;
    }
};

struct PerCentreQuota {
    std::size_t train = 3, validation = 1, test = 1;

    std::size_t total() const { return train + validation + test; }
};

namespace detail {

inline std::map<std::string, std::vector<Subject>> group_by_centre(
    const std::vector<Subject>& subjects, const PerCentreQuota& quota) {
    std::map<std::string, std::vector<Subject>> centres;
    for (const auto& s : subjects) centres[s.centre].push_back(s);
    for (const auto& [centre, subs] : centres)
        if (subs.size() != quota.total())
            throw InvalidArgument("centre '" + centre + "' has " + std::to_string(subs.size()) +
                                  " subjects, expected " + std::to_string(quota.total()));
    return centres;
}

} // namespace detail

// One seeded assignment honouring the per-centre quota.
inline SplitPlan stratified_split(const std::vector<Subject>& subjects,
                                  const PerCentreQuota& quota, std::uint64_t seed) {
    auto centres = detail::group_by_centre(subjects, quota);
    std::mt19937_64 rng(seed);
    SplitPlan plan;
    for (auto& [centre, subs] : centres) {
        std::shuffle(subs.begin(), subs.end(), rng);
        std::size_t i = 0;
        for (std::size_t k = 0; k < quota.train; ++k, ++i)
            plan.assignment.emplace_back(subs[i], Split::Train);
        for (std::size_t k = 0; k < quota.validation; ++k, ++i)
            plan.assignment.emplace_back(subs[i], Split::Validation);
        for (std::size_t k = 0; k < quota.test; ++k, ++i)
            plan.assignment.emplace_back(subs[i], Split::Test);
    }
    return plan;
}

// All distinct assignments satisfying the quota, as the cross product of the
// per-centre assignments (exhaustive cross-validation).
inline std::vector<SplitPlan> enumerate_folds(const std::vector<Subject>& subjects,
                                              const PerCentreQuota& quota) {
    auto centres = detail::group_by_centre(subjects, quota);

    // Per centre: every way of labelling its subjects with the quota.
    std::vector<std::vector<std::vector<Split>>> per_centre_options;
    std::vector<std::vector<Subject>> centre_subjects;
    for (auto& [centre, subs] : centres) {
        std::sort(subs.begin(), subs.end(),
                  [](const Subject& a, const Subject& b) { return a.id < b.id; });
        std::vector<Split> labels;
        for (std::size_t k = 0; k < quota.train; ++k) labels.push_back(Split::Train);
        for (std::size_t k = 0; k < quota.validation; ++k) labels.push_back(Split::Validation);
        for (std::size_t k = 0; k < quota.test; ++k) labels.push_back(Split::Test);
        std::sort(labels.begin(), labels.end());
        std::vector<std::vector<Split>> options;
        do {
            options.push_back(labels);
        } while (std::next_permutation(labels.begin(), labels.end()));
        per_centre_options.push_back(std::move(options));
        centre_subjects.push_back(subs);
    }

    std::vector<SplitPlan> folds;
    std::vector<std::size_t> pick(per_centre_options.size(), 0);
    while (true) {
        SplitPlan plan;
        for (std::size_t ci = 0; ci < per_centre_options.size(); ++ci) {
            const auto& labels = per_centre_options[ci][pick[ci]];
            for (std::size_t si = 0; si < labels.size(); ++si)
                plan.assignment.emplace_back(centre_subjects[ci][si], labels[si]);
        }
        folds.push_back(std::move(plan));
        std::size_t ci = 0;
        while (ci < pick.size()) {
            if (++pick[ci] < per_centre_options[ci].size()) break;
            pick[ci] = 0;
            ++ci;
        }
        if (ci == pick.size()) break;
    }
    return folds;
}

} // namespace lesionfuse

#endif
