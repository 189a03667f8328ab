#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "lesionfuse/consensus.hpp"

using namespace lesionfuse;

namespace {

RaterSet random_rater_set(Dims d, std::size_t n_raters, std::mt19937_64& rng) {
    RaterSet rs;
    std::bernoulli_distribution bit(0.3);
    for (std::size_t r = 0; r < n_raters; ++r) {
        LabelVolume v(d, {1, 1, 1});
        for (auto& x : v.data()) x = bit(rng) ? kLesion : kBackground;
        rs.raters.push_back(std::move(v));
    }
    rs.binary_consensus = LabelVolume(d, {1, 1, 1});
    for (auto& x : rs.binary_consensus.data()) x = bit(rng) ? kLesion : kBackground;
    return rs;
}

RaterSet single_voxel_set(unsigned lesion_votes, bool consensus_lesion, std::size_t n = 7) {
    RaterSet rs;
    for (std::size_t r = 0; r < n; ++r)
        rs.raters.push_back(
            LabelVolume({1, 1, 1}, {1, 1, 1}, {r < lesion_votes ? kLesion : kBackground}));
    rs.binary_consensus =
        LabelVolume({1, 1, 1}, {1, 1, 1}, {consensus_lesion ? kLesion : kBackground});
    return rs;
}

} // namespace

TEST_CASE("voxel rules of the ternary consensus") {
    CHECK(build_ternary_consensus(single_voxel_set(3, false))[0] == kUncertainty);
    CHECK(build_ternary_consensus(single_voxel_set(7, true))[0] == kLesion);
    CHECK(build_ternary_consensus(single_voxel_set(2, false))[0] == kBackground);
    CHECK(build_ternary_consensus(single_voxel_set(3, true))[0] == kLesion);
    CHECK(build_ternary_consensus(single_voxel_set(0, true))[0] == kLesion);
}

TEST_CASE("threshold parameter bounds") {
    const auto rs = single_voxel_set(2, false);
    CHECK(build_ternary_consensus(rs, 2)[0] == kUncertainty);
    CHECK_THROWS_AS(build_ternary_consensus(rs, 0), InvalidArgument);
    CHECK_THROWS_AS(build_ternary_consensus(rs, 8), InvalidArgument);
}

TEST_CASE("inputs must agree in dims and be binary") {
    auto rs = single_voxel_set(3, false);
    rs.raters[0] = LabelVolume({2, 1, 1}, {1, 1, 1});
    CHECK_THROWS_AS(build_ternary_consensus(rs), DimensionMismatch);

    auto rs2 = single_voxel_set(3, false);
    rs2.raters[0][0] = kUncertainty;
    CHECK_THROWS_AS(build_ternary_consensus(rs2), InvalidArgument);
}

TEST_CASE("Lesion set of the output equals the binary consensus exactly") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const RaterSet rs = random_rater_set({6, 6, 4}, 7, rng);
        const LabelVolume out = build_ternary_consensus(rs);
        CHECK(class_mask(out, Label::Lesion) == rs.binary_consensus);
        // Uncertainty never overlaps consensus Lesion.
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i] == kUncertainty) CHECK(rs.binary_consensus[i] == kBackground);
    }
}

TEST_CASE("output is invariant under rater permutation") {
    std::mt19937_64 rng(5);
    RaterSet rs = random_rater_set({5, 5, 3}, 7, rng);
    const LabelVolume base = build_ternary_consensus(rs);
    std::shuffle(rs.raters.begin(), rs.raters.end(), rng);
    CHECK(build_ternary_consensus(rs) == base);
}

TEST_CASE("adding a superset rater never shrinks Uncertainty ∪ Lesion") {
    std::mt19937_64 rng(9);
    RaterSet rs = random_rater_set({5, 5, 3}, 6, rng);
    // A rater marking a superset of an existing rater's lesions.
    LabelVolume superset = rs.raters[0];
    std::bernoulli_distribution extra(0.2);
    for (auto& x : superset.data())
        if (x == kBackground && extra(rng)) x = kLesion;

    const LabelVolume before = build_ternary_consensus(rs, 3);
    rs.raters.push_back(superset);
    const LabelVolume after = build_ternary_consensus(rs, 3);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(after[i] >= before[i]);
}
