#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lesionfuse/bayesopt.hpp"
#include "lesionfuse/simclf.hpp"

using namespace lesionfuse;

TEST_CASE("search space validation, snapping and grid membership") {
    SearchSpace s{{{0.0, 1.0, 0.01}}};
    CHECK_NOTHROW(s.validate());
    CHECK(s.snap({0.123})[0] == Catch::Approx(0.12));
    CHECK(s.snap({-5.0})[0] == Catch::Approx(0.0));
    CHECK(s.snap({5.0})[0] == Catch::Approx(1.0));
    CHECK(s.on_grid({0.37}));
    CHECK_FALSE(s.on_grid({0.375}));
    CHECK_FALSE(s.on_grid({0.37, 0.1}));

    CHECK_THROWS_AS(SearchSpace{}.validate(), InvalidArgument);
    CHECK_THROWS_AS((SearchSpace{{{1.0, 0.0, 0.1}}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((SearchSpace{{{0.0, 1.0, -0.1}}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((SearchSpace{{{0.0, 1.0, 0.3}}}.validate()), InvalidArgument);
}

TEST_CASE("expected improvement analytic properties") {
    // Zero uncertainty reduces to the plain improvement.
    CHECK(expected_improvement(0.2, 0.0, 0.5) == Catch::Approx(0.3));
    CHECK(expected_improvement(0.8, 0.0, 0.5) == Catch::Approx(0.0));

    // At mean == best with unit std: EI = phi(0) = 1/sqrt(2 pi).
    CHECK(expected_improvement(0.5, 1.0, 0.5) ==
          Catch::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));

    // Monotone in uncertainty and in the improvement gap.
    CHECK(expected_improvement(0.5, 2.0, 0.5) > expected_improvement(0.5, 1.0, 0.5));
    CHECK(expected_improvement(0.2, 1.0, 0.5) > expected_improvement(0.4, 1.0, 0.5));
    CHECK(expected_improvement(10.0, 1e-9, 0.0) >= 0.0);

    CHECK_THROWS_AS(expected_improvement(0.0, -1.0, 0.0), InvalidArgument);
}

TEST_CASE("gp posterior interpolates observations") {
    SearchSpace space{{{0.0, 1.0, 0.01}}};
    OptimizerConfig cfg;
    std::vector<Trial> hist;
    for (double x : {0.1, 0.4, 0.7, 0.9}) {
        Trial t;
        t.x = {x};
        t.f = (x - 0.5) * (x - 0.5);
        hist.push_back(t);
    }
    const detail::GaussianProcess gp(hist, space, cfg);
    for (const auto& t : hist) {
        double mean, sd;
        gp.posterior(t.x, mean, sd);
        CHECK(mean == Catch::Approx(t.f).margin(1e-2));
        CHECK(sd < 0.05);
    }
    // Far from the data the posterior is more uncertain than at the data.
    double mean_far, sd_far, mean_near, sd_near;
    gp.posterior({0.25}, mean_far, sd_far);
    gp.posterior({0.4}, mean_near, sd_near);
    CHECK(sd_far > sd_near);
}

TEST_CASE("latin hypercube covers each dimension in strata") {
    SearchSpace space{{{0.0, 1.0, 0.001}, {-2.0, 2.0, 0.001}}};
    std::mt19937_64 rng(3);
    const auto pts = detail::latin_hypercube(space, 10, rng);
    REQUIRE(pts.size() == 10);
    for (std::size_t d = 0; d < 2; ++d) {
        std::vector<bool> stratum(10, false);
        for (const auto& p : pts) {
            CHECK(p[d] >= space.dims[d].lower - 1e-9);
            CHECK(p[d] <= space.dims[d].upper + 1e-9);
            const double frac =
                (p[d] - space.dims[d].lower) / (space.dims[d].upper - space.dims[d].lower);
            const int k = std::min(9, static_cast<int>(frac * 10.0));
            stratum[static_cast<std::size_t>(k)] = true;
        }
        // Snapping can nudge a point across a stratum edge; demand near-full
        // coverage rather than exact.
        CHECK(std::count(stratum.begin(), stratum.end(), true) >= 9);
    }
}

TEST_CASE("optimizer finds the minimum of a smooth 1-d bowl") {
    const SearchSpace space{{{0.0, 1.0, 0.01}}};
    OptimizerConfig cfg;
    cfg.budget = 30;

    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        cfg.seed = seed;
        const auto res =
            optimize([](const std::vector<double>& x) { return (x[0] - 0.3) * (x[0] - 0.3); },
                     space, cfg);
        CHECK(res.history.size() == 30);
        CHECK(space.on_grid(res.best.x));
        if (std::abs(res.best.x[0] - 0.3) <= 0.02) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("optimizer bookkeeping") {
    const SearchSpace space{{{0.0, 1.0, 0.25}}};
    OptimizerConfig cfg;
    cfg.n_initial = 2;
    cfg.budget = 8; // grid only has 5 points
    cfg.seed = 7;
    const auto res = optimize([](const std::vector<double>& x) { return x[0]; }, space, cfg);

    // Never evaluates the same grid point twice; stops when exhausted.
    CHECK(res.history.size() <= 5);
    for (std::size_t i = 0; i < res.history.size(); ++i)
        for (std::size_t j = i + 1; j < res.history.size(); ++j)
            CHECK(res.history[i].x[0] != res.history[j].x[0]);
    CHECK(res.best.f == Catch::Approx(0.0));
    for (std::size_t i = 0; i < res.history.size(); ++i)
        CHECK(res.history[i].iteration == i);

    // Identical seeds give identical traces.
    const auto res2 = optimize([](const std::vector<double>& x) { return x[0]; }, space, cfg);
    REQUIRE(res2.history.size() == res.history.size());
    for (std::size_t i = 0; i < res.history.size(); ++i)
        CHECK(res2.history[i].x == res.history[i].x);

    OptimizerConfig bad;
    bad.n_initial = 0;
    CHECK_THROWS_AS(optimize([](const std::vector<double>&) { return 0.0; }, space, bad),
                    InvalidArgument);
}

TEST_CASE("non-finite objective values are quarantined, not propagated") {
    const SearchSpace space{{{0.0, 1.0, 0.05}}};
    OptimizerConfig cfg;
    cfg.budget = 12;
    cfg.seed = 2;
    const auto res = optimize(
        [](const std::vector<double>& x) {
            if (x[0] < 0.5) return std::numeric_limits<double>::quiet_NaN();
            return (x[0] - 0.7) * (x[0] - 0.7);
        },
        space, cfg);
    bool saw_bad = false;
    for (const auto& t : res.history) {
        if (t.non_finite) {
            saw_bad = true;
            CHECK(std::isinf(t.f));
        }
    }
    CHECK(saw_bad);
    CHECK_FALSE(res.best.non_finite);
    CHECK(std::abs(res.best.x[0] - 0.7) <= 0.15);
}

TEST_CASE("threshold segmenter maps normalized bands to the three classes") {
    ScalarVolume v({4, 1, 1}, {1, 1, 1}, {0.0f, 0.3f, 0.6f, 1.0f});
    const LabelVolume out = threshold_segmenter(v, 0.25, 0.55);
    CHECK(out.data() == std::vector<std::uint8_t>{kBackground, kUncertainty, kLesion, kLesion});

    // Constant input: everything lands in one class, no division blowup.
    ScalarVolume flat({3, 1, 1}, {1, 1, 1}, {2.0f, 2.0f, 2.0f});
    CHECK_NOTHROW(threshold_segmenter(flat, 0.2, 0.8));

    CHECK_THROWS_AS(threshold_segmenter(v, 0.8, 0.2), InvalidArgument);
    CHECK_THROWS_AS(threshold_segmenter(v, -0.1, 0.5), InvalidArgument);
}

TEST_CASE("one-minus-IoU objective on a phantom is minimized near truth") {
    PhantomConfig pc;
    pc.seed = 41;
    const Phantom ph = make_phantom(pc);

    auto f = [&](const std::vector<double>& x) {
        if (x[1] < x[0]) return 1.0; // infeasible ordering
        return objective_one_minus_iou(x, ph.intensity, ph.labels, Label::Lesion);
    };
    CHECK(f({0.1, 0.99}) > f({0.4, 0.7})); // too-high cut misses lesion cores

    const SearchSpace space{{{0.0, 1.0, 0.01}, {0.0, 1.0, 0.01}}};
    OptimizerConfig cfg;
    cfg.budget = 40;
    cfg.seed = 4;
    const auto res = optimize(f, space, cfg);
    CHECK(res.best.f < 0.5); // IoU above 0.5 on an easy phantom

    CHECK_THROWS_AS(objective_one_minus_iou({0.5}, ph.intensity, ph.labels, Label::Lesion),
                    InvalidArgument);
}
