#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lesionfuse/metrics.hpp"
#include "lesionfuse/simclf.hpp"

using namespace lesionfuse;

namespace {

LabelVolume random_ternary(Dims d, std::mt19937_64& rng) {
    LabelVolume v(d, {1, 1, 1});
    std::uniform_int_distribution<int> lab(0, 2);
    for (auto& x : v.data()) x = static_cast<std::uint8_t>(lab(rng));
    return v;
}

} // namespace

TEST_CASE("noise model validation and presets") {
    NoiseModel nm;
    CHECK_NOTHROW(nm.validate());
    nm.confusion[0] = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(nm.validate(), InvalidArgument);
    nm = {};
    nm.confusion[1] = {-0.1, 1.1, 0.0};
    CHECK_THROWS_AS(nm.validate(), InvalidArgument);
    nm = {};
    nm.jitter_probability = 1.5;
    CHECK_THROWS_AS(nm.validate(), InvalidArgument);

    for (const char* p : {"none", "low", "med", "high"})
        CHECK_NOTHROW(NoiseModel::preset(p, 1).validate());
    CHECK_THROWS_AS(NoiseModel::preset("extreme", 1), InvalidArgument);

    // Presets get noisier in order.
    const auto low = NoiseModel::preset("low", 1);
    const auto high = NoiseModel::preset("high", 1);
    CHECK(low.confusion[2][2] > high.confusion[2][2]);
    CHECK(low.blob_rate < high.blob_rate);
}

TEST_CASE("identity noise model is a no-op") {
    std::mt19937_64 rng(1);
    const LabelVolume gt = random_ternary({6, 6, 6}, rng);
    NoiseModel nm;
    nm.seed = 9;
    CHECK(perturb_volume(gt, nm, 0) == gt);
    CHECK(perturb_volume(gt, nm, 3) == gt);
    // Direction bias scales only the leaks, so identity stays identity.
    CHECK(perturb_volume(gt, nm, 0, 0.5) == gt);
    CHECK(perturb_volume(gt, nm, 0, -0.5) == gt);

    const ClassifierBundle b = simulate_bundle(gt, nm);
    for (const auto& v : b.volumes) CHECK(v == gt);
}

TEST_CASE("perturbation is deterministic per (seed, stream)") {
    std::mt19937_64 rng(2);
    const LabelVolume gt = random_ternary({8, 8, 8}, rng);
    const NoiseModel nm = NoiseModel::preset("med", 77);

    const LabelVolume a = perturb_volume(gt, nm, 0);
    const LabelVolume b = perturb_volume(gt, nm, 0);
    CHECK(a == b);

    const LabelVolume other_stream = perturb_volume(gt, nm, 1);
    CHECK(a != other_stream);

    NoiseModel reseeded = nm;
    reseeded.seed = 78;
    CHECK(perturb_volume(gt, reseeded, 0) != a);
}

TEST_CASE("direction bias shifts the volume of positives") {
    // Over-segmenting streams should emit at least as many positives on
    // average as under-segmenting ones.
    std::mt19937_64 rng(3);
    LabelVolume gt({16, 16, 16}, {1, 1, 1});
    for (std::size_t z = 5; z < 11; ++z)
        for (std::size_t y = 5; y < 11; ++y)
            for (std::size_t x = 5; x < 11; ++x) gt.at(x, y, z) = kLesion;

    NoiseModel nm = NoiseModel::preset("med", 5);
    nm.blob_rate = 0; // isolate the confusion bias
    long long over = 0, under = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto vo = perturb_volume(gt, nm, s, nm.direction_variation);
        const auto vu = perturb_volume(gt, nm, s + 1000, -nm.direction_variation);
        for (std::size_t i = 0; i < gt.size(); ++i) {
            over += (vo[i] != kBackground);
            under += (vu[i] != kBackground);
        }
    }
    CHECK(over > under);
}

TEST_CASE("false-positive blobs land only outside true lesions") {
    std::mt19937_64 rng(4);
    LabelVolume gt({20, 20, 20}, {1, 1, 1});
    gt.at(10, 10, 10) = kLesion;

    NoiseModel nm;
    nm.seed = 11;
    nm.blob_rate = 4.0;
    nm.blob_radius = 1.5;
    const LabelVolume out = perturb_volume(gt, nm, 0);

    // With an identity confusion matrix, any new Lesion voxels come from
    // blobs seeded at Background centres.
    std::size_t added = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] == kLesion) CHECK(out[i] == kLesion);
        added += (out[i] == kLesion && gt[i] != kLesion);
    }
    CHECK(added > 0);
}

TEST_CASE("simulated bundle validates and differs across its streams") {
    std::mt19937_64 rng(5);
    const LabelVolume gt = random_ternary({10, 10, 10}, rng);
    const ClassifierBundle b = simulate_bundle(gt, NoiseModel::preset("low", 99));
    CHECK_NOTHROW(b.validate());
    CHECK(b.get(Orientation::Axial, Focus::Lesion) !=
          b.get(Orientation::Axial, Focus::Background));
    CHECK(b.get(Orientation::Axial, Focus::Lesion) !=
          b.get(Orientation::Coronal, Focus::Lesion));
}

TEST_CASE("phantom geometry") {
    PhantomConfig cfg;
    cfg.seed = 17;
    const Phantom ph = make_phantom(cfg);

    CHECK(ph.intensity.dims() == cfg.dims);
    CHECK(ph.labels.dims() == cfg.dims);
    CHECK(is_ternary(ph.labels));
    REQUIRE_NOTHROW(require_finite(ph.intensity, "phantom intensity"));

    // The requested number of distinct lesion components.
    const auto comps = connected_components(class_mask(ph.labels, Label::Lesion), 26);
    CHECK(comps.components.size() == cfg.n_lesions);

    // Every Lesion voxel touches the Uncertainty shell through the label
    // field: shells exist and are non-empty.
    std::size_t n_unc = 0, n_les = 0, n_bg = 0;
    for (auto l : ph.labels.data()) {
        n_unc += (l == kUncertainty);
        n_les += (l == kLesion);
        n_bg += (l == kBackground);
    }
    CHECK(n_unc > 0);
    CHECK(n_les > 0);
    CHECK(n_bg > n_les);

    // Lesion cores are hyper-intense relative to the background mean.
    double lesion_mean = 0.0, bg_mean = 0.0;
    for (std::size_t i = 0; i < ph.labels.size(); ++i) {
        if (ph.labels[i] == kLesion) lesion_mean += ph.intensity[i];
        else if (ph.labels[i] == kBackground) bg_mean += ph.intensity[i];
    }
    lesion_mean /= static_cast<double>(n_les);
    bg_mean /= static_cast<double>(n_bg);
    CHECK(lesion_mean > bg_mean + 0.3);
}

TEST_CASE("phantom determinism and validation") {
    PhantomConfig cfg;
    cfg.seed = 23;
    const Phantom a = make_phantom(cfg);
    const Phantom b = make_phantom(cfg);
    CHECK(a.labels == b.labels);
    CHECK(a.intensity == b.intensity);

    cfg.seed = 24;
    CHECK(make_phantom(cfg).labels != a.labels);

    PhantomConfig bad;
    bad.n_lesions = 0;
    CHECK_THROWS_AS(make_phantom(bad), InvalidArgument);
    bad = {};
    bad.min_radius = 5.0;
    bad.max_radius = 4.0;
    CHECK_THROWS_AS(make_phantom(bad), InvalidArgument);
    bad = {};
    bad.dims = {8, 8, 8}; // too small for the default radii
    CHECK_THROWS_AS(make_phantom(bad), InvalidArgument);
}

TEST_CASE("zero-noise simulate then fuse reproduces the phantom labels") {
    PhantomConfig cfg;
    cfg.seed = 31;
    const Phantom ph = make_phantom(cfg);
    NoiseModel nm; // identity
    const ClassifierBundle b = simulate_bundle(ph.labels, nm);
    const LabelVolume fused = fuse(b);
    CHECK(fused == ph.labels);

    const MetricReport r = full_report(fused, ph.labels, Label::Lesion);
    CHECK(*r.get("Dice") == Catch::Approx(1.0));
    CHECK(*r.get("IoU") == Catch::Approx(1.0));
    CHECK(*r.get("HD") == Catch::Approx(0.0));
    CHECK(*r.get("SD") == Catch::Approx(0.0));
}
