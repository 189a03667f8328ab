#ifndef LESIONFUSE_SIMCLF_HPP
#define LESIONFUSE_SIMCLF_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lesionfuse/augment.hpp" // detail::mix_seed
#include "lesionfuse/errors.hpp"
#include "lesionfuse/fusion.hpp"
#include "lesionfuse/volume.hpp"

namespace lesionfuse {

// Synthetic error model applied to a ground-truth label volume: per-voxel
// confusion resampling, boundary-band relabeling, and random false-positive
// blobs dropped into Background.
struct NoiseModel {
    // Row-stochastic: confusion[truth][emitted].
    std::array<std::array<double, 3>, 3> confusion{
        {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
    int jitter_radius = 0;            // boundary relabeling band, voxels
    double jitter_probability = 0.0;  // chance a band voxel copies a neighbour
    double blob_rate = 0.0;           // expected false-positive blobs per volume
    double blob_radius = 1.5;         // voxels
    // How strongly the lesion/background-focused streams over/under-segment;
    // scales the upward/downward confusion leaks.
    double direction_variation = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        for (const auto& row : confusion) {
            double sum = 0.0;
            for (double p : row) {
                if (p < 0) throw InvalidArgument("confusion probabilities must be >= 0");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw InvalidArgument("confusion rows must sum to 1");
        }
        if (jitter_radius < 0 || jitter_probability < 0 || jitter_probability > 1 ||
            blob_rate < 0 || blob_radius < 0 || direction_variation < 0 ||
            direction_variation > 1)
            throw InvalidArgument("invalid noise model rates");
    }

    static NoiseModel preset(const std::string& name, std::uint64_t seed) {
        NoiseModel nm;
        nm.seed = seed;
        if (name == "none") return nm;
        if (name == "low") {
            nm.confusion = {{{0.99, 0.01, 0.0}, {0.03, 0.94, 0.03}, {0.0, 0.03, 0.97}}};
            nm.jitter_radius = 1;
            nm.jitter_probability = 0.1;
            nm.blob_rate = 0.5;
            nm.direction_variation = 0.3;
            return nm;
        }
        if (name == "med") {
            nm.confusion = {{{0.97, 0.025, 0.005}, {0.06, 0.88, 0.06}, {0.01, 0.06, 0.93}}};
            nm.jitter_radius = 1;
            nm.jitter_probability = 0.25;
            nm.blob_rate = 2.0;
            nm.direction_variation = 0.4;
            return nm;
        }
        if (name == "high") {
            nm.confusion = {{{0.93, 0.05, 0.02}, {0.12, 0.76, 0.12}, {0.03, 0.12, 0.85}}};
            nm.jitter_radius = 2;
            nm.jitter_probability = 0.35;
            nm.blob_rate = 5.0;
            nm.blob_radius = 2.0;
            nm.direction_variation = 0.5;
            return nm;
        }
        throw InvalidArgument("unknown noise preset: " + name);
    }
};

namespace detail {

// Bias the confusion matrix for one stream: focus_bias > 0 amplifies upward
// leaks (over-segmentation), < 0 amplifies downward leaks. With an identity
// matrix all leaks are 0 and the bias is a no-op, preserving the zero-noise
// fixed point.
inline std::array<std::array<double, 3>, 3> biased_confusion(
    const std::array<std::array<double, 3>, 3>& base, double focus_bias) {
    auto m = base;
    for (int t = 0; t < 3; ++t) {
        for (int e = 0; e < 3; ++e) {
            if (e == t) continue;
            const double up = (e > t) ? 1.0 : -1.0;
            m[t][e] = std::max(0.0, base[t][e] * (1.0 + up * focus_bias));
        }
        double off = 0.0;
        for (int e = 0; e < 3; ++e)
            if (e != t) off += m[t][e];
        m[t][t] = std::max(0.0, 1.0 - off);
        // Renormalize in case the clamps left the row off by a hair.
        double sum = m[t][0] + m[t][1] + m[t][2];
        for (int e = 0; e < 3; ++e) m[t][e] /= sum;
    }
    return m;
}

} // namespace detail

// One noisy rendition of the ground truth; deterministic in (seed, stream_id).
inline LabelVolume perturb_volume(const LabelVolume& gt, const NoiseModel& nm,
                                  std::uint64_t stream_id, double focus_bias = 0.0) {
    nm.validate();
    std::mt19937_64 rng(detail::mix_seed(nm.seed, stream_id));
    const auto confusion = detail::biased_confusion(nm.confusion, focus_bias);
    const auto& d = gt.dims();

    LabelVolume out(d, gt.spacing());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const auto& row = confusion[gt[i]];
        const double x = u(rng);
        out[i] = (x < row[0]) ? kBackground : (x < row[0] + row[1] ? kUncertainty : kLesion);
    }

    // Boundary-band relabeling: voxels near a class boundary sometimes take
    // the label of a random neighbour within the jitter radius.
    if (nm.jitter_radius > 0 && nm.jitter_probability > 0) {
        const LabelVolume base = out;
        const int r = nm.jitter_radius;
        std::uniform_int_distribution<int> offset(-r, r);
        for (std::size_t i = 0; i < base.size(); ++i) {
            const auto c = base.coords(i);
            bool near_boundary = false;
            for (int dz = -1; dz <= 1 && !near_boundary; ++dz)
                for (int dy = -1; dy <= 1 && !near_boundary; ++dy)
                    for (int dx = -1; dx <= 1 && !near_boundary; ++dx) {
                        const long long x = static_cast<long long>(c[0]) + dx;
                        const long long y = static_cast<long long>(c[1]) + dy;
                        const long long z = static_cast<long long>(c[2]) + dz;
                        if (x < 0 || y < 0 || z < 0 || x >= static_cast<long long>(d.nx) ||
                            y >= static_cast<long long>(d.ny) || z >= static_cast<long long>(d.nz))
                            continue;
                        if (base.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                    static_cast<std::size_t>(z)) != base[i])
                            near_boundary = true;
                    }
            if (!near_boundary || u(rng) >= nm.jitter_probability) continue;
            const long long x = std::clamp<long long>(static_cast<long long>(c[0]) + offset(rng),
                                                      0, static_cast<long long>(d.nx) - 1);
            const long long y = std::clamp<long long>(static_cast<long long>(c[1]) + offset(rng),
                                                      0, static_cast<long long>(d.ny) - 1);
            const long long z = std::clamp<long long>(static_cast<long long>(c[2]) + offset(rng),
                                                      0, static_cast<long long>(d.nz) - 1);
            out[i] = base.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                             static_cast<std::size_t>(z));
        }
    }

    // False-positive blobs, only seeded in Background regions of the truth.
    if (nm.blob_rate > 0) {
        std::poisson_distribution<int> n_blobs(nm.blob_rate);
        std::uniform_int_distribution<std::size_t> pick(0, gt.size() - 1);
        const int n = n_blobs(rng);
        for (int b = 0; b < n; ++b) {
            std::size_t centre = pick(rng);
            for (int tries = 0; tries < 32 && gt[centre] != kBackground; ++tries)
                centre = pick(rng);
            if (gt[centre] != kBackground) continue;
            const auto c = gt.coords(centre);
            const int r = static_cast<int>(std::ceil(nm.blob_radius));
            for (int dz = -r; dz <= r; ++dz)
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        if (dx * dx + dy * dy + dz * dz >
                            nm.blob_radius * nm.blob_radius)
                            continue;
                        const long long x = static_cast<long long>(c[0]) + dx;
                        const long long y = static_cast<long long>(c[1]) + dy;
                        const long long z = static_cast<long long>(c[2]) + dz;
                        if (x < 0 || y < 0 || z < 0 || x >= static_cast<long long>(d.nx) ||
                            y >= static_cast<long long>(d.ny) || z >= static_cast<long long>(d.nz))
                            continue;
                        out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                               static_cast<std::size_t>(z)) = kLesion;
                    }
        }
    }
    return out;
}

// Six independent noisy streams, one per orientation x focus. Lesion-focused
// streams lean toward over-segmentation, background-focused streams the
// other way.
inline ClassifierBundle simulate_bundle(const LabelVolume& gt, const NoiseModel& nm) {
    ClassifierBundle bundle;
    std::uint64_t stream = 0;
    for (auto o : {Orientation::Axial, Orientation::Coronal, Orientation::Sagittal})
        for (auto f : {Focus::Lesion, Focus::Background}) {
            const double bias =
                (f == Focus::Lesion) ? nm.direction_variation : -nm.direction_variation;
            bundle.get(o, f) = perturb_volume(gt, nm, stream++, bias);
        }
    return bundle;
}

// ---------------------------------------------------------------------------
// Phantom generation

struct PhantomConfig {
    Dims dims{32, 32, 32};
    Spacing spacing{1.0, 1.0, 1.0};
    std::size_t n_lesions = 3;
    double min_radius = 2.0, max_radius = 4.0; // voxels
    int shell_thickness = 1;                   // Uncertainty shell, voxels
    std::uint64_t seed = 0;
};

struct Phantom {
    ScalarVolume intensity;
    LabelVolume labels;
};

// Random non-overlapping ellipsoidal Lesion cores wrapped in Uncertainty
// shells, over a smooth hypo-intense background with mild noise.
inline Phantom make_phantom(const PhantomConfig& cfg) {
    if (cfg.n_lesions == 0) throw InvalidArgument("phantom needs at least one lesion");
    if (cfg.min_radius <= 0 || cfg.max_radius < cfg.min_radius)
        throw InvalidArgument("bad phantom radius range");
    std::mt19937_64 rng(cfg.seed);
    const auto& d = cfg.dims;

    struct Ellipsoid {
        double cx, cy, cz, rx, ry, rz;
    };
    std::vector<Ellipsoid> lesions;
    std::uniform_real_distribution<double> ur(cfg.min_radius, cfg.max_radius);
    const double margin = cfg.max_radius + cfg.shell_thickness + 2.0;
    std::uniform_real_distribution<double> ux(margin, static_cast<double>(d.nx) - 1.0 - margin);
    std::uniform_real_distribution<double> uy(margin, static_cast<double>(d.ny) - 1.0 - margin);
    std::uniform_real_distribution<double> uz(margin, static_cast<double>(d.nz) - 1.0 - margin);
    if (ux.a() >= ux.b() || uy.a() >= uy.b() || uz.a() >= uz.b())
        throw InvalidArgument("phantom dims too small for the requested lesion radii");

    const int max_attempts = 10000;
    int attempts = 0;
    while (lesions.size() < cfg.n_lesions && attempts++ < max_attempts) {
        Ellipsoid e{ux(rng), uy(rng), uz(rng), ur(rng), ur(rng), ur(rng)};
        bool clash = false;
        for (const auto& o : lesions) {
            const double dist = std::sqrt((e.cx - o.cx) * (e.cx - o.cx) +
                                          (e.cy - o.cy) * (e.cy - o.cy) +
                                          (e.cz - o.cz) * (e.cz - o.cz));
            // Keep cores and shells apart so lesion components stay distinct.
            const double need = std::max({e.rx, e.ry, e.rz}) + std::max({o.rx, o.ry, o.rz}) +
                                2.0 * cfg.shell_thickness + 2.0;
            if (dist < need) {
                clash = true;
                break;
            }
        }
        if (!clash) lesions.push_back(e);
    }
    if (lesions.size() < cfg.n_lesions)
        throw InvalidArgument("could not place " + std::to_string(cfg.n_lesions) +
                              " non-overlapping lesions in the given dims");

    Phantom ph{ScalarVolume(d, cfg.spacing), LabelVolume(d, cfg.spacing)};
    std::normal_distribution<double> tissue_noise(0.0, 0.01);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& e : lesions) {
                    const double nx = (static_cast<double>(x) - e.cx) / e.rx;
                    const double ny = (static_cast<double>(y) - e.cy) / e.ry;
                    const double nz = (static_cast<double>(z) - e.cz) / e.rz;
                    best = std::min(best, std::sqrt(nx * nx + ny * ny + nz * nz));
                }
                const std::size_t i = ph.labels.index(x, y, z);
                // Normalized ellipsoid distance: core at <= 1, shell within
                // shell_thickness voxels of the smallest semi-axis scale.
                double shell_extent = 1.0;
                for (const auto& e : lesions)
                    shell_extent = std::max(
                        shell_extent,
                        1.0 + cfg.shell_thickness / std::min({e.rx, e.ry, e.rz}));
                std::uint8_t lab = kBackground;
                if (best <= 1.0) lab = kLesion;
                else if (best <= shell_extent) lab = kUncertainty;
                ph.labels[i] = lab;
                // Smooth background ramp plus lesion hyper-intensity.
                const double bg = 0.2 + 0.05 * std::sin(0.2 * static_cast<double>(x)) +
                                  0.05 * std::cos(0.15 * static_cast<double>(y + z));
                double sig = bg;
                if (lab == kLesion) sig = 0.85 + 0.1 * (1.0 - best);
                else if (lab == kUncertainty) sig = 0.55;
                ph.intensity[i] = static_cast<float>(std::max(0.0, sig + tissue_noise(rng)));
            }
    return ph;
}

} // namespace lesionfuse

#endif
