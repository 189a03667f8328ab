#ifndef LESIONFUSE_AUGMENT_HPP
#define LESIONFUSE_AUGMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lesionfuse/errors.hpp"
#include "lesionfuse/volume.hpp"

namespace lesionfuse {

// 2D image/label slice pair, row-major (x fast).
struct Slice2D {
    std::size_t width = 0, height = 0;
    std::vector<float> image;
    std::vector<std::uint8_t> labels;
};

struct AugmentConfig {
    double angle_min_deg = -13.0;
    double angle_max_deg = 13.0;
    double angle_resolution_deg = 1.0;
    double scale_min = 1.10;
    double scale_max = 1.30;
    double scale_resolution = 0.01;
    double noise_variance_coeff = 0.001; // times the max amplitude A
    std::uint64_t seed = 0;

    void validate() const {
        if (noise_variance_coeff < 0) throw InvalidArgument("noise coefficient must be >= 0");
        auto divides = [](double range, double res) {
            const double steps = range / res;
            return std::abs(steps - std::round(steps)) < 1e-9;
        };
        if (angle_resolution_deg <= 0 || scale_resolution <= 0)
            throw InvalidArgument("augment resolutions must be positive");
        if (!divides(angle_max_deg - angle_min_deg, angle_resolution_deg))
            throw InvalidArgument("angle resolution does not divide the angle range");
        if (!divides(scale_max - scale_min, scale_resolution))
            throw InvalidArgument("scale resolution does not divide the scale range");
    }
};

namespace detail {

inline void check_slice(const Slice2D& s) {
    if (s.width == 0 || s.height == 0) throw InvalidArgument("empty slice");
    if (s.image.size() != s.width * s.height || s.labels.size() != s.width * s.height)
        throw InvalidArgument("slice buffer sizes do not match width*height");
}

inline float bilinear(const std::vector<float>& img, std::size_t w, std::size_t h, double x,
                      double y) {
    // Zero outside the frame.
    if (x <= -1.0 || y <= -1.0 || x >= static_cast<double>(w) || y >= static_cast<double>(h))
        return 0.0f;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto sample = [&](int xi, int yi) -> double {
        if (xi < 0 || yi < 0 || xi >= static_cast<int>(w) || yi >= static_cast<int>(h)) return 0.0;
        return img[static_cast<std::size_t>(xi) + w * static_cast<std::size_t>(yi)];
    };
    return static_cast<float>(sample(x0, y0) * (1 - fx) * (1 - fy) +
                              sample(x0 + 1, y0) * fx * (1 - fy) +
                              sample(x0, y0 + 1) * (1 - fx) * fy +
                              sample(x0 + 1, y0 + 1) * fx * fy);
}

inline std::uint8_t nearest_label(const std::vector<std::uint8_t>& lbl, std::size_t w,
                                  std::size_t h, double x, double y) {
    const long xi = std::lround(x);
    const long yi = std::lround(y);
    if (xi < 0 || yi < 0 || xi >= static_cast<long>(w) || yi >= static_cast<long>(h))
        return kBackground;
    return lbl[static_cast<std::size_t>(xi) + w * static_cast<std::size_t>(yi)];
}

// Inverse-mapped affine about the slice centre: out(x) = in(M^-1 (x - c) + c).
inline Slice2D affine(const Slice2D& s, double cos_a, double sin_a, double inv_scale) {
    Slice2D out;
    out.width = s.width;
    out.height = s.height;
    out.image.resize(s.image.size());
    out.labels.resize(s.labels.size());
    const double cx = (static_cast<double>(s.width) - 1.0) / 2.0;
    const double cy = (static_cast<double>(s.height) - 1.0) / 2.0;
    for (std::size_t y = 0; y < s.height; ++y)
        for (std::size_t x = 0; x < s.width; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            const double sx = inv_scale * (cos_a * dx + sin_a * dy) + cx;
            const double sy = inv_scale * (-sin_a * dx + cos_a * dy) + cy;
            const std::size_t i = x + s.width * y;
            out.image[i] = bilinear(s.image, s.width, s.height, sx, sy);
            out.labels[i] = nearest_label(s.labels, s.width, s.height, sx, sy);
        }
    return out;
}

} // namespace detail

// Rotation about the slice centre: bilinear for intensities, nearest
// neighbour for labels, zero/Background fill outside the frame. The angle
// must sit on the configured angular grid.
inline Slice2D rotate_2d(const Slice2D& s, double angle_deg, double resolution_deg = 1.0) {
    detail::check_slice(s);
    const double steps = angle_deg / resolution_deg;
    if (std::abs(steps - std::round(steps)) > 1e-9)
        throw InvalidArgument("rotation angle " + std::to_string(angle_deg) +
                              " is not a multiple of the angular resolution");
    const double rad = angle_deg * M_PI / 180.0;
    return detail::affine(s, std::cos(rad), std::sin(rad), 1.0);
}

// Centre-anchored scaling, cropped to the original frame size.
inline Slice2D scale_2d(const Slice2D& s, double factor) {
    detail::check_slice(s);
    if (factor <= 0) throw InvalidArgument("scale factor must be positive");
    return detail::affine(s, 1.0, 0.0, 1.0 / factor);
}

// Independent per-pixel Gaussian perturbation of the intensities; labels are
// untouched by construction.
inline Slice2D add_gaussian_noise(const Slice2D& s, double variance, std::mt19937_64& rng) {
    detail::check_slice(s);
    if (variance < 0) throw InvalidArgument("noise variance must be >= 0");
    Slice2D out = s;
    if (variance == 0) return out;
    std::normal_distribution<double> noise(0.0, std::sqrt(variance));
    for (auto& v : out.image) v = static_cast<float>(v + noise(rng));
    return out;
}

struct AugmentedSlice {
    Slice2D slice;
    std::size_t source_index = 0;
    std::string transform; // original | rotation | scaling | noise
    double parameter = 0.0;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over (seed, stream) so parallel per-image generation is
    // order independent.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

// The full recipe: per source slice, the original plus 2 random rotations,
// 1 random scaling and 1 Gaussian-noise copy, all parameters drawn uniformly
// on the quantized grids.
inline std::vector<AugmentedSlice> expand_dataset(const std::vector<Slice2D>& sources,
                                                  const AugmentConfig& cfg) {
    cfg.validate();
    std::vector<AugmentedSlice> out;
    out.reserve(sources.size() * 5);
    const auto n_angles = static_cast<std::uint64_t>(
        std::llround((cfg.angle_max_deg - cfg.angle_min_deg) / cfg.angle_resolution_deg)) + 1;
    const auto n_scales = static_cast<std::uint64_t>(
        std::llround((cfg.scale_max - cfg.scale_min) / cfg.scale_resolution)) + 1;

    for (std::size_t si = 0; si < sources.size(); ++si) {
        detail::check_slice(sources[si]);
        std::mt19937_64 rng(detail::mix_seed(cfg.seed, si));
        std::uniform_int_distribution<std::uint64_t> angle_pick(0, n_angles - 1);
        std::uniform_int_distribution<std::uint64_t> scale_pick(0, n_scales - 1);

        out.push_back({sources[si], si, "original", 0.0});
        for (int k = 0; k < 2; ++k) {
            const double angle =
                cfg.angle_min_deg + cfg.angle_resolution_deg * static_cast<double>(angle_pick(rng));
            out.push_back({rotate_2d(sources[si], angle, cfg.angle_resolution_deg), si, "rotation",
                           angle});
        }
        const double scale =
            cfg.scale_min + cfg.scale_resolution * static_cast<double>(scale_pick(rng));
        out.push_back({scale_2d(sources[si], scale), si, "scaling", scale});

        const float amp = sources[si].image.empty()
                              ? 0.0f
                              : *std::max_element(sources[si].image.begin(),
                                                  sources[si].image.end());
        const double variance = cfg.noise_variance_coeff * static_cast<double>(amp);
        out.push_back({add_gaussian_noise(sources[si], variance, rng), si, "noise", variance});
    }
    return out;
}

} // namespace lesionfuse

#endif
