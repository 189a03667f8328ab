#ifndef LESIONFUSE_BAYESOPT_HPP
#define LESIONFUSE_BAYESOPT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lesionfuse/errors.hpp"
#include "lesionfuse/metrics.hpp"
#include "lesionfuse/volume.hpp"

namespace lesionfuse {

// Quantized box domain: per dimension (lower, upper, resolution).
struct SearchSpace {
    struct Dim {
        double lower, upper, resolution;
    };
    std::vector<Dim> dims;

    void validate() const {
        if (dims.empty()) throw InvalidArgument("search space has no dimensions");
        for (const auto& d : dims) {
            if (!(d.lower < d.upper)) throw InvalidArgument("search space: lower must be < upper");
            if (!(d.resolution > 0)) throw InvalidArgument("search space: resolution must be > 0");
            const double steps = (d.upper - d.lower) / d.resolution;
            if (std::abs(steps - std::round(steps)) > 1e-9)
                throw InvalidArgument("search space: resolution does not divide the range");
        }
    }

    std::vector<double> snap(const std::vector<double>& x) const {
        std::vector<double> out(dims.size());
        for (std::size_t d = 0; d < dims.size(); ++d) {
            const double clamped = std::clamp(x[d], dims[d].lower, dims[d].upper);
            const double k = std::round((clamped - dims[d].lower) / dims[d].resolution);
            out[d] = dims[d].lower + k * dims[d].resolution;
        }
        return out;
    }

    bool on_grid(const std::vector<double>& x) const {
        if (x.size() != dims.size()) return false;
        const auto s = snap(x);
        for (std::size_t d = 0; d < dims.size(); ++d)
            if (std::abs(s[d] - x[d]) > 1e-9) return false;
        return true;
    }
};

struct Trial {
    std::vector<double> x;
    double f = 0.0;
    std::size_t iteration = 0;
    bool non_finite = false; // objective returned NaN/Inf, recorded as +inf
};

struct OptimizerConfig {
    std::size_t n_initial = 5;        // Latin-hypercube design
    std::size_t budget = 30;          // total objective evaluations
    std::size_t n_candidates = 1024;  // acquisition sampling
    double length_scale_fraction = 0.2; // of each dimension's range
    double jitter = 1e-6;             // observation noise on the GP diagonal
    std::uint64_t seed = 0;

    void validate() const {
        if (budget < 1) throw InvalidArgument("budget must be >= 1");
        if (n_initial < 1 || n_initial > budget)
            throw InvalidArgument("n_initial must be in [1, budget]");
        if (n_candidates < 1) throw InvalidArgument("n_candidates must be >= 1");
        if (length_scale_fraction <= 0 || jitter <= 0)
            throw InvalidArgument("length scale fraction and jitter must be positive");
    }
};

// EI for minimization: expected decrease below best at a point with posterior
// (mean, std).
inline double expected_improvement(double mean, double std_dev, double best_so_far) {
    if (std_dev < 0) throw InvalidArgument("expected_improvement: std must be >= 0");
    const double delta = best_so_far - mean;
    if (std_dev == 0.0) return std::max(delta, 0.0);
    const double z = delta / std_dev;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return delta * cdf + std_dev * pdf;
}

namespace detail {

// Squared-exponential GP with fixed per-dimension length scales, fitted to
// standardized observations.
class GaussianProcess {
public:
    GaussianProcess(const std::vector<Trial>& history, const SearchSpace& space,
                    const OptimizerConfig& cfg) {
        const std::size_t n = history.size();
        const std::size_t dims = space.dims.size();
        inv_ls_.resize(dims);
        for (std::size_t d = 0; d < dims; ++d)
            inv_ls_[d] = 1.0 /
                         (cfg.length_scale_fraction * (space.dims[d].upper - space.dims[d].lower));

        x_.resize(n, dims);
        Eigen::VectorXd y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dims; ++d) x_(i, d) = history[i].x[d];
            y(i) = history[i].f;
        }
        y_mean_ = y.mean();
        y_std_ = std::sqrt((y.array() - y_mean_).square().sum() / static_cast<double>(n));
        if (y_std_ < 1e-12) y_std_ = 1.0;
        const Eigen::VectorXd yn = (y.array() - y_mean_) / y_std_;

        Eigen::MatrixXd k(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = kernel(x_.row(i), x_.row(j));
                k(i, j) = v;
                k(j, i) = v;
            }
        k.diagonal().array() += cfg.jitter;
        llt_.compute(k);
        if (llt_.info() != Eigen::Success)
            throw InvalidArgument("GP covariance factorization failed");
        alpha_ = llt_.solve(yn);
    }

    void posterior(const std::vector<double>& x, double& mean, double& std_dev) const {
        Eigen::RowVectorXd q(x.size());
        for (std::size_t d = 0; d < x.size(); ++d) q(d) = x[d];
        Eigen::VectorXd ks(x_.rows());
        for (Eigen::Index i = 0; i < x_.rows(); ++i) ks(i) = kernel(q, x_.row(i));
        const double mu_n = ks.dot(alpha_);
        const Eigen::VectorXd v = llt_.matrixL().solve(ks);
        const double var_n = std::max(0.0, 1.0 - v.squaredNorm());
        mean = mu_n * y_std_ + y_mean_;
        std_dev = std::sqrt(var_n) * y_std_;
    }

private:
    double kernel(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
        double s = 0.0;
        for (Eigen::Index d = 0; d < a.size(); ++d) {
            const double u = (a(d) - b(d)) * inv_ls_[d];
            s += u * u;
        }
        return std::exp(-0.5 * s);
    }

    Eigen::MatrixXd x_;
    Eigen::VectorXd alpha_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    std::vector<double> inv_ls_;
    double y_mean_ = 0.0, y_std_ = 1.0;
};

inline std::vector<std::vector<double>> latin_hypercube(const SearchSpace& space, std::size_t n,
                                                        std::mt19937_64& rng) {
    const std::size_t dims = space.dims.size();
    std::vector<std::vector<double>> pts(n, std::vector<double>(dims));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t d = 0; d < dims; ++d) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double frac = (static_cast<double>(perm[i]) + u(rng)) / static_cast<double>(n);
            pts[i][d] = space.dims[d].lower + frac * (space.dims[d].upper - space.dims[d].lower);
        }
    }
    for (auto& p : pts) p = space.snap(p);
    return pts;
}

inline bool seen(const std::vector<Trial>& history, const std::vector<double>& x) {
    for (const auto& t : history) {
        bool same = true;
        for (std::size_t d = 0; d < x.size(); ++d)
            if (std::abs(t.x[d] - x[d]) > 1e-12) {
                same = false;
                break;
            }
        if (same) return true;
    }
    return false;
}

} // namespace detail

struct OptimizeResult {
    Trial best;
    std::vector<Trial> history;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Sequential GP/EI minimization over the quantized box. Latin-hypercube
// initial design, then EI maximized over uniformly sampled grid candidates,
// deduplicated against the history. Deterministic per seed.
inline OptimizeResult optimize(const Objective& objective, const SearchSpace& space,
                               const OptimizerConfig& cfg = {}) {
    space.validate();
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    OptimizeResult res;
    auto evaluate = [&](std::vector<double> x, std::size_t iter) {
        Trial t;
        t.x = std::move(x);
        t.iteration = iter;
        const double f = objective(t.x);
        if (std::isfinite(f)) {
            t.f = f;
        } else {
            t.f = std::numeric_limits<double>::infinity();
            t.non_finite = true;
        }
        res.history.push_back(std::move(t));
    };

    const std::size_t n_init = std::min(cfg.n_initial, cfg.budget);
    for (auto& p : detail::latin_hypercube(space, n_init, rng)) {
        if (res.history.size() >= cfg.budget) break;
        // Coarse grids can snap two design points into the same cell.
        if (detail::seen(res.history, p)) continue;
        evaluate(std::move(p), res.history.size());
    }

    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (res.history.size() < cfg.budget) {
        double best_f = std::numeric_limits<double>::infinity();
        for (const auto& t : res.history) best_f = std::min(best_f, t.f);

        std::vector<Trial> finite;
        for (const auto& t : res.history)
            if (!t.non_finite) finite.push_back(t);

        std::vector<double> next;
        if (finite.size() >= 2) {
            const detail::GaussianProcess gp(finite, space, cfg);
            double best_ei = -1.0;
            for (std::size_t k = 0; k < cfg.n_candidates; ++k) {
                std::vector<double> cand(space.dims.size());
                for (std::size_t d = 0; d < space.dims.size(); ++d)
                    cand[d] = space.dims[d].lower +
                              u(rng) * (space.dims[d].upper - space.dims[d].lower);
                cand = space.snap(cand);
                if (detail::seen(res.history, cand)) continue;
                double mean, sd;
                gp.posterior(cand, mean, sd);
                const double ei = expected_improvement(mean, sd, best_f);
                if (ei > best_ei) {
                    best_ei = ei;
                    next = cand;
                }
            }
        }
        if (next.empty()) {
            // All candidates were duplicates (tiny grids) or the surrogate is
            // unusable; fall back to a fresh random grid point.
            for (int tries = 0; tries < 4096 && next.empty(); ++tries) {
                std::vector<double> cand(space.dims.size());
                for (std::size_t d = 0; d < space.dims.size(); ++d)
                    cand[d] = space.dims[d].lower +
                              u(rng) * (space.dims[d].upper - space.dims[d].lower);
                cand = space.snap(cand);
                if (!detail::seen(res.history, cand)) next = cand;
            }
            if (next.empty()) break; // grid exhausted
        }
        evaluate(std::move(next), res.history.size());
    }

    res.best = *std::min_element(res.history.begin(), res.history.end(),
                                 [](const Trial& a, const Trial& b) { return a.f < b.f; });
    return res;
}

// ---------------------------------------------------------------------------
// Desk-scale tuning target: a two-threshold segmenter over min-max
// normalized intensities.

inline LabelVolume threshold_segmenter(const ScalarVolume& v, double t_low, double t_high) {
    if (!(0.0 <= t_low && t_low <= t_high && t_high <= 1.0))
        throw InvalidArgument("thresholds must satisfy 0 <= t_low <= t_high <= 1");
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (float x : v.data()) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double range = (hi > lo) ? static_cast<double>(hi - lo) : 1.0;
    LabelVolume out(v.dims(), v.spacing());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double t = (static_cast<double>(v[i]) - lo) / range;
        out[i] = (t >= t_high) ? kLesion : (t >= t_low ? kUncertainty : kBackground);
    }
    return out;
}

// f(x) = 1 - IoU of the segmenter output against the ground truth, on the
// chosen class. A fully missed class scores 1.
inline double objective_one_minus_iou(const std::vector<double>& params, const ScalarVolume& v,
                                      const LabelVolume& gt, Label c) {
    if (params.size() != 2) throw InvalidArgument("segmenter objective expects (t_low, t_high)");
    const LabelVolume pred = threshold_segmenter(v, params[0], params[1]);
    const ConfusionCounts cc = confusion_counts(class_mask(pred, c), class_mask(gt, c));
    const double denom = static_cast<double>(cc.tp + cc.fp + cc.fn);
    const double iou = (denom > 0) ? static_cast<double>(cc.tp) / denom : 0.0;
    return 1.0 - iou;
}

} // namespace lesionfuse

#endif
