#ifndef LESIONFUSE_METRICS_HPP
#define LESIONFUSE_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lesionfuse/errors.hpp"
#include "lesionfuse/volume.hpp"

namespace lesionfuse {

// A metric whose denominator vanished is "undefined" (empty optional) and is
// excluded from aggregation, never silently replaced by 0 or 1.
using MetricValue = std::optional<double>;

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

struct ObjectCounts {
    std::size_t tp_o = 0, fp_o = 0, fn_o = 0;
};

// Fixed 20-entry schema mirroring the full rater-comparison table: scores
// first (ideal value 1), then metrics (ideal value 0), distances last.
inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{
        "SENS", "OSENS", "SPEC", "ACC",  "PPV", "OPPV", "Dice", "ImageDice", "IoU", "F1",
        "BF",   "PCC",   "EF",   "DER",  "OER", "FDE",  "RAE",  "HD",        "ED",  "SD"};
    return names;
}

inline bool is_distance_metric(const std::string& name) {
    return name == "HD" || name == "ED" || name == "SD";
}

struct MetricReport {
    std::string subject_id;
    Label evaluated_class = Label::Lesion;
    std::string distance_units = "mm";
    std::vector<std::pair<std::string, MetricValue>> entries;

    void set(const std::string& name, MetricValue v) {
        for (auto& e : entries)
            if (e.first == name) {
                e.second = v;
                return;
            }
        entries.emplace_back(name, v);
    }

    MetricValue get(const std::string& name) const {
        for (const auto& e : entries)
            if (e.first == name) return e.second;
        return std::nullopt;
    }
};

namespace detail {

inline MetricValue ratio(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den;
}

inline bool positive(std::uint8_t v) { return v != kBackground; }

} // namespace detail

// ---------------------------------------------------------------------------
// Voxel-level counting and scores

inline ConfusionCounts confusion_counts(const LabelVolume& pred, const LabelVolume& gt) {
    require_same_dims(pred.dims(), gt.dims(), "confusion_counts");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = detail::positive(pred[i]);
        const bool g = detail::positive(gt[i]);
        if (p && g) ++c.tp;
        else if (p && !g) ++c.fp;
        else if (!p && g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline MetricReport voxel_scores(const ConfusionCounts& c) {
    const auto tp = static_cast<double>(c.tp);
    const auto fp = static_cast<double>(c.fp);
    const auto tn = static_cast<double>(c.tn);
    const auto fn = static_cast<double>(c.fn);
    const double p = tp + fn; // ground-truth positives

    MetricReport r;
    const MetricValue sens = detail::ratio(tp, tp + fn);
    const MetricValue spec = detail::ratio(tn, tn + fp);
    r.set("SENS", sens);
    r.set("SPEC", spec);
    r.set("ACC", (sens && spec) ? MetricValue((*sens + *spec) / 2.0) : std::nullopt);
    r.set("PPV", detail::ratio(tp, tp + fp));
    r.set("Dice", detail::ratio(2 * tp, 2 * tp + fp + fn));
    r.set("IoU", detail::ratio(tp, tp + fp + fn));
    r.set("EF", detail::ratio(fp, p));
    r.set("FDE", detail::ratio(fp, p));
    r.set("RAE", detail::ratio(tp + fp - p, p));
    return r;
}

// ---------------------------------------------------------------------------
// Object-level scores (connected regions as lesions)

inline MetricReport object_scores(const LabelVolume& pred, const LabelVolume& gt,
                                  int connectivity = 26) {
    require_same_dims(pred.dims(), gt.dims(), "object_scores");
    const ComponentSet pc = connected_components(pred, connectivity);
    const ComponentSet gc = connected_components(gt, connectivity);

    std::size_t pred_pos = 0, gt_pos = 0;
    for (const auto& comp : pc.components) pred_pos += comp.size();
    for (const auto& comp : gc.components) gt_pos += comp.size();

    ObjectCounts oc;
    std::size_t detection_error = 0;     // voxels of pred components with no gt overlap
    std::vector<char> pred_matched(pc.components.size(), 0);

    for (std::size_t pi = 0; pi < pc.components.size(); ++pi) {
        bool overlap = false;
        for (std::size_t v : pc.components[pi])
            if (detail::positive(gt[v])) {
                overlap = true;
                break;
            }
        pred_matched[pi] = overlap;
        if (overlap) continue;
        ++oc.fp_o;
        detection_error += pc.components[pi].size();
    }
    std::vector<char> gt_matched(gc.components.size(), 0);
    for (std::size_t gi = 0; gi < gc.components.size(); ++gi) {
        bool overlap = false;
        for (std::size_t v : gc.components[gi])
            if (detail::positive(pred[v])) {
                overlap = true;
                break;
            }
        gt_matched[gi] = overlap;
        overlap ? ++oc.tp_o : ++oc.fn_o;
    }

    // Outline error: symmetric difference between the matched pred voxels and
    // the matched gt voxels (union minus intersection over overlapping
    // regions).
    std::vector<char> in_matched_pred(pred.size(), 0);
    for (std::size_t pi = 0; pi < pc.components.size(); ++pi)
        if (pred_matched[pi])
            for (std::size_t v : pc.components[pi]) in_matched_pred[v] = 1;
    std::size_t outline_union = 0, outline_inter = 0;
    std::vector<char> counted(pred.size(), 0);
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (in_matched_pred[i]) {
            ++outline_union;
            counted[i] = 1;
        }
    for (std::size_t gi = 0; gi < gc.components.size(); ++gi)
        if (gt_matched[gi])
            for (std::size_t v : gc.components[gi]) {
                if (!counted[v]) ++outline_union;
                if (in_matched_pred[v]) ++outline_inter;
            }
    const std::size_t outline_error = outline_union - outline_inter;

    const double mta = (static_cast<double>(pred_pos) + static_cast<double>(gt_pos)) / 2.0;

    MetricReport r;
    const MetricValue osens =
        detail::ratio(static_cast<double>(oc.tp_o), static_cast<double>(oc.tp_o + oc.fn_o));
    const MetricValue oppv =
        detail::ratio(static_cast<double>(oc.tp_o), static_cast<double>(oc.tp_o + oc.fp_o));
    r.set("OSENS", osens);
    r.set("OPPV", oppv);
    r.set("F1", (osens && oppv) ? detail::ratio(2.0 * *osens * *oppv, *osens + *oppv)
                                : std::nullopt);
    r.set("DER", detail::ratio(static_cast<double>(detection_error), mta));
    r.set("OER", detail::ratio(static_cast<double>(outline_error), mta));
    return r;
}

// ---------------------------------------------------------------------------
// Per-image scores

// Per-slice Dice along `orientation`, averaged over slices where at least one
// of the two class masks is non-empty.
inline MetricValue image_dice(const LabelVolume& pred, const LabelVolume& gt, Label c,
                              Orientation orientation = Orientation::Axial) {
    require_same_dims(pred.dims(), gt.dims(), "image_dice");
    const auto ps = extract_slices(class_mask(pred, c), orientation);
    const auto gs = extract_slices(class_mask(gt, c), orientation);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t s = 0; s < ps.slices.size(); ++s) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < ps.slices[s].size(); ++i) {
            const bool p = ps.slices[s][i] != kBackground;
            const bool g = gs.slices[s][i] != kBackground;
            tp += (p && g);
            fp += (p && !g);
            fn += (!p && g);
        }
        if (tp + fp + fn == 0) continue; // both masks empty on this slice
        sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

namespace detail {

// 2D boundary pixels of a slice: positive with a 4-neighbour negative or off
// the grid.
inline std::vector<std::pair<int, int>> slice_boundary(const std::vector<std::uint8_t>& sl,
                                                       std::size_t w, std::size_t h) {
    std::vector<std::pair<int, int>> out;
    auto pos = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= static_cast<int>(w) || y >= static_cast<int>(h)) return false;
        return sl[static_cast<std::size_t>(x) + w * static_cast<std::size_t>(y)] != kBackground;
    };
    for (int y = 0; y < static_cast<int>(h); ++y)
        for (int x = 0; x < static_cast<int>(w); ++x) {
            if (!pos(x, y)) continue;
            if (!pos(x - 1, y) || !pos(x + 1, y) || !pos(x, y - 1) || !pos(x, y + 1))
                out.emplace_back(x, y);
        }
    return out;
}

inline std::size_t count_within(const std::vector<std::pair<int, int>>& from,
                                const std::vector<std::pair<int, int>>& to, double theta) {
    const double t2 = theta * theta;
    std::size_t matched = 0;
    for (const auto& a : from) {
        for (const auto& b : to) {
            const double dx = a.first - b.first;
            const double dy = a.second - b.second;
            if (dx * dx + dy * dy <= t2) {
                ++matched;
                break;
            }
        }
    }
    return matched;
}

} // namespace detail

// Per-slice boundary F1: boundary pixels matched within theta =
// tolerance_fraction * slice diagonal (at least one pixel), averaged over
// slices where either boundary is non-empty.
inline MetricValue boundary_f1(const LabelVolume& pred, const LabelVolume& gt, Label c,
                               double tolerance_fraction = 0.0075,
                               Orientation orientation = Orientation::Axial) {
    require_same_dims(pred.dims(), gt.dims(), "boundary_f1");
    const auto ps = extract_slices(class_mask(pred, c), orientation);
    const auto gs = extract_slices(class_mask(gt, c), orientation);
    const double diag = std::hypot(static_cast<double>(ps.slice_nx),
                                   static_cast<double>(ps.slice_ny));
    const double theta = std::max(1.0, tolerance_fraction * diag);

    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t s = 0; s < ps.slices.size(); ++s) {
        const auto pb = detail::slice_boundary(ps.slices[s], ps.slice_nx, ps.slice_ny);
        const auto gb = detail::slice_boundary(gs.slices[s], gs.slice_nx, gs.slice_ny);
        if (pb.empty() && gb.empty()) continue;
        ++n;
        if (pb.empty() || gb.empty()) continue; // F1 = 0 for this slice
        const double precision =
            static_cast<double>(detail::count_within(pb, gb, theta)) / pb.size();
        const double recall = static_cast<double>(detail::count_within(gb, pb, theta)) / gb.size();
        if (precision + recall > 0) sum += 2.0 * precision * recall / (precision + recall);
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

// Pearson correlation of two 0/1 voxel indicator vectors. Undefined when
// either mask is constant.
inline MetricValue pcc(const LabelVolume& a, const LabelVolume& b) {
    require_same_dims(a.dims(), b.dims(), "pcc");
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = detail::positive(a[i]) ? 1.0 : 0.0;
        const double y = detail::positive(b[i]) ? 1.0 : 0.0;
        sa += x;
        sb += y;
        sab += x * y;
    }
    const double ma = sa / n, mb = sb / n;
    const double cov = sab / n - ma * mb;
    const double va = ma * (1.0 - ma);
    const double vb = mb * (1.0 - mb);
    if (va == 0.0 || vb == 0.0) return std::nullopt;
    return cov / std::sqrt(va * vb);
}

// ---------------------------------------------------------------------------
// Distances (always computed in millimetres via voxel spacing)

namespace detail {

struct Point3 {
    double x, y, z;
};

inline std::vector<Point3> to_points(const std::vector<std::size_t>& idx, const Dims& dims,
                                     const Spacing& sp) {
    std::vector<Point3> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        const std::size_t x = i % dims.nx;
        const std::size_t y = (i / dims.nx) % dims.ny;
        const std::size_t z = i / (dims.nx * dims.ny);
        out.push_back({x * sp.sx, y * sp.sy, z * sp.sz});
    }
    return out;
}

inline double min_dist(const Point3& p, const std::vector<Point3>& set) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : set) {
        const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
        best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    return std::sqrt(best);
}

inline double directed_max(const std::vector<Point3>& a, const std::vector<Point3>& b) {
    double worst = 0.0;
    for (const auto& p : a) worst = std::max(worst, min_dist(p, b));
    return worst;
}

inline double directed_mean(const std::vector<Point3>& a, const std::vector<Point3>& b) {
    double sum = 0.0;
    for (const auto& p : a) sum += min_dist(p, b);
    return sum / static_cast<double>(a.size());
}

inline std::vector<std::size_t> positive_indices(const LabelVolume& mask) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (positive(mask[i])) out.push_back(i);
    return out;
}

} // namespace detail

// HD(A,B) = max of the two directed max-of-min distances.
inline MetricValue hausdorff(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                             const Dims& dims, const Spacing& sp) {
    if (a.empty() || b.empty()) return std::nullopt;
    const auto pa = detail::to_points(a, dims, sp);
    const auto pb = detail::to_points(b, dims, sp);
    return std::max(detail::directed_max(pa, pb), detail::directed_max(pb, pa));
}

// ED(A,B) = max of the two directed mean-of-min distances.
inline MetricValue euclidean_avg(const std::vector<std::size_t>& a,
                                 const std::vector<std::size_t>& b, const Dims& dims,
                                 const Spacing& sp) {
    if (a.empty() || b.empty()) return std::nullopt;
    const auto pa = detail::to_points(a, dims, sp);
    const auto pb = detail::to_points(b, dims, sp);
    return std::max(detail::directed_mean(pa, pb), detail::directed_mean(pb, pa));
}

// Symmetric mean nearest-surface distance between the 6-neighbourhood
// boundaries of the two masks.
inline MetricValue surface_distance(const LabelVolume& pred, const LabelVolume& gt) {
    require_same_dims(pred.dims(), gt.dims(), "surface_distance");
    const auto sa = boundary_voxels(pred);
    const auto sg = boundary_voxels(gt);
    if (sa.empty() || sg.empty()) return std::nullopt;
    const auto pa = detail::to_points(sa, pred.dims(), pred.spacing());
    const auto pg = detail::to_points(sg, gt.dims(), gt.spacing());
    double sum = 0.0;
    for (const auto& p : pa) sum += detail::min_dist(p, pg);
    for (const auto& p : pg) sum += detail::min_dist(p, pa);
    return sum / static_cast<double>(pa.size() + pg.size());
}

// ---------------------------------------------------------------------------
// Per-lesion evaluation

struct LesionMetrics {
    double volume_mm3 = 0.0;
    MetricValue dice;
    MetricValue f1;
    MetricValue sd;
};

// One entry per ground-truth connected component: Dice, object F1 and SD
// computed inside the component dilated by `margin` voxels (Chebyshev).
inline std::vector<LesionMetrics> per_lesion_metrics(const LabelVolume& pred,
                                                     const LabelVolume& gt, Label c,
                                                     int margin = 2, int connectivity = 26) {
    require_same_dims(pred.dims(), gt.dims(), "per_lesion_metrics");
    const LabelVolume pm = class_mask(pred, c);
    const LabelVolume gm = class_mask(gt, c);
    const ComponentSet gc = connected_components(gm, connectivity);
    const auto& d = gt.dims();

    std::vector<LesionMetrics> out;
    for (std::size_t li = 0; li < gc.components.size(); ++li) {
        // Dilate the component's bounding region by `margin` and keep only
        // voxels within Chebyshev distance `margin` of the component.
        std::vector<char> region(gt.size(), 0);
        for (std::size_t v : gc.components[li]) {
            const auto cds = gt.coords(v);
            for (int dz = -margin; dz <= margin; ++dz)
                for (int dy = -margin; dy <= margin; ++dy)
                    for (int dx = -margin; dx <= margin; ++dx) {
                        const long long x = static_cast<long long>(cds[0]) + dx;
                        const long long y = static_cast<long long>(cds[1]) + dy;
                        const long long z = static_cast<long long>(cds[2]) + dz;
                        if (x < 0 || y < 0 || z < 0 || x >= static_cast<long long>(d.nx) ||
                            y >= static_cast<long long>(d.ny) || z >= static_cast<long long>(d.nz))
                            continue;
                        region[gt.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                        static_cast<std::size_t>(z))] = 1;
                    }
        }
        LabelVolume rp(d, gt.spacing()), rg(d, gt.spacing());
        for (std::size_t i = 0; i < gt.size(); ++i) {
            if (!region[i]) continue;
            rp[i] = pm[i];
            rg[i] = gm[i];
        }

        LesionMetrics lm;
        lm.volume_mm3 = gc.volumes_mm3[li];
        const ConfusionCounts cc = confusion_counts(rp, rg);
        lm.dice = (2 * cc.tp + cc.fp + cc.fn > 0)
                      ? MetricValue(2.0 * cc.tp / static_cast<double>(2 * cc.tp + cc.fp + cc.fn))
                      : std::nullopt;
        const MetricReport os = object_scores(rp, rg, connectivity);
        lm.f1 = os.get("F1");
        if (!lm.f1 && cc.tp + cc.fp == 0) lm.f1 = 0.0; // empty prediction counts as total miss
        lm.sd = surface_distance(rp, rg);
        out.push_back(lm);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Loss evaluation

// Standard non-negative multi-label cross entropy, probabilities clamped to
// [eps, 1-eps]. Targets are one-hot rows.
inline double cross_entropy_loss(const std::vector<std::array<double, 3>>& probs,
                                 const std::vector<std::array<double, 3>>& targets,
                                 double epsilon = 1e-7) {
    if (probs.size() != targets.size())
        throw InvalidArgument("cross_entropy_loss: shape mismatch");
    if (probs.empty()) throw InvalidArgument("cross_entropy_loss: no observations");
    double sum = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
        for (std::size_t k = 0; k < 3; ++k) {
            const double y = std::clamp(probs[n][k], epsilon, 1.0 - epsilon);
            const double t = targets[n][k];
            if (t < 0.0 || t > 1.0 || probs[n][k] < 0.0 || probs[n][k] > 1.0)
                throw InvalidArgument("cross_entropy_loss: values outside [0,1]");
            sum += t * std::log(y) + (1.0 - t) * std::log(1.0 - y);
        }
    }
    return -sum / static_cast<double>(probs.size());
}

// ---------------------------------------------------------------------------
// Full report

struct ReportOptions {
    Orientation orientation = Orientation::Axial;
    int connectivity = 26;
    std::string units = "mm"; // "mm" or "cm"
    double bf_tolerance_fraction = 0.0075;
};

// Every score/metric of the rater-comparison table, in fixed order.
inline MetricReport full_report(const LabelVolume& pred, const LabelVolume& gt, Label c,
                                const ReportOptions& opt = {}) {
    require_same_dims(pred.dims(), gt.dims(), "full_report");
    if (opt.units != "mm" && opt.units != "cm")
        throw InvalidArgument("units must be mm or cm, got " + opt.units);
    const LabelVolume pm = class_mask(pred, c);
    const LabelVolume gm = class_mask(gt, c);

    const MetricReport vs = voxel_scores(confusion_counts(pm, gm));
    const MetricReport os = object_scores(pm, gm, opt.connectivity);

    const auto pi = detail::positive_indices(pm);
    const auto gi = detail::positive_indices(gm);

    MetricReport r;
    r.evaluated_class = c;
    r.distance_units = opt.units;
    const double unit_scale = (opt.units == "cm") ? 0.1 : 1.0;
    auto scaled = [&](MetricValue v) -> MetricValue {
        if (!v) return v;
        return *v * unit_scale;
    };

    for (const auto& name : metric_names()) r.set(name, std::nullopt);
    r.set("SENS", vs.get("SENS"));
    r.set("OSENS", os.get("OSENS"));
    r.set("SPEC", vs.get("SPEC"));
    r.set("ACC", vs.get("ACC"));
    r.set("PPV", vs.get("PPV"));
    r.set("OPPV", os.get("OPPV"));
    r.set("Dice", vs.get("Dice"));
    r.set("ImageDice", image_dice(pred, gt, c, opt.orientation));
    r.set("IoU", vs.get("IoU"));
    r.set("F1", os.get("F1"));
    r.set("BF", boundary_f1(pred, gt, c, opt.bf_tolerance_fraction, opt.orientation));
    r.set("PCC", pcc(pm, gm));
    r.set("EF", vs.get("EF"));
    r.set("DER", os.get("DER"));
    r.set("OER", os.get("OER"));
    r.set("FDE", vs.get("FDE"));
    r.set("RAE", vs.get("RAE"));
    r.set("HD", scaled(hausdorff(pi, gi, pred.dims(), pred.spacing())));
    r.set("ED", scaled(euclidean_avg(pi, gi, pred.dims(), pred.spacing())));
    r.set("SD", scaled(surface_distance(pm, gm)));
    return r;
}

} // namespace lesionfuse

#endif
