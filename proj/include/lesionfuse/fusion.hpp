#ifndef LESIONFUSE_FUSION_HPP
#define LESIONFUSE_FUSION_HPP

#include <array>
#include <string>
#include <vector>

#include "lesionfuse/errors.hpp"
#include "lesionfuse/volume.hpp"

namespace lesionfuse {

// Which class each directional classifier was tuned for: LesionFocus looks
// at lesions from inside, BackgroundFocus contextualizes them against the
// surrounding tissue.
enum class Focus { Lesion, Background };

// The six directional classifier outputs over one subject, all ternary and
// geometry-identical. Index order: (axial, coronal, sagittal) x (lesion,
// background).
struct ClassifierBundle {
    std::array<LabelVolume, 6> volumes;

    static constexpr std::size_t slot(Orientation o, Focus f) {
        return 2 * static_cast<std::size_t>(o) + (f == Focus::Background ? 1 : 0);
    }

    const LabelVolume& get(Orientation o, Focus f) const { return volumes[slot(o, f)]; }
    LabelVolume& get(Orientation o, Focus f) { return volumes[slot(o, f)]; }

    void validate() const {
        for (std::size_t i = 0; i < 6; ++i) {
            require_same_dims(volumes[i].dims(), volumes[0].dims(),
                              "classifier volume " + std::to_string(i));
            if (!(volumes[i].spacing() == volumes[0].spacing()))
                throw DimensionMismatch("classifier volume " + std::to_string(i) +
                                        ": spacing mismatch");
            if (!is_ternary(volumes[i]))
                throw InvalidArgument("classifier volume " + std::to_string(i) +
                                      " is not ternary");
        }
    }
};

// A confirmer "agrees" either when its label is at least the voted class
// (ordered, the default: a Lesion vote implies at-least-Uncertainty) or only
// on exact equality (strict).
enum class ConfirmationRule { Ordered, Strict };

struct FusionConfig {
    int min_votes = 2;
    ConfirmationRule rule = ConfirmationRule::Ordered;
    bool allow_double_downgrade = false;
    // Which orientation's pair seeds the union; axial by default.
    Orientation preferred = Orientation::Axial;

    void validate() const {
        if (min_votes < 1 || min_votes > 4)
            throw InvalidArgument("min_votes must be in [1,4], got " + std::to_string(min_votes));
    }
};

// Pointwise maximum under Background < Uncertainty < Lesion.
inline LabelVolume ternary_union(const LabelVolume& a, const LabelVolume& b) {
    require_same_dims(a.dims(), b.dims(), "ternary_union");
    LabelVolume out(a.dims(), a.spacing());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], b[i]);
    return out;
}

// One majority-vote pass over voxels currently holding `target_class`.
// Unconfirmed voxels are downgraded by exactly one level; voxels in `frozen`
// are left alone. Returns the updated volume and the voxels downgraded here.
inline std::pair<LabelVolume, std::vector<char>> confirmation_pass(
    const LabelVolume& current, const std::array<const LabelVolume*, 4>& confirmers,
    Label target_class, const FusionConfig& cfg, const std::vector<char>& frozen) {
    cfg.validate();
    if (target_class == Label::Background)
        throw InvalidArgument("confirmation_pass: Background is never voted on");
    for (const auto* c : confirmers)
        require_same_dims(c->dims(), current.dims(), "confirmation_pass");
    if (!frozen.empty() && frozen.size() != current.size())
        throw InvalidArgument("confirmation_pass: frozen set size mismatch");

    const auto target = static_cast<std::uint8_t>(target_class);
    LabelVolume out = current;
    std::vector<char> downgraded(current.size(), 0);
    for (std::size_t i = 0; i < current.size(); ++i) {
        if (current[i] != target) continue;
        if (!frozen.empty() && frozen[i]) continue;
        int votes = 0;
        for (const auto* c : confirmers) {
            const std::uint8_t lab = (*c)[i];
            votes += (cfg.rule == ConfirmationRule::Ordered) ? (lab >= target) : (lab == target);
        }
        if (votes < cfg.min_votes) {
            out[i] = target - 1;
            downgraded[i] = 1;
        }
    }
    return {std::move(out), std::move(downgraded)};
}

// Full ensemble fusion: union of the two preferred-orientation outputs, then
// a Lesion confirmation pass against the four remaining classifier outputs,
// then an Uncertainty pass on the result. Unless double downgrading is
// enabled, voxels already downgraded in the Lesion pass are frozen so each
// voxel moves at most one level.
inline LabelVolume fuse(const ClassifierBundle& bundle, const FusionConfig& cfg = {}) {
    bundle.validate();
    cfg.validate();

    std::vector<Orientation> others;
    for (auto o : {Orientation::Axial, Orientation::Coronal, Orientation::Sagittal})
        if (o != cfg.preferred) others.push_back(o);

    const LabelVolume u0 = ternary_union(bundle.get(cfg.preferred, Focus::Lesion),
                                         bundle.get(cfg.preferred, Focus::Background));
    const std::array<const LabelVolume*, 4> confirmers{
        &bundle.get(others[0], Focus::Lesion), &bundle.get(others[0], Focus::Background),
        &bundle.get(others[1], Focus::Lesion), &bundle.get(others[1], Focus::Background)};

    auto [u1, downgraded] = confirmation_pass(u0, confirmers, Label::Lesion, cfg, {});
    const std::vector<char> frozen =
        cfg.allow_double_downgrade ? std::vector<char>{} : downgraded;
    auto [u2, ignored] = confirmation_pass(u1, confirmers, Label::Uncertainty, cfg, frozen);
    return std::move(u2);
}

} // namespace lesionfuse

#endif
