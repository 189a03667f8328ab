#ifndef LESIONFUSE_CONSENSUS_HPP
#define LESIONFUSE_CONSENSUS_HPP

#include <string>
#include <vector>

#include "lesionfuse/errors.hpp"
#include "lesionfuse/volume.hpp"

namespace lesionfuse {

// N binary rater masks plus the binary consensus for one subject.
struct RaterSet {
    std::vector<LabelVolume> raters;
    LabelVolume binary_consensus;
    std::string subject_id;

    void validate() const {
        if (raters.empty()) throw InvalidArgument("RaterSet: no rater masks");
        if (!is_binary(binary_consensus))
            throw InvalidArgument("RaterSet: consensus is not binary");
        for (std::size_t i = 0; i < raters.size(); ++i) {
            require_same_dims(raters[i].dims(), binary_consensus.dims(),
                              "rater " + std::to_string(i));
            if (!(raters[i].spacing() == binary_consensus.spacing()))
                throw DimensionMismatch("rater " + std::to_string(i) + ": spacing mismatch");
            if (!is_binary(raters[i]))
                throw InvalidArgument("rater " + std::to_string(i) + " mask is not binary");
        }
    }
};

// Ternary ground truth: Lesion wherever the binary consensus says Lesion
// (that set is preserved exactly), Uncertainty where at least `threshold`
// raters marked lesion but the consensus did not, Background elsewhere.
inline LabelVolume build_ternary_consensus(const RaterSet& rs, unsigned threshold = 3) {
    rs.validate();
    if (threshold < 1 || threshold > rs.raters.size())
        throw InvalidArgument("consensus threshold must be in [1, N], got " +
                              std::to_string(threshold));
    LabelVolume out(rs.binary_consensus.dims(), rs.binary_consensus.spacing());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (rs.binary_consensus[i] == kLesion) {
            out[i] = kLesion;
            continue;
        }
        unsigned votes = 0;
        for (const auto& r : rs.raters) votes += (r[i] == kLesion);
        out[i] = (votes >= threshold) ? kUncertainty : kBackground;
    }
    return out;
}

} // namespace lesionfuse

#endif
