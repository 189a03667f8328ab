#ifndef LESIONFUSE_VOLUME_HPP
#define LESIONFUSE_VOLUME_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "lesionfuse/errors.hpp"

namespace lesionfuse {

// Ordered ternary classes. The numeric codes carry the ordering, so
// "downgrade" is a decrement and "union" is a max.
enum class Label : std::uint8_t {
    Background = 0,
    Uncertainty = 1,
    Lesion = 2,
};

inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kUncertainty = 1;
inline constexpr std::uint8_t kLesion = 2;

inline const char* label_name(Label c) {
    switch (c) {
        case Label::Background: return "background";
        case Label::Uncertainty: return "uncertainty";
        case Label::Lesion: return "lesion";
    }
    return "?";
}

struct Dims {
    std::size_t nx = 0, ny = 0, nz = 0;

    std::size_t count() const { return nx * ny * nz; }
    bool operator==(const Dims&) const = default;
};

struct Spacing {
    double sx = 1.0, sy = 1.0, sz = 1.0;

    double voxel_mm3() const { return sx * sy * sz; }
    bool operator==(const Spacing&) const = default;
};

// Slicing orientations, named by the anatomical plane. Axial fixes z,
// coronal fixes y, sagittal fixes x.
enum class Orientation { Axial, Coronal, Sagittal };

inline const char* orientation_name(Orientation o) {
    switch (o) {
        case Orientation::Axial: return "axial";
        case Orientation::Coronal: return "coronal";
        case Orientation::Sagittal: return "sagittal";
    }
    return "?";
}

// Dense 3D grid, x-fastest storage. Immutable by convention after
// construction; all pipeline operations return fresh volumes.
template <typename T>
class Volume {
public:
    Volume() = default;

    Volume(Dims dims, Spacing spacing, T fill = T{})
        : dims_(dims), spacing_(spacing), data_(dims.count(), fill) {
        validate_geometry();
    }

    Volume(Dims dims, Spacing spacing, std::vector<T> data)
        : dims_(dims), spacing_(spacing), data_(std::move(data)) {
        validate_geometry();
        if (data_.size() != dims_.count())
            throw InvalidArgument("volume data length " + std::to_string(data_.size()) +
                                  " does not match dims product " + std::to_string(dims_.count()));
    }

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + dims_.nx * (y + dims_.ny * z);
    }

    T at(std::size_t x, std::size_t y, std::size_t z) const { return data_[index(x, y, z)]; }
    T& at(std::size_t x, std::size_t y, std::size_t z) { return data_[index(x, y, z)]; }

    T operator[](std::size_t i) const { return data_[i]; }
    T& operator[](std::size_t i) { return data_[i]; }

    std::array<std::size_t, 3> coords(std::size_t i) const {
        const std::size_t x = i % dims_.nx;
        const std::size_t y = (i / dims_.nx) % dims_.ny;
        const std::size_t z = i / (dims_.nx * dims_.ny);
        return {x, y, z};
    }

    bool same_geometry(const Volume& other) const {
        return dims_ == other.dims_ && spacing_ == other.spacing_;
    }

    bool operator==(const Volume&) const = default;

private:
    void validate_geometry() const {
        if (!(spacing_.sx > 0 && spacing_.sy > 0 && spacing_.sz > 0))
            throw InvalidArgument("voxel spacing must be strictly positive");
    }

    Dims dims_;
    Spacing spacing_;
    std::vector<T> data_;
};

using ScalarVolume = Volume<float>;
using LabelVolume = Volume<std::uint8_t>;

inline void require_same_dims(const Dims& a, const Dims& b, const std::string& what) {
    if (!(a == b))
        throw DimensionMismatch(what + ": dims (" + std::to_string(a.nx) + "," +
                                std::to_string(a.ny) + "," + std::to_string(a.nz) + ") vs (" +
                                std::to_string(b.nx) + "," + std::to_string(b.ny) + "," +
                                std::to_string(b.nz) + ")");
}

inline bool is_ternary(const LabelVolume& v) {
    return std::all_of(v.data().begin(), v.data().end(), [](std::uint8_t c) { return c <= kLesion; });
}

inline bool is_binary(const LabelVolume& v) {
    return std::all_of(v.data().begin(), v.data().end(),
                       [](std::uint8_t c) { return c == kBackground || c == kLesion; });
}

inline void require_finite(const ScalarVolume& v, const std::string& what) {
    for (float x : v.data())
        if (!std::isfinite(x)) throw InvalidArgument(what + ": non-finite intensity");
}

// ---------------------------------------------------------------------------
// Slicing / reassembly

template <typename T>
struct SliceStack {
    Orientation orientation = Orientation::Axial;
    Dims source_dims;
    Spacing spacing;
    std::size_t slice_nx = 0, slice_ny = 0; // in-slice dimensions (fast, slow)
    std::vector<std::vector<T>> slices;
};

namespace detail {

inline void slice_shape(const Dims& d, Orientation o, std::size_t& n_slices, std::size_t& sx,
                        std::size_t& sy) {
    switch (o) {
        case Orientation::Axial: n_slices = d.nz; sx = d.nx; sy = d.ny; break;
        case Orientation::Coronal: n_slices = d.ny; sx = d.nx; sy = d.nz; break;
        case Orientation::Sagittal: n_slices = d.nx; sx = d.ny; sy = d.nz; break;
    }
}

inline std::size_t volume_index(const Dims& d, Orientation o, std::size_t s, std::size_t i,
                                std::size_t j) {
    // (i, j) are the in-slice fast/slow coordinates, s is the slice index.
    switch (o) {
        case Orientation::Axial: return i + d.nx * (j + d.ny * s);
        case Orientation::Coronal: return i + d.nx * (s + d.ny * j);
        case Orientation::Sagittal: return s + d.nx * (i + d.ny * j);
    }
    return 0;
}

} // namespace detail

template <typename T>
SliceStack<T> extract_slices(const Volume<T>& v, Orientation o) {
    if (v.empty()) throw InvalidArgument("extract_slices: empty volume");
    SliceStack<T> out;
    out.orientation = o;
    out.source_dims = v.dims();
    out.spacing = v.spacing();
    std::size_t n;
    detail::slice_shape(v.dims(), o, n, out.slice_nx, out.slice_ny);
    out.slices.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        auto& sl = out.slices[s];
        sl.resize(out.slice_nx * out.slice_ny);
        for (std::size_t j = 0; j < out.slice_ny; ++j)
            for (std::size_t i = 0; i < out.slice_nx; ++i)
                sl[i + out.slice_nx * j] = v[detail::volume_index(v.dims(), o, s, i, j)];
    }
    return out;
}

template <typename T>
Volume<T> assemble_volume(const SliceStack<T>& st) {
    std::size_t n, sx, sy;
    detail::slice_shape(st.source_dims, st.orientation, n, sx, sy);
    if (st.slices.empty()) throw InvalidArgument("assemble_volume: empty slice stack");
    if (st.slices.size() != n)
        throw DimensionMismatch("assemble_volume: slice count " + std::to_string(st.slices.size()) +
                                " does not match axis extent " + std::to_string(n));
    if (sx != st.slice_nx || sy != st.slice_ny)
        throw DimensionMismatch("assemble_volume: slice shape inconsistent with source dims");
    Volume<T> out(st.source_dims, st.spacing);
    for (std::size_t s = 0; s < n; ++s) {
        if (st.slices[s].size() != sx * sy)
            throw DimensionMismatch("assemble_volume: slice " + std::to_string(s) +
                                    " has wrong size");
        for (std::size_t j = 0; j < sy; ++j)
            for (std::size_t i = 0; i < sx; ++i)
                out[detail::volume_index(st.source_dims, st.orientation, s, i, j)] =
                    st.slices[s][i + sx * j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Class masks

// Binary mask of one class: Lesion code where v == c, Background elsewhere.
inline LabelVolume class_mask(const LabelVolume& v, Label c) {
    LabelVolume out(v.dims(), v.spacing());
    const auto code = static_cast<std::uint8_t>(c);
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = (v[i] == code) ? kLesion : kBackground;
    return out;
}

// ---------------------------------------------------------------------------
// Connected components

struct ComponentSet {
    std::vector<std::vector<std::size_t>> components; // sorted voxel linear indices
    int connectivity = 26;
    std::vector<double> volumes_mm3;
};

namespace detail {

inline std::vector<std::array<int, 3>> neighbourhood(int connectivity) {
    std::vector<std::array<int, 3>> n;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (connectivity == 6 && manhattan > 1) continue;
                if (connectivity == 18 && manhattan > 2) continue;
                n.push_back({dx, dy, dz});
            }
    return n;
}

} // namespace detail

// Flood-fill labelling of the positive voxels of a binary mask. Components
// are ordered by ascending minimum linear voxel index. 2D masks (nz == 1)
// accept connectivity 4/8, mapped to the in-plane subsets of 6/26.
inline ComponentSet connected_components(const LabelVolume& mask, int connectivity = 26) {
    int conn3d = connectivity;
    if (mask.dims().nz == 1 && (connectivity == 4 || connectivity == 8))
        conn3d = (connectivity == 4) ? 6 : 26;
    if (conn3d != 6 && conn3d != 18 && conn3d != 26)
        throw InvalidArgument("connected_components: connectivity must be 6/18/26 (or 4/8 in 2D)");

    ComponentSet out;
    out.connectivity = conn3d;
    const auto& d = mask.dims();
    const auto nbr = detail::neighbourhood(conn3d);
    std::vector<char> seen(mask.size(), 0);
    std::vector<std::size_t> stack;

    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (mask[start] == kBackground || seen[start]) continue;
        std::vector<std::size_t> comp;
        stack.assign(1, start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            comp.push_back(cur);
            const auto c = mask.coords(cur);
            for (const auto& dv : nbr) {
                const long long x = static_cast<long long>(c[0]) + dv[0];
                const long long y = static_cast<long long>(c[1]) + dv[1];
                const long long z = static_cast<long long>(c[2]) + dv[2];
                if (x < 0 || y < 0 || z < 0 || x >= static_cast<long long>(d.nx) ||
                    y >= static_cast<long long>(d.ny) || z >= static_cast<long long>(d.nz))
                    continue;
                const std::size_t ni = mask.index(static_cast<std::size_t>(x),
                                                  static_cast<std::size_t>(y),
                                                  static_cast<std::size_t>(z));
                if (mask[ni] != kBackground && !seen[ni]) {
                    seen[ni] = 1;
                    stack.push_back(ni);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.volumes_mm3.push_back(static_cast<double>(comp.size()) * mask.spacing().voxel_mm3());
        out.components.push_back(std::move(comp));
    }
    return out;
}

// Positive voxels with at least one 6-neighbour that is negative or outside
// the grid.
inline std::vector<std::size_t> boundary_voxels(const LabelVolume& mask) {
    static const std::array<std::array<int, 3>, 6> faces{
        {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};
    const auto& d = mask.dims();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] == kBackground) continue;
        const auto c = mask.coords(i);
        bool boundary = false;
        for (const auto& dv : faces) {
            const long long x = static_cast<long long>(c[0]) + dv[0];
            const long long y = static_cast<long long>(c[1]) + dv[1];
            const long long z = static_cast<long long>(c[2]) + dv[2];
            if (x < 0 || y < 0 || z < 0 || x >= static_cast<long long>(d.nx) ||
                y >= static_cast<long long>(d.ny) || z >= static_cast<long long>(d.nz)) {
                boundary = true;
                break;
            }
            if (mask[mask.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                static_cast<std::size_t>(z))] == kBackground) {
                boundary = true;
                break;
            }
        }
        if (boundary) out.push_back(i);
    }
    return out;
}

} // namespace lesionfuse

#endif
