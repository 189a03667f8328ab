#ifndef LESIONFUSE_IO_HPP
#define LESIONFUSE_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <zlib.h>

#include "lesionfuse/errors.hpp"
#include "lesionfuse/volume.hpp"

namespace lesionfuse {

using AnyVolume = std::variant<LabelVolume, ScalarVolume>;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "file readers assume a little-endian host");

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failure: " + path.string());
    return bytes;
}

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in,
                                        const std::string& name) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) throw FormatError("zlib init failure: " + name);
    std::vector<std::uint8_t> out;
    out.resize(std::max<std::size_t>(in.size() * 4, 1 << 16));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::size_t written = 0;
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        if (written == out.size()) out.resize(out.size() * 2);
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        rc = inflate(&zs, Z_NO_FLUSH);
        written = out.size() - zs.avail_out;
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw FormatError("corrupt gzip stream: " + name);
        }
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

template <typename T>
T read_le(const std::vector<std::uint8_t>& b, std::size_t off) {
    T v;
    std::memcpy(&v, b.data() + off, sizeof(T));
    return v;
}

} // namespace detail

// ---------------------------------------------------------------------------
// .lvol — the toolkit's own fixed binary layout.
//
//   bytes 0-5   magic 4C 56 4F 4C 00 01 ("LVOL", 0, 1)
//   byte  6     dtype: 0 = uint8 labels, 1 = float32 LE
//   byte  7     reserved, 0
//   bytes 8-19  dims nx,ny,nz   uint32 LE
//   bytes 20-31 spacing sx,sy,sz mm, float32 LE
//   then raw voxel payload, x-fastest, LE.

inline constexpr std::size_t kLvolHeaderSize = 32;
inline constexpr std::array<std::uint8_t, 6> kLvolMagic{0x4C, 0x56, 0x4F, 0x4C, 0x00, 0x01};

inline AnyVolume load_lvol(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    if (bytes.size() < kLvolHeaderSize) throw FormatError("truncated .lvol header: " + path.string());
    if (!std::equal(kLvolMagic.begin(), kLvolMagic.end(), bytes.begin()))
        throw FormatError("bad .lvol magic: " + path.string());
    const std::uint8_t dtype = bytes[6];
    if (dtype != 0 && dtype != 1)
        throw FormatError("unsupported .lvol dtype code " + std::to_string(dtype) + ": " +
                          path.string());
    Dims dims{detail::read_le<std::uint32_t>(bytes, 8), detail::read_le<std::uint32_t>(bytes, 12),
              detail::read_le<std::uint32_t>(bytes, 16)};
    if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0)
        throw FormatError("non-positive dims in .lvol: " + path.string());
    Spacing sp{detail::read_le<float>(bytes, 20), detail::read_le<float>(bytes, 24),
               detail::read_le<float>(bytes, 28)};
    if (!(sp.sx > 0 && sp.sy > 0 && sp.sz > 0))
        throw FormatError("non-positive spacing in .lvol: " + path.string());
    const std::size_t n = dims.count();
    const std::size_t elem = (dtype == 0) ? 1 : 4;
    if (bytes.size() != kLvolHeaderSize + n * elem)
        throw FormatError("truncated .lvol payload: " + path.string());
    if (dtype == 0) {
        std::vector<std::uint8_t> data(bytes.begin() + kLvolHeaderSize, bytes.end());
        return LabelVolume(dims, sp, std::move(data));
    }
    std::vector<float> data(n);
    std::memcpy(data.data(), bytes.data() + kLvolHeaderSize, n * 4);
    return ScalarVolume(dims, sp, std::move(data));
}

namespace detail {

template <typename T>
void write_lvol(const Volume<T>& v, std::uint8_t dtype, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(kLvolMagic.data()), kLvolMagic.size());
    f.put(static_cast<char>(dtype));
    f.put(0);
    const std::uint32_t d[3] = {static_cast<std::uint32_t>(v.dims().nx),
                                static_cast<std::uint32_t>(v.dims().ny),
                                static_cast<std::uint32_t>(v.dims().nz)};
    f.write(reinterpret_cast<const char*>(d), 12);
    const float s[3] = {static_cast<float>(v.spacing().sx), static_cast<float>(v.spacing().sy),
                        static_cast<float>(v.spacing().sz)};
    f.write(reinterpret_cast<const char*>(s), 12);
    f.write(reinterpret_cast<const char*>(v.data().data()), v.size() * sizeof(T));
    if (!f) throw IoError("write failure: " + path.string());
}

} // namespace detail

inline void save_volume(const LabelVolume& v, const std::filesystem::path& path) {
    detail::write_lvol(v, 0, path);
}

inline void save_volume(const ScalarVolume& v, const std::filesystem::path& path) {
    detail::write_lvol(v, 1, path);
}

inline void save_volume(const AnyVolume& v, const std::filesystem::path& path) {
    std::visit([&](const auto& vol) { save_volume(vol, path); }, v);
}

// ---------------------------------------------------------------------------
// NIfTI-1, read-only: 348-byte header, single-file "n+1\0" magic, datatypes
// uint8 (2) and float32 (16). Transparent gzip handling by magic sniffing.

inline AnyVolume load_nifti(const std::filesystem::path& path) {
    auto bytes = detail::read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B)
        bytes = detail::gunzip(bytes, path.string());
    if (bytes.size() < 352) throw FormatError("truncated NIfTI-1 header: " + path.string());
    if (detail::read_le<std::int32_t>(bytes, 0) != 348)
        throw FormatError("bad NIfTI-1 sizeof_hdr: " + path.string());
    if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0)
        throw FormatError("bad NIfTI-1 magic (only single-file n+1 supported): " + path.string());

    const std::int16_t ndim = detail::read_le<std::int16_t>(bytes, 40);
    if (ndim < 3)
        throw FormatError("NIfTI-1 volume must have at least 3 dimensions: " + path.string());
    // Trailing dims beyond 3 must be singleton; time series are out of scope.
    for (int k = 4; k <= ndim; ++k)
        if (detail::read_le<std::int16_t>(bytes, 40 + 2 * k) > 1)
            throw FormatError("NIfTI-1 volume has a non-singleton dim > 3: " + path.string());

    Dims dims{static_cast<std::size_t>(detail::read_le<std::int16_t>(bytes, 42)),
              static_cast<std::size_t>(detail::read_le<std::int16_t>(bytes, 44)),
              static_cast<std::size_t>(detail::read_le<std::int16_t>(bytes, 46))};
    if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0)
        throw FormatError("non-positive NIfTI-1 dims: " + path.string());
    Spacing sp{detail::read_le<float>(bytes, 80), detail::read_le<float>(bytes, 84),
               detail::read_le<float>(bytes, 88)};
    if (!(sp.sx > 0 && sp.sy > 0 && sp.sz > 0))
        throw FormatError("non-positive NIfTI-1 pixdim: " + path.string());

    const std::int16_t datatype = detail::read_le<std::int16_t>(bytes, 70);
    const float vox_offset = detail::read_le<float>(bytes, 108);
    const std::size_t off = static_cast<std::size_t>(vox_offset);
    const std::size_t n = dims.count();

    if (datatype == 2) { // uint8
        if (bytes.size() < off + n) throw FormatError("truncated NIfTI-1 payload: " + path.string());
        std::vector<std::uint8_t> data(bytes.begin() + off, bytes.begin() + off + n);
        return LabelVolume(dims, sp, std::move(data));
    }
    if (datatype == 16) { // float32
        if (bytes.size() < off + 4 * n)
            throw FormatError("truncated NIfTI-1 payload: " + path.string());
        std::vector<float> data(n);
        std::memcpy(data.data(), bytes.data() + off, 4 * n);
        return ScalarVolume(dims, sp, std::move(data));
    }
    throw FormatError("unsupported NIfTI-1 datatype " + std::to_string(datatype) +
                      " (only uint8 and float32): " + path.string());
}

// Dispatch by extension, .lvol native and .nii/.nii.gz via the NIfTI reader.
inline AnyVolume load_volume(const std::filesystem::path& path) {
    const auto name = path.filename().string();
    if (name.ends_with(".lvol")) return load_lvol(path);
    if (name.ends_with(".nii") || name.ends_with(".nii.gz")) return load_nifti(path);
    throw FormatError("unrecognised volume extension (expect .lvol, .nii, .nii.gz): " +
                      path.string());
}

inline LabelVolume load_label_volume(const std::filesystem::path& path) {
    auto v = load_volume(path);
    if (auto* lbl = std::get_if<LabelVolume>(&v)) {
        if (!is_ternary(*lbl))
            throw FormatError("label volume has codes outside {0,1,2}: " + path.string());
        return std::move(*lbl);
    }
    throw FormatError("expected a label (uint8) volume: " + path.string());
}

inline ScalarVolume load_scalar_volume(const std::filesystem::path& path) {
    auto v = load_volume(path);
    if (auto* s = std::get_if<ScalarVolume>(&v)) {
        require_finite(*s, path.string());
        return std::move(*s);
    }
    throw FormatError("expected a scalar (float32) volume: " + path.string());
}

} // namespace lesionfuse

#endif
