#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <zlib.h>

#include "cavisim/errors.hpp"
#include "cavisim/volume.hpp"

namespace cavisim {

namespace nifti {

// NIfTI-1 datatype codes (the subset this reader supports).
enum : short {
    DT_UINT8 = 2,
    DT_INT16 = 4,
    DT_INT32 = 8,
    DT_FLOAT32 = 16,
    DT_FLOAT64 = 64,
    DT_UINT16 = 512,
};

#pragma pack(push, 1)
struct Header1 {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Header1) == 348, "NIfTI-1 header must be 348 bytes");

inline int bitpix_of(short datatype) {
    switch (datatype) {
        case DT_UINT8: return 8;
        case DT_INT16: return 16;
        case DT_UINT16: return 16;
        case DT_INT32: return 32;
        case DT_FLOAT32: return 32;
        case DT_FLOAT64: return 64;
        default: return 0;
    }
}

} // namespace nifti

/// Grid geometry and on-disk layout of a loaded volume. Keeping this beside
/// the in-memory (RAS-reordered) volume lets a save restore the original
/// axis order, flips and affine bit-for-bit.
struct VolumeHeader {
    short datatype = nifti::DT_FLOAT32;
    float scl_slope = 1.0f;
    float scl_inter = 0.0f;

    // Disk layout: memory axis a is backed by disk axis mem_to_disk[a],
    // traversed backwards when flipped[a].
    std::array<int, 3> mem_to_disk{0, 1, 2};
    std::array<bool, 3> flipped{false, false, false};
    std::array<std::size_t, 3> disk_dims{0, 0, 0};

    // Original orientation fields, replayed verbatim on save.
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    float quatern[3] = {0, 0, 0};
    float qoffset[3] = {0, 0, 0};
    float qfac = 1.0f;
    float srow[3][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}};
    float disk_pixdim[3] = {1, 1, 1};

    bool identity_layout() const {
        return mem_to_disk == std::array<int, 3>{0, 1, 2} &&
               !flipped[0] && !flipped[1] && !flipped[2];
    }
};

namespace detail {

class GzReader {
public:
    explicit GzReader(const std::string& path) : path_(path) {
        file_ = gzopen(path.c_str(), "rb");
        if (!file_)
            throw io_error("cannot open '" + path + "' for reading");
    }
    ~GzReader() {
        if (file_)
            gzclose(file_);
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;

    /// Read up to `bytes`; returns the byte count actually read (short only
    /// at end of stream). Throws on decoder errors.
    std::size_t read_some(void* dst, std::size_t bytes) {
        std::size_t got = 0;
        auto* out = static_cast<char*>(dst);
        while (got < bytes) {
            const unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(bytes - got, 1u << 30));
            const int r = gzread(file_, out + got, chunk);
            if (r < 0)
                throw format_error(path_ + ": decompression or read error");
            if (r == 0)
                break;
            got += static_cast<std::size_t>(r);
        }
        return got;
    }

    void read_exact(void* dst, std::size_t bytes, const char* what) {
        const std::size_t got = read_some(dst, bytes);
        if (got != bytes) {
            std::ostringstream msg;
            msg << path_ << ": truncated " << what << ": expected " << bytes
                << " bytes, got " << got;
            throw format_error(msg.str());
        }
    }

    void skip(std::size_t bytes) {
        std::vector<char> junk(std::min<std::size_t>(bytes, 65536));
        std::size_t left = bytes;
        while (left > 0) {
            const auto chunk = std::min(left, junk.size());
            read_exact(junk.data(), chunk, "header padding");
            left -= chunk;
        }
    }

private:
    std::string path_;
    gzFile file_ = nullptr;
};

inline bool has_gz_suffix(const std::string& path) {
    return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

template <class T>
void byteswap_inplace(T& v) {
    auto* bytes = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
        std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
}

inline void byteswap_header(nifti::Header1& h) {
    byteswap_inplace(h.sizeof_hdr);
    byteswap_inplace(h.extents);
    byteswap_inplace(h.session_error);
    for (auto& d : h.dim)
        byteswap_inplace(d);
    byteswap_inplace(h.intent_p1);
    byteswap_inplace(h.intent_p2);
    byteswap_inplace(h.intent_p3);
    byteswap_inplace(h.intent_code);
    byteswap_inplace(h.datatype);
    byteswap_inplace(h.bitpix);
    byteswap_inplace(h.slice_start);
    for (auto& p : h.pixdim)
        byteswap_inplace(p);
    byteswap_inplace(h.vox_offset);
    byteswap_inplace(h.scl_slope);
    byteswap_inplace(h.scl_inter);
    byteswap_inplace(h.slice_end);
    byteswap_inplace(h.cal_max);
    byteswap_inplace(h.cal_min);
    byteswap_inplace(h.slice_duration);
    byteswap_inplace(h.toffset);
    byteswap_inplace(h.glmax);
    byteswap_inplace(h.glmin);
    byteswap_inplace(h.qform_code);
    byteswap_inplace(h.sform_code);
    byteswap_inplace(h.quatern_b);
    byteswap_inplace(h.quatern_c);
    byteswap_inplace(h.quatern_d);
    byteswap_inplace(h.qoffset_x);
    byteswap_inplace(h.qoffset_y);
    byteswap_inplace(h.qoffset_z);
    for (auto& v : h.srow_x)
        byteswap_inplace(v);
    for (auto& v : h.srow_y)
        byteswap_inplace(v);
    for (auto& v : h.srow_z)
        byteswap_inplace(v);
}

// 3x4 voxel-to-world affine from the header, preferring sform over qform.
// Non-finite entries (possible in damaged files) are zeroed so the axis
// assignment below stays well defined.
inline void header_affine(const nifti::Header1& h, double affine[3][4]) {
    auto finite = [](double v) { return std::isfinite(v) ? v : 0.0; };
    if (h.sform_code > 0) {
        for (int c = 0; c < 4; ++c) {
            affine[0][c] = finite(h.srow_x[c]);
            affine[1][c] = finite(h.srow_y[c]);
            affine[2][c] = finite(h.srow_z[c]);
        }
        return;
    }
    if (h.qform_code > 0) {
        const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
        const double a2 = std::max(0.0, 1.0 - b * b - c * c - d * d);
        const double a = std::sqrt(a2);
        const double qfac = (h.pixdim[0] < 0.0f) ? -1.0 : 1.0;
        const double r[3][3] = {
            {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
            {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
            {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}};
        const double offs[3] = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
        for (int i = 0; i < 3; ++i) {
            affine[i][0] = r[i][0] * h.pixdim[1];
            affine[i][1] = r[i][1] * h.pixdim[2];
            affine[i][2] = r[i][2] * h.pixdim[3] * qfac;
            affine[i][3] = offs[i];
        }
        return;
    }
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 4; ++c)
            affine[i][c] = 0.0;
    for (int i = 0; i < 3; ++i)
        affine[i][i] = h.pixdim[i + 1];
}

inline void sanitize_affine(double affine[3][4]) {
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 4; ++c)
            if (!std::isfinite(affine[i][c]))
                affine[i][c] = 0.0;
}

// Assign each disk axis a world axis (largest |component| first) and a sign.
inline void orientation_of(const double affine[3][4], int world_of[3], int sign_of[3]) {
    struct Entry {
        double mag;
        int world, disk;
    };
    std::vector<Entry> entries;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            entries.push_back({std::abs(affine[i][j]), i, j});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.mag > b.mag; });
    bool world_used[3] = {false, false, false};
    bool disk_used[3] = {false, false, false};
    for (const Entry& e : entries) {
        if (world_used[e.world] || disk_used[e.disk])
            continue;
        world_used[e.world] = true;
        disk_used[e.disk] = true;
        world_of[e.disk] = e.world;
        sign_of[e.disk] = (affine[e.world][e.disk] < 0.0) ? -1 : 1;
    }
}

template <class Disk, class Mem>
void reorder_to_memory(const std::vector<Disk>& disk, std::vector<Mem>& mem,
                       const std::array<std::size_t, 3>& disk_dims,
                       const std::array<int, 3>& mem_to_disk, const std::array<bool, 3>& flipped,
                       const std::array<std::size_t, 3>& mem_dims) {
    std::size_t disk_stride[3] = {1, disk_dims[0], disk_dims[0] * disk_dims[1]};
    mem.resize(disk.size());
    std::size_t out = 0;
    for (std::size_t k = 0; k < mem_dims[2]; ++k)
        for (std::size_t j = 0; j < mem_dims[1]; ++j)
            for (std::size_t i = 0; i < mem_dims[0]; ++i, ++out) {
                const std::size_t mem_idx[3] = {i, j, k};
                std::size_t flat = 0;
                for (int a = 0; a < 3; ++a) {
                    const int d = mem_to_disk[a];
                    const std::size_t pos =
                        flipped[a] ? disk_dims[d] - 1 - mem_idx[a] : mem_idx[a];
                    flat += pos * disk_stride[d];
                }
                mem[out] = static_cast<Mem>(disk[flat]);
            }
}

template <class Mem, class Disk>
std::vector<Disk> reorder_to_disk(const std::vector<Mem>& mem,
                                  const std::array<std::size_t, 3>& disk_dims,
                                  const std::array<int, 3>& mem_to_disk,
                                  const std::array<bool, 3>& flipped,
                                  const std::array<std::size_t, 3>& mem_dims) {
    std::vector<Disk> disk(mem.size());
    std::size_t disk_stride[3] = {1, disk_dims[0], disk_dims[0] * disk_dims[1]};
    std::size_t in = 0;
    for (std::size_t k = 0; k < mem_dims[2]; ++k)
        for (std::size_t j = 0; j < mem_dims[1]; ++j)
            for (std::size_t i = 0; i < mem_dims[0]; ++i, ++in) {
                const std::size_t mem_idx[3] = {i, j, k};
                std::size_t flat = 0;
                for (int a = 0; a < 3; ++a) {
                    const int d = mem_to_disk[a];
                    const std::size_t pos =
                        flipped[a] ? disk_dims[d] - 1 - mem_idx[a] : mem_idx[a];
                    flat += pos * disk_stride[d];
                }
                disk[flat] = static_cast<Disk>(mem[in]);
            }
    return disk;
}

} // namespace detail

/// A volume loaded from disk: label data for integer files with trivial
/// scaling, scalar data otherwise, plus the header needed to re-save in the
/// original layout.
struct LoadedVolume {
    std::variant<ScalarVolume, LabelVolume> data;
    VolumeHeader header;

    bool is_scalar() const { return std::holds_alternative<ScalarVolume>(data); }

    const ScalarVolume& scalar() const { return std::get<ScalarVolume>(data); }
    const LabelVolume& labels() const { return std::get<LabelVolume>(data); }

    /// Intensities as float regardless of the stored type.
    ScalarVolume to_scalar() const {
        if (is_scalar())
            return scalar();
        const LabelVolume& lv = labels();
        ScalarVolume out(lv.grid);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = static_cast<float>(lv[i]);
        return out;
    }

    /// Binary mask: any nonzero voxel is foreground. Scalar files must hold
    /// exact 0/1 values to be accepted as masks.
    BinaryMask to_mask() const {
        BinaryMask out;
        if (is_scalar()) {
            const ScalarVolume& sv = scalar();
            out = BinaryMask(sv.grid);
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (sv[i] != 0.0f && sv[i] != 1.0f)
                    throw format_error("float-typed mask contains values other than 0 and 1");
                out[i] = sv[i] != 0.0f ? 1 : 0;
            }
        } else {
            const LabelVolume& lv = labels();
            out = BinaryMask(lv.grid);
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = lv[i] != 0 ? 1 : 0;
        }
        return out;
    }
};

/// Read a NIfTI-1 volume (.nii or .nii.gz, little- or big-endian). The data
/// are reordered so memory axes run along increasing world coordinates; the
/// returned header records the original layout so writes can restore it.
inline LoadedVolume read_volume(const std::string& path) {
    detail::GzReader in(path);
    nifti::Header1 h{};
    in.read_exact(&h, sizeof h, "header (348 bytes at offset 0)");

    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        detail::byteswap_inplace(h.sizeof_hdr);
        if (h.sizeof_hdr != 348)
            throw format_error(path + ": offset 0: sizeof_hdr is not 348; not a NIfTI-1 file");
        detail::byteswap_inplace(h.sizeof_hdr); // restore; full swap below
        detail::byteswap_header(h);
        swapped = true;
    }
    if (std::strncmp(h.magic, "n+1", 3) != 0)
        throw format_error(path + ": offset 344: magic is not 'n+1' (single-file NIfTI-1)");

    if (h.dim[0] < 1 || h.dim[0] > 7)
        throw format_error(path + ": offset 40: dim[0] out of range");
    for (int d = 4; d <= h.dim[0]; ++d)
        if (h.dim[d] > 1)
            throw format_error(path + ": only 3-D volumes are supported (dim[" +
                               std::to_string(d) + "] > 1)");
    std::array<std::size_t, 3> disk_dims{1, 1, 1};
    for (int d = 1; d <= std::min<int>(3, h.dim[0]); ++d) {
        if (h.dim[d] < 1)
            throw format_error(path + ": offset 40: dim[" + std::to_string(d) + "] < 1");
        disk_dims[d - 1] = static_cast<std::size_t>(h.dim[d]);
    }

    const int bitpix = nifti::bitpix_of(h.datatype);
    if (bitpix == 0)
        throw format_error(path + ": offset 70: unsupported datatype code " +
                           std::to_string(h.datatype));
    for (int d = 1; d <= 3; ++d)
        if (!(h.pixdim[d] > 0.0f) || !std::isfinite(h.pixdim[d]))
            throw format_error(path + ": offset 76: pixdim[" + std::to_string(d) +
                               "] must be positive and finite");

    if (!std::isfinite(h.vox_offset))
        throw format_error(path + ": offset 108: vox_offset is not finite");
    const auto vox_offset = static_cast<long>(h.vox_offset);
    if (vox_offset < 348)
        throw format_error(path + ": offset 108: vox_offset below header size");
    in.skip(static_cast<std::size_t>(vox_offset) - sizeof h);

    const std::size_t count = disk_dims[0] * disk_dims[1] * disk_dims[2];
    const std::size_t want = count * static_cast<std::size_t>(bitpix / 8);
    // Grow the buffer as data actually arrives, so a header claiming absurd
    // dimensions fails with a truncation diagnostic instead of a huge
    // allocation.
    std::vector<char> raw;
    std::size_t got_total = 0;
    constexpr std::size_t read_chunk = std::size_t{64} << 20;
    while (got_total < want) {
        const std::size_t step = std::min(read_chunk, want - got_total);
        raw.resize(got_total + step);
        const std::size_t got = in.read_some(raw.data() + got_total, step);
        got_total += got;
        if (got < step)
            break;
    }
    if (got_total != want) {
        std::ostringstream msg;
        msg << path << ": truncated voxel data: expected " << want << " bytes, got "
            << got_total;
        throw format_error(msg.str());
    }
    if (swapped && bitpix > 8) {
        const int width = bitpix / 8;
        for (std::size_t i = 0; i < raw.size(); i += width)
            for (int b = 0; b < width / 2; ++b)
                std::swap(raw[i + b], raw[i + width - 1 - b]);
    }

    // Orientation: reorder so memory axes follow increasing world axes.
    double affine[3][4];
    detail::header_affine(h, affine);
    detail::sanitize_affine(affine);
    int world_of[3], sign_of[3];
    detail::orientation_of(affine, world_of, sign_of);

    VolumeHeader header;
    header.datatype = h.datatype;
    header.scl_slope = h.scl_slope;
    header.scl_inter = h.scl_inter;
    header.disk_dims = disk_dims;
    header.qform_code = h.qform_code;
    header.sform_code = h.sform_code;
    header.quatern[0] = h.quatern_b;
    header.quatern[1] = h.quatern_c;
    header.quatern[2] = h.quatern_d;
    header.qoffset[0] = h.qoffset_x;
    header.qoffset[1] = h.qoffset_y;
    header.qoffset[2] = h.qoffset_z;
    header.qfac = (h.pixdim[0] < 0.0f) ? -1.0f : 1.0f;
    for (int c = 0; c < 4; ++c) {
        header.srow[0][c] = h.srow_x[c];
        header.srow[1][c] = h.srow_y[c];
        header.srow[2][c] = h.srow_z[c];
    }
    for (int d = 0; d < 3; ++d)
        header.disk_pixdim[d] = h.pixdim[d + 1];
    for (int d = 0; d < 3; ++d) {
        header.mem_to_disk[world_of[d]] = d;
        header.flipped[world_of[d]] = sign_of[d] < 0;
    }

    Grid3 grid;
    for (int a = 0; a < 3; ++a) {
        const int d = header.mem_to_disk[a];
        grid.dims[a] = disk_dims[d];
        grid.spacing[a] = h.pixdim[d + 1];
    }
    // Origin: world position of the memory-order first voxel.
    double corner[3];
    for (int d = 0; d < 3; ++d) {
        const int a = world_of[d];
        corner[d] = header.flipped[a] ? static_cast<double>(disk_dims[d] - 1) : 0.0;
    }
    for (int i = 0; i < 3; ++i)
        grid.origin[i] = affine[i][0] * corner[0] + affine[i][1] * corner[1] +
                         affine[i][2] * corner[2] + affine[i][3];

    const bool has_scaling =
        h.scl_slope != 0.0f && (h.scl_slope != 1.0f || h.scl_inter != 0.0f);
    const bool integer_type = h.datatype == nifti::DT_UINT8 || h.datatype == nifti::DT_INT16 ||
                              h.datatype == nifti::DT_INT32 || h.datatype == nifti::DT_UINT16;

    LoadedVolume loaded;
    loaded.header = header;

    auto finish_scalar = [&](auto typed_disk) {
        ScalarVolume vol(grid);
        detail::reorder_to_memory(typed_disk, vol.data, disk_dims, header.mem_to_disk,
                                  header.flipped, grid.dims);
        if (has_scaling)
            for (auto& v : vol.data)
                v = v * h.scl_slope + h.scl_inter;
        loaded.data = std::move(vol);
    };
    auto finish_labels = [&](auto typed_disk) {
        LabelVolume vol(grid);
        detail::reorder_to_memory(typed_disk, vol.data, disk_dims, header.mem_to_disk,
                                  header.flipped, grid.dims);
        loaded.data = std::move(vol);
    };
    auto typed = [&](auto tag) {
        using T = decltype(tag);
        std::vector<T> disk(count);
        std::memcpy(disk.data(), raw.data(), raw.size());
        return disk;
    };

    switch (h.datatype) {
        case nifti::DT_UINT8:
            if (integer_type && !has_scaling) finish_labels(typed(std::uint8_t{}));
            else finish_scalar(typed(std::uint8_t{}));
            break;
        case nifti::DT_INT16:
            if (!has_scaling) finish_labels(typed(std::int16_t{}));
            else finish_scalar(typed(std::int16_t{}));
            break;
        case nifti::DT_UINT16:
            if (!has_scaling) finish_labels(typed(std::uint16_t{}));
            else finish_scalar(typed(std::uint16_t{}));
            break;
        case nifti::DT_INT32:
            if (!has_scaling) finish_labels(typed(std::int32_t{}));
            else finish_scalar(typed(std::int32_t{}));
            break;
        case nifti::DT_FLOAT32:
            finish_scalar(typed(float{}));
            break;
        case nifti::DT_FLOAT64:
            finish_scalar(typed(double{}));
            break;
        default:
            throw format_error(path + ": unsupported datatype");
    }
    return loaded;
}

namespace detail {

inline nifti::Header1 make_header(const Grid3& grid, short datatype, const VolumeHeader* orig) {
    nifti::Header1 h{};
    std::memset(&h, 0, sizeof h); // all unused fields zero, for stable bytes
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.datatype = datatype;
    h.bitpix = static_cast<std::int16_t>(nifti::bitpix_of(datatype));
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2; // millimetres
    std::memcpy(h.magic, "n+1", 4);

    if (orig) {
        // Replay the source geometry verbatim, including any obliquity the
        // in-memory grid cannot represent.
        for (int d = 0; d < 3; ++d) {
            h.dim[d + 1] = static_cast<std::int16_t>(orig->disk_dims[d]);
            h.pixdim[d + 1] = orig->disk_pixdim[d];
        }
        h.pixdim[0] = orig->qfac;
        h.qform_code = orig->qform_code;
        h.sform_code = orig->sform_code;
        h.quatern_b = orig->quatern[0];
        h.quatern_c = orig->quatern[1];
        h.quatern_d = orig->quatern[2];
        h.qoffset_x = orig->qoffset[0];
        h.qoffset_y = orig->qoffset[1];
        h.qoffset_z = orig->qoffset[2];
        for (int c = 0; c < 4; ++c) {
            h.srow_x[c] = orig->srow[0][c];
            h.srow_y[c] = orig->srow[1][c];
            h.srow_z[c] = orig->srow[2][c];
        }
        return h;
    }

    for (int d = 0; d < 3; ++d) {
        h.dim[d + 1] = static_cast<std::int16_t>(grid.dims[d]);
        h.pixdim[d + 1] = static_cast<float>(grid.spacing[d]);
    }
    h.pixdim[0] = 1.0f;
    h.qform_code = 1;
    h.sform_code = 1;
    h.qoffset_x = static_cast<float>(grid.origin.x);
    h.qoffset_y = static_cast<float>(grid.origin.y);
    h.qoffset_z = static_cast<float>(grid.origin.z);
    h.srow_x[0] = static_cast<float>(grid.spacing.x);
    h.srow_y[1] = static_cast<float>(grid.spacing.y);
    h.srow_z[2] = static_cast<float>(grid.spacing.z);
    h.srow_x[3] = static_cast<float>(grid.origin.x);
    h.srow_y[3] = static_cast<float>(grid.origin.y);
    h.srow_z[3] = static_cast<float>(grid.origin.z);
    return h;
}

inline void write_bytes(const std::string& path, const nifti::Header1& h,
                        const void* payload, std::size_t payload_bytes) {
    const char extension[4] = {0, 0, 0, 0};
    if (has_gz_suffix(path)) {
        // zlib writes a zero mtime into the gzip header, so bytes are
        // reproducible run to run.
        gzFile f = gzopen(path.c_str(), "wb6");
        if (!f)
            throw io_error("cannot open '" + path + "' for writing");
        bool ok = gzwrite(f, &h, sizeof h) == static_cast<int>(sizeof h) &&
                  gzwrite(f, extension, 4) == 4;
        std::size_t written = 0;
        const auto* bytes = static_cast<const char*>(payload);
        while (ok && written < payload_bytes) {
            const unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(payload_bytes - written, 1u << 30));
            ok = gzwrite(f, bytes + written, chunk) == static_cast<int>(chunk);
            written += chunk;
        }
        if (gzclose(f) != Z_OK || !ok)
            throw io_error("write failed for '" + path + "'");
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw io_error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(extension, 4);
    out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
    if (!out)
        throw io_error("write failed for '" + path + "'");
}

template <class Mem, class Disk>
void write_typed(const Volume<Mem>& vol, const std::string& path, short datatype,
                 const VolumeHeader* orig) {
    const nifti::Header1 h = make_header(vol.grid, datatype, orig);
    if (orig && !orig->identity_layout()) {
        std::array<std::size_t, 3> expected{};
        for (int a = 0; a < 3; ++a)
            expected[a] = orig->disk_dims[orig->mem_to_disk[a]];
        if (expected != vol.grid.dims)
            throw invalid_parameter("volume dims do not match the original header layout");
        const std::vector<Disk> disk = reorder_to_disk<Mem, Disk>(
            vol.data, orig->disk_dims, orig->mem_to_disk, orig->flipped, vol.grid.dims);
        write_bytes(path, h, disk.data(), disk.size() * sizeof(Disk));
        return;
    }
    if constexpr (std::is_same_v<Mem, Disk>) {
        write_bytes(path, h, vol.data.data(), vol.data.size() * sizeof(Disk));
    } else {
        std::vector<Disk> disk(vol.data.size());
        for (std::size_t i = 0; i < disk.size(); ++i)
            disk[i] = static_cast<Disk>(vol.data[i]);
        write_bytes(path, h, disk.data(), disk.size() * sizeof(Disk));
    }
}

} // namespace detail

/// Write a float volume as 32-bit float with no rescale.
inline void write_volume(const ScalarVolume& vol, const std::string& path,
                         const VolumeHeader* orig = nullptr) {
    detail::write_typed<float, float>(vol, path, nifti::DT_FLOAT32, orig);
}

/// Write a mask as 8-bit unsigned.
inline void write_volume(const BinaryMask& vol, const std::string& path,
                         const VolumeHeader* orig = nullptr) {
    detail::write_typed<std::uint8_t, std::uint8_t>(vol, path, nifti::DT_UINT8, orig);
}

/// Write labels, preserving an integer source datatype when a header is
/// supplied (values are range-checked), otherwise as 32-bit signed.
inline void write_volume(const LabelVolume& vol, const std::string& path,
                         const VolumeHeader* orig = nullptr) {
    short dt = nifti::DT_INT32;
    if (orig && (orig->datatype == nifti::DT_UINT8 || orig->datatype == nifti::DT_INT16 ||
                 orig->datatype == nifti::DT_UINT16 || orig->datatype == nifti::DT_INT32))
        dt = orig->datatype;
    auto check_range = [&](std::int64_t lo, std::int64_t hi) {
        for (auto v : vol.data)
            if (v < lo || v > hi)
                throw invalid_parameter("label value out of range for the original datatype");
    };
    switch (dt) {
        case nifti::DT_UINT8:
            check_range(0, 255);
            detail::write_typed<std::int32_t, std::uint8_t>(vol, path, dt, orig);
            break;
        case nifti::DT_INT16:
            check_range(-32768, 32767);
            detail::write_typed<std::int32_t, std::int16_t>(vol, path, dt, orig);
            break;
        case nifti::DT_UINT16:
            check_range(0, 65535);
            detail::write_typed<std::int32_t, std::uint16_t>(vol, path, dt, orig);
            break;
        default:
            detail::write_typed<std::int32_t, std::int32_t>(vol, path, nifti::DT_INT32, orig);
            break;
    }
}

/// CRC-32 of a volume's raw value buffer; recorded in metadata sidecars so
/// outputs can be traced back to exact inputs.
template <class T>
std::uint32_t content_checksum(const Volume<T>& vol) {
    const auto* bytes = reinterpret_cast<const Bytef*>(vol.data.data());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t left = vol.data.size() * sizeof(T);
    std::size_t off = 0;
    while (left > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = crc32(crc, bytes + off, chunk);
        off += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

/// Atomic file replacement: write to a sibling temp path, then rename.
template <class WriteFn>
void atomic_write(const std::string& path, WriteFn&& write_fn) {
    const std::string tmp = path + ".tmp";
    write_fn(tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw io_error("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

} // namespace cavisim
