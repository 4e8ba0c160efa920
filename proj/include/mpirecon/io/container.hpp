#pragma once

// Portable container files.
//
//   "MPIR1\n"
//   key=value lines (kind, dtype, dims first, then metadata sorted by key)
//   empty line
//   payload: little-endian f64 values, row-major; c64 is interleaved (re, im)
//
// Array-valued metadata (row_freq_hz, row_snr) is stored as base64 of
// little-endian f64 blocks. Scalars use the shortest round-trip decimal form.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Core>

#include "mpirecon/error.hpp"
#include "mpirecon/grid.hpp"
#include "mpirecon/system_matrix.hpp"

namespace mpirecon::io {

inline constexpr std::string_view container_magic = "MPIR1\n";

struct ContainerFile {
    std::string kind;  ///< matrix | image | vector | report
    std::string dtype; ///< f64 | c64
    std::vector<std::size_t> dims;
    std::map<std::string, std::string> meta;
    std::vector<unsigned char> payload;

    std::size_t value_width() const { return dtype == "c64" ? 2 : 1; }

    std::size_t element_count() const {
        std::size_t n = dims.empty() ? 0 : 1;
        for (auto d : dims)
            n *= d;
        return n;
    }
};

// --- scalar and byte helpers -------------------------------------------------

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        // from_chars rejects "inf"/"nan" spellings produced by other tools
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw io_error("not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::size_t> parse_dims(std::string_view s) {
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = s.find(',', pos);
        const std::string_view tok = s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos);
        std::size_t v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw io_error("bad dimension list '" + std::string(s) + "'");
        dims.push_back(v);
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return dims;
}

inline std::string format_dims(const std::vector<std::size_t>& dims) {
    return GridShape(dims).to_string();
}

inline void append_f64_le(std::vector<unsigned char>& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffu));
}

inline double read_f64_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= std::uint64_t(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

inline std::string base64_encode(const std::vector<unsigned char>& data) {
    static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < data.size(); i += 3) {
        const std::uint32_t v = (std::uint32_t(data[i]) << 16) | (std::uint32_t(data[i + 1]) << 8) | data[i + 2];
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += table[v & 63];
    }
    if (i + 1 == data.size()) {
        const std::uint32_t v = std::uint32_t(data[i]) << 16;
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == data.size()) {
        const std::uint32_t v = (std::uint32_t(data[i]) << 16) | (std::uint32_t(data[i + 1]) << 8);
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<unsigned char> base64_decode(std::string_view s) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (s.size() % 4 != 0)
        throw io_error("base64 block has a length that is not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = s[i + std::size_t(k)];
            if (c == '=' && i + 4 == s.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else {
                v[k] = value(c);
                if (v[k] < 0 || pad)
                    throw io_error("invalid base64 data");
            }
        }
        const std::uint32_t w = (std::uint32_t(v[0]) << 18) | (std::uint32_t(v[1]) << 12) |
                                (std::uint32_t(v[2]) << 6) | std::uint32_t(v[3]);
        out.push_back(static_cast<unsigned char>((w >> 16) & 0xff));
        if (pad < 2)
            out.push_back(static_cast<unsigned char>((w >> 8) & 0xff));
        if (pad < 1)
            out.push_back(static_cast<unsigned char>(w & 0xff));
    }
    return out;
}

inline std::string encode_f64_block(const Eigen::VectorXd& v) {
    std::vector<unsigned char> bytes;
    bytes.reserve(std::size_t(v.size()) * 8);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        append_f64_le(bytes, v[i]);
    return base64_encode(bytes);
}

inline Eigen::VectorXd decode_f64_block(std::string_view s) {
    const auto bytes = base64_decode(s);
    if (bytes.size() % 8 != 0)
        throw io_error("f64 metadata block is not a whole number of values");
    Eigen::VectorXd v(static_cast<Eigen::Index>(bytes.size() / 8));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = read_f64_le(bytes.data() + 8 * i);
    return v;
}

// --- raw container I/O --------------------------------------------------------

inline void write_container(std::ostream& os, const ContainerFile& f) {
    if (f.dtype != "f64" && f.dtype != "c64")
        throw io_error("container dtype must be f64 or c64, got '" + f.dtype + "'");
    if (f.payload.size() != 8 * f.value_width() * f.element_count())
        throw io_error("container payload size does not match its dims");
    os << container_magic;
    os << "kind=" << f.kind << '\n' << "dtype=" << f.dtype << '\n' << "dims=" << format_dims(f.dims) << '\n';
    for (const auto& [k, v] : f.meta) {
        if (k == "kind" || k == "dtype" || k == "dims" || k.find('=') != std::string::npos ||
            k.find('\n') != std::string::npos || v.find('\n') != std::string::npos || k.empty())
            throw io_error("invalid container metadata key '" + k + "'");
        os << k << '=' << v << '\n';
    }
    os << '\n';
    os.write(reinterpret_cast<const char*>(f.payload.data()), std::streamsize(f.payload.size()));
    if (!os)
        throw io_error("failed writing container");
}

inline ContainerFile read_container(std::istream& is) {
    std::string magic(container_magic.size(), '\0');
    is.read(magic.data(), std::streamsize(magic.size()));
    if (!is || magic != container_magic)
        throw io_error("not a container file (bad magic)");
    ContainerFile f;
    bool have_kind = false, have_dtype = false, have_dims = false;
    std::string line;
    while (true) {
        if (!std::getline(is, line))
            throw io_error("container header is not terminated by a blank line");
        if (line.empty())
            break;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw io_error("malformed container header line '" + line + "'");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        auto once = [&](bool& seen) {
            if (seen)
                throw io_error("duplicate container header key '" + key + "'");
            seen = true;
        };
        if (key == "kind") {
            once(have_kind);
            f.kind = value;
        } else if (key == "dtype") {
            once(have_dtype);
            f.dtype = value;
        } else if (key == "dims") {
            once(have_dims);
            f.dims = parse_dims(value);
        } else if (!f.meta.emplace(key, value).second) {
            throw io_error("duplicate container header key '" + key + "'");
        }
    }
    if (!have_kind || !have_dtype || !have_dims)
        throw io_error("container header lacks kind, dtype or dims");
    if (f.dtype != "f64" && f.dtype != "c64")
        throw io_error("unsupported container dtype '" + f.dtype + "'");
    const std::size_t expect = 8 * f.value_width() * f.element_count();
    f.payload.resize(expect);
    is.read(reinterpret_cast<char*>(f.payload.data()), std::streamsize(expect));
    if (std::size_t(is.gcount()) != expect)
        throw io_error("container payload is truncated");
    if (is.peek() != std::char_traits<char>::eof())
        throw io_error("container has trailing bytes after the payload");
    return f;
}

inline void save_container(const std::string& path, const ContainerFile& f) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw io_error("cannot open '" + path + "' for writing");
    write_container(os, f);
    os.close();
    if (!os)
        throw io_error("failed closing '" + path + "'");
}

inline ContainerFile load_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw io_error("cannot open '" + path + "'");
    return read_container(is);
}

// --- typed conversions ---------------------------------------------------------

inline void expect_kind(const ContainerFile& f, std::string_view kind) {
    if (f.kind != kind)
        throw io_error("expected a " + std::string(kind) + " container, got '" + f.kind + "'");
}

inline std::vector<unsigned char> pack_real(const Eigen::VectorXd& v) {
    std::vector<unsigned char> out;
    out.reserve(std::size_t(v.size()) * 8);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        append_f64_le(out, v[i]);
    return out;
}

template <class Derived>
std::vector<unsigned char> pack_complex(const Eigen::DenseBase<Derived>& v) {
    std::vector<unsigned char> out;
    out.reserve(std::size_t(v.size()) * 16);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            append_f64_le(out, v(i, j).real());
            append_f64_le(out, v(i, j).imag());
        }
    return out;
}

inline Eigen::VectorXd unpack_real(const ContainerFile& f) {
    if (f.dtype != "f64")
        throw io_error("expected real (f64) payload");
    Eigen::VectorXd v(static_cast<Eigen::Index>(f.element_count()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = read_f64_le(f.payload.data() + 8 * i);
    return v;
}

inline Eigen::VectorXcd unpack_complex(const ContainerFile& f) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(f.element_count()));
    if (f.dtype == "f64") {
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v[i] = read_f64_le(f.payload.data() + 8 * i);
        return v;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = cplx(read_f64_le(f.payload.data() + 16 * i), read_f64_le(f.payload.data() + 16 * i + 8));
    return v;
}

inline ContainerFile image_to_container(const ImageGrid& img) {
    ContainerFile f;
    f.kind = "image";
    f.dtype = "f64";
    f.dims = img.shape.dims;
    f.payload = pack_real(img.values);
    return f;
}

inline ImageGrid image_from_container(const ContainerFile& f) {
    expect_kind(f, "image");
    return ImageGrid(GridShape(f.dims), unpack_real(f));
}

inline ContainerFile vector_to_container(const Eigen::VectorXcd& v) {
    ContainerFile f;
    f.kind = "vector";
    f.dtype = "c64";
    f.dims = {std::size_t(v.size())};
    f.payload = pack_complex(v);
    return f;
}

inline Eigen::VectorXcd vector_from_container(const ContainerFile& f) {
    expect_kind(f, "vector");
    if (f.dims.size() != 1)
        throw io_error("vector container must be one-dimensional");
    return unpack_complex(f);
}

inline ContainerFile matrix_to_container(const SystemMatrix& A) {
    ContainerFile f;
    f.kind = "matrix";
    f.dtype = "c64";
    f.dims = {std::size_t(A.rows()), std::size_t(A.cols())};
    f.meta["grid"] = A.grid.to_string();
    if (A.has_freq())
        f.meta["row_freq_hz"] = encode_f64_block(A.row_freq_hz);
    if (A.has_snr())
        f.meta["row_snr"] = encode_f64_block(A.row_snr);
    if (A.opnorm)
        f.meta["opnorm"] = format_double(*A.opnorm);
    f.payload = pack_complex(A.entries);
    return f;
}

inline SystemMatrix matrix_from_container(const ContainerFile& f) {
    expect_kind(f, "matrix");
    if (f.dims.size() != 2)
        throw io_error("matrix container must have two dims");
    const Eigen::Index m = Eigen::Index(f.dims[0]), n = Eigen::Index(f.dims[1]);
    GridShape grid({std::size_t(n)});
    if (auto it = f.meta.find("grid"); it != f.meta.end())
        grid = GridShape(parse_dims(it->second));
    const Eigen::VectorXcd flat = unpack_complex(f);
    RowMajorMatrixXcd a = Eigen::Map<const RowMajorMatrixXcd>(flat.data(), m, n);
    SystemMatrix A(std::move(a), std::move(grid));
    if (auto it = f.meta.find("row_freq_hz"); it != f.meta.end())
        A.row_freq_hz = decode_f64_block(it->second);
    if (auto it = f.meta.find("row_snr"); it != f.meta.end())
        A.row_snr = decode_f64_block(it->second);
    if (auto it = f.meta.find("opnorm"); it != f.meta.end())
        A.opnorm = parse_double(it->second);
    A.validate();
    return A;
}

/// 64-bit FNV-1a of a file, for manifests.
inline std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw io_error("cannot open '" + path + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (is.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace mpirecon::io
