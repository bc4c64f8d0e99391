#include "mgtc/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mgtc {

namespace {

constexpr char kTensorMagic[4] = {'M', 'G', 'T', '1'};
constexpr char kMaskMagic[4] = {'M', 'G', 'M', '1'};
constexpr int kMaxOrder = 16;

void append_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void append_f64(std::vector<unsigned char>& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xff));
    }
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double read_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) {
        bits = (bits << 8) | p[b];
    }
    return std::bit_cast<double>(bits);
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("io: cannot open '" + path + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("io: short write to '" + path + "'");
    }
}

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("io: cannot open '" + path + "' for reading");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void append_header(std::vector<unsigned char>& out, const char magic[4], const Dims& dims) {
    if (dims.empty() || dims.size() > kMaxOrder) {
        throw std::invalid_argument("io: order must be in [1, " + std::to_string(kMaxOrder) + "]");
    }
    out.insert(out.end(), magic, magic + 4);
    out.push_back(static_cast<unsigned char>(dims.size()));
    for (std::int64_t d : dims) {
        if (d < 1 || d > std::numeric_limits<std::uint32_t>::max()) {
            throw std::invalid_argument("io: dimension " + std::to_string(d) + " out of range");
        }
        append_u32(out, static_cast<std::uint32_t>(d));
    }
}

// Validates magic and dims, returns (dims, payload offset).
std::pair<Dims, std::size_t> parse_header(const std::string& path, const std::vector<unsigned char>& bytes,
                                          const char magic[4], const char* magic_name) {
    if (bytes.size() < 5 || std::memcmp(bytes.data(), magic, 4) != 0) {
        throw std::runtime_error("io: '" + path + "': bad magic, expected " + magic_name);
    }
    const int order = bytes[4];
    if (order < 1 || order > kMaxOrder) {
        throw std::runtime_error("io: '" + path + "': order " + std::to_string(order) + " out of range");
    }
    const std::size_t header = 5 + 4 * static_cast<std::size_t>(order);
    if (bytes.size() < header) {
        throw std::runtime_error("io: '" + path + "': truncated header: expected " + std::to_string(header) +
                                 " bytes, got " + std::to_string(bytes.size()));
    }
    Dims dims(static_cast<std::size_t>(order));
    for (int k = 0; k < order; ++k) {
        dims[static_cast<std::size_t>(k)] = read_u32(bytes.data() + 5 + 4 * static_cast<std::size_t>(k));
        if (dims[static_cast<std::size_t>(k)] < 1) {
            throw std::runtime_error("io: '" + path + "': zero dimension in header");
        }
    }
    return {dims, header};
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) {
        return "";
    }
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void save_tensor(const std::string& path, const DenseTensor& t) {
    std::vector<unsigned char> bytes;
    bytes.reserve(5 + 4 * t.dims().size() + 8 * t.values().size());
    append_header(bytes, kTensorMagic, t.dims());
    for (double v : t.values()) {
        append_f64(bytes, v);
    }
    write_file(path, bytes);
}

DenseTensor load_tensor(const std::string& path) {
    const auto bytes = read_file(path);
    auto [dims, offset] = parse_header(path, bytes, kTensorMagic, "MGT1");
    const std::int64_t count = element_count(dims);
    const std::size_t expected = offset + 8 * static_cast<std::size_t>(count);
    if (bytes.size() != expected) {
        throw std::runtime_error("io: '" + path + "': payload size mismatch: expected " +
                                 std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
    }
    DenseTensor t = DenseTensor::zeros(dims);
    for (std::int64_t i = 0; i < count; ++i) {
        t.values()[static_cast<std::size_t>(i)] = read_f64(bytes.data() + offset + 8 * static_cast<std::size_t>(i));
    }
    return t;
}

void save_mask(const std::string& path, const ObservationMask& m) {
    std::vector<unsigned char> bytes;
    bytes.reserve(5 + 4 * m.dims().size() + m.bytes().size());
    append_header(bytes, kMaskMagic, m.dims());
    bytes.insert(bytes.end(), m.bytes().begin(), m.bytes().end());
    write_file(path, bytes);
}

ObservationMask load_mask(const std::string& path) {
    const auto bytes = read_file(path);
    auto [dims, offset] = parse_header(path, bytes, kMaskMagic, "MGM1");
    const std::int64_t count = element_count(dims);
    const std::size_t expected = offset + static_cast<std::size_t>(count);
    if (bytes.size() != expected) {
        throw std::runtime_error("io: '" + path + "': payload size mismatch: expected " +
                                 std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
    }
    std::vector<std::uint8_t> observed(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        const unsigned char b = bytes[offset + static_cast<std::size_t>(i)];
        if (b > 1) {
            throw std::runtime_error("io: '" + path + "': mask byte at entry " + std::to_string(i) +
                                     " is " + std::to_string(int(b)) + ", expected 0 or 1");
        }
        observed[static_cast<std::size_t>(i)] = b;
    }
    return ObservationMask::from_bytes(dims, std::move(observed));
}

void export_band(const std::string& path, const DenseTensor& t, std::int64_t band) {
    if (t.dims().size() != 3) {
        throw std::invalid_argument("export_band: expected an order-3 tensor");
    }
    if (band < 0 || band >= t.dim(2)) {
        throw std::out_of_range("export_band: band " + std::to_string(band) + " out of range [0, " +
                                std::to_string(t.dim(2)) + ")");
    }
    require_finite(t, "export_band");
    const double lo = *std::min_element(t.values().begin(), t.values().end());
    const double hi = *std::max_element(t.values().begin(), t.values().end());
    const double span = hi > lo ? hi - lo : 1.0;

    const std::int64_t rows = t.dim(0);
    const std::int64_t cols = t.dim(1);
    std::ostringstream header;
    header << "P5\n" << cols << " " << rows << "\n255\n";
    const std::string h = header.str();
    std::vector<unsigned char> bytes(h.begin(), h.end());
    bytes.reserve(bytes.size() + static_cast<std::size_t>(rows * cols));
    const std::int64_t plane = rows * cols;
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) {
            const double v = t.values()[static_cast<std::size_t>(r + c * rows + band * plane)];
            const double scaled = std::round((v - lo) / span * 255.0);
            bytes.push_back(static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0)));
        }
    }
    write_file(path, bytes);
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("io: cannot open '" + path + "' for reading");
    }
    PipelineConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config '" + path + "' line " + std::to_string(line_no) +
                                     ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            config.set_key_value(key, value);
        } catch (const std::exception& e) {
            throw std::runtime_error("config '" + path + "' line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

void save_config(const std::string& path, const PipelineConfig& config) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("io: cannot open '" + path + "' for writing");
    }
    for (const auto& [key, value] : config.to_key_values()) {
        out << key << " = " << value << "\n";
    }
    if (!out) {
        throw std::runtime_error("io: short write to '" + path + "'");
    }
}

}  // namespace mgtc
