#include "activestereo/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace activestereo {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class PgmReader {
public:
    explicit PgmReader(std::string_view bytes) : bytes_(bytes) {}

    // Skips whitespace and '#' comments that run to the end of the line.
    void skip_separators() {
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    long number(const char* what) {
        skip_separators();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') ++pos_;
        if (start == pos_) throw ParseError(std::string("PGM: expected ") + what);
        if (pos_ - start > 9) throw ParseError(std::string("PGM: ") + what + " too large");
        long v = 0;
        std::from_chars(bytes_.data() + start, bytes_.data() + pos_, v);
        if (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#')
            throw ParseError(std::string("PGM: malformed ") + what);
        return v;
    }

    std::size_t pos_ = 0;
    std::string_view bytes_;
};

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

GrayImage parse_pgm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2'))
        throw ParseError("PGM: unsupported magic (expected P5 or P2)");
    const bool binary = bytes[1] == '5';
    PgmReader in(bytes.substr(2));
    if (!in.bytes_.empty() && !is_space(in.bytes_[0]) && in.bytes_[0] != '#')
        throw ParseError("PGM: malformed magic");
    const long width = in.number("width");
    const long height = in.number("height");
    const long maxval = in.number("maxval");
    if (width < 1 || height < 1) throw ParseError("PGM: empty image");
    if (maxval < 1 || maxval > 65535) throw ParseError("PGM: maxval must be in [1, 65535]");

    GrayImage img(static_cast<int>(width), static_cast<int>(height), static_cast<int>(maxval));
    const std::size_t count = img.samples.size();
    if (binary) {
        // exactly one whitespace byte separates the header from the raster
        if (in.pos_ >= in.bytes_.size() || !is_space(in.bytes_[in.pos_]))
            throw ParseError("PGM: missing raster separator");
        ++in.pos_;
        const std::size_t bps = maxval > 255 ? 2 : 1;
        const std::size_t need = count * bps;
        if (in.bytes_.size() - in.pos_ < need)
            throw ParseError("PGM: truncated raster, expected " + std::to_string(need) +
                             " bytes, found " + std::to_string(in.bytes_.size() - in.pos_));
        const auto* p = reinterpret_cast<const unsigned char*>(in.bytes_.data() + in.pos_);
        for (std::size_t k = 0; k < count; ++k) {
            const unsigned v = bps == 2 ? (static_cast<unsigned>(p[2 * k]) << 8) | p[2 * k + 1] : p[k];
            if (v > static_cast<unsigned>(maxval)) throw ParseError("PGM: sample exceeds maxval");
            img.samples[k] = static_cast<std::uint16_t>(v);
        }
        in.pos_ += need;
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            const long v = in.number("sample");
            if (v > maxval) throw ParseError("PGM: sample exceeds maxval");
            img.samples[k] = static_cast<std::uint16_t>(v);
        }
    }
    in.skip_separators();
    if (in.pos_ != in.bytes_.size()) throw ParseError("PGM: trailing data after raster");
    return img;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("write failed for " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
    try {
        return parse_pgm(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string encode_pgm(const GrayImage& image) {
    if (image.width < 1 || image.height < 1) throw Error("cannot encode an empty image");
    std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                      "\n" + std::to_string(image.maxval) + "\n";
    const bool wide = image.maxval > 255;
    out.reserve(out.size() + image.samples.size() * (wide ? 2 : 1));
    for (std::uint16_t s : image.samples) {
        if (wide) out.push_back(static_cast<char>(s >> 8));
        out.push_back(static_cast<char>(s & 0xff));
    }
    return out;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
    write_file(path, encode_pgm(image));
}

GroundTruth ground_truth_from_image(const GrayImage& image, double divisor, int sentinel) {
    if (!(divisor >= 1.0)) throw std::invalid_argument("ground-truth divisor must be >= 1");
    std::vector<int> disp(image.samples.size());
    for (std::size_t k = 0; k < disp.size(); ++k) {
        const int s = image.samples[k];
        disp[k] = s == sentinel ? GroundTruth::kOccluded
                                : static_cast<int>(std::lround(s / divisor));
    }
    return GroundTruth(image.width, image.height, std::move(disp));
}

GroundTruth read_gt(const std::filesystem::path& path, double divisor, int sentinel) {
    return ground_truth_from_image(read_pgm(path), divisor, sentinel);
}

GrayImage render_disparity(const DisparityMap& map, int levels) {
    if (map.width < 1 || map.height < 1) throw Error("empty disparity map");
    GrayImage img(map.width, map.height);
    for (std::size_t k = 0; k < map.disparity.size(); ++k) {
        if (map.occluded[k]) continue;
        img.samples[k] = levels <= 1 ? 255
                                     : static_cast<std::uint16_t>(std::lround(
                                           map.disparity[k] * 255.0 / (levels - 1)));
    }
    return img;
}

GrayImage render_entropy(const EntropyMap& map) {
    if (map.width < 1 || map.height < 1) throw Error("empty entropy map");
    GrayImage img(map.width, map.height);
    const double top = *std::max_element(map.nats.begin(), map.nats.end());
    if (top <= 0.0) return img;
    for (std::size_t k = 0; k < map.nats.size(); ++k)
        img.samples[k] =
            static_cast<std::uint16_t>(std::lround(std::max(0.0, map.nats[k]) / top * 255.0));
    return img;
}

void write_map_pgm(const DisparityMap& map, int levels, const std::filesystem::path& path) {
    write_pgm(render_disparity(map, levels), path);
}

void write_map_pgm(const EntropyMap& map, const std::filesystem::path& path) {
    write_pgm(render_entropy(map), path);
}

std::string format_metrics_csv(const RunMetrics& metrics) {
    std::string out(kMetricsHeader);
    out += '\n';
    for (const auto& r : metrics) {
        out += std::to_string(r.aim);
        out += ',';
        if (r.column) out += std::to_string(*r.column);
        out += ',';
        out += shortest(r.total_entropy);
        out += ',';
        if (r.pixel_errors) out += std::to_string(*r.pixel_errors);
        out += '\n';
    }
    return out;
}

void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path) {
    write_file(path, format_metrics_csv(metrics));
}

RunMetrics parse_metrics_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) throw ParseError("metrics CSV: bad header");
    RunMetrics out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            f.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (f.size() != 4) throw ParseError("metrics CSV: expected 4 fields in '" + line + "'");
        AimRecord r;
        try {
            r.aim = std::stoi(f[0]);
            if (!f[1].empty()) r.column = std::stoi(f[1]);
            r.total_entropy = std::stod(f[2]);
            if (!f[3].empty()) r.pixel_errors = std::stol(f[3]);
        } catch (const std::logic_error&) {
            throw ParseError("metrics CSV: malformed number in '" + line + "'");
        }
        out.push_back(r);
    }
    return out;
}

RunMetrics read_metrics_csv(const std::filesystem::path& path) {
    return parse_metrics_csv(read_file(path));
}

std::string format_conflict_log(const std::vector<ConflictEvent>& events) {
    std::string out(kConflictHeader);
    out += '\n';
    for (const auto& e : events) {
        out += std::to_string(e.row) + "," + std::to_string(e.aim) + "," +
               std::to_string(e.existing.column) + "," + std::to_string(e.existing.disparity) +
               "," + std::to_string(e.rejected.column) + "," +
               std::to_string(e.rejected.disparity) + "\n";
    }
    return out;
}

void write_conflict_log(const std::vector<ConflictEvent>& events,
                        const std::filesystem::path& path) {
    write_file(path, format_conflict_log(events));
}

}  // namespace activestereo
