#include "inpaint/masks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace inpaint {

namespace {

constexpr int kMinDim = 16;
constexpr int kMaxAttempts = 16;

void check_dims(int h, int w) {
    if (h < kMinDim || w < kMinDim)
        throw dim_error("mask dimensions must be >= " + std::to_string(kMinDim) + ", got " +
                        std::to_string(h) + "x" + std::to_string(w));
}

void stamp_disc(Mask& m, double cy, double cx, double r) {
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(m.height - 1, static_cast<int>(std::ceil(cy + r)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(m.width - 1, static_cast<int>(std::ceil(cx + r)));
    const double r2 = r * r;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dy = y - cy, dx = x - cx;
            if (dy * dy + dx * dx <= r2) m.at(y, x) = 1;
        }
    // sub-pixel brushes still mark the nearest pixel
    const int py = std::clamp(static_cast<int>(std::lround(cy)), 0, m.height - 1);
    const int px = std::clamp(static_cast<int>(std::lround(cx)), 0, m.width - 1);
    m.at(py, px) = 1;
}

void stamp_segment(Mask& m, double y0, double x0, double y1, double x1, double r) {
    const double len = std::hypot(y1 - y0, x1 - x0);
    const double spacing = std::max(0.4, r * 0.5);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        stamp_disc(m, y0 + t * (y1 - y0), x0 + t * (x1 - x0), r);
    }
}

// Random polyline by a bounded-heading walk, rasterized with a disc brush.
void draw_polyline(Mask& m, Rng& rng, int n_vertices, double step_lo, double step_hi, double radius) {
    const double smin = std::min(m.height, m.width);
    double y = rng.uniform(0.0, m.height - 1.0);
    double x = rng.uniform(0.0, m.width - 1.0);
    double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int v = 1; v < n_vertices; ++v) {
        heading += rng.uniform(-0.9, 0.9);
        const double len = rng.uniform(step_lo, step_hi) * smin;
        double ny = std::clamp(y + len * std::sin(heading), 0.0, m.height - 1.0);
        double nx = std::clamp(x + len * std::cos(heading), 0.0, m.width - 1.0);
        stamp_segment(m, y, x, ny, nx, radius);
        y = ny;
        x = nx;
    }
}

Mask strokes(int h, int w, double r_lo, double r_hi, Rng& rng) {
    Mask m(h, w);
    const double unit = std::min(h, w) / 256.0;
    const int k = static_cast<int>(rng.uniform_int(1, 6));
    for (int s = 0; s < k; ++s) {
        const int nv = static_cast<int>(rng.uniform_int(4, 12));
        const double radius = rng.uniform(r_lo, r_hi) * unit;
        draw_polyline(m, rng, nv, 0.08, 0.28, radius);
    }
    return m;
}

Mask lama_polygonal(int h, int w, Rng& rng) {
    Mask m(h, w);
    const double unit = std::min(h, w) / 256.0;
    const double width = rng.uniform(10.0, 50.0) * unit;
    const int nv = static_cast<int>(rng.uniform_int(4, 12));
    draw_polyline(m, rng, nv, 0.10, 0.30, width / 2.0);
    return m;
}

Mask lama_rectangles(int h, int w, Rng& rng) {
    Mask m(h, w);
    const int k = static_cast<int>(rng.uniform_int(1, 3));
    for (int i = 0; i < k; ++i) {
        const int rh = std::max(1, static_cast<int>(std::lround(rng.uniform(0.1, 0.5) * h)));
        const int rw = std::max(1, static_cast<int>(std::lround(rng.uniform(0.1, 0.5) * w)));
        const int y0 = static_cast<int>(rng.uniform_int(0, std::max(0, h - rh)));
        const int x0 = static_cast<int>(rng.uniform_int(0, std::max(0, w - rw)));
        for (int y = y0; y < std::min(h, y0 + rh); ++y)
            for (int x = x0; x < std::min(w, x0 + rw); ++x) m.at(y, x) = 1;
    }
    return m;
}

Mask draw_once(MaskType type, int h, int w, Rng rng) {
    switch (type) {
        case MaskType::Completion:
            return completion_band(h, w, static_cast<int>(rng.uniform_int(4)), rng.uniform(0.4, 0.6));
        case MaskType::Expand:
            return expand_keep_rect(h, w, rng.uniform(0.25, 0.5), rng.uniform(0.75, 1.33));
        case MaskType::EveryNLines: {
            const int choices[3] = {2, 4, 8};
            const int n = choices[rng.uniform_int(3)];
            const int t = static_cast<int>(rng.uniform_int(1, n - 1));
            const int off = static_cast<int>(rng.uniform_int(0, n - 1));
            const bool rows = rng.coin();
            return every_n_lines(h, w, rows, n, t, off);
        }
        case MaskType::NearestNeighbor: {
            const int choices[3] = {2, 4, 8};
            return nearest_neighbor(h, w, choices[rng.uniform_int(3)]);
        }
        case MaskType::ThinStrokes:
            return strokes(h, w, 1.0, 3.0, rng);
        case MaskType::MediumStrokes:
            return strokes(h, w, 4.0, 8.0, rng);
        case MaskType::ThickStrokes:
            return strokes(h, w, 9.0, 18.0, rng);
        case MaskType::LamaPolygonal:
            return lama_polygonal(h, w, rng);
        case MaskType::LamaRectangle:
            return lama_rectangles(h, w, rng);
    }
    throw std::logic_error("unreachable mask type");
}

}  // namespace

std::size_t Mask::count_masked() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
}

void Mask::validate() const {
    if (height <= 0 || width <= 0 || bits.size() != static_cast<std::size_t>(height) * width)
        throw mask_invariant_error("mask storage does not match dimensions");
    for (std::uint8_t b : bits)
        if (b > 1) throw mask_invariant_error("mask contains a non-binary value");
    const std::size_t ones = count_masked();
    if (ones == 0) throw mask_invariant_error("degenerate mask: nothing masked");
    if (ones == bits.size()) throw mask_invariant_error("degenerate mask: everything masked");
}

Tensor Mask::to_tensor() const {
    Tensor t({height, width});
    for (std::size_t i = 0; i < bits.size(); ++i) t[i] = bits[i];
    return t;
}

std::string mask_type_name(MaskType t) {
    switch (t) {
        case MaskType::Completion: return "completion";
        case MaskType::Expand: return "expand";
        case MaskType::EveryNLines: return "every-n-lines";
        case MaskType::NearestNeighbor: return "nearest-neighbor";
        case MaskType::ThinStrokes: return "thin-strokes";
        case MaskType::MediumStrokes: return "medium-strokes";
        case MaskType::ThickStrokes: return "thick-strokes";
        case MaskType::LamaPolygonal: return "lama-polygonal";
        case MaskType::LamaRectangle: return "lama-rectangle";
    }
    return "?";
}

MaskType mask_type_from_name(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(MaskType::LamaRectangle); ++i) {
        const auto t = static_cast<MaskType>(i);
        if (mask_type_name(t) == name) return t;
    }
    throw std::invalid_argument("unknown mask type: " + name);
}

std::string mask_policy_name(MaskPolicy p) {
    switch (p) {
        case MaskPolicy::LamaMask: return "lama";
        case MaskPolicy::LamaPlusMask: return "lama-plus";
        case MaskPolicy::GeneralMask: return "general";
    }
    return "?";
}

MaskPolicy mask_policy_from_name(const std::string& name) {
    if (name == "lama") return MaskPolicy::LamaMask;
    if (name == "lama-plus") return MaskPolicy::LamaPlusMask;
    if (name == "general") return MaskPolicy::GeneralMask;
    throw std::invalid_argument("unknown mask policy: " + name);
}

const std::vector<MaskType>& policy_types(MaskPolicy p) {
    static const std::vector<MaskType> lama = {MaskType::LamaPolygonal, MaskType::LamaRectangle};
    static const std::vector<MaskType> lama_plus = {MaskType::LamaPolygonal, MaskType::LamaRectangle,
                                                    MaskType::NearestNeighbor, MaskType::EveryNLines};
    static const std::vector<MaskType> general = {
        MaskType::Completion,   MaskType::Expand,        MaskType::EveryNLines, MaskType::NearestNeighbor,
        MaskType::ThinStrokes,  MaskType::MediumStrokes, MaskType::ThickStrokes};
    switch (p) {
        case MaskPolicy::LamaMask: return lama;
        case MaskPolicy::LamaPlusMask: return lama_plus;
        case MaskPolicy::GeneralMask: return general;
    }
    throw std::logic_error("unreachable mask policy");
}

CoverageRange coverage_range(MaskType t) {
    switch (t) {
        case MaskType::Completion: return {0.40, 0.60, true};
        case MaskType::Expand: return {0.50, 0.75, true};
        case MaskType::EveryNLines: return {1.0 / 8.0, 7.0 / 8.0, true};
        case MaskType::NearestNeighbor: return {0.75, 63.0 / 64.0, true};
        case MaskType::ThinStrokes: return {0.01, 0.15, true};
        case MaskType::MediumStrokes: return {0.03, 0.35, true};
        case MaskType::ThickStrokes: return {0.10, 0.60, true};
        case MaskType::LamaPolygonal:
        case MaskType::LamaRectangle: return {0.0, 1.0, false};
    }
    return {};
}

Mask completion_band(int h, int w, int side, double fraction) {
    check_dims(h, w);
    Mask m(h, w);
    const int extent = (side < 2) ? h : w;
    const int band = std::clamp(static_cast<int>(std::lround(fraction * extent)), 1, extent - 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool masked = (side == 0)   ? y < band
                                : (side == 1) ? y >= h - band
                                : (side == 2) ? x < band
                                              : x >= w - band;
            if (masked) m.at(y, x) = 1;
        }
    return m;
}

Mask expand_keep_rect(int h, int w, double area_frac, double aspect) {
    check_dims(h, w);
    const double area = area_frac * h * w;
    int kh = static_cast<int>(std::lround(std::sqrt(area / aspect)));
    int kw = static_cast<int>(std::lround(std::sqrt(area * aspect)));
    kh = std::clamp(kh, 1, h - 2);
    kw = std::clamp(kw, 1, w - 2);
    const int y0 = std::clamp((h - kh) / 2, 1, h - kh - 1);
    const int x0 = std::clamp((w - kw) / 2, 1, w - kw - 1);
    Mask m(h, w);
    std::fill(m.bits.begin(), m.bits.end(), std::uint8_t{1});
    for (int y = y0; y < y0 + kh; ++y)
        for (int x = x0; x < x0 + kw; ++x) m.at(y, x) = 0;
    return m;
}

Mask every_n_lines(int h, int w, bool over_rows, int n, int thickness, int offset) {
    check_dims(h, w);
    if (n < 2 || thickness < 1 || thickness >= n)
        throw dim_error("every_n_lines: need n >= 2 and 1 <= thickness < n");
    Mask m(h, w);
    const int extent = over_rows ? h : w;
    for (int line = 0; line < extent; ++line) {
        const int phase = ((line - offset) % n + n) % n;
        if (phase >= thickness) continue;
        if (over_rows)
            for (int x = 0; x < w; ++x) m.at(line, x) = 1;
        else
            for (int y = 0; y < h; ++y) m.at(y, line) = 1;
    }
    return m;
}

Mask nearest_neighbor(int h, int w, int stride) {
    check_dims(h, w);
    if (stride < 2) throw dim_error("nearest_neighbor: stride must be >= 2");
    Mask m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (y % stride != 0 || x % stride != 0) m.at(y, x) = 1;
    return m;
}

Mask generate(MaskType type, int h, int w, const Rng& rng) {
    check_dims(h, w);
    const CoverageRange range = coverage_range(type);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng sub = rng.fork(fnv1a("mask-draw"), static_cast<std::uint64_t>(type), attempt);
        Mask m = draw_once(type, h, w, sub);
        const std::size_t ones = m.count_masked();
        if (ones == 0 || ones == m.bits.size()) continue;
        if (range.declared) {
            const double c = coverage(m);
            if (c < range.lo || c > range.hi) continue;
        }
        return m;
    }
    throw mask_invariant_error("mask generation for type '" + mask_type_name(type) + "' failed " +
                               std::to_string(kMaxAttempts) + " redraw attempts");
}

MaskType sample_type(MaskPolicy policy, Rng& rng) {
    const auto& types = policy_types(policy);
    return types[rng.uniform_int(types.size())];
}

double coverage(const Mask& m) {
    return static_cast<double>(m.count_masked()) / static_cast<double>(m.bits.size());
}

void save_mask(const Mask& m, const std::string& path) {
    m.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_mask: cannot open " + path);
    out << "P4\n# 1-bit = masked region, 0-bit = keep\n" << m.width << " " << m.height << "\n";
    const int row_bytes = (m.width + 7) / 8;
    std::vector<std::uint8_t> row(row_bytes);
    for (int y = 0; y < m.height; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int x = 0; x < m.width; ++x)
            if (m.at(y, x)) row[x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
        out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
    }
    if (!out) throw std::runtime_error("save_mask: write failed for " + path);
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t offset, const std::string& why) {
    throw mask_parse_error("malformed mask file " + path + " at byte " + std::to_string(offset) + ": " + why);
}

}  // namespace

Mask load_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_mask: cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    auto skip_ws_and_comments = [&]() {
        while (pos < bytes.size()) {
            if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> int {
        skip_ws_and_comments();
        const std::size_t start = pos;
        long v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 20) parse_fail(path, start, "dimension out of range");
            ++pos;
        }
        if (pos == start) parse_fail(path, start, "expected an integer");
        return static_cast<int>(v);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '4') parse_fail(path, 0, "not a binary PBM (P4) file");
    pos = 2;
    const int w = read_int();
    const int h = read_int();
    if (w <= 0 || h <= 0) parse_fail(path, pos, "non-positive dimensions");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        parse_fail(path, pos, "missing whitespace after header");
    ++pos;

    const int row_bytes = (w + 7) / 8;
    const std::size_t need = static_cast<std::size_t>(row_bytes) * h;
    if (bytes.size() - pos < need)
        parse_fail(path, bytes.size(), "truncated pixel data (expected " + std::to_string(need) +
                                           " bytes, have " + std::to_string(bytes.size() - pos) + ")");

    Mask m(h, w);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = reinterpret_cast<const std::uint8_t*>(bytes.data()) + pos +
                                  static_cast<std::size_t>(y) * row_bytes;
        for (int x = 0; x < w; ++x) m.at(y, x) = (row[x / 8] >> (7 - x % 8)) & 1u;
    }
    m.validate();
    return m;
}

}  // namespace inpaint
