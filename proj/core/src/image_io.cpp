#include "inpaint/image_io.hpp"

#include "inpaint/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace inpaint {

namespace {

struct PnmHeader {
    int type = 0;  // 5 or 6
    int w = 0, h = 0, maxval = 0;
    std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::vector<char>& bytes, const std::string& path) {
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) -> void {
        throw image_parse_error("malformed image " + path + " at byte " + std::to_string(pos) + ": " + why);
    };
    auto skip = [&]() {
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
        skip();
        const std::size_t start = pos;
        long v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 24) fail("value out of range");
            ++pos;
        }
        if (pos == start) fail("expected an integer");
        return static_cast<int>(v);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        fail("not a binary PGM/PPM file");
    PnmHeader hd;
    hd.type = bytes[1] - '0';
    pos = 2;
    hd.w = read_int();
    hd.h = read_int();
    hd.maxval = read_int();
    if (hd.w <= 0 || hd.h <= 0) fail("non-positive dimensions");
    if (hd.maxval != 255) fail("unsupported maxval (only 255)");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        fail("missing whitespace after maxval");
    hd.data_offset = pos + 1;
    return hd;
}

}  // namespace

Tensor read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_image: cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const PnmHeader hd = parse_pnm_header(bytes, path);

    const int channels = hd.type == 6 ? 3 : 1;
    const std::size_t need = static_cast<std::size_t>(hd.w) * hd.h * channels;
    if (bytes.size() - hd.data_offset < need)
        throw image_parse_error("malformed image " + path + " at byte " + std::to_string(bytes.size()) +
                                ": truncated pixel data");

    Tensor img({3, hd.h, hd.w});
    const auto* px = reinterpret_cast<const unsigned char*>(bytes.data()) + hd.data_offset;
    for (int y = 0; y < hd.h; ++y)
        for (int x = 0; x < hd.w; ++x)
            for (int c = 0; c < 3; ++c) {
                const unsigned char v = px[(static_cast<std::size_t>(y) * hd.w + x) * channels +
                                           (channels == 3 ? c : 0)];
                img.at3(c, y, x) = v / 255.0;
            }
    return img;
}

namespace {

unsigned char quant8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(c * 255.0));
}

}  // namespace

void write_ppm(const Tensor& image, const std::string& path) {
    if (image.rank() != 3 || image.dim(0) != 3) throw dim_error("write_ppm expects (3,H,W)");
    const int h = image.dim(1), w = image.dim(2);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x) * 3 + c] = quant8(image.at3(c, y, x));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

void write_pgm(const Tensor& grid, const std::string& path) {
    if (grid.rank() != 2) throw dim_error("write_pgm expects (H,W)");
    const int h = grid.dim(0), w = grid.dim(1);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) row[x] = quant8(grid[static_cast<std::size_t>(y) * w + x]);
        out.write(reinterpret_cast<const char*>(row.data()), w);
    }
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

Tensor center_crop_square(const Tensor& image) {
    if (image.rank() != 3) throw dim_error("center_crop_square expects (C,H,W)");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int side = std::min(h, w);
    const int y0 = (h - side) / 2, x0 = (w - side) / 2;
    Tensor out({c, side, side});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) out.at3(ci, y, x) = image.at3(ci, y0 + y, x0 + x);
    return out;
}

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
    if (image.rank() != 3) throw dim_error("resize_bilinear expects (C,H,W)");
    if (out_h < 1 || out_w < 1) throw dim_error("resize_bilinear: output dims must be >= 1");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    Tensor out({c, out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, h - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, w - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            for (int ci = 0; ci < c; ++ci) {
                const double top = image.at3(ci, y0, x0) * (1.0 - wx) + image.at3(ci, y0, x1) * wx;
                const double bot = image.at3(ci, y1, x0) * (1.0 - wx) + image.at3(ci, y1, x1) * wx;
                out.at3(ci, y, x) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

IngestResult ingest_images(const std::string& dir, int resolution, double val_fraction) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error("ingest_images: not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error("ingest_images: empty directory: " + dir);

    struct Item {
        std::string name;
        Tensor image;
        std::uint64_t hash;
    };
    std::vector<Item> items;
    int skipped = 0;
    for (const std::string& name : names) {
        try {
            Tensor img = read_image((fs::path(dir) / name).string());
            img = resize_bilinear(center_crop_square(img), resolution, resolution);
            items.push_back({name, std::move(img), mix64(fnv1a(name))});
        } catch (const image_parse_error&) {
            ++skipped;
        } catch (const std::runtime_error&) {
            ++skipped;
        }
    }
    if (items.empty()) throw std::runtime_error("ingest_images: no decodable images in " + dir);

    // validation membership: the val_count smallest filename hashes (ties by
    // name), so the split is a pure function of the file names
    const int val_count = std::clamp(
        static_cast<int>(std::lround(val_fraction * static_cast<double>(items.size()))), 0,
        static_cast<int>(items.size()) - 1);
    std::vector<std::size_t> rank(items.size());
    for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        if (items[a].hash != items[b].hash) return items[a].hash < items[b].hash;
        return items[a].name < items[b].name;
    });
    std::vector<bool> is_val(items.size(), false);
    for (int i = 0; i < val_count; ++i) is_val[rank[i]] = true;

    IngestResult res;
    res.skipped = skipped;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (is_val[i]) {
            res.val.push_back(std::move(items[i].image));
            res.val_names.push_back(items[i].name);
        } else {
            res.train.push_back(std::move(items[i].image));
            res.train_names.push_back(items[i].name);
        }
    }
    return res;
}

}  // namespace inpaint
