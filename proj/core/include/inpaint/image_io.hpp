#pragma once

#include "inpaint/tensor.hpp"

#include <string>
#include <vector>

namespace inpaint {

struct image_parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Decode a binary portable pixmap (P6) or graymap (P5, replicated to three
/// channels) into a (3,H,W) tensor of reals in [0,1].
Tensor read_image(const std::string& path);

/// 8-bit binary PPM. Values are clamped to [0,1] before quantization.
void write_ppm(const Tensor& image, const std::string& path);

/// 8-bit binary PGM from a rank-2 grid in [0,1].
void write_pgm(const Tensor& grid, const std::string& path);

Tensor center_crop_square(const Tensor& image);
Tensor resize_bilinear(const Tensor& image, int out_h, int out_w);

struct IngestResult {
    std::vector<Tensor> train;
    std::vector<Tensor> val;
    std::vector<std::string> train_names;
    std::vector<std::string> val_names;
    int skipped = 0;  // undecodable files
};

/// Load every decodable image under `dir` (sorted by name), center-crop to
/// square, resize to `resolution`, and split train/val by a stable hash of
/// the filename. Undecodable files are skipped and counted. An empty or
/// imageless directory is an error.
IngestResult ingest_images(const std::string& dir, int resolution, double val_fraction = 0.05);

}  // namespace inpaint
