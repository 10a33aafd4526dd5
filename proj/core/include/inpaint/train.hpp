#pragma once

#include "inpaint/eval.hpp"
#include "inpaint/losses.hpp"
#include "inpaint/masks.hpp"
#include "inpaint/model.hpp"
#include "inpaint/tensor.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace inpaint {

struct checkpoint_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct checkpoint_version_error : checkpoint_error {
    using checkpoint_error::checkpoint_error;
};
struct checkpoint_truncated_error : checkpoint_error {
    using checkpoint_error::checkpoint_error;
};
struct checkpoint_checksum_error : checkpoint_error {
    using checkpoint_error::checkpoint_error;
};

struct AdamState {
    Tensor m;
    Tensor v;
    long step = 0;
};

/// One Adam update with bias correction. betas default to (0.9, 0.999) and
/// eps to 1e-8; the state carries first/second moments and the step count.
void adam_update(Tensor& param, const Tensor& grad, AdamState& state, double lr,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

enum class LossMode { Lama, Glama };
enum class DataSource { Synthetic, Directory };

std::string loss_mode_name(LossMode m);
LossMode loss_mode_from_name(const std::string& s);

struct TrainConfig {
    int resolution = 64;
    int batch_size = 1;
    int steps = 200;
    double lr_g = 0.001;    // inpainting network
    double lr_d = 0.0001;   // discriminator
    LossWeights weights;
    MaskPolicy mask_policy = MaskPolicy::GeneralMask;
    LossMode loss_mode = LossMode::Glama;
    std::uint64_t seed = 1;
    DataSource data_source = DataSource::Synthetic;
    std::string data_dir;
    int synth_train = 48;
    int synth_val = 8;
    int checkpoint_every = 500;
    FfcConfig gen;
    DiscConfig disc;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// Deterministic procedural dataset mixing five texture families with
/// structured spectra: checkerboards, sinusoid gratings, Gaussian blobs,
/// Voronoi patches, and linear gradients (uniform class draw).
std::vector<Tensor> synth_dataset(int n, int resolution, std::uint64_t seed);

struct Checkpoint {
    int version = 1;
    TrainConfig config;
    long step = 0;
    std::uint64_t rng_seed = 0;  // base seed; streams are derived per (tag, step, item)
    ParamSet gen;
    ParamSet disc;
    std::vector<AdamState> opt_g;  // aligned with gen.entries()
    std::vector<AdamState> opt_d;  // aligned with disc.entries()
};

/// Manifest header (JSON: version, config echo, step, rng seed, tensor
/// index) followed by a CRC-guarded little-endian blob. Writes are atomic
/// (temp file + rename).
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Per-mask-type validation snapshot: composite L1 against ground truth and
/// spectral artifact scores (checkerboard + ripple on the raw prediction).
struct ValSummary {
    std::map<std::string, double> composite_l1;  // mask type -> mean
    std::map<std::string, double> artifact;      // mask type -> mean (checkerboard + ripple)
    double mean_composite_l1 = 0.0;
    double mean_artifact = 0.0;

    nlohmann::json to_json() const;
};

ValSummary validate_model(const ParamSet& gen, const FfcConfig& cfg,
                          const std::vector<Tensor>& val_images, std::uint64_t seed);

struct StepMetrics {
    std::map<std::string, double> terms;
    std::vector<std::string> mask_types;
};

struct TrainOutcome {
    long final_step = 0;
    bool diverged = false;
    std::string metrics_path;
    std::string checkpoint_path;
    ValSummary val_start;
    ValSummary val_end;
};

/// Deterministic GAN trainer: per step, one discriminator update on
/// L_D + lambda_gp * L_P followed by one generator update on the configured
/// objective. Fully reproducible from (config, seed); emits newline-delimited
/// metric records and periodic checkpoints under out_dir.
class Trainer {
  public:
    Trainer(TrainConfig cfg, std::string out_dir);
    /// Resume from a checkpoint (config echo replaces cfg).
    Trainer(const Checkpoint& ckpt, std::string out_dir);

    StepMetrics train_step_d(long step);
    StepMetrics train_step_g(long step);
    TrainOutcome run();

    const ParamSet& generator() const { return gen_; }
    const ParamSet& discriminator() const { return disc_; }
    const TrainConfig& config() const { return cfg_; }
    const std::vector<Tensor>& val_images() const { return val_; }
    long step() const { return step_; }
    Checkpoint snapshot() const;

  private:
    struct BatchItem {
        const Tensor* image;
        Mask mask;
        std::string mask_type;
    };
    std::vector<BatchItem> make_batch(long step) const;
    void write_metrics_line(const nlohmann::json& j);
    std::string checkpoint_file(long step) const;

    TrainConfig cfg_;
    std::string out_dir_;
    std::vector<Tensor> train_;
    std::vector<Tensor> val_;
    ParamSet gen_;
    ParamSet disc_;
    std::vector<AdamState> opt_g_;
    std::vector<AdamState> opt_d_;
    FeatureExtractor extractor_;
    long step_ = 0;
    std::string metrics_path_;
};

/// Convenience wrapper: construct a Trainer and run to completion.
TrainOutcome run_training(const TrainConfig& cfg, const std::string& out_dir);

std::uint32_t crc32(const void* data, std::size_t len);

}  // namespace inpaint
