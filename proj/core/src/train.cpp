#include "inpaint/train.hpp"

#include "inpaint/frequency.hpp"
#include "inpaint/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace inpaint {

void adam_update(Tensor& param, const Tensor& grad, AdamState& state, double lr, double beta1,
                 double beta2, double eps) {
    if (!param.same_shape(grad)) throw dim_error("adam_update: gradient shape does not match parameter");
    if (state.m.size() == 0) {
        state.m = Tensor::zeros(param.shape());
        state.v = Tensor::zeros(param.shape());
        state.step = 0;
    }
    if (!state.m.same_shape(param)) throw dim_error("adam_update: state shape does not match parameter");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

std::string loss_mode_name(LossMode m) { return m == LossMode::Lama ? "lama" : "glama"; }

LossMode loss_mode_from_name(const std::string& s) {
    if (s == "lama") return LossMode::Lama;
    if (s == "glama") return LossMode::Glama;
    throw std::invalid_argument("unknown loss mode: " + s);
}

void TrainConfig::validate() const {
    if (lr_g <= 0.0 || lr_d <= 0.0) throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    if (resolution < 32 || !is_power_of_two(resolution))
        throw std::invalid_argument("TrainConfig: resolution must be a power of two >= 32");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
    if (checkpoint_every < 1) throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 1");
    if (data_source == DataSource::Synthetic && (synth_train < 1 || synth_val < 1))
        throw std::invalid_argument("TrainConfig: synthetic dataset sizes must be >= 1");
    weights.validate();
    gen.validate();
    disc.validate();
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json j;
    j["resolution"] = resolution;
    j["batch_size"] = batch_size;
    j["steps"] = steps;
    j["lr_g"] = lr_g;
    j["lr_d"] = lr_d;
    j["mask_policy"] = mask_policy_name(mask_policy);
    j["loss_mode"] = loss_mode_name(loss_mode);
    j["seed"] = seed;
    j["data_source"] = data_source == DataSource::Synthetic ? "synthetic" : "directory";
    j["data_dir"] = data_dir;
    j["synth_train"] = synth_train;
    j["synth_val"] = synth_val;
    j["checkpoint_every"] = checkpoint_every;
    j["weights"] = {{"lambda_l1", weights.lambda_l1},   {"lambda_adv", weights.lambda_adv},
                    {"lambda_pl", weights.lambda_pl},   {"lambda_fm", weights.lambda_fm},
                    {"lambda_gp", weights.lambda_gp},   {"alpha_tv", weights.alpha_tv},
                    {"alpha_ffl", weights.alpha_ffl},   {"alpha_lama", weights.alpha_lama},
                    {"alpha_focal", weights.alpha_focal}, {"beta_tv", weights.beta_tv}};
    j["gen"] = {{"base_width", gen.base_width},   {"global_ratio", gen.global_ratio},
                {"n_down", gen.n_down},           {"n_residual", gen.n_residual},
                {"n_up", gen.n_up},               {"norm", gen.norm},
                {"activation", gen.activation},   {"in_channels", gen.in_channels},
                {"out_channels", gen.out_channels}};
    j["disc"] = {{"base_width", disc.base_width}, {"depth", disc.depth}, {"leaky_slope", disc.leaky_slope}};
    return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.resolution = j.value("resolution", c.resolution);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    c.lr_g = j.value("lr_g", c.lr_g);
    c.lr_d = j.value("lr_d", c.lr_d);
    if (j.contains("mask_policy")) c.mask_policy = mask_policy_from_name(j.at("mask_policy"));
    if (j.contains("loss_mode")) c.loss_mode = loss_mode_from_name(j.at("loss_mode"));
    c.seed = j.value("seed", c.seed);
    if (j.contains("data_source"))
        c.data_source = j.at("data_source") == "synthetic" ? DataSource::Synthetic : DataSource::Directory;
    c.data_dir = j.value("data_dir", c.data_dir);
    c.synth_train = j.value("synth_train", c.synth_train);
    c.synth_val = j.value("synth_val", c.synth_val);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        c.weights.lambda_l1 = w.value("lambda_l1", c.weights.lambda_l1);
        c.weights.lambda_adv = w.value("lambda_adv", c.weights.lambda_adv);
        c.weights.lambda_pl = w.value("lambda_pl", c.weights.lambda_pl);
        c.weights.lambda_fm = w.value("lambda_fm", c.weights.lambda_fm);
        c.weights.lambda_gp = w.value("lambda_gp", c.weights.lambda_gp);
        c.weights.alpha_tv = w.value("alpha_tv", c.weights.alpha_tv);
        c.weights.alpha_ffl = w.value("alpha_ffl", c.weights.alpha_ffl);
        c.weights.alpha_lama = w.value("alpha_lama", c.weights.alpha_lama);
        c.weights.alpha_focal = w.value("alpha_focal", c.weights.alpha_focal);
        c.weights.beta_tv = w.value("beta_tv", c.weights.beta_tv);
    }
    if (j.contains("gen")) {
        const auto& g = j.at("gen");
        c.gen.base_width = g.value("base_width", c.gen.base_width);
        c.gen.global_ratio = g.value("global_ratio", c.gen.global_ratio);
        c.gen.n_down = g.value("n_down", c.gen.n_down);
        c.gen.n_residual = g.value("n_residual", c.gen.n_residual);
        c.gen.n_up = g.value("n_up", c.gen.n_up);
        c.gen.norm = g.value("norm", c.gen.norm);
        c.gen.activation = g.value("activation", c.gen.activation);
        c.gen.in_channels = g.value("in_channels", c.gen.in_channels);
        c.gen.out_channels = g.value("out_channels", c.gen.out_channels);
    }
    if (j.contains("disc")) {
        const auto& d = j.at("disc");
        c.disc.base_width = d.value("base_width", c.disc.base_width);
        c.disc.depth = d.value("depth", c.disc.depth);
        c.disc.leaky_slope = d.value("leaky_slope", c.disc.leaky_slope);
    }
    return c;
}

namespace {

Tensor synth_checkerboard(int res, Rng& rng) {
    const int periods[4] = {2, 4, 8, 16};
    const int p = periods[rng.uniform_int(4)];
    const int oy = static_cast<int>(rng.uniform_int(p)), ox = static_cast<int>(rng.uniform_int(p));
    double ca[3], cb[3];
    for (int c = 0; c < 3; ++c) {
        ca[c] = rng.uniform();
        cb[c] = rng.uniform();
    }
    Tensor img({3, res, res});
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            const bool odd = (((y + oy) / p) + ((x + ox) / p)) % 2 != 0;
            for (int c = 0; c < 3; ++c) img.at3(c, y, x) = odd ? ca[c] : cb[c];
        }
    return img;
}

Tensor synth_grating(int res, Rng& rng) {
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double cycles = rng.uniform(2.0, res / 8.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.15, 0.45);
    double base[3];
    for (int c = 0; c < 3; ++c) base[c] = rng.uniform(amp, 1.0 - amp);
    const double kx = std::cos(theta) * cycles / res, ky = std::sin(theta) * cycles / res;
    Tensor img({3, res, res});
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            const double s = std::sin(2.0 * std::numbers::pi * (kx * x + ky * y) + phase);
            for (int c = 0; c < 3; ++c) img.at3(c, y, x) = std::clamp(base[c] + amp * s, 0.0, 1.0);
        }
    return img;
}

Tensor synth_blobs(int res, Rng& rng) {
    double bg[3];
    for (int c = 0; c < 3; ++c) bg[c] = rng.uniform();
    Tensor img({3, res, res});
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x)
            for (int c = 0; c < 3; ++c) img.at3(c, y, x) = bg[c];
    const int k = static_cast<int>(rng.uniform_int(1, 4));
    for (int b = 0; b < k; ++b) {
        const double cy = rng.uniform(0.0, res - 1.0), cx = rng.uniform(0.0, res - 1.0);
        const double sigma = rng.uniform(res / 16.0, res / 4.0);
        double col[3];
        for (int c = 0; c < 3; ++c) col[c] = rng.uniform();
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                const double a = std::exp(-d2 / (2.0 * sigma * sigma));
                for (int c = 0; c < 3; ++c)
                    img.at3(c, y, x) = std::clamp(img.at3(c, y, x) * (1.0 - a) + col[c] * a, 0.0, 1.0);
            }
    }
    return img;
}

Tensor synth_voronoi(int res, Rng& rng) {
    const int k = static_cast<int>(rng.uniform_int(4, 10));
    std::vector<double> sy(k), sx(k);
    std::vector<std::array<double, 3>> col(k);
    for (int i = 0; i < k; ++i) {
        sy[i] = rng.uniform(0.0, res - 1.0);
        sx[i] = rng.uniform(0.0, res - 1.0);
        for (int c = 0; c < 3; ++c) col[i][c] = rng.uniform();
    }
    Tensor img({3, res, res});
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            int best = 0;
            double best_d = 1e300;
            for (int i = 0; i < k; ++i) {
                const double d = (y - sy[i]) * (y - sy[i]) + (x - sx[i]) * (x - sx[i]);
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            for (int c = 0; c < 3; ++c) img.at3(c, y, x) = col[best][c];
        }
    return img;
}

Tensor synth_gradient(int res, Rng& rng) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = rng.uniform();
        c1[c] = rng.uniform();
    }
    const double dy = std::sin(theta), dx = std::cos(theta);
    double lo = 1e300, hi = -1e300;
    const double corners[4][2] = {{0, 0}, {0, res - 1.0}, {res - 1.0, 0}, {res - 1.0, res - 1.0}};
    for (const auto& p : corners) {
        const double t = p[0] * dy + p[1] * dx;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    Tensor img({3, res, res});
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            const double t = (y * dy + x * dx - lo) / std::max(1e-12, hi - lo);
            for (int c = 0; c < 3; ++c) img.at3(c, y, x) = std::clamp(c0[c] + (c1[c] - c0[c]) * t, 0.0, 1.0);
        }
    return img;
}

}  // namespace

std::vector<Tensor> synth_dataset(int n, int resolution, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("synth_dataset: n must be >= 1");
    std::vector<Tensor> out;
    out.reserve(n);
    const Rng base(seed);
    for (int i = 0; i < n; ++i) {
        Rng rng = base.fork(fnv1a("synth-image"), static_cast<std::uint64_t>(i));
        switch (rng.uniform_int(5)) {
            case 0: out.push_back(synth_checkerboard(resolution, rng)); break;
            case 1: out.push_back(synth_grating(resolution, rng)); break;
            case 2: out.push_back(synth_blobs(resolution, rng)); break;
            case 3: out.push_back(synth_voronoi(resolution, rng)); break;
            default: out.push_back(synth_gradient(resolution, rng)); break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// checkpoint format

std::uint32_t crc32(const void* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr const char* kCkptMagic = "INPAINTCKPT";
constexpr int kCkptVersion = 1;

void append_tensors(nlohmann::json& index, std::vector<double>& blob, const std::string& prefix,
                    const ParamSet& ps) {
    for (const auto& e : ps.entries()) {
        nlohmann::json t;
        t["name"] = prefix + e.name;
        t["dtype"] = dtype_name(e.tensor.dtype());
        t["shape"] = e.tensor.shape();
        t["offset"] = blob.size() * sizeof(double);
        index.push_back(t);
        blob.insert(blob.end(), e.tensor.vec().begin(), e.tensor.vec().end());
    }
}

void append_opt(nlohmann::json& index, std::vector<double>& blob, const std::string& prefix,
                const ParamSet& ps, const std::vector<AdamState>& opt) {
    for (std::size_t i = 0; i < opt.size(); ++i) {
        if (opt[i].m.size() == 0) continue;  // untouched state (steps == 0)
        for (const char* part : {"m", "v"}) {
            const Tensor& t = std::strcmp(part, "m") == 0 ? opt[i].m : opt[i].v;
            nlohmann::json tj;
            tj["name"] = prefix + ps.entries()[i].name + "." + part;
            tj["dtype"] = dtype_name(t.dtype());
            tj["shape"] = t.shape();
            tj["offset"] = blob.size() * sizeof(double);
            index.push_back(tj);
            blob.insert(blob.end(), t.vec().begin(), t.vec().end());
        }
    }
}

struct BlobReader {
    const std::vector<double>& blob;
    const std::string& path;

    Tensor read(const nlohmann::json& entry) const {
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        const std::size_t offset_bytes = entry.at("offset").get<std::size_t>();
        const std::size_t n = shape_numel(shape);
        if (offset_bytes % sizeof(double) != 0)
            throw checkpoint_error("checkpoint " + path + ": misaligned tensor offset");
        const std::size_t start = offset_bytes / sizeof(double);
        if (start + n > blob.size())
            throw checkpoint_truncated_error("checkpoint " + path + ": tensor data out of range");
        std::vector<double> values(blob.begin() + start, blob.begin() + start + n);
        return Tensor(shape, std::move(values), dtype_from_name(entry.at("dtype").get<std::string>()));
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::json manifest;
    manifest["magic"] = kCkptMagic;
    manifest["version"] = kCkptVersion;
    manifest["step"] = ckpt.step;
    manifest["rng_seed"] = ckpt.rng_seed;
    manifest["config"] = ckpt.config.to_json();
    manifest["opt_g_step"] = ckpt.opt_g.empty() ? 0 : ckpt.opt_g.front().step;
    manifest["opt_d_step"] = ckpt.opt_d.empty() ? 0 : ckpt.opt_d.front().step;
    manifest["gen_seed"] = ckpt.gen.seed();
    manifest["disc_seed"] = ckpt.disc.seed();

    nlohmann::json index = nlohmann::json::array();
    std::vector<double> blob;
    append_tensors(index, blob, "gen.", ckpt.gen);
    append_tensors(index, blob, "disc.", ckpt.disc);
    append_opt(index, blob, "opt_g.", ckpt.gen, ckpt.opt_g);
    append_opt(index, blob, "opt_d.", ckpt.disc, ckpt.opt_d);
    manifest["tensors"] = index;
    manifest["blob_bytes"] = blob.size() * sizeof(double);
    manifest["blob_crc32"] = crc32(blob.data(), blob.size() * sizeof(double));

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("save_checkpoint: cannot open " + tmp);
        const std::string header = manifest.dump();
        out << kCkptMagic << " " << kCkptVersion << " " << header.size() << "\n";
        out << header << "\n";
        out.write(reinterpret_cast<const char*>(blob.data()),
                  static_cast<std::streamsize>(blob.size() * sizeof(double)));
        if (!out) throw std::runtime_error("save_checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string magic;
    int version = 0;
    std::size_t header_len = 0;
    in >> magic >> version >> header_len;
    if (magic != kCkptMagic) throw checkpoint_version_error("checkpoint " + path + ": bad magic");
    if (version != kCkptVersion)
        throw checkpoint_version_error("checkpoint " + path + ": version " + std::to_string(version) +
                                       " not supported (expected " + std::to_string(kCkptVersion) + ")");
    in.get();  // newline
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw checkpoint_truncated_error("checkpoint " + path + ": truncated manifest");
    in.get();  // newline

    nlohmann::json manifest = nlohmann::json::parse(header, nullptr, /*allow_exceptions=*/true);
    const std::size_t blob_bytes = manifest.at("blob_bytes").get<std::size_t>();
    std::vector<double> blob(blob_bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob_bytes));
    if (static_cast<std::size_t>(in.gcount()) != blob_bytes)
        throw checkpoint_truncated_error("checkpoint " + path + ": truncated blob (expected " +
                                         std::to_string(blob_bytes) + " bytes)");
    const std::uint32_t crc = crc32(blob.data(), blob_bytes);
    if (crc != manifest.at("blob_crc32").get<std::uint32_t>())
        throw checkpoint_checksum_error("checkpoint " + path + ": blob checksum mismatch");

    Checkpoint ckpt;
    ckpt.version = version;
    ckpt.step = manifest.at("step").get<long>();
    ckpt.rng_seed = manifest.at("rng_seed").get<std::uint64_t>();
    ckpt.config = TrainConfig::from_json(manifest.at("config"));
    ckpt.gen.set_seed(manifest.at("gen_seed").get<std::uint64_t>());
    ckpt.disc.set_seed(manifest.at("disc_seed").get<std::uint64_t>());

    const BlobReader reader{blob, path};
    std::map<std::string, nlohmann::json> by_name;
    for (const auto& t : manifest.at("tensors")) by_name[t.at("name").get<std::string>()] = t;

    for (const auto& [name, entry] : by_name) {
        if (name.rfind("gen.", 0) == 0) ckpt.gen.add(name.substr(4), reader.read(entry));
        else if (name.rfind("disc.", 0) == 0) ckpt.disc.add(name.substr(5), reader.read(entry));
    }
    const long og_step = manifest.at("opt_g_step").get<long>();
    const long od_step = manifest.at("opt_d_step").get<long>();
    ckpt.opt_g.resize(ckpt.gen.entries().size());
    ckpt.opt_d.resize(ckpt.disc.entries().size());
    for (std::size_t i = 0; i < ckpt.gen.entries().size(); ++i) {
        const std::string base = "opt_g." + ckpt.gen.entries()[i].name;
        if (by_name.count(base + ".m")) {
            ckpt.opt_g[i].m = reader.read(by_name.at(base + ".m"));
            ckpt.opt_g[i].v = reader.read(by_name.at(base + ".v"));
            ckpt.opt_g[i].step = og_step;
        }
    }
    for (std::size_t i = 0; i < ckpt.disc.entries().size(); ++i) {
        const std::string base = "opt_d." + ckpt.disc.entries()[i].name;
        if (by_name.count(base + ".m")) {
            ckpt.opt_d[i].m = reader.read(by_name.at(base + ".m"));
            ckpt.opt_d[i].v = reader.read(by_name.at(base + ".v"));
            ckpt.opt_d[i].step = od_step;
        }
    }
    return ckpt;
}

// ---------------------------------------------------------------------------
// validation snapshot

nlohmann::json ValSummary::to_json() const {
    nlohmann::json j;
    j["composite_l1"] = composite_l1;
    j["artifact"] = artifact;
    j["mean_composite_l1"] = mean_composite_l1;
    j["mean_artifact"] = mean_artifact;
    return j;
}

ValSummary validate_model(const ParamSet& gen, const FfcConfig& cfg,
                          const std::vector<Tensor>& val_images, std::uint64_t seed) {
    ValSummary summary;
    const Rng base(seed);
    const auto& suite = policy_types(MaskPolicy::GeneralMask);
    double total_l1 = 0.0, total_art = 0.0;
    for (const MaskType type : suite) {
        double l1_acc = 0.0, art_acc = 0.0;
        for (std::size_t i = 0; i < val_images.size(); ++i) {
            const Tensor& x = val_images[i];
            const Mask m = generate(type, x.dim(1), x.dim(2),
                                    base.fork(fnv1a("val-mask"), i, static_cast<std::uint64_t>(type)));
            const Tensor xhat = generator_forward(x, m, gen, cfg);
            const Tensor comp = composite(x, xhat, m);
            double l1 = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) l1 += std::abs(comp[k] - x[k]);
            l1_acc += l1 / static_cast<double>(x.size());
            art_acc += checkerboard_score(xhat) + ripple_score(xhat);
        }
        const std::string tname = mask_type_name(type);
        summary.composite_l1[tname] = l1_acc / static_cast<double>(val_images.size());
        summary.artifact[tname] = art_acc / static_cast<double>(val_images.size());
        total_l1 += summary.composite_l1[tname];
        total_art += summary.artifact[tname];
    }
    summary.mean_composite_l1 = total_l1 / static_cast<double>(suite.size());
    summary.mean_artifact = total_art / static_cast<double>(suite.size());
    return summary;
}

// ---------------------------------------------------------------------------
// trainer

Trainer::Trainer(TrainConfig cfg, std::string out_dir) : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)) {
    cfg_.validate();
    std::filesystem::create_directories(out_dir_);
    metrics_path_ = out_dir_ + "/metrics.ndjson";
    std::ofstream(metrics_path_, std::ios::trunc);  // start a fresh log

    if (cfg_.data_source == DataSource::Synthetic) {
        const Rng base(cfg_.seed);
        train_ = synth_dataset(cfg_.synth_train, cfg_.resolution, base.fork(fnv1a("train-data")).seed());
        val_ = synth_dataset(cfg_.synth_val, cfg_.resolution, base.fork(fnv1a("val-data")).seed());
    } else {
        IngestResult ingest = ingest_images(cfg_.data_dir, cfg_.resolution);
        train_ = std::move(ingest.train);
        val_ = std::move(ingest.val);
        if (val_.empty()) val_.push_back(train_.back());
    }

    const Rng base(cfg_.seed);
    gen_ = init_generator_params(cfg_.gen, base.fork(fnv1a("init-g")).seed());
    disc_ = init_discriminator_params(cfg_.disc, base.fork(fnv1a("init-d")).seed());
    opt_g_.resize(gen_.entries().size());
    opt_d_.resize(disc_.entries().size());
}

Trainer::Trainer(const Checkpoint& ckpt, std::string out_dir)
    : Trainer(ckpt.config, std::move(out_dir)) {
    gen_ = ckpt.gen;
    disc_ = ckpt.disc;
    opt_g_ = ckpt.opt_g;
    opt_d_ = ckpt.opt_d;
    opt_g_.resize(gen_.entries().size());
    opt_d_.resize(disc_.entries().size());
    step_ = ckpt.step;
}

std::vector<Trainer::BatchItem> Trainer::make_batch(long step) const {
    const Rng base(cfg_.seed);
    std::vector<BatchItem> batch;
    for (int i = 0; i < cfg_.batch_size; ++i) {
        Rng pick = base.fork(fnv1a("batch-image"), static_cast<std::uint64_t>(step), i);
        const std::size_t idx = pick.uniform_int(train_.size());
        Rng type_rng = base.fork(fnv1a("mask-type"), static_cast<std::uint64_t>(step), i);
        const MaskType type = sample_type(cfg_.mask_policy, type_rng);
        const Rng mask_rng = base.fork(fnv1a("mask-geom"), static_cast<std::uint64_t>(step), i);
        batch.push_back({&train_[idx], generate(type, cfg_.resolution, cfg_.resolution, mask_rng),
                         mask_type_name(type)});
    }
    return batch;
}

StepMetrics Trainer::train_step_d(long step) {
    const std::vector<BatchItem> batch = make_batch(step);
    VarMap gvars = lift_params(gen_, /*requires_grad=*/false);
    VarMap dvars = lift_params(disc_, /*requires_grad=*/true);

    ad::Var ld_total, lp_total;
    for (const BatchItem& item : batch) {
        // fake sample, detached from the generator
        const Tensor xhat = generator_forward(ad::constant(*item.image), item.mask, gvars, cfg_.gen).val();
        ad::Var x_leaf = ad::leaf(*item.image, /*requires_grad=*/true);
        DiscOutput real = discriminator_forward(x_leaf, dvars, cfg_.disc);
        DiscOutput fake = discriminator_forward(ad::constant(xhat), dvars, cfg_.disc);
        const int factor = item.mask.height / real.logits.val().dim(1);
        const Mask m_logit = downsample_mask_max(item.mask, factor);

        ad::Var ld = loss_expr::adversarial_d(real.logits, fake.logits, m_logit);
        // R1 penalty at the real sample, via differentiation through the tape
        ad::GradMap gm = ad::backward(ad::sum(real.logits));
        ad::Var gx = gm.var(x_leaf);
        if (!gx.defined()) throw finite_error("train_step_d: discriminator ignores its input");
        ad::Var lp = ad::sum(ad::mul(gx, gx));

        ld_total = ld_total.defined() ? ad::add(ld_total, ld) : ld;
        lp_total = lp_total.defined() ? ad::add(lp_total, lp) : lp;
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    ld_total = ad::scale(ld_total, inv_b);
    lp_total = ad::scale(lp_total, inv_b);
    ad::Var objective = ad::add(ld_total, ad::scale(lp_total, cfg_.weights.lambda_gp));
    objective.val().ensure_finite("discriminator objective");

    ad::GradMap grads = ad::backward(objective);
    for (std::size_t i = 0; i < disc_.entries().size(); ++i) {
        auto& entry = disc_.entries()[i];
        adam_update(entry.tensor, grads.tensor(dvars.at(entry.name)), opt_d_[i], cfg_.lr_d);
    }

    StepMetrics m;
    m.terms["d_total"] = objective.val()[0];
    m.terms["d_adv"] = ld_total.val()[0];
    m.terms["d_gp"] = lp_total.val()[0];
    for (const auto& item : batch) m.mask_types.push_back(item.mask_type);
    return m;
}

StepMetrics Trainer::train_step_g(long step) {
    const std::vector<BatchItem> batch = make_batch(step);
    VarMap gvars = lift_params(gen_, /*requires_grad=*/true);
    VarMap dvars = lift_params(disc_, /*requires_grad=*/false);  // frozen during the G update

    const LossWeights& w = cfg_.weights;
    ad::Var objective;
    std::map<std::string, double> sums;
    for (const BatchItem& item : batch) {
        ad::Var x = ad::constant(*item.image);
        ad::Var xhat = generator_forward(x, item.mask, gvars, cfg_.gen);
        DiscOutput fake = discriminator_forward(xhat, dvars, cfg_.disc);
        DiscOutput real = discriminator_forward(x, dvars, cfg_.disc);

        ad::Var l1 = loss_expr::l1_masked(x, xhat, item.mask);
        ad::Var pl = loss_expr::perceptual(x, xhat, extractor_);
        ad::Var adv_g = loss_expr::adversarial_g(fake.logits);
        ad::Var fm = loss_expr::feature_match(real.features, fake.features);

        ad::Var lama = ad::scale(l1, w.lambda_l1);
        lama = ad::add(lama, ad::scale(adv_g, w.lambda_adv));
        lama = ad::add(lama, ad::scale(pl, w.lambda_pl));
        lama = ad::add(lama, ad::scale(fm, w.lambda_fm));

        ad::Var item_obj = lama;
        sums["l1"] += l1.val()[0];
        sums["adv_g"] += adv_g.val()[0];
        sums["pl"] += pl.val()[0];
        sums["fm"] += fm.val()[0];
        sums["lama"] += lama.val()[0];
        if (cfg_.loss_mode == LossMode::Glama) {
            ad::Var tv_term = loss_expr::tv(xhat, w.beta_tv);
            ad::Var ffl_term = loss_expr::ffl(x, xhat, w.alpha_focal);
            item_obj = ad::add(ad::scale(lama, w.alpha_lama),
                               ad::add(ad::scale(tv_term, w.alpha_tv), ad::scale(ffl_term, w.alpha_ffl)));
            sums["tv"] += tv_term.val()[0];
            sums["ffl"] += ffl_term.val()[0];
        }
        objective = objective.defined() ? ad::add(objective, item_obj) : item_obj;
    }
    objective = ad::scale(objective, 1.0 / static_cast<double>(batch.size()));
    objective.val().ensure_finite("generator objective");

    ad::GradMap grads = ad::backward(objective);
    for (std::size_t i = 0; i < gen_.entries().size(); ++i) {
        auto& entry = gen_.entries()[i];
        adam_update(entry.tensor, grads.tensor(gvars.at(entry.name)), opt_g_[i], cfg_.lr_g);
    }

    StepMetrics m;
    m.terms["g_total"] = objective.val()[0];
    for (auto& [k, v] : sums) m.terms[k] = v / static_cast<double>(batch.size());
    for (const auto& item : batch) m.mask_types.push_back(item.mask_type);
    return m;
}

void Trainer::write_metrics_line(const nlohmann::json& j) {
    std::ofstream out(metrics_path_, std::ios::app);
    out << j.dump() << "\n";
}

std::string Trainer::checkpoint_file(long step) const {
    return out_dir_ + "/checkpoint-" + std::to_string(step) + ".ckpt";
}

Checkpoint Trainer::snapshot() const {
    Checkpoint ckpt;
    ckpt.config = cfg_;
    ckpt.step = step_;
    ckpt.rng_seed = cfg_.seed;
    ckpt.gen = gen_;
    ckpt.disc = disc_;
    ckpt.opt_g = opt_g_;
    ckpt.opt_d = opt_d_;
    return ckpt;
}

TrainOutcome Trainer::run() {
    TrainOutcome outcome;
    outcome.metrics_path = metrics_path_;

    const std::uint64_t val_seed = Rng(cfg_.seed).fork(fnv1a("validation")).seed();
    if (step_ == 0) {
        outcome.val_start = validate_model(gen_, cfg_.gen, val_, val_seed);
        nlohmann::json j;
        j["step"] = 0;
        j["event"] = "validation";
        j["summary"] = outcome.val_start.to_json();
        write_metrics_line(j);
        save_checkpoint(checkpoint_file(0), snapshot());
        outcome.checkpoint_path = checkpoint_file(0);
    } else {
        outcome.val_start = validate_model(gen_, cfg_.gen, val_, val_seed);
    }

    while (step_ < cfg_.steps) {
        const long step = step_;
        nlohmann::json record;
        record["step"] = step + 1;
        try {
            StepMetrics dm = train_step_d(step);
            StepMetrics gm = train_step_g(step);
            for (const auto& [k, v] : dm.terms) record[k] = v;
            for (const auto& [k, v] : gm.terms) record[k] = v;
            record["mask_types"] = gm.mask_types;
        } catch (const finite_error& e) {
            record["event"] = "diverged";
            record["error"] = e.what();
            write_metrics_line(record);
            outcome.diverged = true;
            break;
        }
        write_metrics_line(record);
        step_ += 1;
        if (step_ % cfg_.checkpoint_every == 0 || step_ == cfg_.steps) {
            save_checkpoint(checkpoint_file(step_), snapshot());
            outcome.checkpoint_path = checkpoint_file(step_);
        }
    }

    outcome.final_step = step_;
    outcome.val_end = validate_model(gen_, cfg_.gen, val_, val_seed);
    nlohmann::json j;
    j["step"] = step_;
    j["event"] = "validation";
    j["summary"] = outcome.val_end.to_json();
    write_metrics_line(j);
    if (outcome.checkpoint_path.empty()) {
        save_checkpoint(checkpoint_file(step_), snapshot());
        outcome.checkpoint_path = checkpoint_file(step_);
    }
    return outcome;
}

TrainOutcome run_training(const TrainConfig& cfg, const std::string& out_dir) {
    Trainer trainer(cfg, out_dir);
    return trainer.run();
}

}  // namespace inpaint
