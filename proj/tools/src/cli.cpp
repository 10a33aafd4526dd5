#include "inpaint_cli/cli.hpp"

#include "inpaint/eval.hpp"
#include "inpaint/frequency.hpp"
#include "inpaint/gradcheck.hpp"
#include "inpaint/image_io.hpp"
#include "inpaint/losses.hpp"
#include "inpaint/masks.hpp"
#include "inpaint/model.hpp"
#include "inpaint/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace inpaint::cli {

namespace {

namespace fs = std::filesystem;

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const std::vector<std::string>& args, const nlohmann::json& resolved) {
    fs::create_directories(out_dir);
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["argv"] = args;
    j["resolved"] = resolved;
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::trunc);
    out << j.dump(2) << "\n";
}

Tensor random_image(int c, int h, int w, Rng& rng) {
    Tensor t({c, h, w});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform();
    return t;
}

// flatten a ParamSet so finite differences can walk every coordinate
Tensor pack_params(const ParamSet& ps) {
    std::size_t n = ps.total_parameters();
    Tensor flat({static_cast<int>(n)});
    std::size_t at = 0;
    for (const auto& e : ps.entries())
        for (std::size_t i = 0; i < e.tensor.size(); ++i) flat[at++] = e.tensor[i];
    return flat;
}

void unpack_params(const Tensor& flat, ParamSet& ps) {
    std::size_t at = 0;
    for (auto& e : ps.entries())
        for (std::size_t i = 0; i < e.tensor.size(); ++i) e.tensor[i] = flat[at++];
}

struct SuiteResult {
    std::string name;
    double max_rel_err;
    double tol;
    bool passed;
};

SuiteResult check(const std::string& name, const GradReport& rep, double tol) {
    return {name, rep.max_rel_err, tol, rep.passed};
}

std::vector<SuiteResult> gradcheck_losses() {
    std::vector<SuiteResult> results;
    Rng rng(90210);
    const double h_step = 1e-4;
    const double tol = 1e-5;

    const Tensor x = random_image(3, 8, 8, rng);
    Tensor xhat = random_image(3, 8, 8, rng);
    // keep |x - xhat| away from the L1 kink so central differences are valid
    for (std::size_t i = 0; i < xhat.size(); ++i)
        if (std::abs(x[i] - xhat[i]) < 0.05) xhat[i] = x[i] + (xhat[i] >= x[i] ? 0.05 : -0.05);

    Mask mask(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int xx = 0; xx < 8; ++xx) mask.at(y, xx) = (y + xx) % 3 == 0 ? 1 : 0;

    results.push_back(check(
        "l1_masked/d_xhat",
        grad_check([&](const Tensor& p) { return l1_masked(x, p, mask).value; },
                   l1_masked(x, xhat, mask).grads.at("xhat"), xhat, h_step, tol),
        tol));

    const FeatureExtractor extractor;
    results.push_back(check(
        "perceptual/d_xhat",
        grad_check([&](const Tensor& p) { return perceptual(x, p, extractor).value; },
                   perceptual(x, xhat, extractor).grads.at("xhat"), xhat, h_step, tol),
        tol));

    Tensor d_real = random_image(1, 4, 4, rng);
    Tensor d_fake = random_image(1, 4, 4, rng);
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        d_real[i] = d_real[i] * 4.0 - 2.0;
        d_fake[i] = d_fake[i] * 4.0 - 2.0;
    }
    Mask m_logit(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int xx = 0; xx < 4; ++xx) m_logit.at(y, xx) = (y ^ xx) & 1;
    results.push_back(check(
        "adversarial_d/d_real",
        grad_check([&](const Tensor& p) { return adversarial_d(p, d_fake, m_logit).value; },
                   adversarial_d(d_real, d_fake, m_logit).grads.at("d_real"), d_real, h_step, tol),
        tol));
    results.push_back(check(
        "adversarial_d/d_fake",
        grad_check([&](const Tensor& p) { return adversarial_d(d_real, p, m_logit).value; },
                   adversarial_d(d_real, d_fake, m_logit).grads.at("d_fake"), d_fake, h_step, tol),
        tol));
    results.push_back(check(
        "adversarial_g/d_fake",
        grad_check([&](const Tensor& p) { return adversarial_g(p).value; },
                   adversarial_g(d_fake).grads.at("d_fake"), d_fake, h_step, tol),
        tol));

    // gradient penalty: parameter gradient of ||grad_x D(x)||^2 for a toy
    // two-layer conv discriminator (exercises differentiation through the
    // backward pass)
    {
        ParamSet toy(7);
        Rng init = Rng(7).fork(fnv1a("toy"));
        auto he = [&](std::vector<int> shape, int fan_in) {
            Tensor t(shape);
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = init.normal(0.0, std::sqrt(2.0 / fan_in));
            return t;
        };
        toy.add("w0", he({4, 3, 3, 3}, 27));
        toy.add("w1", he({1, 4, 3, 3}, 36));
        const Tensor probe = random_image(3, 8, 8, rng);
        auto penalty_at = [&](const ParamSet& ps) {
            VarMap vm = lift_params(ps, /*requires_grad=*/true);
            auto disc = [&](const ad::Var& input) {
                ad::Var mid = ad::leaky_relu(ad::conv2d(input, vm.at("w0"), ConvGeom{1, 1, 1}), 0.2);
                return ad::conv2d(mid, vm.at("w1"), ConvGeom{1, 1, 1});
            };
            ad::Var x_leaf = ad::leaf(probe, /*requires_grad=*/true);
            ad::Var lp = loss_expr::gradient_penalty(disc, x_leaf);
            return std::make_pair(lp, vm);
        };
        auto [lp, vm] = penalty_at(toy);
        ad::GradMap gm = ad::backward(lp);
        ParamSet grads = toy;
        for (auto& e : grads.entries()) e.tensor = gm.tensor(vm.at(e.name));
        results.push_back(check(
            "gradient_penalty/d_theta",
            grad_check(
                [&](const Tensor& flat) {
                    ParamSet ps = toy;
                    unpack_params(flat, ps);
                    return penalty_at(ps).first.val()[0];
                },
                pack_params(grads), pack_params(toy), h_step, tol),
            tol));
    }

    {
        std::vector<Tensor> feats_real, feats_fake;
        for (int l = 0; l < 3; ++l) {
            feats_real.push_back(random_image(2, 4, 4, rng));
            Tensor f = random_image(2, 4, 4, rng);
            for (std::size_t i = 0; i < f.size(); ++i)
                if (std::abs(f[i] - feats_real[l][i]) < 0.05) f[i] = feats_real[l][i] + 0.05;
            feats_fake.push_back(std::move(f));
        }
        LossValue fm = feature_match(feats_real, feats_fake);
        // walk one layer; the others are symmetric
        results.push_back(check(
            "feature_match/d_fake0",
            grad_check(
                [&](const Tensor& p) {
                    std::vector<Tensor> fakes = feats_fake;
                    fakes[0] = p;
                    return feature_match(feats_real, fakes).value;
                },
                fm.grads.at("fake_0"), feats_fake[0], h_step, tol),
            tol));
    }

    results.push_back(check(
        "tv/d_xhat",
        grad_check([&](const Tensor& p) { return tv(p, 2.0).value; }, tv(xhat, 2.0).grads.at("xhat"),
                   xhat, h_step, tol),
        tol));

    // frozen-w focal frequency objective: differentiate sum c(u,v)|delta|^2
    // with c fixed at the evaluation point
    {
        const Tensor w_probe = xhat;
        LossValue at_point = ffl(x, w_probe, 1.0);
        const Tensor frozen_x = x;
        auto frozen_objective = [&](const Tensor& p) {
            // recompute with the weight grid pinned at w_probe's residual
            ad::Var xv = ad::constant(frozen_x);
            ad::Var xh = ad::leaf(p, false);
            ad::Var diff = ad::sub(xv, xh);
            ad::Var spec = ad::fft2_stack(diff);
            ad::Var ref_diff = ad::sub(ad::constant(frozen_x), ad::constant(w_probe));
            const Tensor ref = ad::fft2_stack(ref_diff).val();
            const int c = frozen_x.dim(0), hh = frozen_x.dim(1), ww = frozen_x.dim(2);
            Tensor wgrid({2 * c, hh, ww});
            const std::size_t plane = static_cast<std::size_t>(hh) * ww;
            for (int ci = 0; ci < c; ++ci)
                for (std::size_t i = 0; i < plane; ++i) {
                    const double re = ref[ci * plane + i];
                    const double im = ref[(static_cast<std::size_t>(c) + ci) * plane + i];
                    const double mag = std::sqrt(re * re + im * im);
                    wgrid[ci * plane + i] = mag;
                    wgrid[(static_cast<std::size_t>(c) + ci) * plane + i] = mag;
                }
            ad::Var weighted = ad::mul_const(ad::mul(spec, spec), wgrid);
            return ad::scale(ad::sum(weighted), 1.0 / (static_cast<double>(hh) * ww * c)).val()[0];
        };
        results.push_back(check(
            "ffl/d_xhat(frozen w)",
            grad_check(frozen_objective, at_point.grads.at("xhat"), w_probe, h_step, tol), tol));
    }

    // composite objectives combine linearly; verify the joint gradient
    {
        auto joint_value = [&](const Tensor& p) {
            LossValue l1v = l1_masked(x, p, mask);
            LossValue advv = adversarial_g(d_fake);
            LossValue plv = perceptual(x, p, extractor);
            std::vector<Tensor> fr = {random_image(2, 4, 4, rng)};
            LossWeights w;
            LossValue fmv;
            fmv.value = 0.0;  // constant term, no xhat dependence
            LossValue lama = lama_total(l1v, advv, plv, fmv, w);
            LossValue tvv = tv(p, w.beta_tv);
            LossValue fflv = ffl(x, p, w.alpha_focal);
            return joint_total(lama, tvv, fflv, w);
        };
        // FFL refreezes w at each probe point; freeze the full objective's
        // weight the same way the per-term checks do by probing only the
        // linear combination property instead: grad(joint) vs weighted sum.
        LossValue l1v = l1_masked(x, xhat, mask);
        LossValue advv = adversarial_g(d_fake);
        LossValue plv = perceptual(x, xhat, extractor);
        LossValue fmv;
        LossWeights w;
        LossValue lama = lama_total(l1v, advv, plv, fmv, w);
        LossValue tvv = tv(xhat, w.beta_tv);
        LossValue fflv = ffl(x, xhat, w.alpha_focal);
        LossValue joint = joint_value(xhat);
        Tensor expect = Tensor::zeros(xhat.shape());
        for (std::size_t i = 0; i < expect.size(); ++i)
            expect[i] = w.alpha_lama * (w.lambda_l1 * l1v.grads.at("xhat")[i] +
                                        w.lambda_pl * plv.grads.at("xhat")[i]) +
                        w.alpha_tv * tvv.grads.at("xhat")[i] + w.alpha_ffl * fflv.grads.at("xhat")[i];
        double worst = 0.0;
        for (std::size_t i = 0; i < expect.size(); ++i) {
            const double denom = std::max({std::abs(expect[i]), std::abs(joint.grads.at("xhat")[i]), 1e-8});
            worst = std::max(worst, std::abs(expect[i] - joint.grads.at("xhat")[i]) / denom);
        }
        results.push_back({"joint_total/linearity", worst, 1e-12, worst <= 1e-12});
    }

    return results;
}

std::vector<SuiteResult> gradcheck_model() {
    std::vector<SuiteResult> results;
    const double tol = 1e-4;
    const double h_step = 1e-5;

    FfcConfig cfg;
    cfg.base_width = 4;
    cfg.n_residual = 1;
    ParamSet params = init_generator_params(cfg, 451);
    Rng rng(1234);
    const Tensor x = random_image(3, 16, 16, rng);
    Mask mask(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int xx = 0; xx < 16; ++xx) mask.at(y, xx) = ((y / 4) + (xx / 4)) % 2;
    Tensor probe({3, 16, 16});
    for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = rng.uniform(-1.0, 1.0);

    auto objective = [&](const ParamSet& ps) {
        VarMap vm = lift_params(ps, /*requires_grad=*/true);
        ad::Var out = generator_forward(ad::constant(x), mask, vm, cfg);
        return std::make_pair(ad::sum(ad::mul_const(out, probe)), std::move(vm));
    };
    auto [scalar, vm] = objective(params);
    ad::GradMap gm = ad::backward(scalar);
    ParamSet grads = params;
    for (auto& e : grads.entries()) e.tensor = gm.tensor(vm.at(e.name));

    results.push_back(check(
        "generator/d_theta",
        grad_check(
            [&](const Tensor& flat) {
                ParamSet ps = params;
                unpack_params(flat, ps);
                return objective(ps).first.val()[0];
            },
            pack_params(grads), pack_params(params), h_step, tol),
        tol));

    // two stacked FFC blocks with a scalar head
    {
        FfcConfig bcfg = cfg;
        bcfg.n_residual = 2;
        ParamSet bparams(99);
        Rng init = Rng(99).fork(fnv1a("ffc-pair"));
        auto he = [&](std::vector<int> shape, int fan_in) {
            Tensor t(shape);
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = init.normal(0.0, std::sqrt(2.0 / fan_in));
            return t;
        };
        const int cl = 2, cg = 2;
        for (int r = 0; r < 2; ++r) {
            const std::string p = "g.res" + std::to_string(r);
            bparams.add(p + ".ll.w", he({cl, cl, 3, 3}, cl * 9));
            bparams.add(p + ".ll.b", Tensor::zeros({cl}));
            bparams.add(p + ".gl.w", he({cl, cg, 3, 3}, cg * 9));
            bparams.add(p + ".gl.b", Tensor::zeros({cl}));
            bparams.add(p + ".lg.w", he({cg, cl, 3, 3}, cl * 9));
            bparams.add(p + ".lg.b", Tensor::zeros({cg}));
            bparams.add(p + ".spec.w", he({2 * cg, 2 * cg, 1, 1}, 2 * cg));
            bparams.add(p + ".spec.b", Tensor::zeros({2 * cg}));
            bparams.add(p + ".spec.norm.gamma", Tensor::full({2 * cg}, 1.0));
            bparams.add(p + ".spec.norm.beta", Tensor::zeros({2 * cg}));
            bparams.add(p + ".norm_l.gamma", Tensor::full({cl}, 1.0));
            bparams.add(p + ".norm_l.beta", Tensor::zeros({cl}));
            bparams.add(p + ".norm_g.gamma", Tensor::full({cg}, 1.0));
            bparams.add(p + ".norm_g.beta", Tensor::zeros({cg}));
        }
        const Tensor xin = random_image(cl + cg, 16, 16, rng);
        Tensor head({1, 16, 16});
        for (std::size_t i = 0; i < head.size(); ++i) head[i] = rng.uniform(-1.0, 1.0);
        auto block_obj = [&](const ParamSet& ps) {
            VarMap vm2 = lift_params(ps, true);
            ad::Var xl = ad::slice_channels(ad::constant(xin), 0, cl);
            ad::Var xg = ad::slice_channels(ad::constant(xin), cl, cl + cg);
            for (int r = 0; r < 2; ++r) {
                auto [fl, fg] = ffc_block(xl, xg, vm2, "g.res" + std::to_string(r), bcfg);
                xl = ad::add(xl, fl);
                xg = ad::add(xg, fg);
            }
            ad::Var merged = ad::concat_channels(xl, xg);
            ad::Var pooled = ad::sum(ad::mul(merged, merged));
            return std::make_pair(pooled, std::move(vm2));
        };
        auto [bscalar, bvm] = block_obj(bparams);
        ad::GradMap bgm = ad::backward(bscalar);
        ParamSet bgrads = bparams;
        for (auto& e : bgrads.entries()) e.tensor = bgm.tensor(bvm.at(e.name));
        results.push_back(check(
            "ffc_block_pair/d_theta",
            grad_check(
                [&](const Tensor& flat) {
                    ParamSet ps = bparams;
                    unpack_params(flat, ps);
                    return block_obj(ps).first.val()[0];
                },
                pack_params(bgrads), pack_params(bparams), h_step, tol),
        tol));
    }

    return results;
}

void print_results(std::ostream& os, const std::vector<SuiteResult>& results) {
    for (const auto& r : results) {
        os << std::left << std::setw(32) << r.name << " max_rel_err=" << std::scientific
           << std::setprecision(3) << r.max_rel_err << "  tol=" << r.tol << "  "
           << (r.passed ? "PASS" : "FAIL") << "\n";
    }
}

int cmd_gen_masks(const std::vector<std::string>& args, CLI::App* sub, const std::string& type_name,
                  const std::string& policy_name, int count, int size, std::uint64_t seed,
                  const std::string& out_dir) {
    (void)sub;
    fs::create_directories(out_dir);
    std::vector<MaskType> types;
    if (!type_name.empty()) {
        types.assign(static_cast<std::size_t>(count), mask_type_from_name(type_name));
    } else {
        const MaskPolicy policy = mask_policy_from_name(policy_name);
        Rng rng = Rng(seed).fork(fnv1a("cli-mask-type"));
        for (int i = 0; i < count; ++i) types.push_back(sample_type(policy, rng));
    }
    nlohmann::json produced = nlohmann::json::array();
    for (int i = 0; i < count; ++i) {
        const Rng mask_rng = Rng(seed).fork(fnv1a("cli-mask"), i);
        const Mask m = generate(types[i], size, size, mask_rng);
        std::ostringstream name;
        name << "mask-" << std::setw(4) << std::setfill('0') << i << "-" << mask_type_name(types[i])
             << ".pbm";
        save_mask(m, (fs::path(out_dir) / name.str()).string());
        produced.push_back({{"file", name.str()},
                            {"type", mask_type_name(types[i])},
                            {"coverage", coverage(m)}});
    }
    nlohmann::json resolved = {{"count", count}, {"size", size},     {"seed", seed},
                               {"type", type_name}, {"policy", policy_name}, {"masks", produced}};
    write_manifest(out_dir, "gen-masks", args, resolved);
    return 0;
}

int cmd_synth_data(const std::vector<std::string>& args, int count, int size, std::uint64_t seed,
                   const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::vector<Tensor> images = synth_dataset(count, size, seed);
    for (int i = 0; i < count; ++i) {
        std::ostringstream name;
        name << "synth-" << std::setw(5) << std::setfill('0') << i << ".ppm";
        write_ppm(images[i], (fs::path(out_dir) / name.str()).string());
    }
    write_manifest(out_dir, "synth-data", args,
                   {{"count", count}, {"size", size}, {"seed", seed}});
    return 0;
}

int cmd_train(const std::vector<std::string>& args, const std::string& config_path, int steps_override,
              std::int64_t seed_override, const std::string& out_dir) {
    TrainConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("train: cannot open config " + config_path);
        nlohmann::json j;
        in >> j;
        cfg = TrainConfig::from_json(j);
    }
    if (steps_override >= 0) cfg.steps = steps_override;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    cfg.validate();
    write_manifest(out_dir, "train", args, cfg.to_json());
    const TrainOutcome outcome = run_training(cfg, out_dir);
    nlohmann::json summary;
    summary["final_step"] = outcome.final_step;
    summary["diverged"] = outcome.diverged;
    summary["checkpoint"] = outcome.checkpoint_path;
    summary["val_start"] = outcome.val_start.to_json();
    summary["val_end"] = outcome.val_end.to_json();
    std::ofstream(fs::path(out_dir) / "train-summary.json") << summary.dump(2) << "\n";
    std::cout << "training finished at step " << outcome.final_step
              << (outcome.diverged ? " (diverged)" : "") << "; checkpoint: " << outcome.checkpoint_path
              << "\n";
    return outcome.diverged ? 2 : 0;
}

int cmd_eval(const std::vector<std::string>& args, const std::string& checkpoint_path,
             const std::string& data, const std::string& policy_name, std::uint64_t seed,
             const std::string& metrics_csv, const std::string& baseline_path,
             const std::string& out_dir) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    std::vector<Tensor> images;
    if (data.rfind("synthetic:", 0) == 0) {
        const int n = std::stoi(data.substr(10));
        const Rng base(ckpt.config.seed);
        images = synth_dataset(n, ckpt.config.resolution, base.fork(fnv1a("val-data")).seed());
    } else {
        IngestResult ingest = ingest_images(data, ckpt.config.resolution);
        images = std::move(ingest.val);
        if (images.empty()) images = std::move(ingest.train);
    }

    EvalOptions opts;
    opts.seed = seed;
    opts.metrics.clear();
    std::stringstream ss(metrics_csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) opts.metrics.push_back(item);
    opts.artifact_scores = true;

    const auto& suite = policy_types(mask_policy_from_name(policy_name));
    const FeatureExtractor extractor;
    const EvalReport report = evaluate(ckpt.gen, ckpt.config.gen, images, suite, extractor, opts);

    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "report.json") << report.to_json().dump(2) << "\n";
    std::optional<EvalReport> baseline;
    if (!baseline_path.empty()) {
        std::ifstream in(baseline_path);
        if (!in) throw std::runtime_error("eval: cannot open baseline report " + baseline_path);
        nlohmann::json j;
        in >> j;
        baseline = EvalReport::from_json(j);
    }
    const std::string table = report.render_table(baseline ? &*baseline : nullptr);
    std::ofstream(fs::path(out_dir) / "report.txt") << table;
    std::cout << table;
    write_manifest(out_dir, "eval", args,
                   {{"checkpoint", checkpoint_path},
                    {"data", data},
                    {"policy", policy_name},
                    {"seed", seed},
                    {"metrics", opts.metrics},
                    {"baseline", baseline_path}});
    return 0;
}

int cmd_spectrum(const std::vector<std::string>& args, const std::vector<std::string>& inputs,
                 const std::string& ref_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::optional<Tensor> ref;
    if (!ref_path.empty()) ref = read_image(ref_path);
    nlohmann::json records = nlohmann::json::array();
    for (const std::string& input : inputs) {
        const Tensor img = read_image(input);
        const SpectrumImage spec = spectrum_image(img);
        const std::string stem = fs::path(input).stem().string();
        const std::string spec_file = stem + "-spectrum.pgm";
        write_pgm(spec.grid, (fs::path(out_dir) / spec_file).string());
        nlohmann::json rec;
        rec["input"] = input;
        rec["spectrum"] = spec_file;
        rec["checkerboard_score"] = checkerboard_score(img);
        rec["ripple_score"] = ripple_score(img);
        if (ref) {
            if (!ref->same_shape(img))
                throw dim_error("spectrum: reference shape does not match " + input);
            rec["ffl_vs_ref"] = ffl(*ref, img, 1.0).value;
        }
        records.push_back(rec);
    }
    std::ofstream(fs::path(out_dir) / "spectrum.json") << records.dump(2) << "\n";
    write_manifest(out_dir, "spectrum", args, {{"inputs", inputs}, {"ref", ref_path}});
    return 0;
}

}  // namespace

bool run_gradcheck_suites(std::ostream& os) {
    std::vector<SuiteResult> all = gradcheck_losses();
    std::vector<SuiteResult> model = gradcheck_model();
    all.insert(all.end(), model.begin(), model.end());
    print_results(os, all);
    bool ok = true;
    for (const auto& r : all) ok = ok && r.passed;
    return ok;
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"desk-scale inpainting laboratory"};
    app.require_subcommand(1);
    app.fallthrough(true);

    std::uint64_t seed = 1;
    std::string config_path;
    std::string out_dir = "out";
    std::string log_level = "info";
    app.add_option("--seed", seed, "base seed for all derived random streams");
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--log-level", log_level, "quiet|info|debug");

    auto* gen_masks = app.add_subcommand("gen-masks", "generate mask files");
    std::string type_name, policy_name = "general";
    int count = 1, size = 256;
    gen_masks->add_option("--type", type_name, "single mask type");
    gen_masks->add_option("--policy", policy_name, "mask policy (lama|lama-plus|general)");
    gen_masks->add_option("--count", count, "number of masks");
    gen_masks->add_option("--size", size, "mask side length");

    auto* synth = app.add_subcommand("synth-data", "write the procedural dataset as PPM files");
    int synth_count = 16, synth_size = 64;
    synth->add_option("--count", synth_count, "number of images");
    synth->add_option("--size", synth_size, "image side length");

    auto* train = app.add_subcommand("train", "run the training loop");
    int steps_override = -1;
    std::int64_t train_seed = -1;
    train->add_option("--steps", steps_override, "override config step count");
    train->add_option("--train-seed", train_seed, "override config seed");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint per mask type");
    std::string checkpoint_path, data = "synthetic:8", eval_policy = "general", baseline_path;
    std::string metrics_csv = "l1,psnr,ssim";
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval_cmd->add_option("--data", data, "image directory or synthetic:<n>");
    eval_cmd->add_option("--policy", eval_policy, "mask suite policy");
    eval_cmd->add_option("--metrics", metrics_csv, "comma-separated metric list");
    eval_cmd->add_option("--baseline-report", baseline_path, "report.json to diff against");

    auto* spectrum = app.add_subcommand("spectrum", "spectrum images and artifact scores");
    std::vector<std::string> inputs;
    std::string ref_path;
    spectrum->add_option("--input", inputs, "input image(s)")->required();
    spectrum->add_option("--ref", ref_path, "reference image for the frequency loss");

    auto* gradcheck = app.add_subcommand("gradcheck", "run the gradient verification suites");
    bool gc_all = true;
    gradcheck->add_flag("--all", gc_all, "run every registered suite (default)");

    std::vector<const char*> argv;
    argv.push_back("inpaintlab");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        std::ostringstream os;
        const int code = app.exit(e, std::cout, std::cerr);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen_masks->parsed())
            return cmd_gen_masks(args, gen_masks, type_name, policy_name, count, size, seed, out_dir);
        if (synth->parsed()) return cmd_synth_data(args, synth_count, synth_size, seed, out_dir);
        if (train->parsed()) return cmd_train(args, config_path, steps_override, train_seed, out_dir);
        if (eval_cmd->parsed())
            return cmd_eval(args, checkpoint_path, data, eval_policy, seed, metrics_csv, baseline_path,
                            out_dir);
        if (spectrum->parsed()) return cmd_spectrum(args, inputs, ref_path, out_dir);
        if (gradcheck->parsed()) {
            fs::create_directories(out_dir);
            std::ostringstream table;
            const bool ok = run_gradcheck_suites(table);
            std::cout << table.str();
            std::ofstream(fs::path(out_dir) / "gradcheck.txt") << table.str();
            write_manifest(out_dir, "gradcheck", args, {{"passed", ok}});
            return ok ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace inpaint::cli
