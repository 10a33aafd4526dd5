#include "inpaint/eval.hpp"

#include "inpaint/frequency.hpp"
#include "inpaint/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace inpaint {

Tensor composite(const Tensor& x, const Tensor& xhat, const Mask& m) {
    if (!x.same_shape(xhat)) throw dim_error("composite: image shapes differ");
    if (x.rank() != 3 || x.dim(1) != m.height || x.dim(2) != m.width)
        throw dim_error("composite: mask dims do not match image");
    Tensor out(x.shape());
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                out.at3(ci, y, xx) = m.at(y, xx) ? xhat.at3(ci, y, xx) : x.at3(ci, y, xx);
    return out;
}

double psnr(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw dim_error("psnr: shapes differ");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw dim_error("ssim: shapes differ");
    if (a.rank() != 3) throw dim_error("ssim: images must be (C,H,W)");
    const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
    constexpr int kWin = 11;
    if (h < kWin || w < kWin) throw dim_error("ssim: image smaller than the 11x11 window");

    // normalized 11x11 Gaussian, sigma 1.5
    static const std::vector<double> kernel = [] {
        std::vector<double> k(kWin * kWin);
        const double sigma = 1.5;
        double total = 0.0;
        for (int y = 0; y < kWin; ++y)
            for (int x = 0; x < kWin; ++x) {
                const double dy = y - kWin / 2, dx = x - kWin / 2;
                k[y * kWin + x] = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
                total += k[y * kWin + x];
            }
        for (double& v : k) v /= total;
        return k;
    }();

    constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
    constexpr double kC2 = 0.03 * 0.03;  // (K2*L)^2

    double acc = 0.0;
    std::size_t n = 0;
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y + kWin <= h; ++y) {
            for (int x = 0; x + kWin <= w; ++x) {
                double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
                for (int ky = 0; ky < kWin; ++ky)
                    for (int kx = 0; kx < kWin; ++kx) {
                        const double wgt = kernel[ky * kWin + kx];
                        const double pa = a.at3(ci, y + ky, x + kx);
                        const double pb = b.at3(ci, y + ky, x + kx);
                        mu_a += wgt * pa;
                        mu_b += wgt * pb;
                        aa += wgt * pa * pa;
                        bb += wgt * pb * pb;
                        ab += wgt * pa * pb;
                    }
                const double var_a = aa - mu_a * mu_a;
                const double var_b = bb - mu_b * mu_b;
                const double cov = ab - mu_a * mu_b;
                const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
                const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
                acc += num / den;
                ++n;
            }
        }
    }
    return acc / static_cast<double>(n);
}

void jacobi_eigen(std::vector<double> a, int n, std::vector<double>& eigenvalues,
                  std::vector<double>& eigenvectors) {
    eigenvectors.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) eigenvectors[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto& v = eigenvectors;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[static_cast<std::size_t>(p) * n + q] * a[static_cast<std::size_t>(p) * n + q];
        double norm = 0.0;
        for (int p = 0; p < n; ++p) norm += std::abs(a[static_cast<std::size_t>(p) * n + p]);
        if (off <= 1e-24 * std::max(1.0, norm * norm)) {
            eigenvalues.resize(n);
            for (int i = 0; i < n; ++i) eigenvalues[i] = a[static_cast<std::size_t>(i) * n + i];
            return;
        }
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[static_cast<std::size_t>(p) * n + q];
                if (apq == 0.0) continue;
                const double app = a[static_cast<std::size_t>(p) * n + p];
                const double aqq = a[static_cast<std::size_t>(q) * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[static_cast<std::size_t>(k) * n + p];
                    const double akq = a[static_cast<std::size_t>(k) * n + q];
                    a[static_cast<std::size_t>(k) * n + p] = cs * akp - sn * akq;
                    a[static_cast<std::size_t>(k) * n + q] = sn * akp + cs * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[static_cast<std::size_t>(p) * n + k];
                    const double aqk = a[static_cast<std::size_t>(q) * n + k];
                    a[static_cast<std::size_t>(p) * n + k] = cs * apk - sn * aqk;
                    a[static_cast<std::size_t>(q) * n + k] = sn * apk + cs * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[static_cast<std::size_t>(k) * n + p];
                    const double vkq = v[static_cast<std::size_t>(k) * n + q];
                    v[static_cast<std::size_t>(k) * n + p] = cs * vkp - sn * vkq;
                    v[static_cast<std::size_t>(k) * n + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    throw eval_error("jacobi_eigen: no convergence after 100 sweeps");
}

namespace {

struct Gaussian {
    std::vector<double> mu;
    std::vector<double> sigma;  // d*d row-major
    int d = 0;
};

Gaussian fit_gaussian(const std::vector<std::vector<double>>& feats) {
    const int n = static_cast<int>(feats.size());
    const int d = static_cast<int>(feats.front().size());
    Gaussian g;
    g.d = d;
    g.mu.assign(d, 0.0);
    for (const auto& f : feats) {
        if (static_cast<int>(f.size()) != d) throw eval_error("proxy_fid: inconsistent feature dims");
        for (int i = 0; i < d; ++i) g.mu[i] += f[i];
    }
    for (double& m : g.mu) m /= n;
    g.sigma.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (const auto& f : feats)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                g.sigma[static_cast<std::size_t>(i) * d + j] += (f[i] - g.mu[i]) * (f[j] - g.mu[j]);
    for (double& s : g.sigma) s /= (n - 1);  // unbiased estimator
    return g;
}

constexpr double kEigFloor = 1e-12;

// U diag(sqrt(clamped lambda)) U^T
std::vector<double> sqrtm_psd(const std::vector<double>& m, int d) {
    std::vector<double> lambda, u;
    jacobi_eigen(m, d, lambda, u);
    std::vector<double> out(static_cast<std::size_t>(d) * d, 0.0);
    for (int k = 0; k < d; ++k) {
        const double lam = lambda[k] < kEigFloor ? 0.0 : lambda[k];
        const double s = std::sqrt(lam);
        if (s == 0.0) continue;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                out[static_cast<std::size_t>(i) * d + j] +=
                    s * u[static_cast<std::size_t>(i) * d + k] * u[static_cast<std::size_t>(j) * d + k];
    }
    return out;
}

std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, int d) {
    std::vector<double> c(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const double av = a[static_cast<std::size_t>(i) * d + k];
            if (av == 0.0) continue;
            for (int j = 0; j < d; ++j) c[static_cast<std::size_t>(i) * d + j] += av * b[static_cast<std::size_t>(k) * d + j];
        }
    return c;
}

}  // namespace

double proxy_fid(const std::vector<std::vector<double>>& feats_real,
                 const std::vector<std::vector<double>>& feats_fake) {
    if (feats_real.empty() || feats_fake.empty()) throw eval_error("proxy_fid: empty feature set");
    const int d = static_cast<int>(feats_real.front().size());
    if (static_cast<int>(feats_real.size()) < d + 1 || static_cast<int>(feats_fake.size()) < d + 1)
        throw eval_error("proxy_fid: need at least dim+1 = " + std::to_string(d + 1) +
                         " samples per set");
    const Gaussian gr = fit_gaussian(feats_real);
    const Gaussian gf = fit_gaussian(feats_fake);
    if (gf.d != d) throw eval_error("proxy_fid: feature dims differ between sets");

    double mean_term = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = gr.mu[i] - gf.mu[i];
        mean_term += diff * diff;
    }
    double tr_r = 0.0, tr_f = 0.0;
    for (int i = 0; i < d; ++i) {
        tr_r += gr.sigma[static_cast<std::size_t>(i) * d + i];
        tr_f += gf.sigma[static_cast<std::size_t>(i) * d + i];
    }

    // Tr((S_r S_f)^{1/2}) = Tr((A S_f A)^{1/2}) with A = S_r^{1/2}
    const std::vector<double> a = sqrtm_psd(gr.sigma, d);
    std::vector<double> inner = matmul(matmul(a, gf.sigma, d), a, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double s = 0.5 * (inner[static_cast<std::size_t>(i) * d + j] + inner[static_cast<std::size_t>(j) * d + i]);
            inner[static_cast<std::size_t>(i) * d + j] = s;
            inner[static_cast<std::size_t>(j) * d + i] = s;
        }
    std::vector<double> lambda, u;
    jacobi_eigen(inner, d, lambda, u);
    double tr_sqrt = 0.0;
    for (double lam : lambda) tr_sqrt += std::sqrt(lam < kEigFloor ? 0.0 : lam);

    return mean_term + tr_r + tr_f - 2.0 * tr_sqrt;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["header"] = header;
    j["seed"] = seed;
    j["sample_count"] = sample_count;
    j["metrics"] = metric_names;
    nlohmann::json rows_json = nlohmann::json::object();
    for (const auto& [type, metrics] : rows) {
        nlohmann::json row = nlohmann::json::object();
        for (const auto& [metric, cell] : metrics)
            row[metric] = {{"mean", cell.mean}, {"count", cell.count}, {"failures", cell.failures}};
        rows_json[type] = row;
    }
    j["rows"] = rows_json;
    return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    r.header = j.at("header").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.sample_count = j.at("sample_count").get<int>();
    r.metric_names = j.at("metrics").get<std::vector<std::string>>();
    for (const auto& [type, row] : j.at("rows").items())
        for (const auto& [metric, cell] : row.items())
            r.rows[type][metric] = {cell.at("mean").get<double>(), cell.at("count").get<int>(),
                                    cell.at("failures").get<int>()};
    return r;
}

std::string EvalReport::render_table(const EvalReport* baseline) const {
    std::ostringstream os;
    os << header << "\n";
    os << std::left << std::setw(18) << "mask type";
    for (const auto& m : metric_names) {
        os << std::right << std::setw(12) << m;
        if (baseline) os << std::right << std::setw(12) << ("d:" + m);
    }
    os << "\n";
    for (const auto& [type, metrics] : rows) {
        os << std::left << std::setw(18) << type;
        for (const auto& m : metric_names) {
            auto it = metrics.find(m);
            if (it == metrics.end()) {
                os << std::right << std::setw(12) << "-";
                if (baseline) os << std::right << std::setw(12) << "-";
                continue;
            }
            os << std::right << std::setw(12) << std::fixed << std::setprecision(4) << it->second.mean;
            if (baseline) {
                const auto brow = baseline->rows.find(type);
                if (brow != baseline->rows.end() && brow->second.count(m)) {
                    os << std::right << std::setw(12) << std::showpos << std::fixed << std::setprecision(4)
                       << it->second.mean - brow->second.at(m).mean << std::noshowpos;
                } else {
                    os << std::right << std::setw(12) << "-";
                }
            }
        }
        os << "\n";
    }
    return os.str();
}

EvalReport evaluate(const ParamSet& gen_params, const FfcConfig& gen_cfg,
                    const std::vector<Tensor>& images, const std::vector<MaskType>& suite,
                    const FeatureExtractor& extractor, const EvalOptions& opts) {
    if (images.empty()) throw eval_error("evaluate: no validation images");
    EvalReport report;
    report.header =
        "per-mask-type evaluation; proxy-fid uses the artifact's fixed feature extractor, "
        "NOT an Inception network";
    report.seed = opts.seed;
    report.sample_count = static_cast<int>(images.size());
    report.metric_names = opts.metrics;
    if (opts.artifact_scores) {
        report.metric_names.push_back("checkerboard");
        report.metric_names.push_back("ripple");
    }

    const bool want_fid =
        std::find(opts.metrics.begin(), opts.metrics.end(), "proxy_fid") != opts.metrics.end();
    const Rng base(opts.seed);

    for (const MaskType type : suite) {
        const std::string tname = mask_type_name(type);
        std::map<std::string, EvalCell>& row = report.rows[tname];
        std::vector<std::vector<double>> feats_real, feats_fake;
        for (std::size_t i = 0; i < images.size(); ++i) {
            const Tensor& x = images[i];
            try {
                const Mask m = generate(type, x.dim(1), x.dim(2),
                                        base.fork(fnv1a("eval-mask"), i, static_cast<std::uint64_t>(type)));
                const Tensor xhat = generator_forward(x, m, gen_params, gen_cfg);
                const Tensor comp = composite(x, xhat, m);
                for (const auto& metric : opts.metrics) {
                    double value = 0.0;
                    if (metric == "l1") {
                        double acc = 0.0;
                        for (std::size_t k = 0; k < x.size(); ++k) acc += std::abs(comp[k] - x[k]);
                        value = acc / static_cast<double>(x.size());
                    } else if (metric == "psnr") {
                        value = psnr(comp, x);
                    } else if (metric == "ssim") {
                        value = ssim(comp, x);
                    } else if (metric == "proxy_fid") {
                        continue;  // set-level, handled below
                    } else {
                        throw eval_error("evaluate: unknown metric " + metric);
                    }
                    EvalCell& cell = row[metric];
                    cell.mean += value;
                    cell.count += 1;
                }
                if (opts.artifact_scores) {
                    EvalCell& cb = row["checkerboard"];
                    cb.mean += checkerboard_score(xhat);
                    cb.count += 1;
                    EvalCell& rp = row["ripple"];
                    rp.mean += ripple_score(xhat);
                    rp.count += 1;
                }
                if (want_fid) {
                    feats_real.push_back(extractor.pooled_features(x));
                    feats_fake.push_back(extractor.pooled_features(comp));
                }
            } catch (const std::exception&) {
                for (const auto& metric : report.metric_names) row[metric].failures += 1;
            }
        }
        for (auto& [metric, cell] : row)
            if (cell.count > 0) cell.mean /= cell.count;
        if (want_fid) {
            EvalCell& cell = row["proxy_fid"];
            try {
                cell.mean = proxy_fid(feats_real, feats_fake);
                cell.count = static_cast<int>(feats_real.size());
            } catch (const std::exception&) {
                cell.failures += 1;
            }
        }
    }
    return report;
}

}  // namespace inpaint
