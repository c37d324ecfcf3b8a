#include "entk/mc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "entk/errors.hpp"
#include "entk/parallel.hpp"

namespace entk::finite {

namespace {

struct SampleKernels {
    Eigen::MatrixXd ntk, nngp;
};

// Pairwise summation over [lo, hi) of f(i); the tree shape depends only on the range.
Eigen::MatrixXd pairwise_sum(std::size_t lo, std::size_t hi, const std::function<const Eigen::MatrixXd&(std::size_t)>& f)
{
    if (hi - lo == 1) return f(lo);
    std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

}  // namespace

EmpiricalEstimate estimate_kernels(const ArchitectureSpec& arch, int width, int n_samples, const std::vector<planar::Image>& inputs,
                                   std::uint64_t seed)
{
    if (n_samples < 2) throw ConfigError("Monte-Carlo estimation needs at least two samples");
    if (inputs.empty()) throw ShapeError("Monte-Carlo estimation needs inputs");
    const std::size_t n = inputs.size();
    const auto& f0 = inputs.front();
    std::vector<SampleKernels> samples(static_cast<std::size_t>(n_samples));
    const std::uint64_t wseed = mix_seed(seed, static_cast<std::uint64_t>(width));
    parallel_for(samples.size(), [&](std::size_t s) {
        FiniteParamSet p = init_params(arch, f0.height, f0.width, f0.channels, width, mix_seed(wseed, s));
        std::vector<Gradients> grads(n);
        std::vector<std::vector<double>> phi(n);
        for (std::size_t i = 0; i < n; ++i) {
            ForwardCache c;
            forward(p, inputs[i], &c);
            grads[i] = grad_params(p, c);
            phi[i] = nngp_features(p, c);
        }
        SampleKernels k{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n)};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                k.ntk(i, j) = k.ntk(j, i) = empirical_ntk(grads[i], grads[j]);
                double v = 0.0;
                for (std::size_t q = 0; q < phi[i].size(); ++q) v += phi[i][q] * phi[j][q];
                k.nngp(i, j) = k.nngp(j, i) = v;
            }
        samples[s] = std::move(k);
    });
    const double ns = n_samples;
    EmpiricalEstimate e;
    e.width = width;
    e.n_samples = n_samples;
    e.ntk_mean = pairwise_sum(0, samples.size(), [&](std::size_t s) -> const Eigen::MatrixXd& { return samples[s].ntk; }) / ns;
    e.nngp_mean = pairwise_sum(0, samples.size(), [&](std::size_t s) -> const Eigen::MatrixXd& { return samples[s].nngp; }) / ns;
    std::vector<Eigen::MatrixXd> dn(samples.size()), dg(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        dn[s] = (samples[s].ntk - e.ntk_mean).cwiseAbs2();
        dg[s] = (samples[s].nngp - e.nngp_mean).cwiseAbs2();
    }
    Eigen::MatrixXd vn = pairwise_sum(0, dn.size(), [&](std::size_t s) -> const Eigen::MatrixXd& { return dn[s]; }) / (ns - 1.0);
    Eigen::MatrixXd vg = pairwise_sum(0, dg.size(), [&](std::size_t s) -> const Eigen::MatrixXd& { return dg[s]; }) / (ns - 1.0);
    e.ntk_se = (vn / ns).cwiseSqrt();
    e.nngp_se = (vg / ns).cwiseSqrt();
    return e;
}

std::vector<McRow> mc_convergence(const ArchitectureSpec& arch, std::vector<int> widths, int n_samples,
                                  const std::vector<planar::Image>& inputs, std::uint64_t seed)
{
    if (widths.empty()) throw ConfigError("mc: no widths given");
    std::sort(widths.begin(), widths.end());
    widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
    const std::size_t n = inputs.size();
    Eigen::MatrixXd an_ntk(n, n), an_nngp(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            auto s = std::get<ScalarKernel>(run_pipeline(arch, PipelineInput(inputs[i]), PipelineInput(inputs[j])));
            an_ntk(i, j) = an_ntk(j, i) = s.theta;
            an_nngp(i, j) = an_nngp(j, i) = s.k_xy;
        }
    auto rel = [&](const Eigen::MatrixXd& m, const Eigen::MatrixXd& a) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            double d = std::abs(a.data()[i]);
            if (d < 1e-300) throw InvalidKernelError("mc: analytic kernel entry is zero; relative error undefined");
            s += m.data()[i] / d;
        }
        return s / static_cast<double>(a.size());
    };
    std::vector<McRow> rows;
    for (int w : widths) {
        EmpiricalEstimate e = estimate_kernels(arch, w, n_samples, inputs, seed);
        rows.push_back({w, "ntk", rel((e.ntk_mean - an_ntk).cwiseAbs(), an_ntk), rel(e.ntk_se, an_ntk), n_samples});
        rows.push_back({w, "nngp", rel((e.nngp_mean - an_nngp).cwiseAbs(), an_nngp), rel(e.nngp_se, an_nngp), n_samples});
    }
    return rows;
}

void write_mc_csv(const std::string& path, const std::vector<McRow>& rows)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "width,kernel_type,rel_error,std,n_samples\n" << std::setprecision(17);
    for (const auto& r : rows) os << r.width << ',' << r.kernel_type << ',' << r.rel_error << ',' << r.std << ',' << r.n_samples << '\n';
    if (!os) throw IoError("write to '" + path + "' failed");
}

double loglog_slope(const std::vector<McRow>& rows, const std::string& kernel_type)
{
    std::vector<double> x, y;
    for (const auto& r : rows)
        if (r.kernel_type == kernel_type) {
            x.push_back(std::log(static_cast<double>(r.width)));
            y.push_back(std::log(r.rel_error));
        }
    if (x.size() < 2) throw DomainError("loglog_slope: need at least two widths");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / static_cast<double>(x.size());
        my += y[i] / static_cast<double>(x.size());
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

ArchitectureSpec default_mc_arch(NonlinKind nl, int support)
{
    ArchitectureSpec a;
    a.group.n_rot = 4;
    a.group.padding = planar::Padding::circular;
    a.layers.push_back(Layer::lifting(support));
    for (int i = 0; i < 4; ++i) {
        a.layers.push_back(Layer::act(nl));
        a.layers.push_back(Layer::gconv(support));
    }
    a.layers.push_back(Layer::gpool());
    return a;
}

}  // namespace entk::finite
