#include "entk/equivalence.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "entk/errors.hpp"
#include "entk/parallel.hpp"
#include "entk/pipeline.hpp"
#include "entk/predict.hpp"

namespace entk {

using planar::Image;

FiniteGroupSpec FiniteGroupSpec::rotations(int height, int width, int n_rot)
{
    planar::GridGeom{height, width, planar::Padding::circular, n_rot}.validate();
    FiniteGroupSpec s;
    s.kind_ = Kind::rotations;
    s.h_ = height;
    s.w_ = width;
    s.n_rot_ = n_rot;
    return s;
}

FiniteGroupSpec FiniteGroupSpec::roto_translations(int height, int width, int n_rot)
{
    FiniteGroupSpec s;
    s.kind_ = Kind::roto_translations;
    s.h_ = height;
    s.w_ = width;
    s.n_rot_ = n_rot;
    s.grp_ = std::make_shared<planar::RotoTranslationGroup>(height, width, n_rot);
    return s;
}

int FiniteGroupSpec::order() const { return kind_ == Kind::rotations ? n_rot_ : grp_->order(); }

Image FiniteGroupSpec::act(int g, const Image& f) const
{
    if (g < 0 || g >= order()) throw DomainError("group element out of range");
    if (f.height != h_ || f.width != w_) throw ShapeError("input grid does not match the group");
    if (kind_ == Kind::rotations) return planar::rotate_image(f, g * (4 / n_rot_));
    return grp_->act_image(g, f);
}

int FiniteGroupSpec::compose(int a, int b) const
{
    if (kind_ == Kind::rotations) return (a + b) % n_rot_;
    return grp_->mul(a, b);
}

std::vector<Image> orbit(const Image& f, const FiniteGroupSpec& group)
{
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(group.order()));
    for (int g = 0; g < group.order(); ++g) out.push_back(group.act(g, f));
    return out;
}

PairKernel averaged_kernel(PairKernel base, FiniteGroupSpec group)
{
    return [base = std::move(base), group = std::move(group)](const Image& f, const Image& fp) {
        ScalarKernel acc;
        const int n = group.order();
        for (int g = 0; g < n; ++g) {
            ScalarKernel s = base(f, group.act(g, fp));
            if (g == 0) {
                acc.k_xx = s.k_xx;
                acc.k_yy = s.k_yy;
            }
            acc.k_xy += s.k_xy;
            acc.theta += s.theta;
        }
        acc.k_xy /= n;
        acc.theta /= n;
        return acc;
    };
}

namespace {

Image random_image(std::mt19937_64& rng, int c, int h, int w, double scale = 1.0)
{
    std::normal_distribution<double> nd(0.0, scale);
    Image img(c, h, w);
    for (auto& v : img.data) v = nd(rng);
    return img;
}

double rel_dev(double a, double b)
{
    double s = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / s;
}

ArchitectureSpec cnn_arch(int depth, int support, NonlinKind nl, planar::Padding pad)
{
    ArchitectureSpec a;
    a.group.n_rot = 1;
    a.group.padding = pad;
    a.layers.push_back(Layer::conv(support));
    for (int d = 1; d < depth; ++d) {
        a.layers.push_back(Layer::act(nl));
        a.layers.push_back(Layer::conv(support));
    }
    a.layers.push_back(Layer::sumpool());
    return a;
}

ArchitectureSpec gcnn_arch(int depth, int lift_support, int gconv_support, NonlinKind nl, planar::Padding pad)
{
    ArchitectureSpec a;
    a.group.n_rot = 4;
    a.group.padding = pad;
    a.layers.push_back(Layer::lifting(lift_support));
    for (int d = 1; d < depth; ++d) {
        a.layers.push_back(Layer::act(nl));
        a.layers.push_back(Layer::gconv(gconv_support));
    }
    a.layers.push_back(Layer::gpool());
    return a;
}

ArchitectureSpec mlp_arch(int depth, NonlinKind nl)
{
    ArchitectureSpec a;
    a.layers.push_back(Layer::flatten());
    a.layers.push_back(Layer::dense());
    for (int d = 1; d < depth; ++d) {
        a.layers.push_back(Layer::act(nl));
        a.layers.push_back(Layer::dense());
    }
    return a;
}

PairKernel pipeline_kernel(ArchitectureSpec arch)
{
    return [arch = std::move(arch)](const Image& a, const Image& b) {
        return std::get<ScalarKernel>(run_pipeline(arch, PipelineInput(a), PipelineInput(b)));
    };
}

double max_of(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) m = std::isnan(x) || std::isnan(m) ? std::numeric_limits<double>::quiet_NaN() : std::max(m, x);
    return m;
}

}  // namespace

VerificationReport verify_thm6(const Thm6Config& cfg)
{
    if (cfg.trials < 1 || cfg.depth < 1) throw ConfigError("thm6: trials and depth must be positive");
    VerificationReport rep;
    rep.theorem = "thm6";
    std::ostringstream os;
    os << cfg.height << "x" << cfg.width << " depth=" << cfg.depth << " support=" << cfg.support
       << " nonlin=" << nonlin_name(cfg.nonlin) << " padding=" << planar::padding_name(cfg.padding) << " channels=" << cfg.channels
       << " trials=" << cfg.trials;
    rep.config = os.str();
    rep.tolerance = cfg.tol;
    rep.conforming = cfg.padding == planar::Padding::circular;
    PairKernel cnn = averaged_kernel(pipeline_kernel(cnn_arch(cfg.depth, cfg.support, cfg.nonlin, cfg.padding)),
                                     FiniteGroupSpec::rotations(cfg.height, cfg.width, 4));
    PairKernel gcnn = pipeline_kernel(gcnn_arch(cfg.depth, cfg.support, cfg.support, cfg.nonlin, cfg.padding));
    std::vector<double> dev(static_cast<std::size_t>(cfg.trials));
    parallel_for(dev.size(), [&](std::size_t t) {
        std::mt19937_64 rng(mix_seed(cfg.seed, t));
        Image f = random_image(rng, cfg.channels, cfg.height, cfg.width);
        Image fp = random_image(rng, cfg.channels, cfg.height, cfg.width);
        ScalarKernel a = cnn(f, fp), b = gcnn(f, fp);
        dev[t] = std::max(rel_dev(a.k_xy, b.k_xy), rel_dev(a.theta, b.theta));
    });
    rep.max_deviation = max_of(dev);
    rep.pass = rep.conforming && rep.max_deviation < cfg.tol;
    return rep;
}

VerificationReport verify_thm5(const Thm5Config& cfg)
{
    if (cfg.trials < 1 || cfg.depth < 1) throw ConfigError("thm5: trials and depth must be positive");
    VerificationReport rep;
    rep.theorem = "thm5";
    std::ostringstream os;
    os << cfg.height << "x" << cfg.width << " depth=" << cfg.depth << " gconv_support="
       << (cfg.gconv_support == 0 ? std::string("global") : std::to_string(cfg.gconv_support))
       << " nonlin=" << nonlin_name(cfg.nonlin) << " channels=" << cfg.channels << " trials=" << cfg.trials;
    rep.config = os.str();
    rep.tolerance = cfg.tol;
    // after a global lifting every kernel is a function of g'g⁻¹, which any gconv leaves unchanged
    rep.conforming = true;
    FiniteGroupSpec grp = FiniteGroupSpec::roto_translations(cfg.height, cfg.width, 4);
    PairKernel mlp = averaged_kernel(pipeline_kernel(mlp_arch(cfg.depth, cfg.nonlin)), grp);
    PairKernel gcnn = pipeline_kernel(gcnn_arch(cfg.depth, 0, cfg.gconv_support, cfg.nonlin, planar::Padding::circular));
    std::vector<double> dev(static_cast<std::size_t>(cfg.trials));
    parallel_for(dev.size(), [&](std::size_t t) {
        std::mt19937_64 rng(mix_seed(cfg.seed, t));
        Image f = random_image(rng, cfg.channels, cfg.height, cfg.width);
        Image fp = random_image(rng, cfg.channels, cfg.height, cfg.width);
        ScalarKernel a = mlp(f, fp), b = gcnn(f, fp);
        dev[t] = std::max(rel_dev(a.k_xy, b.k_xy), rel_dev(a.theta, b.theta));
    });
    rep.max_deviation = max_of(dev);
    rep.pass = rep.conforming && rep.max_deviation < cfg.tol;
    return rep;
}

Thm4Result verify_thm4(const Thm4Config& cfg)
{
    if (cfg.n_train < 1 || cfg.n_outputs < 1 || cfg.n_noise < 0) throw ConfigError("thm4: invalid set sizes");
    if (!(cfg.eta > 0.0)) throw ConfigError("thm4: eta must be positive");
    Thm4Result res;
    res.times = cfg.times;
    if (res.times.empty())
        for (int i = 0; i < 8; ++i) res.times.push_back(std::pow(10.0, -2.0 + 5.0 * i / 7.0));
    for (double t : res.times)
        if (!(t >= 0.0) || std::isinf(t)) throw ConfigError("thm4: times must be finite and nonnegative");

    std::mt19937_64 rng(mix_seed(cfg.seed, 0));
    std::vector<Image> train, test;
    for (int i = 0; i < cfg.n_train; ++i) train.push_back(random_image(rng, cfg.channels, cfg.height, cfg.width));
    Eigen::MatrixXd Y(cfg.n_train, cfg.n_outputs);
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = nd(rng);
    for (const auto& x : train) test.push_back(planar::rotate_image(x, 1));
    std::uniform_real_distribution<double> ud(-3.0, 3.0);
    for (int i = 0; i < cfg.n_noise; ++i) {
        Image z(cfg.channels, cfg.height, cfg.width);
        for (auto& v : z.data) v = ud(rng);
        test.push_back(z);
    }

    FiniteGroupSpec rot = FiniteGroupSpec::rotations(cfg.height, cfg.width, 4);
    const int G = rot.order();
    std::vector<PipelineInput> aug_inputs, gcnn_inputs;
    Eigen::MatrixXd Yaug(cfg.n_train * G, cfg.n_outputs);
    for (int i = 0; i < cfg.n_train; ++i) {
        auto orb = orbit(train[i], rot);
        for (int g = 0; g < G; ++g) {
            aug_inputs.emplace_back(orb[g]);
            Yaug.row(i * G + g) = Y.row(i);
        }
        gcnn_inputs.emplace_back(train[i]);
    }
    for (const auto& x : test) {
        aug_inputs.emplace_back(x);
        gcnn_inputs.emplace_back(x);
    }
    const Eigen::Index na = cfg.n_train * G, ng = cfg.n_train, nt = static_cast<Eigen::Index>(test.size());
    GramPair ka = assemble_grams(KernelEvaluator(cnn_arch(cfg.depth, cfg.support, cfg.nonlin, planar::Padding::circular), aug_inputs));
    GramPair kg = assemble_grams(
        KernelEvaluator(gcnn_arch(cfg.depth, cfg.support, cfg.support, cfg.nonlin, planar::Padding::circular), gcnn_inputs));

    Eigen::MatrixXd Ga = ka.ntk.topLeftCorner(na, na), Ta = ka.ntk.bottomLeftCorner(nt, na);
    Eigen::MatrixXd Gg = kg.ntk.topLeftCorner(ng, ng), Tg = kg.ntk.bottomLeftCorner(nt, ng);
    SpectralPredictor pa(Ga), pg(Gg);
    double gap_max = 0.0;
    for (double t : res.times) {
        // Mean loss over the set that is actually trained on.
        Eigen::MatrixXd ma = pa.predict(Ta, Yaug, t, cfg.eta / static_cast<double>(na));
        Eigen::MatrixXd mg = pg.predict(Tg, Y, t, cfg.eta / static_cast<double>(ng));
        double gap = (ma - mg).cwiseAbs().maxCoeff();
        res.gaps.push_back(gap);
        gap_max = std::max(gap_max, gap);
    }
    Eigen::MatrixXd ma = predict_infinite_time(Ga, Ta, Yaug), mg = predict_infinite_time(Gg, Tg, Y);
    double gap = (ma - mg).cwiseAbs().maxCoeff();
    res.times.push_back(std::numeric_limits<double>::infinity());
    res.gaps.push_back(gap);
    gap_max = std::max(gap_max, gap);

    VerificationReport& rep = res.report;
    rep.theorem = "thm4";
    std::ostringstream os;
    os << cfg.height << "x" << cfg.width << " depth=" << cfg.depth << " support=" << cfg.support
       << " nonlin=" << nonlin_name(cfg.nonlin) << " n_train=" << cfg.n_train << " n_noise=" << cfg.n_noise << " eta=" << cfg.eta;
    rep.config = os.str();
    rep.tolerance = cfg.tol;
    rep.conforming = true;
    rep.max_deviation = gap_max;
    rep.pass = gap_max < cfg.tol;
    return res;
}

}  // namespace entk
