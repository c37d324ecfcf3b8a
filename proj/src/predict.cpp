#include "entk/predict.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "entk/errors.hpp"
#include "entk/parallel.hpp"
#include "entk/pipeline.hpp"

namespace entk {

namespace {

std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t n)
{
    std::vector<std::pair<std::size_t, std::size_t>> p;
    p.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) p.emplace_back(i, j);
    return p;
}

void check_finite(double v, std::size_t i, std::size_t j, const char* what)
{
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << what << " value at pair (" << i << ", " << j << ") is not finite";
        throw InvalidKernelError(os.str());
    }
}

void check_symmetric(const Eigen::MatrixXd& g)
{
    if (g.rows() != g.cols()) throw ShapeError("gram matrix is not square");
    if (g.rows() == 0) throw ShapeError("gram matrix is empty");
    double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw InvalidKernelError("gram matrix is not symmetric");
}

}  // namespace

Eigen::MatrixXd assemble_gram(std::size_t n, const std::function<double(std::size_t, std::size_t)>& kernel)
{
    auto pairs = upper_pairs(n);
    std::vector<double> vals(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t p) {
        auto [i, j] = pairs[p];
        double v = kernel(i, j);
        check_finite(v, i, j, "kernel");
        vals[p] = v;
    });
    Eigen::MatrixXd g(n, n);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto [i, j] = pairs[p];
        g(i, j) = g(j, i) = vals[p];
    }
    return g;
}

GramPair assemble_grams(const KernelEvaluator& ev)
{
    const std::size_t n = ev.size();
    auto pairs = upper_pairs(n);
    std::vector<ScalarKernel> vals(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t p) {
        auto [i, j] = pairs[p];
        ScalarKernel s = ev.pair(i, j);
        check_finite(s.k_xy, i, j, "NNGP");
        check_finite(s.theta, i, j, "NTK");
        vals[p] = s;
    });
    GramPair g{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n)};
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto [i, j] = pairs[p];
        g.nngp(i, j) = g.nngp(j, i) = vals[p].k_xy;
        g.ntk(i, j) = g.ntk(j, i) = vals[p].theta;
    }
    return g;
}

Eigen::MatrixXd encode_labels(std::span<const int> classes, int C)
{
    if (C < 1) throw DomainError("encode_labels: need at least one class");
    Eigen::MatrixXd Y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(classes.size()), C, -1.0 / C);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] < 0 || classes[i] >= C) throw DomainError("encode_labels: class index out of range");
        Y(static_cast<Eigen::Index>(i), classes[i]) += 1.0;
    }
    return Y;
}

double default_ridge(const Eigen::MatrixXd& gram) { return 1e-8 * gram.trace() / static_cast<double>(gram.rows()); }

std::span<const double> default_ridge_ladder()
{
    static const double ladder[] = {1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    return ladder;
}

double loo_ridge(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& Y, std::span<const double> factors)
{
    if (factors.empty()) throw DomainError("loo_ridge: empty ladder");
    if (Y.rows() != gram.rows()) throw DomainError("loo_ridge: target rows do not match the Gram matrix");
    const Eigen::Index n = gram.rows();
    const double base = gram.trace() / static_cast<double>(n);
    double best = 0.0, best_err = std::numeric_limits<double>::infinity();
    for (double f : factors) {
        double ridge = f * base;
        KernelRegressor reg(gram, ridge);
        Eigen::MatrixXd inv = reg.solve(Eigen::MatrixXd::Identity(n, n));
        Eigen::MatrixXd alpha = inv * Y;
        double err = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) err += (alpha.row(i) / inv(i, i)).squaredNorm();
        if (err < best_err) {
            best_err = err;
            best = ridge;
        }
    }
    return best;
}

KernelRegressor::KernelRegressor(const Eigen::MatrixXd& gram, double ridge) : ridge_(ridge)
{
    check_symmetric(gram);
    if (!(ridge >= 0.0)) throw DomainError("ridge must be nonnegative");
    const Eigen::Index n = gram.rows();
    double scale = gram.diagonal().cwiseAbs().mean();
    if (!(scale > 0.0)) scale = 1.0;
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += ridge;
    double jitter = 0.0;
    for (int step = -1; step <= 6; ++step) {
        if (step >= 0) jitter = std::pow(10.0, -12 + step);
        Eigen::MatrixXd m = a;
        m.diagonal().array() += jitter * scale;
        llt_.compute(m);
        if (llt_.info() != Eigen::Success) continue;
        // Reject numerically singular factors too: a pivot at rounding level
        // means the system carries no information along that direction.
        double min_pivot = std::numeric_limits<double>::infinity();
        Eigen::MatrixXd L = llt_.matrixL();
        for (Eigen::Index i = 0; i < n; ++i) min_pivot = std::min(min_pivot, L(i, i) * L(i, i));
        if (min_pivot > 1e-14 * scale * static_cast<double>(n)) {
            jitter_ = jitter;
            return;
        }
    }
    throw SingularSystemError("gram matrix is not positive definite even with jitter 1e-6");
}

Eigen::MatrixXd KernelRegressor::solve(const Eigen::MatrixXd& rhs) const
{
    if (rhs.rows() != llt_.rows()) throw ShapeError("solve: right-hand side has the wrong number of rows");
    return llt_.solve(rhs);
}

Eigen::MatrixXd predict_infinite_time(const KernelRegressor& reg, const Eigen::MatrixXd& k_test, const Eigen::MatrixXd& Y)
{
    if (k_test.cols() != Y.rows()) throw ShapeError("predict: test kernel columns must match training rows");
    return k_test * reg.solve(Y);
}

Eigen::MatrixXd predict_infinite_time(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& k_test, const Eigen::MatrixXd& Y,
                                      double ridge)
{
    return predict_infinite_time(KernelRegressor(gram, ridge), k_test, Y);
}

SpectralPredictor::SpectralPredictor(const Eigen::MatrixXd& gram, double ridge)
{
    check_symmetric(gram);
    if (!(ridge >= 0.0)) throw DomainError("ridge must be nonnegative");
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += ridge;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw SingularSystemError("eigendecomposition failed");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
}

Eigen::MatrixXd SpectralPredictor::predict(const Eigen::MatrixXd& k_test, const Eigen::MatrixXd& Y, double t, double eta) const
{
    if (k_test.cols() != Y.rows() || Y.rows() != evals_.size()) throw ShapeError("predict: shape mismatch");
    if (std::isnan(t) || t < 0.0) throw DomainError("predict_at_time: time must be nonnegative");
    if (!(eta > 0.0)) throw DomainError("predict_at_time: learning rate must be positive");
    const double lmax = evals_.cwiseAbs().maxCoeff();
    Eigen::VectorXd f(evals_.size());
    for (Eigen::Index i = 0; i < evals_.size(); ++i) {
        double l = evals_(i);
        if (std::isinf(t)) {
            if (l <= 1e-14 * lmax * static_cast<double>(evals_.size()))
                throw SingularSystemError("infinite-time prediction needs a positive definite gram matrix");
            f(i) = 1.0 / l;
        } else if (l <= 0.0) {
            f(i) = eta * t;  // limit of (1 - e^{-ηλt})/λ as λ → 0
        } else {
            f(i) = -std::expm1(-eta * l * t) / l;
        }
    }
    Eigen::MatrixXd proj = evecs_.transpose() * Y;
    return k_test * (evecs_ * (f.asDiagonal() * proj));
}

Eigen::MatrixXd predict_at_time(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& k_test, const Eigen::MatrixXd& Y, double t,
                                double eta, double ridge)
{
    return SpectralPredictor(gram, ridge).predict(k_test, Y, t, eta);
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& preds)
{
    std::vector<int> out(static_cast<std::size_t>(preds.rows()));
    for (Eigen::Index i = 0; i < preds.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < preds.cols(); ++c)
            if (preds(i, c) > preds(i, best)) best = static_cast<int>(c);
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

double accuracy(const Eigen::MatrixXd& preds, std::span<const int> truth)
{
    if (static_cast<std::size_t>(preds.rows()) != truth.size()) throw ShapeError("accuracy: row count mismatch");
    if (truth.empty()) throw ShapeError("accuracy: no predictions");
    auto am = argmax_rows(preds);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < am.size(); ++i) hit += am[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double mae(std::span<const double> preds, std::span<const double> truth)
{
    if (preds.size() != truth.size()) throw ShapeError("mae: size mismatch");
    if (truth.empty()) throw ShapeError("mae: no predictions");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - truth[i]);
    return s / static_cast<double>(preds.size());
}

}  // namespace entk
