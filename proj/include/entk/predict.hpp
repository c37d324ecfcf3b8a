#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace entk {

class KernelEvaluator;

struct GramPair {
    Eigen::MatrixXd nngp;
    Eigen::MatrixXd ntk;
};

// Upper triangle evaluated pair by pair (in parallel) and mirrored.
// A non-finite value raises InvalidKernelError naming the pair.
Eigen::MatrixXd assemble_gram(std::size_t n, const std::function<double(std::size_t, std::size_t)>& kernel);
GramPair assemble_grams(const KernelEvaluator& ev);

// Row for class c is e_c - (1/C)·1.
Eigen::MatrixXd encode_labels(std::span<const int> classes, int C);

double default_ridge(const Eigen::MatrixXd& gram);  // 1e-8·trace/n

// Picks factor·trace/n minimising the closed-form leave-one-out squared error
// r_i = [A⁻¹Y]_i / [A⁻¹]_ii with A = gram + ridge·I. Ties keep the smaller ridge.
double loo_ridge(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& Y, std::span<const double> factors);
std::span<const double> default_ridge_ladder();

// Cholesky of gram + ridge·I. On failure jitter·(mean diagonal) is added,
// stepping 1e-12, 1e-11, ..., 1e-6; the step used is kept for reporting.
class KernelRegressor {
public:
    KernelRegressor(const Eigen::MatrixXd& gram, double ridge = 0.0);
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    double jitter() const { return jitter_; }
    double ridge() const { return ridge_; }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double ridge_ = 0.0;
    double jitter_ = 0.0;
};

// μ(x) = Θ(x,X) (Θ(X,X) + ridge)⁻¹ Y; k_test is (m × n).
Eigen::MatrixXd predict_infinite_time(const KernelRegressor& reg, const Eigen::MatrixXd& k_test, const Eigen::MatrixXd& Y);
Eigen::MatrixXd predict_infinite_time(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& k_test, const Eigen::MatrixXd& Y,
                                      double ridge = 0.0);

// Gradient flow on the squared loss from a zero function:
// μ_t(x) = Θ(x,X) Θ⁻¹ (I - exp(-η Θ t)) Y, evaluated through the spectrum.
class SpectralPredictor {
public:
    SpectralPredictor(const Eigen::MatrixXd& gram, double ridge = 0.0);
    // t = +inf gives the infinite-time solution.
    Eigen::MatrixXd predict(const Eigen::MatrixXd& k_test, const Eigen::MatrixXd& Y, double t, double eta) const;
    const Eigen::VectorXd& eigenvalues() const { return evals_; }

private:
    Eigen::VectorXd evals_;
    Eigen::MatrixXd evecs_;
};

Eigen::MatrixXd predict_at_time(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& k_test, const Eigen::MatrixXd& Y, double t,
                                double eta, double ridge = 0.0);

// Row-wise argmax (ties go to the lowest class index).
std::vector<int> argmax_rows(const Eigen::MatrixXd& preds);
double accuracy(const Eigen::MatrixXd& preds, std::span<const int> truth);
double mae(std::span<const double> preds, std::span<const double> truth);

}  // namespace entk
