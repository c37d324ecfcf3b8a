#include "doctest.h"

#include <atomic>
#include <cmath>
#include <random>

#include "entk/errors.hpp"
#include "entk/predict.hpp"

using namespace entk;
using Eigen::MatrixXd;

namespace {

MatrixXd random_spd(std::mt19937_64& rng, int n, int m)
{
    std::normal_distribution<double> nd;
    MatrixXd X(n + m, 5);
    for (auto& v : X.reshaped()) v = nd(rng);
    MatrixXd K(n + m, n + m);
    for (int i = 0; i < n + m; ++i)
        for (int j = 0; j < n + m; ++j) K(i, j) = std::exp(-0.5 * (X.row(i) - X.row(j)).squaredNorm() / 5.0);
    return K;
}

// Runge-Kutta on u' = -ηΘ(u - Y), μ' = -ηΘ(x,X)(u - Y).
MatrixXd integrate_flow(const MatrixXd& G, const MatrixXd& Kt, const MatrixXd& Y, double t, double eta)
{
    const int steps = 20000;
    double h = t / steps;
    MatrixXd u = MatrixXd::Zero(Y.rows(), Y.cols()), mu = MatrixXd::Zero(Kt.rows(), Y.cols());
    auto du = [&](const MatrixXd& x) -> MatrixXd { return -eta * G * (x - Y); };
    auto dm = [&](const MatrixXd& x) -> MatrixXd { return -eta * Kt * (x - Y); };
    for (int s = 0; s < steps; ++s) {
        MatrixXd k1 = du(u), k2 = du(u + 0.5 * h * k1), k3 = du(u + 0.5 * h * k2), k4 = du(u + h * k3);
        MatrixXd m1 = dm(u), m2 = dm(u + 0.5 * h * k1), m3 = dm(u + 0.5 * h * k2), m4 = dm(u + h * k3);
        u += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        mu += h / 6 * (m1 + 2 * m2 + 2 * m3 + m4);
    }
    return mu;
}

}  // namespace

TEST_CASE("gram assembly")
{
    std::atomic<int> calls{0};
    MatrixXd g = assemble_gram(6, [&](std::size_t i, std::size_t j) {
        ++calls;
        CHECK(i <= j);
        return double(i * 10 + j);
    });
    CHECK(calls == 21);
    CHECK(g(4, 2) == 24.0);
    CHECK(g(2, 4) == 24.0);
    try {
        assemble_gram(4, [](std::size_t i, std::size_t j) { return i == 1 && j == 3 ? NAN : 1.0; });
        CHECK(false);
    } catch (const InvalidKernelError& e) {
        std::string msg = e.what();
        CHECK(msg.find("1") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
}

TEST_CASE("label encoding and ridge")
{
    std::vector<int> c{0, 2, 1};
    MatrixXd Y = encode_labels(c, 3);
    CHECK(Y.rows() == 3);
    CHECK(Y(1, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(Y(1, 0) == doctest::Approx(-1.0 / 3.0));
    CHECK(std::abs(Y.row(0).sum()) < 1e-15);
    std::vector<int> bad{3};
    CHECK_THROWS_AS(encode_labels(bad, 3), DomainError);
    MatrixXd G = MatrixXd::Identity(4, 4) * 2.0;
    CHECK(default_ridge(G) == doctest::Approx(2e-8));
}

TEST_CASE("leave-one-out ridge matches refitting")
{
    std::mt19937_64 rng(31);
    std::normal_distribution<double> nd;
    const int n = 12;
    MatrixXd G = random_spd(rng, n, 0);
    MatrixXd Y(n, 2);
    for (auto& v : Y.reshaped()) v = nd(rng);
    auto ladder = default_ridge_ladder();
    const double base = G.trace() / n;
    double best = 0.0, best_err = 1e300;
    for (double f : ladder) {
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            std::vector<int> keep;
            for (int j = 0; j < n; ++j)
                if (j != i) keep.push_back(j);
            MatrixXd Gi = G(keep, keep), Yi = Y(keep, Eigen::all);
            MatrixXd ki = G(std::vector<int>{i}, keep);
            MatrixXd pred = predict_infinite_time(Gi, ki, Yi, f * base);
            err += (Y.row(i) - pred.row(0)).squaredNorm();
        }
        if (err < best_err) {
            best_err = err;
            best = f * base;
        }
    }
    CHECK(loo_ridge(G, Y, ladder) == doctest::Approx(best).epsilon(1e-12));
    const double one[] = {1e-3};
    CHECK(loo_ridge(G, Y, one) == doctest::Approx(1e-3 * base));
    CHECK_THROWS_AS(loo_ridge(G, Y, std::span<const double>{}), DomainError);
    CHECK_THROWS_AS(loo_ridge(G, Y.topRows(3), ladder), DomainError);
}

TEST_CASE("regressor solves and jitters")
{
    std::mt19937_64 rng(41);
    MatrixXd K = random_spd(rng, 8, 0);
    MatrixXd rhs = MatrixXd::Random(8, 2);
    KernelRegressor r(K, 1e-3);
    MatrixXd A = K + 1e-3 * MatrixXd::Identity(8, 8);
    CHECK((A * r.solve(rhs) - rhs).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.jitter() == 0.0);

    MatrixXd ones = MatrixXd::Ones(5, 5);
    KernelRegressor rj(ones);
    CHECK(rj.jitter() > 0.0);
    CHECK(rj.jitter() <= 1e-6);
    CHECK_THROWS_AS(KernelRegressor(-MatrixXd::Identity(3, 3)), SingularSystemError);
    CHECK_THROWS_AS(KernelRegressor(K, -1.0), DomainError);
    MatrixXd asym = K;
    asym(0, 1) += 1e-3;
    CHECK_THROWS_AS(KernelRegressor{asym}, InvalidKernelError);
    CHECK_THROWS_AS(r.solve(MatrixXd::Ones(3, 1)), ShapeError);
}

TEST_CASE("infinite-time predictor interpolates the training set")
{
    std::mt19937_64 rng(42);
    MatrixXd K = random_spd(rng, 6, 0);
    MatrixXd Y = MatrixXd::Random(6, 3);
    MatrixXd P = predict_infinite_time(K, K, Y);
    CHECK((P - Y).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("spectral predictor follows gradient flow")
{
    std::mt19937_64 rng(43);
    MatrixXd all = random_spd(rng, 6, 3);
    MatrixXd G = all.topLeftCorner(6, 6), Kt = all.bottomLeftCorner(3, 6);
    MatrixXd Y = MatrixXd::Random(6, 2);
    SpectralPredictor sp(G);
    CHECK(sp.predict(Kt, Y, 0.0, 1.0).cwiseAbs().maxCoeff() == 0.0);
    for (double t : {0.3, 2.0}) {
        MatrixXd want = integrate_flow(G, Kt, Y, t, 0.7);
        CHECK((sp.predict(Kt, Y, t, 0.7) - want).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((predict_at_time(G, Kt, Y, t, 0.7) - want).cwiseAbs().maxCoeff() < 1e-9);
    }
    MatrixXd inf = sp.predict(Kt, Y, INFINITY, 1.0);
    CHECK((inf - predict_infinite_time(G, Kt, Y)).cwiseAbs().maxCoeff() < 1e-6 * inf.cwiseAbs().maxCoeff());
    CHECK_THROWS_AS(sp.predict(Kt, Y, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(sp.predict(Kt, Y, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(sp.predict(Kt, MatrixXd::Ones(2, 2), 1.0, 1.0), ShapeError);

    // a null direction grows linearly: ηt
    MatrixXd Z = MatrixXd::Zero(2, 2);
    MatrixXd Yz(2, 1);
    Yz << 1.0, -1.0;
    SpectralPredictor zp(Z);
    CHECK(zp.predict(Z, Yz, 3.0, 0.5).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(zp.predict(Z, Yz, INFINITY, 1.0), SingularSystemError);
}

TEST_CASE("scoring helpers")
{
    MatrixXd p(3, 3);
    p << 1, 1, 0, 0, 2, 3, 5, 5, 5;
    auto a = argmax_rows(p);
    CHECK(a == std::vector<int>{0, 2, 0});
    std::vector<int> truth{0, 1, 0};
    CHECK(accuracy(p, truth) == doctest::Approx(2.0 / 3.0));
    std::vector<double> x{1, 2, 3}, y{1, 0, 4};
    CHECK(mae(x, y) == doctest::Approx(1.0));
    std::vector<double> s{1};
    CHECK_THROWS_AS(mae(x, s), ShapeError);
}
