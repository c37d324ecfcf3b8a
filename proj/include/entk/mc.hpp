#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entk/finite_net.hpp"

namespace entk::finite {

struct EmpiricalEstimate {
    int width = 0;
    int n_samples = 0;
    Eigen::MatrixXd ntk_mean, nngp_mean;
    Eigen::MatrixXd ntk_se, nngp_se;  // standard errors from the unbiased sample variance
};

// Sample s uses parameters seeded by mix_seed(mix_seed(seed, width), s); the
// NNGP is the conditional expectation over the last layer's weights.
EmpiricalEstimate estimate_kernels(const ArchitectureSpec& arch, int width, int n_samples, const std::vector<planar::Image>& inputs,
                                   std::uint64_t seed);

struct McRow {
    int width = 0;
    std::string kernel_type;  // "ntk" or "nngp"
    double rel_error = 0.0;   // mean over Gram entries of |empirical - analytic| / |analytic|
    double std = 0.0;         // same average of standard error / |analytic|
    int n_samples = 0;
};

// Rows sorted by width, ntk before nngp.
std::vector<McRow> mc_convergence(const ArchitectureSpec& arch, std::vector<int> widths, int n_samples,
                                  const std::vector<planar::Image>& inputs, std::uint64_t seed);

void write_mc_csv(const std::string& path, const std::vector<McRow>& rows);
// Least-squares slope of log(error) against log(width) over the rows of one kernel type.
double loglog_slope(const std::vector<McRow>& rows, const std::string& kernel_type);

// Default architecture: lifting, then four group
// convolutions with nonlinearities in between, then group pooling.
ArchitectureSpec default_mc_arch(NonlinKind nl, int support = 3);

}  // namespace entk::finite
