#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "entk/equivalence.hpp"
#include "entk/pipeline.hpp"

namespace entk::cli {

using nlohmann::json;

enum class DatasetKind { rotclass, images, molecules };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::rotclass;
    // rotclass
    int classes = 9;
    int height = 8;
    int width = 8;
    double noise = 1.0;
    int test_per_class = 10;
    // images: tensor [N, C, H, W] or [N, H, W] plus a label vector; the last test_size rows are held out
    std::string path;
    std::string labels;
    int test_size = 20;
    // molecules: XYZ file, or synthetic molecules when path is empty
    int count = 60;
    so3::GridKind grid = so3::GridKind::gauss_legendre;
    int grid_bandlimit = 0;  // 0: oversample · architecture bandlimit
    bool standardize = true;
};

struct McConfig {
    std::vector<int> widths{8, 16, 32, 64};
    int samples = 200;
    int inputs = 3;
    int height = 8;
    int width = 8;
    int channels = 1;
    NonlinKind nonlin = NonlinKind::relu;
    int support = 3;
};

struct GramConfig {
    int count = 0;  // 0: whole training pool
    bool baseline = false;
    int stop_after_rows = -1;  // testing hook: leave a partial checkpoint behind
};

struct VerifyConfig {
    std::vector<Thm4Config> thm4{Thm4Config{}};
    std::vector<Thm5Config> thm5{Thm5Config{}};
    std::vector<Thm6Config> thm6{Thm6Config{}};
};

struct RunConfig {
    json effective;  // config after overrides
    std::string hash;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string output_dir = "entk_out";

    ArchitectureSpec arch;
    ArchitectureSpec baseline;
    DatasetConfig dataset;
    std::vector<int> train_sizes{20, 50, 100, 200};
    std::optional<double> ridge;  // empty: 1e-8 · trace / n
    bool ridge_loo = false;       // leave-one-out choice from a fixed ladder
    bool rotation_check = true;
    std::vector<double> times;    // +inf is always evaluated
    double eta = 1.0;

    McConfig mc;
    GramConfig gram;
    VerifyConfig verify;
};

// Applies "a.b.c=value" overrides; the value is parsed as JSON when possible, else taken as a string.
void apply_override(json& j, const std::string& assignment);

// Throws ConfigError on unknown keys, wrong types and invalid architectures.
RunConfig parse_config(const json& j);
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

// FNV-1a of the canonical dump, ignoring keys that cannot change results.
std::string config_hash(const json& j);

ArchitectureSpec parse_architecture(const json& j, const std::string& where);
ArchitectureSpec default_architecture(DatasetKind kind, bool baseline);

}  // namespace entk::cli
