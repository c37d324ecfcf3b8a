#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>

#include "entk/data.hpp"
#include "entk/errors.hpp"
#include "entk/mc.hpp"
#include "entk/parallel.hpp"
#include "entk/predict.hpp"

namespace entk::cli {

namespace fs = std::filesystem;

namespace {

json provenance(const RunConfig& c, const char* command)
{
    return {{"command", command}, {"version", ENTK_VERSION}, {"config_hash", c.hash}, {"seed", c.seed}};
}

fs::path out_path(const RunConfig& c, const std::string& name)
{
    fs::create_directories(c.output_dir);
    return fs::path(c.output_dir) / name;
}

void write_json(const fs::path& p, const json& j)
{
    std::ofstream os(p);
    if (!os) throw IoError("cannot write '" + p.string() + "'");
    os << j.dump(2) << "\n";
    if (!os) throw IoError("write failed for '" + p.string() + "'");
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---- datasets ----

struct Dataset {
    bool regression = false;
    int classes = 0;
    std::vector<PipelineInput> train, test, test_rotated;
    std::vector<int> train_labels, test_labels;
    std::vector<double> train_targets, test_targets;
    std::string rotation;
};

// Fisher-Yates with an explicit engine so the order is the same on every platform.
template <class T>
void shuffle_fixed(std::vector<T>& v, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

int grid_band(const RunConfig& c)
{
    if (c.dataset.grid_bandlimit > 0) return c.dataset.grid_bandlimit;
    return c.arch.group.oversample * c.arch.group.bandlimit;
}

Dataset load_images(const RunConfig& c, int pool, bool rotated)
{
    const auto& d = c.dataset;
    Dataset ds;
    std::vector<planar::Image> tr, te;
    if (d.kind == DatasetKind::rotclass) {
        ds.classes = d.classes;
        int per = (pool + d.classes - 1) / d.classes;
        auto train = data::synth_rotclass_dataset(per, d.classes, d.height, d.width, c.seed, 0, d.noise);
        std::vector<std::size_t> order(train.images.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle_fixed(order, mix_seed(c.seed, 0x5348));
        for (int i = 0; i < pool; ++i) {
            tr.push_back(train.images[order[i]]);
            ds.train_labels.push_back(train.labels[order[i]]);
        }
        auto test = data::synth_rotclass_dataset(d.test_per_class, d.classes, d.height, d.width, c.seed, 1, d.noise);
        te = test.images;
        ds.test_labels = test.labels;
    } else {
        auto x = data::read_tensor(d.path), y = data::read_tensor(d.labels);
        if (x.dims.size() != 3 && x.dims.size() != 4) throw ConfigError("dataset.path: expected a tensor [N, C, H, W] or [N, H, W]");
        const std::size_t N = x.dims[0];
        if (y.size() != N) throw ConfigError("dataset.labels: expected one label per image");
        int C = x.dims.size() == 4 ? static_cast<int>(x.dims[1]) : 1;
        int H = static_cast<int>(x.dims[x.dims.size() - 2]), W = static_cast<int>(x.dims.back());
        if (static_cast<std::size_t>(d.test_size) >= N) throw ConfigError("dataset.test_size must be smaller than the image count");
        if (static_cast<std::size_t>(pool) > N - d.test_size)
            throw ConfigError("dataset has " + std::to_string(N - d.test_size) + " training images, " + std::to_string(pool) +
                              " requested");
        const std::size_t per = static_cast<std::size_t>(C) * H * W;
        std::vector<int> labels(N);
        for (std::size_t i = 0; i < N; ++i) {
            double v = y.data[i];
            if (v < 0 || v != std::floor(v)) throw ConfigError("dataset.labels: labels must be non-negative integers");
            labels[i] = static_cast<int>(v);
            ds.classes = std::max(ds.classes, labels[i] + 1);
        }
        auto image = [&](std::size_t i) {
            planar::Image im(C, H, W);
            std::copy_n(x.data.begin() + i * per, per, im.data.begin());
            return im;
        };
        for (int i = 0; i < pool; ++i) {
            tr.push_back(image(i));
            ds.train_labels.push_back(labels[i]);
        }
        for (std::size_t i = N - d.test_size; i < N; ++i) {
            te.push_back(image(i));
            ds.test_labels.push_back(labels[i]);
        }
    }
    for (auto& im : tr) ds.train.emplace_back(std::move(im));
    for (const auto& im : te) {
        ds.test.emplace_back(im);
        if (rotated) ds.test_rotated.emplace_back(planar::rotate_image(im, 1));
    }
    if (rotated) ds.rotation = "quarter turn about the grid centre";
    return ds;
}

Dataset load_molecules(const RunConfig& c, int pool, bool rotated)
{
    const auto& d = c.dataset;
    const int L = c.arch.group.bandlimit;
    if (L <= 0) throw ConfigError("molecule datasets need an SO(3) architecture (bandlimit > 0)");
    auto mols = d.path.empty() ? data::synth_molecules(d.count, c.seed) : data::load_xyz(d.path);
    for (auto& m : mols) data::canonical_order(m);
    if (static_cast<std::size_t>(d.test_size) >= mols.size()) throw ConfigError("dataset.test_size must be smaller than the molecule count");
    const std::size_t n_train = mols.size() - d.test_size;
    if (static_cast<std::size_t>(pool) > n_train)
        throw ConfigError("dataset has " + std::to_string(n_train) + " training molecules, " + std::to_string(pool) + " requested");
    auto grid = so3::S2Grid::make(grid_band(c), d.grid);
    if (grid.L < L) throw ConfigError("dataset.grid_bandlimit must be at least the architecture bandlimit");

    std::vector<data::MoleculeFeatures> tr(pool), te(d.test_size), ter(rotated ? d.test_size : 0);
    // rotation by three φ steps about z maps the sampling grid onto itself
    const double step = 2.0 * std::numbers::pi / grid.n_phi();
    so3::Rotation rz = so3::rotation_from_euler({3 * step, 0.0, 0.0});
    parallel_for(pool, [&](std::size_t i) { tr[i] = data::featurize_molecule(mols[i], grid); });
    parallel_for(te.size(), [&](std::size_t i) {
        te[i] = data::featurize_molecule(mols[n_train + i], grid);
        if (rotated) ter[i] = data::featurize_molecule(data::rotate_molecule(mols[n_train + i], rz), grid);
    });
    auto scale = data::normalize_channels(tr);
    for (auto& f : te) data::apply_channel_scale(f, scale);
    for (auto& f : ter) data::apply_channel_scale(f, scale);

    Dataset ds;
    ds.regression = true;
    for (int i = 0; i < pool; ++i) {
        ds.train.push_back(data::molecule_input(tr[i], grid, L));
        ds.train_targets.push_back(mols[i].energy);
    }
    for (std::size_t i = 0; i < te.size(); ++i) {
        ds.test.push_back(data::molecule_input(te[i], grid, L));
        ds.test_targets.push_back(mols[n_train + i].energy);
        if (rotated) ds.test_rotated.push_back(data::molecule_input(ter[i], grid, L));
    }
    if (rotated) ds.rotation = "rotation about z by three grid steps";
    return ds;
}

Dataset load_dataset(const RunConfig& c, int pool, bool rotated)
{
    return c.dataset.kind == DatasetKind::molecules ? load_molecules(c, pool, rotated) : load_images(c, pool, rotated);
}

int max_train(const RunConfig& c) { return *std::max_element(c.train_sizes.begin(), c.train_sizes.end()); }

// ---- predict ----

struct KernelBlocks {
    Eigen::MatrixXd train_nngp, train_ntk;  // n × n
    Eigen::MatrixXd test_nngp, test_ntk;    // m × n
    Eigen::MatrixXd rot_nngp, rot_ntk;      // m × n when rotated inputs were supplied
};

KernelBlocks kernel_blocks(const ArchitectureSpec& arch, const Dataset& ds, bool rotated)
{
    const std::size_t n = ds.train.size(), m = ds.test.size();
    std::vector<PipelineInput> all = ds.train;
    all.insert(all.end(), ds.test.begin(), ds.test.end());
    if (rotated) all.insert(all.end(), ds.test_rotated.begin(), ds.test_rotated.end());
    KernelEvaluator ev(arch, std::move(all));

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
    const std::size_t rows = rotated ? 2 * m : m;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) pairs.emplace_back(n + r, j);
    std::vector<ScalarKernel> vals(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t p) {
        vals[p] = ev.pair(pairs[p].first, pairs[p].second);
        if (!std::isfinite(vals[p].k_xy) || !std::isfinite(vals[p].theta))
            throw InvalidKernelError("non-finite kernel value at pair (" + std::to_string(pairs[p].first) + ", " +
                                     std::to_string(pairs[p].second) + ")");
    });

    KernelBlocks b;
    b.train_nngp.resize(n, n);
    b.train_ntk.resize(n, n);
    b.test_nngp.resize(m, n);
    b.test_ntk.resize(m, n);
    if (rotated) {
        b.rot_nngp.resize(m, n);
        b.rot_ntk.resize(m, n);
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto [i, j] = pairs[p];
        const ScalarKernel& v = vals[p];
        if (i < n) {
            b.train_nngp(i, j) = b.train_nngp(j, i) = v.k_xy;
            b.train_ntk(i, j) = b.train_ntk(j, i) = v.theta;
        } else if (i < n + m) {
            b.test_nngp(i - n, j) = v.k_xy;
            b.test_ntk(i - n, j) = v.theta;
        } else {
            b.rot_nngp(i - n - m, j) = v.k_xy;
            b.rot_ntk(i - n - m, j) = v.theta;
        }
    }
    return b;
}

struct Targets {
    Eigen::MatrixXd Y;
    double mean = 0.0, scale = 1.0;
};

Targets make_targets(const Dataset& ds, int N, bool standardize)
{
    Targets t;
    if (!ds.regression) {
        t.Y = encode_labels(std::span<const int>(ds.train_labels.data(), N), ds.classes);
        return t;
    }
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ds.train_targets.data(), N);
    if (standardize) {
        t.mean = y.mean();
        double var = N > 1 ? (y.array() - t.mean).square().sum() / (N - 1) : 0.0;
        t.scale = var > 0 ? std::sqrt(var) : 1.0;
    }
    t.Y = ((y.array() - t.mean) / t.scale).matrix();
    return t;
}

json score(const Dataset& ds, const Targets& t, const Eigen::MatrixXd& pred)
{
    if (!ds.regression) return {{"accuracy", accuracy(pred, ds.test_labels)}};
    std::vector<double> p(pred.rows());
    for (Eigen::Index i = 0; i < pred.rows(); ++i) p[i] = t.mean + t.scale * pred(i, 0);
    return {{"mae", mae(p, ds.test_targets)}};
}

}  // namespace

// ---- commands ----

int cmd_predict(const RunConfig& c)
{
    const int pool = max_train(c);
    const bool rot_check = c.rotation_check && (c.arch.group.bandlimit > 0 || validate(c.arch) == Backend::planar_gcnn);
    Dataset ds = load_dataset(c, pool, rot_check);
    std::vector<int> sizes = c.train_sizes;
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    json out = provenance(c, "predict");
    out["task"] = ds.regression ? "regression" : "classification";
    out["train_sizes"] = sizes;
    out["test_size"] = ds.test.size();
    out["ridge_rule"] = c.ridge ? "fixed" : c.ridge_loo ? "leave-one-out" : "1e-8 trace/n";
    out["models"] = {{"equivariant", c.arch.describe()}, {"baseline", c.baseline.describe()}};
    json results = json::array(), rotation = json::array();

    for (bool base : {false, true}) {
        const ArchitectureSpec& arch = base ? c.baseline : c.arch;
        const char* name = base ? "baseline" : "equivariant";
        const bool rot = rot_check && !base;
        KernelBlocks kb = kernel_blocks(arch, ds, rot);
        for (int N : sizes) {
            Targets t = make_targets(ds, N, c.dataset.standardize);
            for (bool ntk : {true, false}) {
                Eigen::MatrixXd G = (ntk ? kb.train_ntk : kb.train_nngp).topLeftCorner(N, N);
                Eigen::MatrixXd Kt = (ntk ? kb.test_ntk : kb.test_nngp).leftCols(N);
                double ridge = c.ridge ? *c.ridge : c.ridge_loo ? loo_ridge(G, t.Y, default_ridge_ladder()) : default_ridge(G);
                KernelRegressor reg(G, ridge);
                Eigen::MatrixXd pred = predict_infinite_time(reg, Kt, t.Y);
                json r = {{"model", name}, {"train_size", N}, {"kernel", ntk ? "ntk" : "nngp"}, {"time", "inf"},
                          {"ridge", ridge},  {"jitter", reg.jitter()}};
                r.update(score(ds, t, pred));
                results.push_back(r);
                if (ntk && !c.times.empty()) {
                    SpectralPredictor sp(G, ridge);
                    for (double time : c.times) {
                        json rt = {{"model", name}, {"train_size", N}, {"kernel", "ntk"}, {"time", time}, {"ridge", ridge}};
                        rt.update(score(ds, t, sp.predict(Kt, t.Y, time, c.eta)));
                        results.push_back(rt);
                    }
                }
                if (rot) {
                    Eigen::MatrixXd Kr = (ntk ? kb.rot_ntk : kb.rot_nngp).leftCols(N);
                    Eigen::MatrixXd pr = predict_infinite_time(reg, Kr, t.Y);
                    json rc = {{"train_size", N},
                               {"kernel", ntk ? "ntk" : "nngp"},
                               {"max_abs_gap", (pr - pred).cwiseAbs().maxCoeff()},
                               {"max_abs_prediction", pred.cwiseAbs().maxCoeff()}};
                    if (!ds.regression) rc["argmax_identical"] = argmax_rows(pr) == argmax_rows(pred);
                    json sr = score(ds, t, pr);
                    rc["rotated"] = sr;
                    rotation.push_back(rc);
                }
            }
        }
    }
    out["results"] = results;
    if (rot_check) {
        out["rotation"] = ds.rotation;
        out["rotation_check"] = rotation;
    }
    auto p = out_path(c, "predict.json");
    write_json(p, out);
    std::cout << "wrote " << p.string() << "\n";
    return 0;
}

namespace {

constexpr char kCkptMagic[] = "ENTKCKPT1";

std::uint64_t fnv(const void* p, std::size_t n, std::uint64_t h = 1469598103934665603ull)
{
    auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::string ckpt_header(const std::string& hash, std::size_t n)
{
    return std::string(kCkptMagic) + " " + hash + " " + std::to_string(n) + "\n";
}

// Reads complete rows; returns false (and leaves rows empty) when the file is unusable.
bool read_checkpoint(const fs::path& p, const std::string& hash, std::size_t n, std::vector<std::vector<double>>& rows,
                     std::string& why)
{
    rows.clear();
    std::ifstream is(p, std::ios::binary);
    if (!is) {
        why = "cannot open";
        return false;
    }
    std::string header;
    std::getline(is, header);
    if (header + "\n" != ckpt_header(hash, n)) {
        why = "header does not match this configuration";
        return false;
    }
    while (is.peek() != EOF) {
        std::uint64_t idx = 0, sum = 0;
        std::size_t i = rows.size();
        std::vector<double> vals(2 * (n - i));
        is.read(reinterpret_cast<char*>(&idx), 8);
        is.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * 8));
        is.read(reinterpret_cast<char*>(&sum), 8);
        if (!is) {
            why = "truncated row " + std::to_string(i);
            rows.clear();
            return false;
        }
        std::uint64_t h = fnv(&idx, 8);
        h = fnv(vals.data(), vals.size() * 8, h);
        if (idx != i || h != sum || i >= n) {
            why = "bad record for row " + std::to_string(i);
            rows.clear();
            return false;
        }
        rows.push_back(std::move(vals));
    }
    return true;
}

}  // namespace

int cmd_gram(const RunConfig& c)
{
    const int pool = c.gram.count > 0 ? c.gram.count : max_train(c);
    Dataset ds = load_dataset(c, pool, false);
    const ArchitectureSpec& arch = c.gram.baseline ? c.baseline : c.arch;
    const std::size_t n = ds.train.size();
    KernelEvaluator ev(arch, ds.train);

    const std::string& khash = c.hash;
    auto ckpt = out_path(c, "gram.ckpt");
    std::vector<std::vector<double>> rows;
    if (fs::exists(ckpt)) {
        std::string why;
        if (read_checkpoint(ckpt, khash, n, rows, why)) {
            std::cout << "resuming from checkpoint with " << rows.size() << " of " << n << " rows\n";
        } else {
            std::cerr << "warning: ignoring checkpoint " << ckpt.string() << " (" << why << "); starting over\n";
            fs::remove(ckpt);
        }
    }
    std::ofstream os;
    if (rows.empty()) {
        os.open(ckpt, std::ios::binary | std::ios::trunc);
        os << ckpt_header(khash, n);
    } else {
        os.open(ckpt, std::ios::binary | std::ios::app);
    }
    if (!os) throw IoError("cannot write checkpoint '" + ckpt.string() + "'");

    int fresh = 0;
    for (std::size_t i = rows.size(); i < n; ++i) {
        if (c.gram.stop_after_rows >= 0 && fresh >= c.gram.stop_after_rows) {
            std::cout << "stopped with " << i << " of " << n << " rows in " << ckpt.string() << "\n";
            return 0;
        }
        std::vector<double> vals(2 * (n - i));
        parallel_for(n - i, [&](std::size_t t) {
            ScalarKernel k = ev.pair(i, i + t);
            if (!std::isfinite(k.k_xy) || !std::isfinite(k.theta))
                throw InvalidKernelError("non-finite kernel value at pair (" + std::to_string(i) + ", " + std::to_string(i + t) + ")");
            vals[2 * t] = k.k_xy;
            vals[2 * t + 1] = k.theta;
        });
        std::uint64_t idx = i;
        std::uint64_t h = fnv(&idx, 8);
        h = fnv(vals.data(), vals.size() * 8, h);
        os.write(reinterpret_cast<const char*>(&idx), 8);
        os.write(reinterpret_cast<const char*>(vals.data()), static_cast<std::streamsize>(vals.size() * 8));
        os.write(reinterpret_cast<const char*>(&h), 8);
        os.flush();
        if (!os) throw IoError("checkpoint write failed");
        rows.push_back(std::move(vals));
        ++fresh;
    }
    os.close();

    data::Tensor nngp{{n, n}, std::vector<double>(n * n)}, ntk{{n, n}, std::vector<double>(n * n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; i + t < n; ++t) {
            std::size_t j = i + t;
            nngp.data[i * n + j] = nngp.data[j * n + i] = rows[i][2 * t];
            ntk.data[i * n + j] = ntk.data[j * n + i] = rows[i][2 * t + 1];
        }
    data::write_tensor(out_path(c, "gram_nngp.entk").string(), nngp);
    data::write_tensor(out_path(c, "gram_ntk.entk").string(), ntk);
    data::Tensor labels{{n}, {}};
    for (std::size_t i = 0; i < n; ++i) labels.data.push_back(ds.regression ? ds.train_targets[i] : ds.train_labels[i]);
    data::write_tensor(out_path(c, "gram_labels.entk").string(), labels);

    json meta = provenance(c, "gram");
    meta["n"] = n;
    meta["architecture"] = arch.describe();
    meta["model"] = c.gram.baseline ? "baseline" : "equivariant";
    meta["files"] = {{"nngp", "gram_nngp.entk"}, {"ntk", "gram_ntk.entk"}, {"labels", "gram_labels.entk"}};
    meta["labels"] = ds.regression ? "energy" : "class";
    write_json(out_path(c, "gram.json"), meta);
    std::cout << "wrote " << n << "x" << n << " gram matrices to " << c.output_dir << "\n";
    return 0;
}

int cmd_mc(const RunConfig& c)
{
    const auto& m = c.mc;
    std::mt19937_64 rng(mix_seed(c.seed, 0x6d63));
    std::normal_distribution<double> nd;
    std::vector<planar::Image> xs;
    for (int i = 0; i < m.inputs; ++i) {
        planar::Image im(m.channels, m.height, m.width);
        for (auto& v : im.data) v = nd(rng);
        xs.push_back(std::move(im));
    }
    auto arch = finite::default_mc_arch(m.nonlin, m.support);
    auto rows = finite::mc_convergence(arch, m.widths, m.samples, xs, c.seed);
    auto csv = out_path(c, "mc.csv");
    finite::write_mc_csv(csv.string(), rows);

    json meta = provenance(c, "mc");
    meta["architecture"] = arch.describe();
    meta["samples"] = m.samples;
    meta["inputs"] = m.inputs;
    json widths = json::array();
    for (const auto& r : rows)
        if (r.kernel_type == "ntk") widths.push_back(r.width);
    meta["widths"] = widths;
    meta["table"] = "mc.csv";
    if (widths.size() >= 2)
        meta["loglog_slope"] = {{"ntk", finite::loglog_slope(rows, "ntk")}, {"nngp", finite::loglog_slope(rows, "nngp")}};
    write_json(out_path(c, "mc.json"), meta);
    std::cout << "wrote " << csv.string() << "\n";
    return 0;
}

namespace {

json report_json(const VerificationReport& r)
{
    return {{"theorem", r.theorem},
            {"config", r.config},
            {"max_deviation", number_or_null(r.max_deviation)},
            {"tolerance", r.tolerance},
            {"conforming", r.conforming},
            {"pass", r.pass}};
}

}  // namespace

int cmd_verify(const RunConfig& c)
{
    json out = provenance(c, "verify");
    json reports = json::array();
    bool ok = true;
    auto add = [&](const VerificationReport& r, json extra = json::object()) {
        json j = report_json(r);
        j.update(extra);
        reports.push_back(j);
        ok = ok && r.pass;
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.theorem << "  " << r.config << "  deviation " << r.max_deviation
                  << (r.conforming ? "" : "  (non-conforming)") << "\n";
    };
    for (const auto& t : c.verify.thm4) {
        auto r = verify_thm4(t);
        json times = json::array(), gaps = json::array();
        for (std::size_t i = 0; i < r.times.size(); ++i) {
            times.push_back(std::isinf(r.times[i]) ? json("inf") : json(r.times[i]));
            gaps.push_back(number_or_null(r.gaps[i]));
        }
        add(r.report, {{"times", times}, {"gaps", gaps}});
    }
    for (const auto& t : c.verify.thm5) add(verify_thm5(t));
    for (const auto& t : c.verify.thm6) add(verify_thm6(t));
    out["reports"] = reports;
    out["pass"] = ok;
    write_json(out_path(c, "verify.json"), out);
    return ok ? 0 : static_cast<int>(ExitCode::verification_failure);
}

int cmd_featurize(const RunConfig& c)
{
    const auto& d = c.dataset;
    if (d.kind != DatasetKind::molecules) throw ConfigError("featurize needs dataset.kind = molecules");
    auto mols = d.path.empty() ? data::synth_molecules(d.count, c.seed) : data::load_xyz(d.path);
    for (auto& m : mols) data::canonical_order(m);
    const int band = grid_band(c);
    if (band <= 0) throw ConfigError("featurize needs dataset.grid_bandlimit or an SO(3) architecture");
    auto grid = so3::S2Grid::make(band, d.grid);
    std::vector<data::MoleculeFeatures> fs(mols.size());
    parallel_for(mols.size(), [&](std::size_t i) { fs[i] = data::featurize_molecule(mols[i], grid); });
    auto scale = data::normalize_channels(fs);

    const std::size_t P = grid.points(), per_atom = data::kChannels * P;
    data::Tensor feat{{mols.size(), std::uint64_t(data::kMaxAtoms), std::uint64_t(data::kChannels), P}, {}};
    feat.data.assign(mols.size() * data::kMaxAtoms * per_atom, 0.0);
    data::Tensor energy{{mols.size()}, {}}, atoms{{mols.size()}, {}};
    for (std::size_t i = 0; i < mols.size(); ++i) {
        if (fs[i].atoms.size() > static_cast<std::size_t>(data::kMaxAtoms))
            throw DomainError("molecule " + std::to_string(i) + " has more than " + std::to_string(data::kMaxAtoms) + " atoms");
        for (std::size_t a = 0; a < fs[i].atoms.size(); ++a)
            std::copy(fs[i].atoms[a].values.begin(), fs[i].atoms[a].values.end(),
                      feat.data.begin() + (i * data::kMaxAtoms + a) * per_atom);
        energy.data.push_back(mols[i].energy);
        atoms.data.push_back(static_cast<double>(fs[i].atoms.size()));
    }
    data::write_tensor(out_path(c, "features.entk").string(), feat);
    data::write_tensor(out_path(c, "energies.entk").string(), energy);
    data::write_tensor(out_path(c, "atom_counts.entk").string(), atoms);

    json meta = provenance(c, "featurize");
    meta["molecules"] = mols.size();
    meta["grid"] = {{"kind", so3::grid_kind_name(grid.kind)}, {"bandlimit", grid.L}, {"n_theta", grid.n_theta()}, {"n_phi", grid.n_phi()}};
    meta["beta"] = data::beta_constant();
    meta["channel_scale"] = scale;
    meta["layout"] = "features[molecule, atom, channel, theta * n_phi + phi], zero rows pad to the atom limit";
    meta["files"] = {{"features", "features.entk"}, {"energies", "energies.entk"}, {"atom_counts", "atom_counts.entk"}};
    write_json(out_path(c, "featurize.json"), meta);
    std::cout << "featurized " << mols.size() << " molecules on a " << grid.n_theta() << "x" << grid.n_phi() << " grid\n";
    return 0;
}

}  // namespace entk::cli
