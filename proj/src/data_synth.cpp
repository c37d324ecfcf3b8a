#include <algorithm>
#include <cmath>
#include <random>

#include "entk/data.hpp"
#include "entk/errors.hpp"
#include "entk/parallel.hpp"

namespace entk::data {

namespace {

// Circular 3×3 box blur.
std::vector<double> blur(const std::vector<double>& in, int h, int w)
{
    std::vector<double> out(in.size(), 0.0);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double s = 0.0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) s += in[((i + di + h) % h) * w + (j + dj + w) % w];
            out[i * w + j] = s / 9.0;
        }
    return out;
}

planar::Image prototype(std::uint64_t seed, int c, int h, int w)
{
    std::mt19937_64 rng(mix_seed(seed, 0xC1A55000ull + static_cast<std::uint64_t>(c)));
    std::normal_distribution<double> nd;
    std::vector<double> v(static_cast<std::size_t>(h) * w);
    for (auto& x : v) x = nd(rng);
    v = blur(v, h, w);
    double mean = 0.0, var = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean) / static_cast<double>(v.size());
    double sd = std::sqrt(var);
    planar::Image img(1, h, w);
    for (std::size_t i = 0; i < v.size(); ++i) img.data[i] = (v[i] - mean) / sd;
    return img;
}

}  // namespace

ImageDataset synth_rotclass_dataset(int n_per_class, int classes, int height, int width, std::uint64_t seed, std::uint64_t stream,
                                    double noise)
{
    if (n_per_class < 0 || classes < 1) throw ConfigError("synth_rotclass_dataset: invalid class counts");
    if (height != width || height < 2) throw ConfigError("synth_rotclass_dataset: needs a square grid of side >= 2");
    if (!(noise >= 0.0)) throw ConfigError("synth_rotclass_dataset: noise must be nonnegative");
    std::vector<planar::Image> protos;
    for (int c = 0; c < classes; ++c) protos.push_back(prototype(seed, c, height, width));

    const std::size_t n = static_cast<std::size_t>(n_per_class) * classes;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);
    std::mt19937_64 shuffle_rng(mix_seed(seed, 0x5AFF1Eull + stream));
    std::shuffle(labels.begin(), labels.end(), shuffle_rng);

    ImageDataset ds;
    ds.labels = labels;
    ds.images.resize(n);
    parallel_for(n, [&](std::size_t i) {
        std::mt19937_64 rng(mix_seed(mix_seed(seed, stream + 1), i));
        std::uniform_int_distribution<int> sh(0, height - 1), rot(0, 3);
        std::normal_distribution<double> nd(0.0, noise);
        int dy = sh(rng), dx = sh(rng), r = rot(rng);
        planar::Image img = planar::rotate_image(planar::translate_image(protos[labels[i]], dy, dx), r);
        for (auto& v : img.data) v += nd(rng);
        ds.images[i] = std::move(img);
    });
    return ds;
}

}  // namespace entk::data
