#include "projections/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "core/normalize.hpp"

namespace penseg {

RgbProjection mip(const ImageStack& stack) {
    const int Z = stack.depth(), H = stack.height(), W = stack.width();
    RgbProjection proj(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double m = stack.at(0, y, x);
            for (int z = 1; z < Z; ++z) m = std::max(m, stack.at(z, y, x));
            proj.at(0, y, x) = m;
            proj.at(1, y, x) = m;
            proj.at(2, y, x) = m;
        }
    normalize_unit(std::span<double>(proj.data()));
    return proj;
}

std::vector<std::vector<double>> gaussian_weights(int z, int n_channels) {
    if (n_channels < 1) throw ConfigError("gaussian_weights: n_channels must be >= 1");
    if (n_channels > z)
        throw ConfigError("gaussian_weights: n_channels " + std::to_string(n_channels) +
                          " exceeds stack depth " + std::to_string(z));
    std::vector<std::vector<double>> w(static_cast<size_t>(n_channels),
                                       std::vector<double>(static_cast<size_t>(z), 1.0));
    if (n_channels == 1) return w;  // single channel: uniform weights

    const double spacing = static_cast<double>(z - 1) / (n_channels - 1);
    // FWHM of each Gaussian equals the peak spacing, so adjacent channels
    // cross at half maximum: sigma = spacing / (2 sqrt(2 ln 2)).
    const double sigma = spacing / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    for (int c = 0; c < n_channels; ++c) {
        const double mu = c * spacing;
        for (int k = 0; k < z; ++k) {
            const double d = k - mu;
            w[static_cast<size_t>(c)][static_cast<size_t>(k)] =
                std::exp(-d * d / (2.0 * sigma * sigma));
        }
    }
    return w;
}

RgbProjection linear_depth_embed(const ImageStack& stack, const DepthEmbedConfig& config) {
    const int Z = stack.depth(), H = stack.height(), W = stack.width();
    if (config.n_channels < 1 || config.n_channels > 3)
        throw ConfigError("linear_depth_embed: n_channels must be in [1, 3] for an RGB output");
    const auto weights = gaussian_weights(Z, config.n_channels);

    RgbProjection proj(H, W);
    for (int c = 0; c < config.n_channels; ++c) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = config.reduction == DepthReduction::kMax
                                 ? -std::numeric_limits<double>::infinity()
                                 : 0.0;
                for (int z = 0; z < Z; ++z) {
                    const double v = weights[static_cast<size_t>(c)][static_cast<size_t>(z)] *
                                     stack.at(z, y, x);
                    if (config.reduction == DepthReduction::kMax)
                        acc = std::max(acc, v);
                    else
                        acc += v;
                }
                proj.at(c, y, x) = acc;
            }
    }
    if (config.n_channels == 1)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) proj.at(1, y, x) = proj.at(2, y, x) = proj.at(0, y, x);
    normalize_unit(std::span<double>(proj.data()));
    return proj;
}

}  // namespace penseg
