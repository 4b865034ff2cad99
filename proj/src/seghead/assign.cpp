#include "seghead/assign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "core/types.hpp"

namespace penseg {

ChannelAssignment assign_channels(const std::vector<double>& zs, int n_out, double z_extent) {
    if (n_out < 1) throw ConfigError("assign_channels: n_out must be >= 1");
    const size_t n = zs.size();
    ChannelAssignment out(n, 0);
    if (n == 0 || n_out == 1) return out;

    if (n <= static_cast<size_t>(n_out)) {
        // Few cells: ranked by axial position, one channel each.
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&zs](size_t a, size_t b) { return zs[a] < zs[b]; });
        for (size_t rank = 0; rank < n; ++rank) out[order[rank]] = static_cast<int>(rank);
        return out;
    }

    std::vector<double> centers(static_cast<size_t>(n_out));
    for (int c = 0; c < n_out; ++c)
        centers[static_cast<size_t>(c)] = z_extent * c / (n_out - 1);

    std::vector<int> labels(n, 0);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::abs(zs[i] - centers[0]);
            for (int c = 1; c < n_out; ++c) {
                const double d = std::abs(zs[i] - centers[static_cast<size_t>(c)]);
                if (d < best_d) {  // ties stay with the lower index
                    best_d = d;
                    best = c;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        std::vector<double> sum(static_cast<size_t>(n_out), 0.0);
        std::vector<int> count(static_cast<size_t>(n_out), 0);
        for (size_t i = 0; i < n; ++i) {
            sum[static_cast<size_t>(labels[i])] += zs[i];
            ++count[static_cast<size_t>(labels[i])];
        }
        for (int c = 0; c < n_out; ++c)
            if (count[static_cast<size_t>(c)] > 0)
                centers[static_cast<size_t>(c)] =
                    sum[static_cast<size_t>(c)] / count[static_cast<size_t>(c)];
        if (!changed && iter > 0) break;
    }

    // Relabel so ascending channel index corresponds to ascending center.
    std::vector<int> rank(static_cast<size_t>(n_out));
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&centers](int a, int b) {
        return centers[static_cast<size_t>(a)] < centers[static_cast<size_t>(b)];
    });
    std::vector<int> relabel(static_cast<size_t>(n_out));
    for (int r = 0; r < n_out; ++r) relabel[static_cast<size_t>(rank[static_cast<size_t>(r)])] = r;
    for (size_t i = 0; i < n; ++i) out[i] = relabel[static_cast<size_t>(labels[i])];
    return out;
}

ChannelAssignment random_assignment(size_t n_cells, int n_out, uint64_t seed) {
    if (n_out < 1) throw ConfigError("random_assignment: n_out must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, n_out - 1);
    ChannelAssignment out(n_cells);
    for (auto& c : out) c = dist(rng);
    return out;
}

}  // namespace penseg
