#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "core/raster.hpp"
#include "seghead/assign.hpp"
#include "seghead/instances.hpp"
#include "seghead/targets.hpp"
#include "seghead/unet.hpp"

using namespace penseg;

namespace {

// Exhaustive 1-D Lloyd's oracle mirroring the documented rules, written
// independently of the implementation.
std::vector<int> lloyd_oracle(const std::vector<double>& zs, int n_out, double z_extent) {
    const size_t n = zs.size();
    std::vector<int> labels(n, 0);
    if (n <= static_cast<size_t>(n_out)) {
        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&zs](size_t a, size_t b) { return zs[a] < zs[b]; });
        for (size_t r = 0; r < n; ++r) labels[order[r]] = static_cast<int>(r);
        return labels;
    }
    std::vector<double> centers(n_out);
    for (int c = 0; c < n_out; ++c)
        centers[c] = n_out == 1 ? z_extent / 2.0 : c * z_extent / (n_out - 1);
    for (int it = 0; it < 300; ++it) {
        std::vector<int> next(n);
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            for (int c = 1; c < n_out; ++c)
                if (std::abs(zs[i] - centers[c]) < std::abs(zs[i] - centers[best])) best = c;
            next[i] = best;
        }
        std::vector<double> sums(n_out, 0.0);
        std::vector<int> counts(n_out, 0);
        for (size_t i = 0; i < n; ++i) {
            sums[next[i]] += zs[i];
            ++counts[next[i]];
        }
        bool moved = false;
        for (int c = 0; c < n_out; ++c)
            if (counts[c]) {
                const double m = sums[c] / counts[c];
                if (m != centers[c]) moved = true;
                centers[c] = m;
            }
        labels = next;
        if (!moved) break;
    }
    // relabel ascending by final center
    std::vector<int> idx(n_out);
    for (int c = 0; c < n_out; ++c) idx[c] = c;
    std::stable_sort(idx.begin(), idx.end(),
                     [&centers](int a, int b) { return centers[a] < centers[b]; });
    std::vector<int> remap(n_out);
    for (int r = 0; r < n_out; ++r) remap[idx[r]] = r;
    for (int& l : labels) l = remap[l];
    return labels;
}

Mask2D disk_mask(int h, int w, int cy, int cx, int r) {
    Mask2D m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m.set(y, x);
    return m;
}

double mask_iou(const Mask2D& a, const Mask2D& b) {
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.raw().size(); ++i) {
        inter += a.raw()[i] & b.raw()[i];
        uni += a.raw()[i] | b.raw()[i];
    }
    return uni ? static_cast<double>(inter) / uni : 0.0;
}

}  // namespace

TEST_CASE("three nearly coincident cells still spread over channels") {
    CHECK(assign_channels({2.0, 2.1, 25.0}, 3, 26.0) == ChannelAssignment{0, 1, 2});
}

TEST_CASE("assign_channels matches the Lloyd's oracle and is z-monotone") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> zdist(0.0, 26.0);
    for (int trial = 0; trial < 500; ++trial) {
        const size_t n = 1 + rng() % 8;
        std::vector<double> zs(n);
        for (double& z : zs) z = zdist(rng);
        const auto got = assign_channels(zs, 3, 26.0);
        const auto want = lloyd_oracle(zs, 3, 26.0);
        CHECK(got == want);
        // monotone: sorting cells by z must yield non-decreasing channels
        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&zs](size_t a, size_t b) { return zs[a] < zs[b]; });
        for (size_t i = 1; i < n; ++i) CHECK(got[order[i]] >= got[order[i - 1]]);
    }
}

TEST_CASE("random_assignment is seeded and in range") {
    const auto a = random_assignment(20, 3, 7);
    const auto b = random_assignment(20, 3, 7);
    CHECK(a == b);
    for (int c : a) {
        CHECK(c >= 0);
        CHECK(c < 3);
    }
}

TEST_CASE("make_targets emits unit flows inside masks and edges on boundaries") {
    AnnotationSet set;
    set.depth = 5;
    set.height = 32;
    set.width = 32;
    CellAnnotation cell;
    cell.id = 0;
    cell.mask = disk_mask(32, 32, 16, 16, 6);
    cell.z_centroid = 2;
    cell.z_min = 1;
    cell.z_max = 3;
    set.cells.push_back(cell);

    HeadConfig config;
    SegTargets targets = make_targets(set, {1}, config);
    REQUIRE(targets.n_out == 3);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const size_t i = static_cast<size_t>(y) * 32 + x;
            const bool in = cell.mask.at(y, x);
            CHECK(targets.cellprob[1][i] == (in ? 1.0 : 0.0));
            CHECK(targets.cellprob[0][i] == 0.0);
            const double fy = targets.flow_y[1][i], fx = targets.flow_x[1][i];
            const double norm = std::sqrt(fy * fy + fx * fx);
            if (in)
                CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
            else
                CHECK(norm == 0.0);
        }
    // edge pixels are mask pixels bordering non-mask
    size_t edge_count = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (targets.edges[1][static_cast<size_t>(y) * 32 + x] == 1.0) {
                ++edge_count;
                CHECK(cell.mask.at(y, x));
            }
    CHECK(edge_count > 0);
}

TEST_CASE("heat flow points inward toward the medoid") {
    Mask2D mask = disk_mask(16, 16, 8, 8, 5);
    std::vector<double> fy(256, 0.0), fx(256, 0.0);
    heat_flow(mask, &fy, &fx);
    // pixels on the right edge flow left (negative x), left edge flows right
    CHECK(fx[8 * 16 + 12] < 0.0);
    CHECK(fx[8 * 16 + 4] > 0.0);
    CHECK(fy[12 * 16 + 8] < 0.0);
    CHECK(fy[4 * 16 + 8] > 0.0);
}

TEST_CASE("flow round trip recovers synthetic cells") {
    std::mt19937_64 rng(77);
    HeadConfig config;
    for (int trial = 0; trial < 10; ++trial) {
        AnnotationSet set;
        set.depth = 5;
        set.height = 64;
        set.width = 64;
        ChannelAssignment assignment;
        // two disjoint disks per channel at random positions
        int id = 0;
        for (int c = 0; c < 3; ++c) {
            for (int k = 0; k < 2; ++k) {
                const int cy = 12 + static_cast<int>(rng() % 10) + 28 * k;
                const int cx = 12 + static_cast<int>(rng() % 36);
                CellAnnotation cell;
                cell.id = id++;
                cell.mask = disk_mask(64, 64, cy, cx, 6 + static_cast<int>(rng() % 3));
                cell.z_centroid = c * 2.0;
                cell.z_min = c * 2;
                cell.z_max = c * 2;
                set.cells.push_back(cell);
                assignment.push_back(c);
            }
        }
        SegTargets targets = make_targets(set, assignment, config);

        // exact targets as predictions: large logits from binary maps
        SegPrediction pred;
        pred.n_out = 3;
        pred.height = 64;
        pred.width = 64;
        pred.cellprob_logits.resize(3);
        pred.edge_logits.resize(3);
        pred.flow_y = targets.flow_y;
        pred.flow_x = targets.flow_x;
        for (int c = 0; c < 3; ++c) {
            pred.cellprob_logits[c].resize(64 * 64);
            pred.edge_logits[c].assign(64 * 64, -10.0);
            for (size_t i = 0; i < pred.cellprob_logits[c].size(); ++i)
                pred.cellprob_logits[c][i] = targets.cellprob[c][i] > 0.5 ? 10.0 : -10.0;
        }

        DetectionSet det = flows_to_instances(pred, config);
        REQUIRE(det.detections.size() == set.cells.size());
        // greedy best-IoU matching suffices for disjoint cells
        for (const CellAnnotation& cell : set.cells) {
            double best = 0.0;
            for (const Detection& d : det.detections) best = std::max(best, mask_iou(cell.mask, d.mask));
            CHECK(best >= 0.9);
        }
    }
}

TEST_CASE("tiny clusters are dropped") {
    SegPrediction pred;
    pred.n_out = 1;
    pred.height = 16;
    pred.width = 16;
    pred.cellprob_logits.resize(1);
    pred.edge_logits.resize(1);
    pred.flow_y.resize(1);
    pred.flow_x.resize(1);
    pred.cellprob_logits[0].assign(256, -10.0);
    pred.edge_logits[0].assign(256, -10.0);
    pred.flow_y[0].assign(256, 0.0);
    pred.flow_x[0].assign(256, 0.0);
    // a 4-pixel blob, below the 9-pixel minimum
    for (int y = 4; y < 6; ++y)
        for (int x = 4; x < 6; ++x) pred.cellprob_logits[0][y * 16 + x] = 10.0;
    HeadConfig config;
    config.n_out = 1;
    DetectionSet det = flows_to_instances(pred, config);
    CHECK(det.detections.empty());
}

TEST_CASE("head forward shapes and loss gradients are finite") {
    HeadConfig config;
    config.n_out = 2;
    config.unet_levels = 2;
    config.unet_base_width = 4;
    HeadModel model = head_init(config, 3);
    RgbProjection image(32, 32);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (double& v : image.data()) v = dist(rng);

    SegPrediction pred = head_forward(model, image);
    REQUIRE(pred.n_out == 2);
    REQUIRE(pred.cellprob_logits[0].size() == 32 * 32);

    AnnotationSet set;
    set.depth = 3;
    set.height = 32;
    set.width = 32;
    CellAnnotation cell;
    cell.id = 0;
    cell.mask = disk_mask(32, 32, 16, 16, 5);
    cell.z_centroid = 1;
    cell.z_min = 0;
    cell.z_max = 2;
    set.cells.push_back(cell);
    SegTargets targets = make_targets(set, {0}, config);
    LossBreakdown loss = seg_loss(pred, targets);
    CHECK(std::isfinite(loss.total));
    CHECK(loss.total == doctest::Approx(loss.bce + loss.mse + loss.dice));
    CHECK(loss.dice >= 0.0);
}

TEST_CASE("head rejects non-divisible input sizes") {
    HeadConfig config;
    config.unet_levels = 3;
    HeadModel model = head_init(config, 1);
    RgbProjection image(36, 36);  // not divisible by 8
    CHECK_THROWS_AS(head_forward(model, image), ValidationError);
}
