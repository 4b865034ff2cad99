#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "harness/config.hpp"
#include "harness/evaluate.hpp"
#include "harness/infer.hpp"
#include "harness/png.hpp"
#include "harness/train.hpp"
#include "synthgen/synthgen.hpp"

using namespace penseg;

namespace {

Dataset tiny_dataset(int n_scenes, uint64_t seed) {
    Dataset data;
    for (int i = 0; i < n_scenes; ++i) {
        SceneConfig config;
        config.height = 96;
        config.width = 96;
        config.z = 9;
        config.n_cells = 4;
        config.diameter_um_lo = 9.0;
        config.diameter_um_hi = 13.0;
        config.seed = seed + static_cast<uint64_t>(i);
        data.push_back(gen_cell_scene(config));
    }
    return data;
}

TrainConfig tiny_config(InputMode mode, uint64_t seed) {
    TrainConfig c;
    c.input_mode = mode;
    c.batch_size = 2;
    c.crop = 64;
    c.epochs = 2;
    c.iters_per_epoch = 2;
    c.val_size = 2;
    c.seed = seed;
    c.pen.kernel_sizes = {1, 3, 5};
    c.pen.z_in = 11;
    c.head.unet_levels = 2;
    c.head.unet_base_width = 4;
    c.augment.crop_hw = c.crop;
    c.augment.z_in = c.pen.z_in;
    c.augment.n_copies = 1;
    c.augment.seed = seed;
    return c;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_CASE("train config file round trip") {
    TrainConfig c = tiny_config(InputMode::kPen, 3);
    const std::string text = serialize_train_config(c);
    const std::string path = (std::filesystem::temp_directory_path() / "cfg.txt").string();
    std::ofstream(path) << text;
    TrainConfig parsed = parse_train_config(path);
    CHECK(serialize_train_config(parsed) == text);
    CHECK(parsed.pen.kernel_sizes == c.pen.kernel_sizes);
    CHECK(parsed.seed == c.seed);
    std::remove(path.c_str());
}

TEST_CASE("config parser rejects unknown keys and bad values") {
    const std::string path = (std::filesystem::temp_directory_path() / "badcfg.txt").string();
    std::ofstream(path) << "not_a_key = 3\n";
    CHECK_THROWS_AS(parse_train_config(path), ConfigError);
    std::ofstream(path) << "lr = fast\n";
    CHECK_THROWS_AS(parse_train_config(path), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("training is deterministic and clips gradients") {
    Dataset data = tiny_dataset(3, 100);
    TrainConfig config = tiny_config(InputMode::kPen, 7);

    TrainHistory h1, h2;
    ModelBundle b1 = train(config, data, data, &h1);
    ModelBundle b2 = train(config, data, data, &h2);
    CHECK(history_to_json(h1) == history_to_json(h2));
    for (auto& [name, e] : b1.head_params)
        for (size_t i = 0; i < e.value.size(); ++i)
            CHECK(e.value.data[i] == b2.head_params.at(name).value.data[i]);

    for (double norm : h1.grad_norms) CHECK(norm <= config.grad_clip + 1e-9);
    REQUIRE(h1.best_epoch >= 0);
    double best = h1.val_loss[static_cast<size_t>(h1.best_epoch)];
    for (double v : h1.val_loss) CHECK(best <= v + 1e-15);
}

TEST_CASE("zero learning rate leaves parameters at initialization") {
    Dataset data = tiny_dataset(2, 200);
    TrainConfig config = tiny_config(InputMode::kPen, 9);
    config.lr = 0.0;
    TrainHistory history;
    ModelBundle bundle = train(config, data, data, &history);

    PenModel fresh = pen_init(config.pen, config.seed + 1);
    for (auto& [name, e] : bundle.pen_params)
        for (size_t i = 0; i < e.value.size(); ++i)
            if (e.trainable)  // running stats do move in train mode
                CHECK(e.value.data[i] == fresh.params().at(name).value.data[i]);
    HeadModel fresh_head = head_init(config.head, config.seed + 2);
    for (auto& [name, e] : bundle.head_params)
        for (size_t i = 0; i < e.value.size(); ++i)
            if (e.trainable)
                CHECK(e.value.data[i] == fresh_head.params().at(name).value.data[i]);
}

TEST_CASE("PEN receives gradients only in pen mode") {
    Dataset data = tiny_dataset(2, 300);
    TrainConfig pen_config = tiny_config(InputMode::kPen, 11);
    ModelBundle pen_bundle = train(pen_config, data, data);
    PenModel fresh = pen_init(pen_config.pen, pen_config.seed + 1);
    bool moved = false;
    for (auto& [name, e] : pen_bundle.pen_params)
        if (e.trainable)
            for (size_t i = 0; i < e.value.size(); ++i)
                if (e.value.data[i] != fresh.params().at(name).value.data[i]) moved = true;
    CHECK(moved);

    TrainConfig mip_config = tiny_config(InputMode::kMip, 11);
    ModelBundle mip_bundle = train(mip_config, data, data);
    CHECK(mip_bundle.pen_params.size() == 0);
}

TEST_CASE("model bundle save/load round trip") {
    Dataset data = tiny_dataset(2, 400);
    TrainConfig config = tiny_config(InputMode::kPen, 13);
    config.epochs = 1;
    config.iters_per_epoch = 1;
    ModelBundle bundle = train(config, data, data);
    const std::string dir = (std::filesystem::temp_directory_path() / "bundle_rt").string();
    bundle.save(dir);
    ModelBundle loaded = ModelBundle::load(dir);
    CHECK(loaded.config.seed == config.seed);
    for (auto& [name, e] : bundle.head_params)
        for (size_t i = 0; i < e.value.size(); ++i)
            CHECK(e.value.data[i] == loaded.head_params.at(name).value.data[i]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("evaluation counts pool additively across stacks") {
    Dataset data = tiny_dataset(2, 500);
    TrainConfig config = tiny_config(InputMode::kMip, 15);
    config.epochs = 1;
    config.iters_per_epoch = 1;
    ModelBundle bundle = train(config, data, data);
    Predictor predictor(bundle);

    MetricsReport pooled = evaluate(predictor, data, 0.5);
    Dataset first = {data[0]};
    Dataset second = {data[1]};
    MetricsReport r1 = evaluate(predictor, first, 0.5);
    MetricsReport r2 = evaluate(predictor, second, 0.5);
    CHECK(pooled.tp == r1.tp + r2.tp);
    CHECK(pooled.fp == r1.fp + r2.fp);
    CHECK(pooled.fn == r1.fn + r2.fn);
}

TEST_CASE("single-tile inference equals the direct path") {
    Dataset data = tiny_dataset(1, 600);
    TrainConfig config = tiny_config(InputMode::kMip, 17);
    config.epochs = 1;
    config.iters_per_epoch = 1;
    ModelBundle bundle = train(config, data, data);
    Predictor predictor(bundle);

    const ImageStack& stack = data[0].first;
    DetectionSet direct = predictor.detect(stack);
    DetectionSet tiled = infer_large(predictor, stack, 128, 16);
    REQUIRE(tiled.detections.size() == direct.detections.size());
    for (size_t i = 0; i < direct.detections.size(); ++i) {
        bool found = false;
        for (const Detection& d : tiled.detections) {
            bool equal = d.mask.count() == direct.detections[i].mask.count();
            if (equal)
                for (size_t p = 0; p < d.mask.raw().size(); ++p)
                    if (d.mask.raw()[p] != direct.detections[i].mask.raw()[p]) equal = false;
            if (equal) found = true;
        }
        CHECK(found);
    }
    CHECK_THROWS_AS(infer_large(predictor, stack, 32, 16), ConfigError);
}

TEST_CASE("png writer emits a valid signature and deterministic bytes") {
    RgbProjection image(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            image.at(0, y, x) = y / 15.0;
            image.at(1, y, x) = x / 15.0;
            image.at(2, y, x) = 0.5;
        }
    const std::string a = (std::filesystem::temp_directory_path() / "img_a.png").string();
    const std::string b = (std::filesystem::temp_directory_path() / "img_b.png").string();
    save_png(image, a);
    save_png(image, b);
    const std::string sa = read_file(a), sb = read_file(b);
    CHECK(sa == sb);
    REQUIRE(sa.size() > 8);
    CHECK(static_cast<unsigned char>(sa[0]) == 0x89);
    CHECK(sa.substr(1, 3) == "PNG");
    std::remove(a.c_str());
    std::remove(b.c_str());
}
