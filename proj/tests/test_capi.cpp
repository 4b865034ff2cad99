// End-to-end exercise of the shared-library C API, mirroring CLI usage.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "penseg.h"

namespace fs = std::filesystem;

static int g_failures = 0;

#define EXPECT(cond, msg)                                          \
    do {                                                           \
        if (!(cond)) {                                             \
            std::fprintf(stderr, "FAIL: %s (last error: %s)\n",    \
                         msg, ps_last_error());                    \
            ++g_failures;                                          \
        }                                                          \
    } while (0)

int main() {
    const fs::path root = fs::temp_directory_path() / "penseg_capi_test";
    fs::remove_all(root);
    fs::create_directories(root);

    // synth
    const fs::path synth_cfg = root / "synth.cfg";
    std::ofstream(synth_cfg) << "kind = cells\n"
                                "n_scenes = 2\n"
                                "scene.height = 96\n"
                                "scene.width = 96\n"
                                "scene.z = 9\n"
                                "scene.n_cells = 4\n"
                                "scene.diameter_um_lo = 9\n"
                                "scene.diameter_um_hi = 13\n"
                                "scene.seed = 5\n";
    const fs::path data_dir = root / "data";
    EXPECT(ps_synth(synth_cfg.string().c_str(), data_dir.string().c_str()) == PS_OK,
           "ps_synth succeeds");
    EXPECT(fs::exists(data_dir / "scene_000.tif"), "synth wrote a stack");
    EXPECT(fs::exists(data_dir / "scene_001.json"), "synth wrote annotations");

    // stack handle
    ps_stack* stack = nullptr;
    EXPECT(ps_stack_load((data_dir / "scene_000.tif").string().c_str(), &stack) == PS_OK,
           "ps_stack_load succeeds");
    int z = 0, h = 0, w = 0;
    EXPECT(ps_stack_dims(stack, &z, &h, &w) == PS_OK, "ps_stack_dims succeeds");
    EXPECT(z == 9 && h == 96 && w == 96, "stack dims match the scene config");

    // built-in projection
    const fs::path mip_png = root / "mip.png";
    EXPECT(ps_project_mode("mip", stack, mip_png.string().c_str()) == PS_OK,
           "ps_project_mode(mip) succeeds");
    EXPECT(fs::exists(mip_png) && fs::file_size(mip_png) > 8, "PNG is nonempty");
    EXPECT(ps_project_mode("nope", stack, mip_png.string().c_str()) == PS_ERR_CONFIG,
           "bad mode is a config error");

    // train (tiny budget)
    const fs::path train_cfg = root / "train.cfg";
    std::ofstream(train_cfg) << "input_mode = pen\n"
                                "batch_size = 2\n"
                                "crop = 64\n"
                                "epochs = 1\n"
                                "iters_per_epoch = 2\n"
                                "val_size = 2\n"
                                "seed = 1\n"
                                "pen.kernel_sizes = 1,3,5\n"
                                "pen.z_in = 11\n"
                                "head.unet_levels = 2\n"
                                "head.unet_base_width = 4\n"
                                "augment.n_copies = 1\n";
    const fs::path model_dir = root / "model";
    EXPECT(ps_train(train_cfg.string().c_str(), data_dir.string().c_str(),
                    data_dir.string().c_str(), model_dir.string().c_str()) == PS_OK,
           "ps_train succeeds");
    EXPECT(fs::exists(model_dir / "pen.params"), "train saved PEN parameters");
    EXPECT(fs::exists(model_dir / "history.json"), "train saved history");

    // model projection
    ps_model* model = nullptr;
    EXPECT(ps_model_load(model_dir.string().c_str(), &model) == PS_OK, "ps_model_load succeeds");
    const fs::path pen_png = root / "pen.png";
    EXPECT(ps_model_project(model, stack, pen_png.string().c_str()) == PS_OK,
           "ps_model_project succeeds");

    // eval
    char* report = nullptr;
    EXPECT(ps_eval(model_dir.string().c_str(), data_dir.string().c_str(), 0.5, &report) == PS_OK,
           "ps_eval succeeds");
    if (report) {
        EXPECT(std::strstr(report, "\"jaccard\"") != nullptr, "eval report has jaccard");
        ps_string_free(report);
    }

    // infer
    const fs::path det_json = root / "detections.json";
    EXPECT(ps_model_infer(model, stack, 64, 8, det_json.string().c_str()) == PS_OK,
           "ps_model_infer succeeds");
    EXPECT(fs::exists(det_json), "infer wrote detections");

    // metrics: gt vs itself is perfect
    char* metrics = nullptr;
    EXPECT(ps_metrics((data_dir / "scene_000.json").string().c_str(),
                      (data_dir / "scene_000.json").string().c_str(), 0.5, &metrics) == PS_OK,
           "ps_metrics succeeds");
    if (metrics) {
        EXPECT(std::strstr(metrics, "\"jaccard\": 1.0") != nullptr,
               "gt-vs-gt jaccard is 1.0");
        ps_string_free(metrics);
    }

    // error paths
    ps_stack* missing = nullptr;
    EXPECT(ps_stack_load((root / "nope.tif").string().c_str(), &missing) != PS_OK,
           "missing stack fails");
    EXPECT(std::strlen(ps_last_error()) > 0, "last error is populated");

    ps_model_free(model);
    ps_stack_free(stack);
    fs::remove_all(root);

    if (g_failures) {
        std::fprintf(stderr, "%d C API check(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all C API checks passed\n");
    return 0;
}
