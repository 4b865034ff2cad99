#include "penseg.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "core/annotations.hpp"
#include "core/tiff.hpp"
#include "harness/config.hpp"
#include "harness/evaluate.hpp"
#include "harness/infer.hpp"
#include "harness/png.hpp"
#include "harness/train.hpp"
#include "projections/projections.hpp"
#include "synthgen/synthgen.hpp"

namespace {

thread_local std::string g_last_error = "no error";

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return PS_OK;
    } catch (const penseg::FormatError& e) {
        g_last_error = e.what();
        return PS_ERR_FORMAT;
    } catch (const penseg::ConfigError& e) {
        g_last_error = e.what();
        return PS_ERR_CONFIG;
    } catch (const penseg::CapacityError& e) {
        g_last_error = e.what();
        return PS_ERR_CAPACITY;
    } catch (const penseg::ValidationError& e) {
        g_last_error = e.what();
        return PS_ERR_VALIDATION;
    } catch (const std::filesystem::filesystem_error& e) {
        g_last_error = e.what();
        return PS_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PS_ERR_UNKNOWN;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

int require(bool ok, const char* message) {
    if (ok) return PS_OK;
    g_last_error = message;
    return PS_ERR_VALIDATION;
}

}  // namespace

struct ps_stack {
    penseg::ImageStack stack;
};

struct ps_model {
    penseg::ModelBundle bundle;
    penseg::Predictor predictor;
    explicit ps_model(penseg::ModelBundle b) : bundle(std::move(b)), predictor(bundle) {}
};

extern "C" {

const char* ps_last_error(void) { return g_last_error.c_str(); }

void ps_string_free(char* s) { std::free(s); }

int ps_stack_load(const char* tiff_path, ps_stack** out) {
    if (int rc = require(tiff_path && out, "ps_stack_load: null argument")) return rc;
    return guarded([&] { *out = new ps_stack{penseg::load_stack(tiff_path)}; });
}

int ps_stack_dims(const ps_stack* stack, int* z, int* h, int* w) {
    if (int rc = require(stack && z && h && w, "ps_stack_dims: null argument")) return rc;
    *z = stack->stack.depth();
    *h = stack->stack.height();
    *w = stack->stack.width();
    return PS_OK;
}

void ps_stack_free(ps_stack* stack) { delete stack; }

int ps_model_load(const char* model_dir, ps_model** out) {
    if (int rc = require(model_dir && out, "ps_model_load: null argument")) return rc;
    return guarded([&] { *out = new ps_model(penseg::ModelBundle::load(model_dir)); });
}

void ps_model_free(ps_model* model) { delete model; }

int ps_synth(const char* config_path, const char* out_dir) {
    if (int rc = require(config_path && out_dir, "ps_synth: null argument")) return rc;
    return guarded([&] {
        const penseg::SynthConfig config = penseg::parse_synth_config(config_path);
        std::filesystem::create_directories(out_dir);
        for (int i = 0; i < config.n_scenes; ++i) {
            std::pair<penseg::ImageStack, penseg::AnnotationSet> scene = [&] {
                if (config.kind == "disks")
                    return penseg::gen_disk_stack(config.scene.z, config.disk_diameter_um,
                                                  config.scene.geometry);
                penseg::SceneConfig sc = config.scene;
                sc.seed = config.scene.seed + static_cast<uint64_t>(i);
                return penseg::gen_cell_scene(sc);
            }();
            char name[32];
            std::snprintf(name, sizeof name, "scene_%03d", i);
            const auto base = std::filesystem::path(out_dir) / name;
            penseg::save_stack(scene.first, base.string() + ".tif");
            penseg::save_annotations(scene.second, base.string() + ".json");
        }
    });
}

int ps_train(const char* config_path, const char* data_dir, const char* val_dir,
             const char* out_dir) {
    if (int rc = require(config_path && data_dir && val_dir && out_dir, "ps_train: null argument"))
        return rc;
    return guarded([&] {
        const penseg::TrainConfig config = penseg::parse_train_config(config_path);
        const penseg::Dataset data = penseg::load_dataset(data_dir);
        const penseg::Dataset val =
            std::string(val_dir) == data_dir ? data : penseg::load_dataset(val_dir);
        penseg::TrainHistory history;
        const penseg::ModelBundle bundle = penseg::train(config, data, val, &history);
        bundle.save(out_dir);
        penseg::save_history(history, (std::filesystem::path(out_dir) / "history.json").string());
    });
}

int ps_eval(const char* model_dir, const char* data_dir, double iou_threshold,
            char** report_json) {
    if (int rc = require(model_dir && data_dir && report_json, "ps_eval: null argument")) return rc;
    return guarded([&] {
        penseg::Predictor predictor(penseg::ModelBundle::load(model_dir));
        const penseg::Dataset data = penseg::load_dataset(data_dir);
        const penseg::MetricsReport report = penseg::evaluate(predictor, data, iou_threshold);
        *report_json = dup_string(penseg::metrics_report_to_json(report, iou_threshold));
    });
}

int ps_model_project(ps_model* model, const ps_stack* stack, const char* out_png) {
    if (int rc = require(model && stack && out_png, "ps_model_project: null argument")) return rc;
    return guarded([&] { penseg::save_png(model->predictor.project(stack->stack), out_png); });
}

int ps_project_mode(const char* mode, const ps_stack* stack, const char* out_png) {
    if (int rc = require(mode && stack && out_png, "ps_project_mode: null argument")) return rc;
    return guarded([&] {
        const std::string m = mode;
        penseg::RgbProjection proj = [&] {
            if (m == "mip") return penseg::mip(stack->stack);
            if (m == "linear")
                return penseg::linear_depth_embed(stack->stack, penseg::DepthEmbedConfig{});
            throw penseg::ConfigError("ps_project_mode: mode must be mip|linear");
        }();
        penseg::save_png(proj, out_png);
    });
}

int ps_model_infer(ps_model* model, const ps_stack* stack, int tile, int overlap,
                   const char* out_json) {
    if (int rc = require(model && stack && out_json, "ps_model_infer: null argument")) return rc;
    return guarded([&] {
        const penseg::DetectionSet det =
            penseg::infer_large(model->predictor, stack->stack, tile, overlap);
        penseg::AnnotationSet set;
        set.depth = stack->stack.depth();
        set.height = det.height;
        set.width = det.width;
        std::vector<int> channels;
        for (size_t i = 0; i < det.detections.size(); ++i) {
            penseg::CellAnnotation cell;
            cell.id = static_cast<int>(i);
            cell.mask = det.detections[i].mask;
            // detections are 2D; axial position is not recovered
            cell.z_centroid = 0.0;
            cell.z_min = 0;
            cell.z_max = 0;
            set.cells.push_back(std::move(cell));
            channels.push_back(det.detections[i].channel);
        }
        penseg::save_annotations(set, out_json, &channels);
    });
}

int ps_metrics(const char* gt_json_path, const char* pred_json_path, double iou_threshold,
               char** report_json) {
    if (int rc = require(gt_json_path && pred_json_path && report_json, "ps_metrics: null argument"))
        return rc;
    return guarded([&] {
        const penseg::AnnotationSet gt = penseg::load_annotations(gt_json_path);
        penseg::AnnotationSet pred = penseg::load_annotations(pred_json_path);
        if (gt.height != pred.height || gt.width != pred.width)
            throw penseg::ValidationError("ps_metrics: mask dimensions differ between files");
        std::vector<penseg::Mask2D> gt_masks, pred_masks;
        for (const auto& c : gt.cells) gt_masks.push_back(c.mask);
        for (const auto& c : pred.cells) pred_masks.push_back(c.mask);
        const penseg::MatchResult match =
            penseg::match_detections(penseg::iou_matrix(gt_masks, pred_masks), iou_threshold);
        const penseg::MetricsReport report = penseg::compute_metrics(match);
        *report_json = dup_string(penseg::metrics_report_to_json(report, iou_threshold));
    });
}

}  // extern "C"
