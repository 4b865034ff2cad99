// penseg command-line tool. Links exclusively against the C API.

#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "penseg.h"

namespace {

int fail(int rc) {
    std::fprintf(stderr, "error (%d): %s\n", rc, ps_last_error());
    return rc;
}

struct StackHandle {
    ps_stack* ptr = nullptr;
    ~StackHandle() { ps_stack_free(ptr); }
};

struct ModelHandle {
    ps_model* ptr = nullptr;
    ~ModelHandle() { ps_model_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned 3D-to-2D projection with multi-channel instance segmentation"};
    app.require_subcommand(1);

    // synth
    std::string synth_config, synth_out;
    CLI::App* synth = app.add_subcommand("synth", "Generate synthetic TIFF+JSON fixtures");
    synth->add_option("--config", synth_config, "Scene config file")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    // train
    std::string train_config, train_data, train_val, train_out;
    CLI::App* train = app.add_subcommand("train", "Train a model");
    train->add_option("--config", train_config, "Training config file")->required();
    train->add_option("--data", train_data, "Training data directory")->required();
    train->add_option("--val", train_val, "Validation data directory (defaults to --data)");
    train->add_option("--out", train_out, "Model output directory")->required();

    // eval
    std::string eval_model, eval_data;
    double eval_iou = 0.5;
    CLI::App* eval = app.add_subcommand("eval", "Evaluate a model over a dataset");
    eval->add_option("--model", eval_model, "Model directory")->required();
    eval->add_option("--data", eval_data, "Dataset directory")->required();
    eval->add_option("--iou", eval_iou, "IoU threshold");

    // project
    std::string proj_model, proj_mode, proj_stack, proj_out;
    CLI::App* project = app.add_subcommand("project", "Render a 2D projection PNG");
    project->add_option("--model", proj_model, "Model directory");
    project->add_option("--mode", proj_mode, "Built-in projection: mip | linear");
    project->add_option("--stack", proj_stack, "Input TIFF stack")->required();
    project->add_option("--out", proj_out, "Output PNG path")->required();

    // infer
    std::string infer_model, infer_stack, infer_out;
    int infer_tile = 512, infer_overlap = 64;
    CLI::App* infer = app.add_subcommand("infer", "Tiled detection over a large stack");
    infer->add_option("--model", infer_model, "Model directory")->required();
    infer->add_option("--stack", infer_stack, "Input TIFF stack")->required();
    infer->add_option("--tile", infer_tile, "Tile size in pixels");
    infer->add_option("--overlap", infer_overlap, "Tile overlap in pixels");
    infer->add_option("--out", infer_out, "Output detections JSON")->required();

    // metrics
    std::string met_gt, met_pred;
    double met_iou = 0.5;
    CLI::App* metrics = app.add_subcommand("metrics", "Compare two annotation JSON files");
    metrics->add_option("--gt", met_gt, "Ground-truth annotation JSON")->required();
    metrics->add_option("--pred", met_pred, "Predicted annotation JSON")->required();
    metrics->add_option("--iou", met_iou, "IoU threshold");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        if (int rc = ps_synth(synth_config.c_str(), synth_out.c_str())) return fail(rc);
        return 0;
    }

    if (train->parsed()) {
        const std::string val = train_val.empty() ? train_data : train_val;
        if (int rc = ps_train(train_config.c_str(), train_data.c_str(), val.c_str(),
                              train_out.c_str()))
            return fail(rc);
        return 0;
    }

    if (eval->parsed()) {
        char* report = nullptr;
        if (int rc = ps_eval(eval_model.c_str(), eval_data.c_str(), eval_iou, &report))
            return fail(rc);
        std::fputs(report, stdout);
        ps_string_free(report);
        return 0;
    }

    if (project->parsed()) {
        if (proj_model.empty() == proj_mode.empty()) {
            std::fprintf(stderr, "project: give exactly one of --model or --mode\n");
            return 2;
        }
        StackHandle stack;
        if (int rc = ps_stack_load(proj_stack.c_str(), &stack.ptr)) return fail(rc);
        if (!proj_mode.empty()) {
            if (int rc = ps_project_mode(proj_mode.c_str(), stack.ptr, proj_out.c_str()))
                return fail(rc);
            return 0;
        }
        ModelHandle model;
        if (int rc = ps_model_load(proj_model.c_str(), &model.ptr)) return fail(rc);
        if (int rc = ps_model_project(model.ptr, stack.ptr, proj_out.c_str())) return fail(rc);
        return 0;
    }

    if (infer->parsed()) {
        StackHandle stack;
        if (int rc = ps_stack_load(infer_stack.c_str(), &stack.ptr)) return fail(rc);
        ModelHandle model;
        if (int rc = ps_model_load(infer_model.c_str(), &model.ptr)) return fail(rc);
        if (int rc = ps_model_infer(model.ptr, stack.ptr, infer_tile, infer_overlap,
                                    infer_out.c_str()))
            return fail(rc);
        return 0;
    }

    if (metrics->parsed()) {
        char* report = nullptr;
        if (int rc = ps_metrics(met_gt.c_str(), met_pred.c_str(), met_iou, &report))
            return fail(rc);
        std::fputs(report, stdout);
        ps_string_free(report);
        return 0;
    }

    return 0;
}
