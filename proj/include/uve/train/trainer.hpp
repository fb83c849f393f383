/* Copyright (c) 2026 The uvenet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#ifndef UVE_TRAIN_TRAINER_HPP_
#define UVE_TRAIN_TRAINER_HPP_

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "uve/data/dataset.hpp"
#include "uve/model/checkpoint.hpp"
#include "uve/train/config.hpp"
#include "uve/train/loss.hpp"
#include "uve/train/optimizer.hpp"

namespace uve {

struct LossLogRow {
    int64_t iteration;
    double main_loss, aux_loss, total, wall_seconds;
};

struct TrainResult {
    bool aborted = false;
    std::string abort_reason;
    bool early_stopped = false;
    int64_t iterations_run = 0;
    double final_total = 0.0;
    std::string last_checkpoint;
    std::vector<LossLogRow> log;
};

// Called every `interval` iterations; returning true stops training early.
template <typename T>
using TrainCallback = std::function<bool(int64_t iteration, UveNet<T>& model)>;

template <typename T>
void save_training_checkpoint(const std::string& path, UveNet<T>& model, Adam<T>& opt,
                              int64_t iteration) {
    NamedTensors<T> all;
    for (auto& [name, var] : model.named_parameters()) all.add(name, &var->value());
    std::size_t pi = 0;
    for (auto& [name, var] : opt.params()) {
        all.add("optim.m." + name, &opt.moment1(pi));
        all.add("optim.v." + name, &opt.moment2(pi));
        ++pi;
    }
    nlohmann::json meta{{"iteration", iteration}, {"optim_step", opt.iterations()}};
    save_archive(path, model.config(), all, meta);
}

// Restores parameters and optimizer moments saved by save_training_checkpoint.
// Returns the stored iteration number.
template <typename T>
int64_t load_training_checkpoint(const std::string& path, UveNet<T>& model, Adam<T>& opt) {
    ArchiveIndex idx = open_archive(path);
    if (!(idx.config == model.config()))
        throw IoError("checkpoint: training-resume config mismatch for " + path);
    for (auto& [name, var] : model.named_parameters())
        var->value() = read_archive_tensor<T>(idx, name);
    std::size_t pi = 0;
    for (auto& [name, var] : opt.params()) {
        opt.moment1(pi) = read_archive_tensor<T>(idx, "optim.m." + name);
        opt.moment2(pi) = read_archive_tensor<T>(idx, "optim.v." + name);
        ++pi;
    }
    opt.set_iterations(idx.header.at("meta").at("optim_step").get<int64_t>());
    return idx.header.at("meta").at("iteration").get<int64_t>();
}

// Optimization loop: sample a batch of windows, forward both branches,
// combined pixel loss, backward, Adam step. Deterministic under a fixed
// seed. A non-finite loss aborts and leaves the last finite-state
// checkpoint in place.
template <typename T>
TrainResult train(UveNet<T>& model, WindowSampler<T>& sampler, const TrainingConfig& tcfg,
                  const std::string& out_dir, TrainCallback<T> callback = nullptr,
                  int64_t callback_interval = 100) {
    tcfg.validate();
    std::filesystem::create_directories(out_dir);
    const std::string ckpt_last = (std::filesystem::path(out_dir) / "last.uve").string();
    const std::string metrics_path = (std::filesystem::path(out_dir) / "metrics.csv").string();

    Adam<T> opt(model.named_parameters());
    TrainResult res;

    std::ofstream metrics(metrics_path, std::ios::app);
    if (!metrics) throw IoError("train: cannot open " + metrics_path);
    if (std::filesystem::file_size(metrics_path) == 0)
        metrics << "iteration,main_loss,aux_loss,total,wall_seconds\n";

    save_training_checkpoint(ckpt_last, model, opt, 0);
    res.last_checkpoint = ckpt_last;

    const auto t0 = std::chrono::steady_clock::now();
    const bool aux_enabled = model.config().use_aenet;
    Tape<T> tape;

    for (int64_t it = 1; it <= tcfg.total_iterations; ++it) {
        WindowBatch<T> batch = sampler.next_batch(tcfg.batch_windows);
        Var<T> frames(std::move(batch.raw));
        Var<T> gt(std::move(batch.gt));

        WindowOutput<T> out = model.forward(&tape, frames, batch.n_windows);
        Var<T> aux_gt;
        if (aux_enabled) aux_gt = Var<T>(std::move(batch.aux_gt));
        LossResult<T> loss =
            total_loss(&tape, out.enhanced, gt, aux_enabled ? out.aux_pred : Var<T>(), aux_gt,
                       static_cast<T>(tcfg.charbonnier_eps));

        if (!std::isfinite(loss.breakdown.total)) {
            res.aborted = true;
            res.abort_reason = "non-finite loss at iteration " + std::to_string(it) +
                               "; last checkpoint retained at " + ckpt_last;
            res.iterations_run = it - 1;
            tape.clear();
            return res;
        }

        tape.backward(loss.total_var);
        if (tcfg.grad_clip_norm > 0) opt.clip_grad_norm(tcfg.grad_clip_norm);
        opt.step(tcfg.lr_at(it));
        opt.zero_grad();
        tape.clear();

        res.final_total = loss.breakdown.total;
        res.iterations_run = it;

        if (it % tcfg.log_interval == 0 || it == tcfg.total_iterations) {
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            LossLogRow row{it, loss.breakdown.main_loss, loss.breakdown.aux_loss,
                           loss.breakdown.total, wall};
            res.log.push_back(row);
            metrics << row.iteration << "," << row.main_loss << "," << row.aux_loss << ","
                    << row.total << "," << row.wall_seconds << "\n";
            metrics.flush();
        }
        if (it % tcfg.checkpoint_interval == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "iter%08lld.uve", static_cast<long long>(it));
            save_training_checkpoint((std::filesystem::path(out_dir) / name).string(), model, opt, it);
            save_training_checkpoint(ckpt_last, model, opt, it);
        }
        if (callback && it % callback_interval == 0 && callback(it, model)) {
            res.early_stopped = true;
            break;
        }
    }
    save_training_checkpoint(ckpt_last, model, opt, res.iterations_run);
    return res;
}

}  // namespace uve

#endif  // UVE_TRAIN_TRAINER_HPP_
