// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include "multigrid/model.hpp"
#include "multigrid/schedule.hpp"
#include "multigrid/synth_data.hpp"
#include "multigrid/trainer.hpp"

namespace multigrid {

// A full experiment: the schedule recipe plus, for training and evaluation,
// synthetic data, model and evaluation settings. Parsed from JSON; unknown
// keys and type mismatches are config errors naming the key path.
struct ExperimentConfig {
  ScheduleConfig schedule;
  std::optional<SynthSpec> train_data;
  std::optional<SynthSpec> val_data;
  ModelConfig model;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  EvalSettings eval;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace multigrid
