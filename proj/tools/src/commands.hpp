/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <CLI11.hpp>

namespace seqforge::cli {

void register_preprocess(CLI::App& app);
void register_synth(CLI::App& app);
void register_train(CLI::App& app);
void register_generate(CLI::App& app);
void register_evaluate(CLI::App& app);

}  // namespace seqforge::cli
