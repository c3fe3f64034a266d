/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <cstdlib>
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "common.hpp"

namespace {

// Exit codes: 1 usage/config/data errors, 2 missing input files, 3 other failures.
constexpr int kUsageExit = 1;
constexpr int kMissingFileExit = 2;
constexpr int kRuntimeExit = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("seqforge");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("SEQFORGE_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Conditional DNA sequence generation with small transformers", "seqforge"};
  app.set_version_flag("--version", SEQFORGE_VERSION);
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);
  seqforge::cli::register_preprocess(app);
  seqforge::cli::register_synth(app);
  seqforge::cli::register_train(app);
  seqforge::cli::register_generate(app);
  seqforge::cli::register_evaluate(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const seqforge::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingFileExit;
  } catch (const seqforge::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageExit;
  } catch (const seqforge::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageExit;
  } catch (const seqforge::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeExit;
  }
  return 0;
}
