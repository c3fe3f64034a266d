/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqforge/dataio.hpp"
#include "seqforge/training.hpp"

namespace seqforge::cli {

/// Usage or configuration problems found before any work starts.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct CommonOptions {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
};

void add_common(CLI::App& sub, CommonOptions& opts);

/// Throws IoError when the path does not exist.
void require_file(const std::filesystem::path& path, const std::string& what);

/// Condition label of a record id: the text after the last '|', or empty.
std::string condition_of(const std::string& id);

struct LoadedSequences {
  std::vector<std::string> ids;
  std::vector<DnaSequence> sequences;
  std::vector<std::string> conditions;
};

/// FASTA plus an optional condition table whose "id" and "condition"
/// columns override the labels taken from the headers.
LoadedSequences load_sequences(const std::filesystem::path& fasta,
                               const std::optional<std::filesystem::path>& conditions);

/// Records the resolved options of a subcommand, its seed and paths.
class Manifest {
 public:
  Manifest(const CLI::App& sub, const CommonOptions& common);
  void input(const std::string& key, const std::filesystem::path& path);
  void output(const std::string& key, const std::filesystem::path& path);
  void note(const std::string& key, nlohmann::ordered_json value);
  void write(const std::filesystem::path& dir) const;

 private:
  nlohmann::ordered_json doc_;
};

}  // namespace seqforge::cli
