/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "common.hpp"

#include <fstream>
#include <map>

namespace seqforge::cli {

void add_common(CLI::App& sub, CommonOptions& opts) {
  sub.add_option("--seed", opts.seed, "Random seed")->capture_default_str();
  sub.add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
}

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::exists(path)) throw IoError(what + " not found", path.string());
}

std::string condition_of(const std::string& id) {
  const auto bar = id.rfind('|');
  return bar == std::string::npos ? std::string() : id.substr(bar + 1);
}

LoadedSequences load_sequences(const std::filesystem::path& fasta,
                               const std::optional<std::filesystem::path>& conditions) {
  require_file(fasta, "sequence file");
  LoadedSequences out;
  for (auto& r : read_fasta_records(fasta)) {
    try {
      out.sequences.push_back(encode(r.sequence));
    } catch (const ParseError& e) {
      throw ParseError(fasta.string() + ": record " + r.id + ": " + e.what(), e.position());
    }
    out.conditions.push_back(condition_of(r.id));
    out.ids.push_back(std::move(r.id));
  }
  if (conditions) {
    require_file(*conditions, "condition table");
    const ConditionTable table = read_condition_table(*conditions);
    const std::size_t id_col = table.column("id");
    const std::size_t cond_col = table.column("condition");
    std::map<std::string, std::string> by_id;
    for (const auto& row : table.rows) by_id[row[id_col]] = row[cond_col];
    for (std::size_t i = 0; i < out.ids.size(); ++i) {
      const auto it = by_id.find(out.ids[i]);
      if (it == by_id.end()) throw UsageError("record " + out.ids[i] + " is missing from " + conditions->string());
      out.conditions[i] = it->second;
    }
  }
  return out;
}

Manifest::Manifest(const CLI::App& sub, const CommonOptions& common) {
  doc_["tool"] = "seqforge";
  doc_["version"] = SEQFORGE_VERSION;
  doc_["subcommand"] = sub.get_name();
  doc_["seed"] = common.seed;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    const auto results = opt->results();
    if (opt->get_type_size() == 0) {
      config[name] = opt->count() > 0;
    } else if (!results.empty()) {
      config[name] = results.size() == 1 && opt->get_expected_max() <= 1 ? nlohmann::ordered_json(results.front())
                                                                          : nlohmann::ordered_json(results);
    } else if (!opt->get_default_str().empty()) {
      config[name] = opt->get_default_str();
    } else {
      config[name] = nullptr;
    }
  }
  doc_["config"] = std::move(config);
  doc_["inputs"] = nlohmann::ordered_json::object();
  doc_["outputs"] = nlohmann::ordered_json::object();
}

void Manifest::input(const std::string& key, const std::filesystem::path& path) { doc_["inputs"][key] = path.string(); }

void Manifest::output(const std::string& key, const std::filesystem::path& path) {
  doc_["outputs"][key] = path.string();
}

void Manifest::note(const std::string& key, nlohmann::ordered_json value) { doc_[key] = std::move(value); }

void Manifest::write(const std::filesystem::path& dir) const {
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out << doc_.dump(2) << '\n';
  if (!out) throw IoError("write failed", path.string());
}

}  // namespace seqforge::cli
