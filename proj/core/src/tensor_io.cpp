/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include <json.hpp>

#include "seqforge/tensor.hpp"

namespace seqforge {
namespace {

constexpr std::array<char, 8> kMagic{'S', 'Q', 'F', 'T', 'N', 'S', 'R', '1'};

void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void put_f32(std::vector<char>& out, float f) {
  auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  nlohmann::ordered_json header;
  header["format"] = "seqforge-tensors";
  header["version"] = 1;
  header["kind"] = file.kind;
  header["metadata"] = file.metadata_json.empty() ? nlohmann::ordered_json::object()
                                                  : nlohmann::ordered_json::parse(file.metadata_json);
  auto& table = header["tensors"] = nlohmann::ordered_json::array();

  std::vector<char> payload;
  for (const auto& [name, t] : file.tensors) {
    table.push_back({{"name", name},
                     {"dtype", "f32le"},
                     {"shape", {t.rows(), t.cols()}},
                     {"offset", payload.size()}});
    for (Eigen::Index i = 0; i < t.size(); ++i) put_f32(payload, t.data()[i]);
  }

  const std::string text = header.dump();
  std::vector<char> bytes(kMagic.begin(), kMagic.end());
  put_u64(bytes, text.size());
  bytes.insert(bytes.end(), text.begin(), text.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open", path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 16 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw ParseError("not a seqforge tensor file: " + path.string(), 0);
  }
  const std::uint64_t header_len = get_u64(bytes.data() + 8);
  if (16 + header_len > bytes.size()) throw ParseError("truncated header: " + path.string(), 8);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad tensor header: ") + e.what(), 16);
  }

  TensorFile file;
  file.kind = header.value("kind", "");
  file.metadata_json = header.at("metadata").dump();
  const char* data = bytes.data() + 16 + header_len;
  const std::size_t data_len = bytes.size() - 16 - header_len;
  std::size_t expected_end = 0;
  for (const auto& entry : header.at("tensors")) {
    if (entry.at("dtype") != "f32le") throw ParseError("unsupported dtype in " + path.string(), 16);
    const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const std::size_t nbytes = static_cast<std::size_t>(rows * cols) * 4;
    if (offset + nbytes > data_len) {
      throw ParseError("tensor '" + entry.at("name").get<std::string>() + "' exceeds payload", offset);
    }
    auto& t = file.tensors.add(entry.at("name").get<std::string>(), rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = get_f32(data + offset + 4 * static_cast<std::size_t>(i));
    expected_end = std::max(expected_end, offset + nbytes);
  }
  if (expected_end != data_len) throw ParseError("trailing bytes after tensor payload", expected_end);
  return file;
}

}  // namespace seqforge
