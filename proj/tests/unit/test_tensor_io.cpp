/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "seqforge/model.hpp"
#include "seqforge/tensor.hpp"
#include "test_support.hpp"

namespace seqforge {
namespace {

TEST(TensorFile, RoundTripIsBitExact) {
  testing::TempDir dir("tensor");
  TensorFile f;
  f.kind = "test";
  f.metadata_json = R"({"answer":42})";
  auto& a = f.tensors.add("a", 2, 3);
  a << 1.5f, -0.0f, std::numeric_limits<float>::denorm_min(), 3.4e38f, -1e-30f, 0.1f;
  f.tensors.add("b.bias", 1, 4).setConstant(0.25f);
  f.tensors.add("empty", 0, 3);
  write_tensor_file(dir / "t.sqft", f);

  const TensorFile g = read_tensor_file(dir / "t.sqft");
  EXPECT_EQ(g.kind, "test");
  EXPECT_EQ(g.metadata_json, f.metadata_json);
  EXPECT_TRUE(g.tensors == f.tensors);
  const auto& ga = g.tensors.at("a");
  EXPECT_EQ(std::memcmp(ga.data(), a.data(), sizeof(float) * 6), 0);
}

TEST(TensorFile, RejectsCorruption) {
  testing::TempDir dir("tensor-bad");
  TensorFile f;
  f.kind = "test";
  f.metadata_json = "{}";
  f.tensors.add("w", 3, 3).setOnes();
  write_tensor_file(dir / "ok.sqft", f);
  const std::string bytes = testing::read_bytes(dir / "ok.sqft");

  testing::write_text(dir / "magic.sqft", "XXXXXXXX" + bytes.substr(8));
  EXPECT_THROW(read_tensor_file(dir / "magic.sqft"), ParseError);
  testing::write_text(dir / "short.sqft", bytes.substr(0, bytes.size() - 4));
  EXPECT_THROW(read_tensor_file(dir / "short.sqft"), ParseError);
  testing::write_text(dir / "long.sqft", bytes + "abcd");
  EXPECT_THROW(read_tensor_file(dir / "long.sqft"), ParseError);
  EXPECT_THROW(read_tensor_file(dir / "missing.sqft"), IoError);
}

TEST(Checkpoint, RoundTripReproducesEveryParameter) {
  testing::TempDir dir("ckpt");
  for (auto mode : {AttentionMode::Causal, AttentionMode::Bidirectional}) {
    ModelConfig cfg = ModelConfig::micro(mode);
    cfg.conditioning.num_categories = 3;
    cfg.conditioning.null_category = true;
    cfg.conditioning.category_names = {"x", "y", "z"};
    cfg.conditioning.protein_dim = 5;
    Checkpoint c = init_checkpoint(cfg, 99);
    c.step = 1234;
    save_checkpoint(dir / "c.sqft", c);
    const Checkpoint d = load_checkpoint(dir / "c.sqft");
    EXPECT_EQ(d.config, c.config);
    EXPECT_TRUE(d.params == c.params);
    EXPECT_EQ(d.step, 1234u);
    EXPECT_EQ(d.seed, 99u);
  }
}

TEST(ModelConfig, JsonRoundTripAndPresets) {
  ModelConfig cfg = ModelConfig::tiny(AttentionMode::Bidirectional);
  cfg.conditioning.signal = SignalIntegration::Feature;
  cfg.conditioning.signal_dim = 2;
  cfg.tie_embeddings = true;
  EXPECT_EQ(ModelConfig::from_json(cfg.to_json()), cfg);

  const ModelConfig enc = ModelConfig::encoder_base();
  EXPECT_EQ(enc.layers, 12u);
  EXPECT_EQ(enc.heads, 12u);
  EXPECT_EQ(enc.d_model, 768u);
  EXPECT_EQ(enc.mode, AttentionMode::Bidirectional);
  const ModelConfig dec = ModelConfig::decoder_base();
  EXPECT_EQ(dec.layers, 16u);
  EXPECT_EQ(dec.heads, 16u);
  EXPECT_EQ(dec.d_model, 768u);
  EXPECT_EQ(dec.mode, AttentionMode::Causal);

  const ModelConfig tiny = ModelConfig::tiny(AttentionMode::Causal);
  EXPECT_EQ(tiny.layers, 2u);
  EXPECT_EQ(tiny.heads, 4u);
  EXPECT_EQ(tiny.d_model, 64u);
  EXPECT_EQ(tiny.max_len, 512u);
}

TEST(ModelConfig, Validation) {
  ModelConfig cfg = ModelConfig::micro(AttentionMode::Causal);
  cfg.heads = 3;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = ModelConfig::micro(AttentionMode::Causal);
  cfg.conditioning.signal = SignalIntegration::Feature;
  cfg.conditioning.signal_dim = 1;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg.mode = AttentionMode::Bidirectional;
  EXPECT_NO_THROW(cfg.validate());
}

}  // namespace
}  // namespace seqforge
