// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>

#include "faa/errors.hpp"
#include "faa/run_config.hpp"
#include "test_support.hpp"

namespace faa {
namespace {

using nlohmann::json;
using test::TempDir;

void expect_config_error(const json& doc, const std::string& needle) {
  try {
    run_config_from_json(doc);
    ADD_FAILURE() << "accepted " << doc.dump();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(RunConfig, EmptyDocumentGivesDefaults) {
  const RunConfig c = run_config_from_json(json::object());
  EXPECT_EQ(c.model.faa.d_model, 64u);
  EXPECT_EQ(c.model.n_blocks, 4u);
  EXPECT_EQ(c.model.faa.num_grids, 9u);
  EXPECT_EQ(c.model.faa.insertion_layers, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(c.train.batch_size, 32u);
  EXPECT_EQ(c.train.warmup_ratio, 0.06);
  EXPECT_EQ(c.train.weight_decay, 0.01);
  EXPECT_EQ(c.train.clip_norm, 1.0);
  EXPECT_EQ(c.train.dropout, 0.1);
  EXPECT_EQ(c.task.width, 64u);
  EXPECT_EQ(c.task.split, SplitKind::kHighPass);
}

TEST(RunConfig, TaskWidthFollowsModelWidth) {
  const RunConfig c = run_config_from_json({{"model", {{"d_model", 32}}}});
  EXPECT_EQ(c.task.width, 32u);
  EXPECT_EQ(c.model.input_width(), 32u);
  const RunConfig d = run_config_from_json({{"model", {{"d_model", 32}}}, {"task", {{"width", 5}}}});
  EXPECT_EQ(d.model.input_width(), 5u);
}

TEST(RunConfig, UnknownKeysAreRejectedWithTheirPath) {
  expect_config_error({{"bogus", 1}}, "'bogus'");
  expect_config_error({{"train", {{"lr", 0.1}}}}, "'train.lr'");
  expect_config_error({{"faa", {{"ablation", {{"no_rff", true}}}}}}, "'faa.ablation.no_rff'");
}

TEST(RunConfig, TypeErrorsNameTheKey) {
  expect_config_error({{"seed", -1}}, "'seed'");
  expect_config_error({{"train", {{"epochs", "ten"}}}}, "'train.epochs'");
  expect_config_error({{"faa", {{"insertion_layers", {0, -1}}}}}, "'faa.insertion_layers'");
  expect_config_error({{"faa", {{"ablation", {{"static_gates", 1}}}}}}, "'faa.ablation.static_gates'");
  expect_config_error({{"model", 3}}, "'model'");
}

TEST(RunConfig, SemanticValidation) {
  expect_config_error({{"train", {{"warmup_ratio", 1.0}}}}, "warmup_ratio");
  expect_config_error({{"faa", {{"mode", "fancy"}}}}, "fancy");
  expect_config_error({{"task", {{"split", "band"}}}}, "band");
  expect_config_error({{"study", "a/b"}}, "study");
  expect_config_error({{"faa", {{"insertion_layers", {7}}}}}, "insertion");
  expect_config_error({{"task", {{"seq_len", 64}}}}, "max_seq_len");
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = run_config_from_json({{"seed", 9},
                                      {"study", "rt"},
                                      {"faa", {{"mode", "simple"}, {"sigma", 0.5}, {"ablation", {{"unfreeze_rff", true}}}}},
                                      {"train", {{"schedule", "epoch_decay"}, {"task_loss", "zero"}}},
                                      {"task", {{"split", "low_pass"}, {"noise", 0.125}}}});
  const json once = to_json(c);
  const RunConfig back = run_config_from_json(once);
  EXPECT_EQ(to_json(back), once);
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(back.model.faa.mode, ActivationMode::kSimple);
  EXPECT_EQ(back.train.schedule, ScheduleKind::kEpochDecay);
  EXPECT_EQ(back.task.split, SplitKind::kLowPass);
}

TEST(RunConfig, SeedsDeriveFromTheRunSeed) {
  const RunConfig a = run_config_from_json({{"seed", 1}});
  const RunConfig b = run_config_from_json({{"seed", 1}});
  const RunConfig c = run_config_from_json({{"seed", 2}});
  EXPECT_EQ(a.task.seed, b.task.seed);
  EXPECT_EQ(a.train.seed, b.train.seed);
  EXPECT_NE(a.task.seed, c.task.seed);
  EXPECT_NE(a.train.seed, a.task.seed);
  EXPECT_EQ(a.model.faa.seed, 1u);
}

TEST(RunConfig, HashAndVariantId) {
  RunConfig a = run_config_from_json(json::object());
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_EQ(variant_id(a), "original");
  RunConfig b = a;
  b.model.faa.ablation.no_gating = true;
  EXPECT_EQ(variant_id(b), "no_gating_l1");
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a, true), config_hash(b, true));
  b = a;
  b.train.lr_faa = 0.5;
  EXPECT_NE(config_hash(a, true), config_hash(b, true));
}

TEST(RunConfig, Datasets) {
  RunConfig c = run_config_from_json({{"task", {{"n_samples", 10}, {"eval_samples", 6}}}});
  const Datasets d = make_datasets(c);
  EXPECT_EQ(d.train.size(), 10u);
  ASSERT_TRUE(d.eval.has_value());
  EXPECT_EQ(d.eval->size(), 6u);
  EXPECT_FALSE(d.train.samples[0].bitwise_equal(d.eval->samples[0]));
  c.eval_samples = 0;
  EXPECT_FALSE(make_datasets(c).eval.has_value());
}

TEST(LoadRunConfig, FileErrors) {
  TempDir dir("cfg");
  try {
    load_run_config(dir.file("absent.json"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("absent.json"), std::string::npos);
  }
  std::ofstream(dir.file("bad.json")) << "{ not json";
  EXPECT_THROW(load_run_config(dir.file("bad.json")), ConfigError);
  std::ofstream(dir.file("ok.json")) << R"({"seed": 4, "study": "x"})";
  EXPECT_EQ(load_run_config(dir.file("ok.json")).seed, 4u);
}

}  // namespace
}  // namespace faa
