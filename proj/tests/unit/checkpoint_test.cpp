// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"

namespace {

using clo::FormatError;

std::string error_of(const std::string& bytes) {
  try {
    clo::deserialize_checkpoint<float>(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
  const auto m = clo::build_model<float>(clo::preset("xxs64"), 4);
  const std::string bytes = clo::serialize_checkpoint(m);
  const auto back = clo::deserialize_checkpoint<float>(bytes);
  EXPECT_EQ(back.spec, m.spec);
  EXPECT_EQ(clo::serialize_checkpoint(back), bytes);
  const auto pa = m.parameters();
  const auto pb = back.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(clo::max_abs_diff(pa[i], pb[i]), 0.0f);
}

TEST(Checkpoint, ReloadedModelGivesIdenticalLogits) {
  const auto m = clo::build_model<float>(clo::preset("xxs64"), 5);
  const auto path = std::filesystem::temp_directory_path() / "cloformer_ckpt_test.bin";
  clo::save_checkpoint(m, path);
  const auto back = clo::load_checkpoint<float>(path);
  std::filesystem::remove(path);
  clo::Rng rng(1);
  const clo::Tensor x = clo::normal<float>(clo::Shape{2, 3, 64, 64}, rng);
  EXPECT_EQ(clo::max_abs_diff(clo::model_forward(x, m).logits, clo::model_forward(x, back).logits),
            0.0f);
}

TEST(Checkpoint, DoublePrecisionRoundTrip) {
  const auto m = clo::build_model<double>(testing_support::tiny_spec(), 6);
  const auto back = clo::deserialize_checkpoint<double>(clo::serialize_checkpoint(m));
  EXPECT_EQ(clo::serialize_checkpoint(back), clo::serialize_checkpoint(m));
  EXPECT_THROW(clo::deserialize_checkpoint<float>(clo::serialize_checkpoint(m)), FormatError);
}

TEST(Checkpoint, InspectReadsTheManifest) {
  const auto m = clo::build_model<float>(testing_support::tiny_spec(), 6);
  const auto info = clo::inspect_checkpoint(clo::serialize_checkpoint(m));
  EXPECT_EQ(info.version, clo::kCheckpointVersion);
  const auto params = m.named_parameters();
  ASSERT_EQ(info.manifest.size(), params.size());
  std::uint64_t bytes = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    EXPECT_EQ(info.manifest[i].name, params[i].name);
    EXPECT_EQ(info.manifest[i].offset, bytes);
    bytes += params[i].tensor.numel() * sizeof(float);
  }
  EXPECT_EQ(info.blob_bytes, bytes);
}

TEST(Checkpoint, TruncationAndGarbageAreFormatErrors) {
  const std::string bytes = clo::serialize_checkpoint(clo::build_model<float>(testing_support::tiny_spec(), 7));
  for (std::size_t cut : {std::size_t(0), std::size_t(3), std::size_t(40), bytes.size() / 2, bytes.size() - 1})
    EXPECT_THROW(clo::deserialize_checkpoint<float>(bytes.substr(0, cut)), FormatError) << cut;
  EXPECT_THROW(clo::deserialize_checkpoint<float>(bytes + "x"), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_NE(error_of(bad).find("magic"), std::string::npos);
  bad = bytes;
  bad[4] = 9;
  EXPECT_NE(error_of(bad).find("version"), std::string::npos);
}

TEST(Checkpoint, MismatchesNameTheParameter) {
  const std::string bytes = clo::serialize_checkpoint(clo::build_model<float>(clo::preset("xxs64"), 8));

  std::string renamed = bytes;
  const auto at = renamed.find("head.bias");
  ASSERT_NE(at, std::string::npos);
  renamed[at + 8] = 'z';
  EXPECT_NE(error_of(renamed).find("head.biaz"), std::string::npos) << error_of(renamed);

  std::string reshaped = bytes;
  const auto spec_at = reshaped.find("num_classes = 8");
  ASSERT_NE(spec_at, std::string::npos);
  reshaped[spec_at + 14] = '9';
  EXPECT_NE(error_of(reshaped).find("head.weight"), std::string::npos) << error_of(reshaped);
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_THROW(clo::load_checkpoint<float>("/nonexistent/dir/model.ckpt"), clo::IoError);
}

}  // namespace
