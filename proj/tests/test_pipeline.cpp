#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "coimg/pipeline.hpp"
#include "fixtures.hpp"

namespace coimg {
namespace {

using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const VerifyCheck& check(const VerifyReport& report, const std::string& name) {
  for (const auto& c : report.checks) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("no check " + name);
}

class PipelineFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::make_corpus(dir / "in", {{"a", 6}, {"b", 4}}, 16);
    manifest = scan_dataset(dir / "in", default_extensions()).manifest;
    plan = plan_balanced(manifest, layout, {}, 21);
  }

  VerifyReport verify_all(const fs::path& out) const {
    VerifyOptions options;
    options.spot_checks = 1000;
    return verify_output(out, options);
  }

  TempDir dir;
  Layout layout{3, 1, 16, 16};
  DatasetManifest manifest;
  CompositePlan plan;
};

TEST_F(PipelineFixture, GenerateThenVerify) {
  const auto outcome = generate_dataset(plan, manifest, dir / "out", 2);
  EXPECT_EQ(outcome.failures, 0u);
  ASSERT_EQ(outcome.rows.size(), 8u);  // T = C(4, 3) = 4 per class
  for (const auto& row : outcome.rows) {
    EXPECT_TRUE(fs::exists(dir / "out" / row.record.output_path));
    EXPECT_EQ(row.width, 16);
    EXPECT_EQ(row.height, 48);
  }
  const auto report = verify_all(dir / "out");
  EXPECT_TRUE(report.passed()) << report.text();
  EXPECT_NE(report.text().find("verify: PASS"), std::string::npos);
}

TEST_F(PipelineFixture, MissingFileFailsVerification) {
  const auto outcome = generate_dataset(plan, manifest, dir / "out", 1);
  fs::remove(dir / "out" / outcome.rows[3].record.output_path);
  const auto report = verify_all(dir / "out");
  EXPECT_FALSE(report.passed());
  const auto& files = check(report, "files");
  ASSERT_EQ(files.violations.size(), 1u);
  EXPECT_NE(files.violations[0].find("missing file"), std::string::npos);
}

TEST_F(PipelineFixture, SwappedFilesFailSpotCheck) {
  const auto outcome = generate_dataset(plan, manifest, dir / "out", 1);
  const fs::path a = dir / "out" / outcome.rows[0].record.output_path;
  const fs::path b = dir / "out" / outcome.rows[1].record.output_path;
  fs::rename(a, dir / "tmp.png");
  fs::rename(b, a);
  fs::rename(dir / "tmp.png", b);
  const auto report = verify_all(dir / "out");
  EXPECT_TRUE(check(report, "files").passed);
  EXPECT_FALSE(check(report, "spot-check").passed);
  EXPECT_EQ(check(report, "spot-check").violations.size(), 2u);
}

TEST_F(PipelineFixture, TamperedTransformsFailSpotCheck) {
  generate_dataset(plan, manifest, dir / "out", 1);
  std::string lines = slurp(dir / "out" / kGenerationManifest);
  const auto pos = lines.find("\"rotation\":");
  ASSERT_NE(pos, std::string::npos);
  lines.insert(pos + 11, "1");
  write_text_file(dir / "out" / kGenerationManifest, lines);
  EXPECT_FALSE(check(verify_all(dir / "out"), "spot-check").passed);
}

TEST_F(PipelineFixture, RerunAndWorkerCountGiveIdenticalManifests) {
  generate_dataset(plan, manifest, dir / "one", 1);
  generate_dataset(plan, manifest, dir / "again", 1);
  generate_dataset(plan, manifest, dir / "four", 4);
  const std::string ref = slurp(dir / "one" / kGenerationManifest);
  EXPECT_FALSE(ref.empty());
  EXPECT_EQ(ref, slurp(dir / "again" / kGenerationManifest));
  EXPECT_EQ(ref, slurp(dir / "four" / kGenerationManifest));
  EXPECT_EQ(slurp(dir / "one" / kGenerationMeta), slurp(dir / "four" / kGenerationMeta));
}

TEST_F(PipelineFixture, CompletionEpochsRenderDistinctImages) {
  PlanOptions options;
  options.override_target = 6;
  const auto boosted = plan_balanced(manifest, layout, {}, 21, options);
  ASSERT_EQ(boosted.classes[1].mode, PlanMode::completion);
  const auto outcome = generate_dataset(boosted, manifest, dir / "out", 2);
  std::set<std::string> digests;
  for (const auto& row : outcome.rows) EXPECT_TRUE(digests.insert(row.digest).second) << row.record.output_path;
  VerifyOptions verify;
  verify.spot_checks = 1000;
  EXPECT_TRUE(verify_output(dir / "out", verify).passed());
}

TEST_F(PipelineFixture, UnbalancedClassCountsAreNotChecked) {
  const auto full = plan_unbalanced(manifest, layout, {}, 2);
  generate_dataset(full, manifest, dir / "out", 1);
  const auto report = verify_all(dir / "out");
  EXPECT_TRUE(report.passed()) << report.text();
}

TEST_F(PipelineFixture, ChangedSourceIsRecordedAsFailure) {
  encode_image(dir / "in/b/img_00000.png", testing::pattern_image(16, 16, 555));
  const auto outcome = generate_dataset(plan, manifest, dir / "out", 2);
  EXPECT_GT(outcome.failures, 0u);
  const auto b_rows = std::count_if(outcome.rows.begin(), outcome.rows.end(),
                                    [](const GeneratedRecord& g) { return g.record.class_name == "b"; });
  EXPECT_EQ(outcome.failures, static_cast<std::size_t>(b_rows) - 1);  // the tuple {1, 2, 3} does not use image 0
  for (const auto& row : outcome.rows) {
    if (!row.error.empty()) {
      EXPECT_NE(row.error.find("DecodeFailure"), std::string::npos);
    }
  }
  EXPECT_FALSE(verify_all(dir / "out").passed());
}

TEST_F(PipelineFixture, PlanForAnotherManifestIsRejected) {
  const auto other = scan_dataset(dir / "in", default_extensions()).manifest;
  auto altered = other;
  altered.classes[0].entries.pop_back();
  try {
    generate_dataset(plan, altered, dir / "out", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST_F(PipelineFixture, MissingMetadataIsAnError) {
  EXPECT_THROW(verify_output(dir / "nowhere"), Error);
}

}  // namespace
}  // namespace coimg
