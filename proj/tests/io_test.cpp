#include "iblab/io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace iblab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("iblab_io_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(JointJson, RoundTripIsExact) {
  const JointXY data = make_random_joint(5, 3, 77);
  const JointXY back = joint_from_json(json::parse(to_json(data).dump()));
  EXPECT_EQ(back.probs(), data.probs());
  EXPECT_EQ(back.x_labels(), data.x_labels());
  EXPECT_EQ(back.y_labels(), data.y_labels());
}

TEST(JointJson, LabelsDefaultWhenAbsent) {
  const JointXY d = joint_from_json(json::parse(R"({"probs": [[0.25, 0.25], [0.5, 0.0]]})"));
  EXPECT_EQ(d.card_x(), 2u);
  EXPECT_EQ(d.x_labels().size(), 2u);
}

TEST(JointJson, RejectsMalformedInput) {
  EXPECT_THROW(joint_from_json(json::parse("[1, 2]")), ValidationError);
  EXPECT_THROW(joint_from_json(json::parse(R"({"x_labels": []})")), ValidationError);
  EXPECT_THROW(joint_from_json(json::parse(R"({"probs": [[0.5, 0.5], [0.0]]})")), ValidationError);
  EXPECT_THROW(joint_from_json(json::parse(R"({"probs": [[0.5, "a"]]})")), ValidationError);
  EXPECT_THROW(joint_from_json(json::parse(R"({"probs": [[0.5, 0.6]]})")), ValidationError);
  EXPECT_THROW(joint_from_json(json::parse(R"({"probs": [[1.5, -0.5]]})")), ValidationError);
  EXPECT_THROW(joint_from_json(json::parse(R"({"probs": [[0.5, 0.5]], "x_labels": ["a", "b"]})")), ValidationError);
}

TEST(EncoderJson, RoundTripIsExact) {
  CounterRng rng(5);
  const Encoder enc(oracle::softmax_rows(oracle::random_matrix(4, 3, 1.0, rng)));
  const Encoder back = encoder_from_json(json::parse(to_json(enc, {"a", "b", "c", "d"}).dump()));
  EXPECT_EQ(back.cond(), enc.cond());
}

TEST(EncoderJson, CardinalityMismatch) {
  EXPECT_THROW(encoder_from_json(json::parse(R"({"probs": [[0.5, 0.5]], "z_cardinality": 3})")), DimensionError);
}

TEST(Reports, ValuesCarryNineDigits) {
  IBPoint p;
  p.beta = 0.1234567891234;
  p.i_xt = 1.0 / 3.0;
  const json j = to_json(p);
  EXPECT_EQ(j["beta"].get<double>(), 0.123456789);
  EXPECT_EQ(j["i_xt_nats"].dump(), "0.333333333");
  EXPECT_EQ(format_sig9(std::log(4.0)), "1.38629436");
}

TEST(SweepCsv, HeaderAndRows) {
  IBPoint a;
  a.beta = 0.001;
  a.i_xt = 0.5;
  a.i_ty = 0.25;
  a.objective = -0.2495;
  a.converged = true;
  a.restarts_used = 10;
  const std::string csv = sweep_csv({a});
  EXPECT_EQ(csv, "beta,i_xt_nats,i_ty_nats,objective,converged,restarts_used\n0.001,0.5,0.25,-0.2495,true,10\n");
}

TEST(ContentHash, KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(content_hash("a"), "fnv1a64:af63dc4c8601ec8c");
}

TEST(AtomicWrite, ReplacesContentsWithoutLeftovers) {
  const fs::path dir = scratch_dir();
  const fs::path target = dir / "out.txt";
  write_file_atomic(target, "first");
  write_file_atomic(target, "second");
  EXPECT_EQ(read_file(target), "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  EXPECT_EQ(entries, 1u);
  fs::remove_all(dir);
}

TEST(AtomicWrite, MissingDirectoryFails) {
  EXPECT_THROW(write_file_atomic(scratch_dir() / "no" / "such" / "file", "x"), std::runtime_error);
}

TEST(LoadJoint, FileErrors) {
  const fs::path dir = scratch_dir();
  EXPECT_THROW(load_joint(dir / "absent.json"), ValidationError);
  write_file_atomic(dir / "broken.json", "{ not json");
  EXPECT_THROW(load_joint(dir / "broken.json"), ValidationError);
  write_file_atomic(dir / "ok.json", to_json(make_noisy(4, 2, 0.1)).dump());
  EXPECT_EQ(load_joint(dir / "ok.json").probs(), make_noisy(4, 2, 0.1).probs());
  fs::remove_all(dir);
}
