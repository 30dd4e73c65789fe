#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "afecnn/errors.hpp"
#include "afecnn/skeleton_io.hpp"
#include "test_support.hpp"

using namespace afecnn;

namespace {

const std::filesystem::path kNtuDir = std::filesystem::path(AFECNN_FIXTURE_DIR) / "ntu";

}  // namespace

TEST(NtuFilename, DecodesFields) {
  const auto info = parse_ntu_filename("S001C002P003R002A013");
  ASSERT_TRUE(info.has_value());
  EXPECT_EQ(info->setup_id, 1);
  EXPECT_EQ(info->camera_id, 2);
  EXPECT_EQ(info->subject_id, 3);
  EXPECT_EQ(info->replication, 2);
  EXPECT_EQ(info->action, 13);
  EXPECT_TRUE(parse_ntu_filename("/data/nturgbd/S017C003P020R002A060.skeleton").has_value());
  EXPECT_FALSE(parse_ntu_filename("clip_S001C002P003R002A013.skeleton").has_value());
  EXPECT_FALSE(parse_ntu_filename("S01C002P003R002A013").has_value());
}

TEST(Ntu, TwoFrameSingleBody) {
  const SkeletonSequence s = parse_ntu(kNtuDir / "S001C002P003R002A013.skeleton");
  EXPECT_EQ(s.frame_count(), 2u);
  EXPECT_EQ(s.joint_count(), 25u);
  EXPECT_EQ(s.camera_id, 2);
  EXPECT_EQ(s.subject_id, 3);
  EXPECT_EQ(s.setup_id, 1);
  EXPECT_EQ(s.action_label, 13);
  EXPECT_FLOAT_EQ(s.frames[1][0][0], 0.15f);
}

TEST(Ntu, EmptyFrameIsDropped) {
  const SkeletonSequence s = parse_ntu(kNtuDir / "S001C001P001R001A001.skeleton");
  EXPECT_EQ(s.frame_count(), 2u);
  EXPECT_FLOAT_EQ(s.frames[1][0][1], 0.1f);
}

TEST(Ntu, MostActiveBodyIsKept) {
  const SkeletonSequence s = parse_ntu(kNtuDir / "S002C003P004R001A005.skeleton");
  ASSERT_EQ(s.frame_count(), 2u);
  EXPECT_FLOAT_EQ(s.frames[0][0][0], 1.0f);
  EXPECT_FLOAT_EQ(s.frames[1][0][0], 1.5f);
}

TEST(Ntu, WrongJointCountNamesLine) {
  try {
    parse_ntu(kNtuDir / "S001C001P002R001A002.skeleton");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(":4:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 25 joints"), std::string::npos) << msg;
  }
}

TEST(Ntu, NoBodiesAnywhereIsParseError) {
  std::istringstream in("2\n0\n0\n");
  EXPECT_THROW(parse_ntu(in, "S001C001P001R001A001.skeleton"), ParseError);
}

TEST(Ntu, MalformedCoordinateIsParseError) {
  std::ostringstream text;
  text << "1\n1\n1 0 0 0 0 0 0 0 0 2\n25\n";
  for (int j = 0; j < 25; ++j) text << (j == 7 ? "0.1 abc 0.3\n" : "0.1 0.2 0.3\n");
  std::istringstream in(text.str());
  try {
    parse_ntu(in, "x.skeleton");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":12:"), std::string::npos) << e.what();
  }
}

TEST(Jsonl, RoundTripIsExact) {
  std::mt19937_64 rng(1);
  std::vector<SkeletonSequence> data;
  for (int i = 0; i < 4; ++i) {
    SkeletonSequence s = test::random_sequence(5, 15, rng);
    s.action_label = i;
    s.subject_id = 10 + i;
    s.camera_id = 1 + i % 3;
    s.setup_id = 2;
    s.frames[0][0] = {1e-30f, -3.4e38f, 0.1f};
    data.push_back(s);
  }
  std::stringstream buf;
  write_jsonl(data, buf);
  EXPECT_EQ(parse_jsonl(buf), data);
}

TEST(Jsonl, EmptyInputIsEmptyDataset) {
  std::istringstream in("");
  EXPECT_TRUE(parse_jsonl(in).empty());
  std::istringstream blanks("\n\n");
  EXPECT_TRUE(parse_jsonl(blanks).empty());
}

TEST(Jsonl, RaggedJointCountNamesLine) {
  auto line = [](std::size_t joints) {
    std::string s = R"({"label":1,"subject":1,"camera":1,"frames":[)";
    for (int t = 0; t < 2; ++t) {
      s += t ? ",[" : "[";
      for (std::size_t j = 0; j < joints; ++j) s += j ? ",[0,0,0]" : "[0,0,0]";
      s += "]";
    }
    return s + "]}\n";
  };
  std::istringstream in(line(25) + line(25) + line(24));
  try {
    parse_jsonl(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3: expected 25 joints"), std::string::npos) << e.what();
  }
  std::istringstream fixed(line(24));
  EXPECT_THROW(parse_jsonl(fixed, 25), ParseError);
}

TEST(Jsonl, MissingFieldNamesLine) {
  std::istringstream in(R"({"label":1,"camera":1,"frames":[[[0,0,0]],[[1,1,1]]]})");
  try {
    parse_jsonl(in);
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("subject"), std::string::npos) << msg;
  }
}

TEST(Jsonl, SetupIsOptional) {
  std::istringstream in(R"({"label":1,"subject":2,"camera":3,"frames":[[[0,0,0]],[[1,1,1]]]})");
  const auto data = parse_jsonl(in);
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data[0].setup_id, 0);
  EXPECT_EQ(data[0].camera_id, 3);
}
