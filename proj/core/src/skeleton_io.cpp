#include "afecnn/skeleton_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>

#include <json.hpp>

#include "afecnn/errors.hpp"

namespace afecnn {

namespace {

// float-typed JSON so numbers parse straight to binary32 without a double detour.
using FloatJson = nlohmann::basic_json<std::map, std::vector, std::string, bool, std::int64_t,
                                       std::uint64_t, float>;

constexpr std::size_t kNtuJoints = 25;

class LineReader {
 public:
  LineReader(std::istream& in, std::string_view name) : in_(in), name_(name) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file");
    ++number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  std::vector<std::string> fields() {
    std::istringstream ss(next());
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }

  long integer() {
    const auto f = fields();
    if (f.size() != 1) fail("expected a single integer");
    long value = 0;
    const auto* end = f[0].data() + f[0].size();
    const auto [ptr, ec] = std::from_chars(f[0].data(), end, value);
    if (ec != std::errc() || ptr != end || value < 0) fail("expected a non-negative integer, got '" + f[0] + "'");
    return value;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(std::string(name_) + ":" + std::to_string(number_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t number_ = 0;
};

float parse_coordinate(const std::string& tok, const LineReader& reader) {
  float value = 0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) reader.fail("invalid coordinate '" + tok + "'");
  return value;
}

struct BodyTrack {
  std::vector<std::pair<std::size_t, Frame>> frames;  // (frame index, joints)
  double energy = 0.0;
};

}  // namespace

std::optional<NtuFileInfo> parse_ntu_filename(std::string_view filename) {
  static const std::regex pattern(R"(S(\d{3})C(\d{3})P(\d{3})R(\d{3})A(\d{3}))");
  std::string name(filename);
  const auto slash = name.find_last_of("/\\");
  if (slash != std::string::npos) name = name.substr(slash + 1);
  std::smatch m;
  if (!std::regex_search(name, m, pattern) || m.position(0) != 0) return std::nullopt;
  return NtuFileInfo{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), std::stoi(m[4]), std::stoi(m[5])};
}

SkeletonSequence parse_ntu(std::istream& in, std::string_view filename) {
  LineReader reader(in, filename);
  const long frame_count = reader.integer();
  std::map<std::string, BodyTrack> bodies;
  std::vector<std::string> body_order;

  for (long t = 0; t < frame_count; ++t) {
    const long body_count = reader.integer();
    for (long b = 0; b < body_count; ++b) {
      const auto info = reader.fields();
      if (info.empty()) reader.fail("missing body info line");
      const std::string& body_id = info.front();
      const long joints = reader.integer();
      if (joints != static_cast<long>(kNtuJoints)) {
        reader.fail("expected 25 joints, got " + std::to_string(joints));
      }
      Frame frame(kNtuJoints);
      for (std::size_t j = 0; j < kNtuJoints; ++j) {
        const auto f = reader.fields();
        if (f.size() < 3) reader.fail("joint line needs at least 3 fields");
        for (int c = 0; c < 3; ++c) frame[j][c] = parse_coordinate(f[c], reader);
      }
      auto [it, inserted] = bodies.try_emplace(body_id);
      if (inserted) body_order.push_back(body_id);
      BodyTrack& track = it->second;
      if (!track.frames.empty() && track.frames.back().first + 1 == static_cast<std::size_t>(t)) {
        const Frame& prev = track.frames.back().second;
        for (std::size_t j = 0; j < kNtuJoints; ++j) {
          for (int c = 0; c < 3; ++c) {
            const double d = static_cast<double>(frame[j][c]) - prev[j][c];
            track.energy += d * d;
          }
        }
      }
      track.frames.emplace_back(static_cast<std::size_t>(t), std::move(frame));
    }
  }

  if (bodies.empty()) throw ParseError(std::string(filename) + ": no bodies in any frame");

  // Highest energy wins; ties go to the body seen first.
  const BodyTrack* primary = nullptr;
  for (const auto& id : body_order) {
    const BodyTrack& track = bodies.at(id);
    if (primary == nullptr || track.energy > primary->energy) primary = &track;
  }

  SkeletonSequence seq;
  seq.source = std::string(filename);
  for (const auto& entry : primary->frames) seq.frames.push_back(entry.second);
  if (const auto info = parse_ntu_filename(filename)) {
    seq.setup_id = info->setup_id;
    seq.camera_id = info->camera_id;
    seq.subject_id = info->subject_id;
    seq.action_label = info->action;
  }
  try {
    seq.validate();
  } catch (const InputError& e) {
    throw ParseError(std::string(filename) + ": " + e.what());
  }
  return seq;
}

SkeletonSequence parse_ntu(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_ntu(in, path.filename().string());
}

std::vector<SkeletonSequence> parse_jsonl(std::istream& in, std::optional<std::size_t> expected_joints) {
  std::vector<SkeletonSequence> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(number) + ": ";
    FloatJson obj;
    try {
      obj = FloatJson::parse(line);
    } catch (const FloatJson::parse_error& e) {
      throw ParseError(where + "invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw ParseError(where + "expected a JSON object");
    auto integer_field = [&](const char* key, bool required) -> int {
      const auto it = obj.find(key);
      if (it == obj.end()) {
        if (required) throw ParseError(where + "missing field \"" + key + "\"");
        return 0;
      }
      if (!it->is_number_integer()) throw ParseError(where + "field \"" + key + "\" must be an integer");
      return it->get<int>();
    };
    SkeletonSequence seq;
    seq.action_label = integer_field("label", true);
    seq.subject_id = integer_field("subject", true);
    seq.camera_id = integer_field("camera", true);
    seq.setup_id = integer_field("setup", false);
    const auto frames = obj.find("frames");
    if (frames == obj.end()) throw ParseError(where + "missing field \"frames\"");
    if (!frames->is_array()) throw ParseError(where + "\"frames\" must be an array");
    for (const auto& frame : *frames) {
      if (!frame.is_array()) throw ParseError(where + "each frame must be an array of joints");
      if (!expected_joints) expected_joints = frame.size();
      if (frame.size() != *expected_joints) {
        throw ParseError(where + "expected " + std::to_string(*expected_joints) + " joints, got " +
                         std::to_string(frame.size()));
      }
      Frame joints;
      joints.reserve(frame.size());
      for (const auto& p : frame) {
        if (!p.is_array() || p.size() != 3) throw ParseError(where + "each joint must be [x, y, z]");
        Joint joint{};
        for (int c = 0; c < 3; ++c) {
          if (!p[c].is_number()) throw ParseError(where + "joint coordinates must be numbers");
          joint[c] = p[c].get<float>();
        }
        joints.push_back(joint);
      }
      seq.frames.push_back(std::move(joints));
    }
    seq.source = "jsonl:" + std::to_string(number);
    try {
      seq.validate();
    } catch (const InputError& e) {
      throw ParseError(where + e.what());
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<SkeletonSequence> parse_jsonl(const std::filesystem::path& path,
                                          std::optional<std::size_t> expected_joints) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_jsonl(in, expected_joints);
}

void write_jsonl(std::span<const SkeletonSequence> sequences, std::ostream& out) {
  char buf[32];
  auto number = [&](float v) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
    out.write(buf, res.ptr - buf);
  };
  for (const auto& seq : sequences) {
    out << "{\"label\":" << seq.action_label << ",\"subject\":" << seq.subject_id
        << ",\"camera\":" << seq.camera_id << ",\"setup\":" << seq.setup_id << ",\"frames\":[";
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      if (t) out << ',';
      out << '[';
      for (std::size_t j = 0; j < seq.frames[t].size(); ++j) {
        if (j) out << ',';
        const Joint& p = seq.frames[t][j];
        out << '[';
        number(p[0]);
        out << ',';
        number(p[1]);
        out << ',';
        number(p[2]);
        out << ']';
      }
      out << ']';
    }
    out << "]}\n";
  }
}

void write_jsonl(std::span<const SkeletonSequence> sequences, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  write_jsonl(sequences, out);
  if (!out) throw UsageError("error while writing " + path.string());
}

}  // namespace afecnn
