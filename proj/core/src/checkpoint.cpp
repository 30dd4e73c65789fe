#include "afecnn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>

#include "afecnn/errors.hpp"

namespace afecnn {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'E', 'C'};
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void put_entry(std::ostream& out, const std::string& name, const Shape& shape, std::span<const float> values) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t e : shape) put_u32(out, static_cast<std::uint32_t>(e));
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

void put_values(std::ostream& out, const std::string& name, const std::vector<float>& values) {
  put_entry(out, name, {values.size()}, values);
}

struct Entry {
  Shape shape;
  std::vector<float> values;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CheckpointError("unexpected end of checkpoint");
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
  }

 private:
  std::istream& in_;
};

std::map<std::string, Entry> read_entries(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("bad magic: not an AFEC checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t count = r.u32();
  std::map<std::string, Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.u32(), '\0');
    r.bytes(name.data(), name.size());
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > kMaxRank) throw CheckpointError("entry '" + name + "' has invalid rank " + std::to_string(rank));
    Entry e;
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      e.shape.push_back(r.u32());
      if (e.shape.back() == 0) throw CheckpointError("entry '" + name + "' has a zero extent");
      n *= e.shape.back();
    }
    if (n > (std::size_t{1} << 30)) throw CheckpointError("entry '" + name + "' is implausibly large");
    e.values.resize(n);
    for (float& v : e.values) v = std::bit_cast<float>(r.u32());
    if (!entries.emplace(std::move(name), std::move(e)).second) throw CheckpointError("duplicate checkpoint entry");
  }
  return entries;
}

const Entry& require(const std::map<std::string, Entry>& entries, const std::string& name) {
  const auto it = entries.find(name);
  if (it == entries.end()) throw CheckpointError("checkpoint lacks '" + name + "'");
  return it->second;
}

std::size_t whole(const std::map<std::string, Entry>& entries, const std::string& name, std::size_t index = 0) {
  const Entry& e = require(entries, name);
  if (index >= e.values.size() || !(e.values[index] >= 0)) {
    throw CheckpointError("checkpoint entry '" + name + "' is malformed");
  }
  return static_cast<std::size_t>(e.values[index]);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams<float>& params, const ModelConfig& config) {
  const auto named = params.named();
  std::vector<float> bones;
  for (const Bone& b : config.topology.bones()) {
    bones.push_back(static_cast<float>(b.parent));
    bones.push_back(static_cast<float>(b.child));
  }
  const auto& f = config.flags;

  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(named.size() + 10));
  put_values(out, "config.time_steps", {static_cast<float>(config.time_steps)});
  put_values(out, "config.joints", {static_cast<float>(config.joints())});
  put_values(out, "config.classes", {static_cast<float>(config.classes)});
  put_values(out, "config.channels", {static_cast<float>(config.channels[0]), static_cast<float>(config.channels[1]),
                                      static_cast<float>(config.channels[2])});
  put_values(out, "config.root", {static_cast<float>(config.topology.root())});
  put_entry(out, "config.bones", {config.bones(), 2}, bones);
  put_values(out, "config.layout", {static_cast<float>(config.conv_padding), static_cast<float>(config.conv_stride),
                                    static_cast<float>(config.fc_hidden), static_cast<float>(config.scale_hidden)});
  put_values(out, "config.leaky_slope", {static_cast<float>(config.leaky_slope)});
  put_values(out, "config.velocity_dt", {static_cast<float>(config.velocity_dt)});
  put_values(out, "config.flags", {float(f.kjfe), float(f.bvfe), float(f.mfam), float(f.te), float(f.jvtm)});
  for (const auto& [name, tensor] : named) put_entry(out, name, tensor.shape(), tensor.data());
  if (!out) throw CheckpointError("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params, const ModelConfig& config) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, params, config);
  out.close();
  if (!out) throw CheckpointError("failed writing " + path.string());
}

Checkpoint read_checkpoint(std::istream& in) {
  const auto entries = read_entries(in);

  const std::size_t joints = whole(entries, "config.joints");
  const Entry& bone_entry = require(entries, "config.bones");
  if (bone_entry.shape.size() != 2 || bone_entry.shape[1] != 2) throw CheckpointError("config.bones is malformed");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t k = 0; k < bone_entry.shape[0]; ++k) {
    edges.emplace_back(whole(entries, "config.bones", 2 * k), whole(entries, "config.bones", 2 * k + 1));
  }
  std::optional<Topology> topology;
  try {
    topology.emplace(joints, whole(entries, "config.root"), edges);
  } catch (const TopologyError& e) {
    throw CheckpointError(std::string("checkpoint topology invalid: ") + e.what());
  }

  ModelConfig config(*topology, whole(entries, "config.classes"), whole(entries, "config.time_steps"));
  for (std::size_t l = 0; l < 3; ++l) config.channels[l] = whole(entries, "config.channels", l);
  config.conv_padding = whole(entries, "config.layout", 0);
  config.conv_stride = whole(entries, "config.layout", 1);
  config.fc_hidden = whole(entries, "config.layout", 2);
  config.scale_hidden = whole(entries, "config.layout", 3);
  config.leaky_slope = require(entries, "config.leaky_slope").values.at(0);
  config.velocity_dt = require(entries, "config.velocity_dt").values.at(0);
  config.flags = {whole(entries, "config.flags", 0) != 0, whole(entries, "config.flags", 1) != 0,
                  whole(entries, "config.flags", 2) != 0, whole(entries, "config.flags", 3) != 0,
                  whole(entries, "config.flags", 4) != 0};
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
  }

  Checkpoint ck{config, ModelParams<float>::initialize(config, 0)};
  for (auto& [name, tensor] : ck.params.named()) {
    const Entry& e = require(entries, name);
    if (e.shape != tensor.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_string(e.shape) + ", expected " +
                            shape_string(tensor.shape()));
    }
    std::copy(e.values.begin(), e.values.end(), tensor.mutable_data().begin());
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace afecnn
