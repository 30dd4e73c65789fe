#include "afecnn/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "afecnn/errors.hpp"

namespace afecnn {

namespace {

using Vec = std::array<double, 3>;

constexpr double kPi = std::numbers::pi;

Vec rotate_x(const Vec& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]};
}

Vec rotate_y(const Vec& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]};
}

Vec rotate_z(const Vec& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]};
}

Vec add(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec mul(const Vec& a, double k) { return {a[0] * k, a[1] * k, a[2] * k}; }

struct Limb {
  double flexion = 0;    // forward swing about the lateral axis
  double abduction = 0;  // sideways swing away from the body midline
  double bend = 0;       // elbow / knee
};

struct Pose {
  double drop = 0;  // pelvis height loss
  double lean = 0;  // trunk pitch, forward positive
  double turn = 0;  // trunk yaw
  Limb left_arm, right_arm, left_leg, right_leg;
};

// Segment lengths of the unit-scale body.
constexpr double kUpperArm = 0.30, kForearm = 0.27, kThigh = 0.45, kShin = 0.45;
constexpr double kPelvisHeight = 1.0, kTorso = 0.5, kNeck = 0.25;
constexpr double kShoulderHalf = 0.2, kHipHalf = 0.1;

// Positive x is the body's left side, +z faces the camera, +y is up.
// `side` is +1 for left limbs and -1 for right ones.
std::pair<Vec, Vec> limb_points(const Vec& anchor, const Limb& limb, double side, double upper,
                                double lower, bool knee) {
  const Vec down{0, -1, 0};
  const Vec first = rotate_x(rotate_z(down, side * limb.abduction), -limb.flexion);
  const double second_angle = knee ? -limb.flexion + limb.bend : -limb.flexion - limb.bend;
  const Vec second = rotate_x(rotate_z(down, side * limb.abduction), second_angle);
  const Vec mid = add(anchor, mul(first, upper));
  return {mid, add(mid, mul(second, lower))};
}

Frame assemble(const Pose& pose) {
  Frame f(15);
  auto put = [&](std::size_t j, const Vec& v) {
    f[j] = {static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])};
  };
  const Vec pelvis{0, kPelvisHeight - pose.drop, 0};
  // Upper body hangs off the pelvis and follows trunk lean and turn.
  auto trunk = [&](const Vec& local) { return add(pelvis, rotate_y(rotate_x(local, pose.lean), pose.turn)); };
  const Vec chest_local{0, kTorso, 0};
  put(0, pelvis);
  put(1, trunk(chest_local));
  put(2, trunk({0, kTorso + kNeck, 0}));

  for (double side : {1.0, -1.0}) {
    const Limb& arm = side > 0 ? pose.left_arm : pose.right_arm;
    const Vec shoulder_local{side * kShoulderHalf, kTorso - 0.05, 0};
    const auto [elbow_local, hand_local] = limb_points(shoulder_local, arm, side, kUpperArm, kForearm, false);
    const std::size_t base = side > 0 ? 3 : 6;
    put(base, trunk(shoulder_local));
    put(base + 1, trunk(elbow_local));
    put(base + 2, trunk(hand_local));
  }
  for (double side : {1.0, -1.0}) {
    const Limb& leg = side > 0 ? pose.left_leg : pose.right_leg;
    const Vec hip = add(pelvis, {side * kHipHalf, -0.05, 0});
    const auto [knee, foot] = limb_points(hip, leg, side, kThigh, kShin, true);
    const std::size_t base = side > 0 ? 9 : 12;
    put(base, hip);
    put(base + 1, knee);
    put(base + 2, foot);
  }
  return f;
}

double bump(double s) { return std::sin(kPi * s); }

}  // namespace

std::string motion_class_name(int label) {
  static const char* names[] = {"arm-raise", "wave", "squat", "kick", "lean", "turn", "reach", "clap"};
  if (label < 0 || label >= kMotionClassCount) return "class-" + std::to_string(label);
  return names[label];
}

void SynthConfig::validate() const {
  if (class_count < 1 || class_count > kMotionClassCount) {
    throw UsageError("synthetic class count must be in [1, " + std::to_string(kMotionClassCount) + "]");
  }
  if (sequences_per_class < 1) throw UsageError("sequences per class must be positive");
  if (!(noise_std >= 0)) throw UsageError("noise_std must be non-negative");
  if (!(view_yaw_range >= 0)) throw UsageError("view yaw range must be non-negative");
  if (!(body_scale_min > 0) || !(body_scale_max >= body_scale_min)) {
    throw UsageError("body scale range must be positive and ordered");
  }
  if (!(amplitude_jitter >= 0) || !(amplitude_jitter < 1) || !(tempo_jitter >= 0)) {
    throw UsageError("jitter settings out of range");
  }
  if (frames < 2) throw UsageError("synthetic sequences need at least 2 frames");
}

Frame synth_pose(MotionClass motion, double s, double amplitude) {
  Pose p;
  const double b = bump(s) * amplitude;
  switch (motion) {
    case MotionClass::kArmRaise:
      p.right_arm.flexion = 0.9 * kPi * b;
      break;
    case MotionClass::kWave:
      p.right_arm.abduction = 2.4 * std::min(1.0, 2.5 * bump(s)) * amplitude;
      p.right_arm.bend = (0.5 + 0.5 * std::sin(6 * kPi * s)) * std::min(1.0, 2.5 * bump(s)) * amplitude;
      break;
    case MotionClass::kSquat:
      p.drop = 0.35 * b;
      p.left_leg.flexion = p.right_leg.flexion = 1.2 * b;
      p.left_leg.bend = p.right_leg.bend = 2.0 * b;
      p.left_arm.flexion = p.right_arm.flexion = 1.3 * b;
      break;
    case MotionClass::kKick:
      p.right_leg.flexion = 1.3 * b;
      p.right_leg.bend = 0.6 * (1.0 - std::cos(2 * kPi * s)) * 0.5 * amplitude;
      p.lean = -0.15 * b;
      break;
    case MotionClass::kLean:
      p.lean = 0.7 * b;
      break;
    case MotionClass::kTurn:
      p.turn = 1.2 * b;
      p.left_arm.abduction = p.right_arm.abduction = 0.4 * b;
      break;
    case MotionClass::kReach:
      p.right_arm.flexion = 0.5 * kPi * b;
      p.lean = 0.35 * b;
      break;
    case MotionClass::kClap: {
      const double hold = std::min(1.0, 3.0 * bump(s)) * amplitude;
      p.left_arm.flexion = p.right_arm.flexion = 1.4 * hold;
      p.left_arm.bend = p.right_arm.bend = 0.3 * hold;
      const double together = -0.55 * (0.5 + 0.5 * std::sin(8 * kPi * s)) * hold;
      p.left_arm.abduction = p.right_arm.abduction = together;
      break;
    }
  }
  return assemble(p);
}

std::vector<SkeletonSequence> synth_generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> scale_dist(config.body_scale_min, config.body_scale_max);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<SkeletonSequence> out;
  out.reserve(static_cast<std::size_t>(config.class_count * config.sequences_per_class));
  for (int label = 0; label < config.class_count; ++label) {
    for (int i = 0; i < config.sequences_per_class; ++i) {
      const double yaw_deg = config.view_yaw_range * unit(rng);
      const double body_scale = scale_dist(rng);
      const double amplitude = 1.0 + config.amplitude_jitter * unit(rng);
      const double tempo = std::exp(config.tempo_jitter * unit(rng));
      const double yaw = yaw_deg * kPi / 180.0;

      SkeletonSequence seq;
      seq.action_label = label;
      seq.subject_id = 1 + i % 40;
      seq.setup_id = 1 + i % 2;
      const double third = config.view_yaw_range / 3.0;
      seq.camera_id = yaw_deg < -third ? 2 : (yaw_deg > third ? 3 : 1);
      seq.source = "synth:" + motion_class_name(label) + ":" + std::to_string(i);
      seq.frames.reserve(config.frames);
      for (std::size_t t = 0; t < config.frames; ++t) {
        const double s = std::pow(static_cast<double>(t) / static_cast<double>(config.frames - 1), tempo);
        Frame f = synth_pose(static_cast<MotionClass>(label), s, amplitude);
        for (Joint& j : f) {
          Vec v = rotate_y({j[0] * body_scale, j[1] * body_scale, j[2] * body_scale}, yaw);
          for (int c = 0; c < 3; ++c) j[c] = static_cast<float>(v[c] + config.noise_std * gauss(rng));
        }
        seq.frames.push_back(std::move(f));
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

}  // namespace afecnn
