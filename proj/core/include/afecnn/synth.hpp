#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afecnn/skeleton.hpp"

namespace afecnn {

/// Parametric motion classes on the 15-joint humanoid (Topology::humanoid15).
enum class MotionClass {
  kArmRaise,
  kWave,
  kSquat,
  kKick,
  kLean,
  kTurn,
  kReach,
  kClap,
};

inline constexpr int kMotionClassCount = 8;

std::string motion_class_name(int label);

struct SynthConfig {
  int class_count = kMotionClassCount;
  int sequences_per_class = 100;
  double noise_std = 0.01;            // meters, per coordinate per frame
  double view_yaw_range = 30.0;       // degrees; yaw drawn from [-range, range]
  double body_scale_min = 0.9;
  double body_scale_max = 1.1;
  // Extra per-sequence nuisance, off by default: relative motion amplitude
  // jitter and log-tempo warp strength.
  double amplitude_jitter = 0.0;
  double tempo_jitter = 0.0;
  std::size_t frames = 48;            // raw frames per sequence
  std::uint64_t seed = 1;

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

/// Joint positions of `motion` at phase s in [0, 1], unit body scale, no
/// yaw and no noise. `amplitude` scales every motion angle.
Frame synth_pose(MotionClass motion, double phase, double amplitude = 1.0);

/// Class-major list: all sequences of label 0, then label 1, ...
///
/// Each sequence draws yaw, body scale, amplitude and tempo jitter, then
/// per-coordinate Gaussian noise, from one std::mt19937_64 seeded by
/// `config.seed`. The camera id encodes the yaw bucket: the middle third of
/// the yaw range is camera 1, the negative third camera 2, the positive
/// third camera 3. Subjects cycle through 1..40 and setups alternate 1, 2.
std::vector<SkeletonSequence> synth_generate(const SynthConfig& config);

}  // namespace afecnn
