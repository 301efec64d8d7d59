#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace iotgan::profiler {

inline constexpr std::size_t kProfiledFeatures = 4;
inline constexpr double kSpeedOfLight = 299792458.0;

/// Static radio imperfections and placement of one transmitter.
struct HardwareIdentity {
  std::uint64_t device_id = 0;
  double cfo_ppm = 0.0;
  double iq_gain_imbalance = 0.0;  // fractional, e.g. 0.02 for +2%
  double iq_phase_skew_rad = 0.0;
  double x = 0.0;  // metres, along the receiver array
  double y = 1.0;  // metres, broadside distance; must be > 0
};

struct RfSignature {
  double amplitude_attenuation = 0.0;  // dB
  double phase_shift = 0.0;            // rad
  double frequency_offset = 0.0;       // Hz
  double arrival_angle = 0.0;          // rad, in (-pi/2, pi/2]
  std::vector<double> csi;             // per-subcarrier magnitude

  /// amplitude_attenuation, phase_shift, frequency_offset, arrival_angle
  std::array<double, kProfiledFeatures> profiled() const noexcept {
    return {amplitude_attenuation, phase_shift, frequency_offset, arrival_angle};
  }
  friend bool operator==(const RfSignature&, const RfSignature&) = default;
};

struct NoiseLevels {
  double attenuation_db = 0.5;
  double phase_rad = 0.05;
  double frequency_hz = 200.0;
  double angle_rad = 0.02;
  double csi = 0.02;

  static NoiseLevels none() noexcept { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
};

/// Log-distance path loss with one reflected ray whose phase and delay are
/// fixed per device.
struct ChannelModel {
  double carrier_hz = 2.437e9;
  double path_loss_exponent = 2.5;
  double reference_distance_m = 1.0;
  double reflection_gain = 0.3;
  std::size_t subcarriers = 30;
  double subcarrier_spacing_hz = 312.5e3;
  std::uint64_t multipath_seed = 0;
  NoiseLevels noise;

  /// Throws ValidationError for non-positive or non-finite parameters.
  void validate() const;
};

/// Reflection phase and excess delay of a device's second ray.
struct Multipath {
  double phase_rad = 0.0;
  double delay_s = 0.0;
};
Multipath device_multipath(const ChannelModel& model, std::uint64_t device_id);

/// Distinct devices with cfo_ppm ~ U[-20, 20], small IQ imbalance and a
/// placement 2..15 m from the receiver within +-1.2 rad of broadside.
std::vector<HardwareIdentity> draw_identities(std::size_t n, std::uint64_t seed);

/// Deterministic in (identity, model, noise_seed). Throws ValidationError for
/// an identity with y <= 0 or closer than the reference distance.
RfSignature synthesize_signature(const HardwareIdentity& id, const ChannelModel& model, std::uint64_t noise_seed);

/// FNV-1a over the bit patterns of every field, in order.
std::uint64_t signature_hash(std::span<const RfSignature> stream);

}  // namespace iotgan::profiler
