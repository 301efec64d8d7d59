#include "iotgan/channel.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/random.hpp"

namespace iotgan::profiler {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) {
    h ^= bits & 0xffU;
    h *= kFnvPrime;
    bits >>= 8;
  }
}

double gauss(Rng& rng, double sigma) {
  // Always consume a draw so the stream layout does not depend on sigma.
  std::normal_distribution<double> n(0.0, 1.0);
  return sigma * n(rng);
}

}  // namespace

void ChannelModel::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(carrier_hz) || !positive(path_loss_exponent) || !positive(reference_distance_m) ||
      !positive(subcarrier_spacing_hz))
    throw ValidationError("channel model parameters must be positive and finite");
  if (!(reflection_gain >= 0.0 && reflection_gain < 1.0)) throw ValidationError("reflection gain must be in [0, 1)");
  if (subcarriers == 0) throw ValidationError("channel model needs at least one subcarrier");
  for (double s : {noise.attenuation_db, noise.phase_rad, noise.frequency_hz, noise.angle_rad, noise.csi})
    if (!std::isfinite(s) || s < 0.0) throw ValidationError("noise levels must be finite and non-negative");
}

Multipath device_multipath(const ChannelModel& model, std::uint64_t device_id) {
  Rng rng(derive_seed(model.multipath_seed, {0x6d70ULL, device_id}));
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> delay(20e-9, 200e-9);
  Multipath m;
  m.phase_rad = phase(rng);
  m.delay_s = delay(rng);
  return m;
}

std::vector<HardwareIdentity> draw_identities(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> cfo(-20.0, 20.0);
  std::uniform_real_distribution<double> gain(-0.05, 0.05);
  std::uniform_real_distribution<double> skew(-0.1, 0.1);
  std::uniform_real_distribution<double> dist(2.0, 15.0);
  std::uniform_real_distribution<double> bearing(-1.2, 1.2);
  std::vector<HardwareIdentity> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    HardwareIdentity id;
    id.device_id = i;
    id.cfo_ppm = cfo(rng);
    id.iq_gain_imbalance = gain(rng);
    id.iq_phase_skew_rad = skew(rng);
    const double d = dist(rng);
    const double a = bearing(rng);
    id.x = d * std::sin(a);
    id.y = d * std::cos(a);
    out.push_back(id);
  }
  return out;
}

RfSignature synthesize_signature(const HardwareIdentity& id, const ChannelModel& model, std::uint64_t noise_seed) {
  model.validate();
  if (!(id.y > 0.0) || !std::isfinite(id.x)) throw ValidationError(fmt::format("device {} must sit in front of the receiver", id.device_id));
  const double d = std::hypot(id.x, id.y);
  if (d < model.reference_distance_m)
    throw ValidationError(fmt::format("device {} is closer than the reference distance", id.device_id));
  if (!(id.iq_gain_imbalance > -1.0)) throw ValidationError("IQ gain imbalance must exceed -1");

  const Multipath mp = device_multipath(model, id.device_id);
  const std::complex<double> ray = 1.0 + model.reflection_gain * std::polar(1.0, mp.phase_rad);
  const double gain = std::abs(ray) * (1.0 + id.iq_gain_imbalance);
  const double fspl_ref = 20.0 * std::log10(4.0 * std::numbers::pi * model.reference_distance_m * model.carrier_hz / kSpeedOfLight);

  Rng rng(derive_seed(noise_seed, {id.device_id}));
  RfSignature s;
  s.amplitude_attenuation = fspl_ref + 10.0 * model.path_loss_exponent * std::log10(d / model.reference_distance_m) -
                            20.0 * std::log10(gain) + gauss(rng, model.noise.attenuation_db);
  s.phase_shift = std::arg(ray) + id.iq_phase_skew_rad + gauss(rng, model.noise.phase_rad);
  s.frequency_offset = model.carrier_hz * id.cfo_ppm * 1e-6 + gauss(rng, model.noise.frequency_hz);
  const double angle = std::atan2(id.x, id.y) + gauss(rng, model.noise.angle_rad);
  constexpr double half_pi = std::numbers::pi / 2.0;
  s.arrival_angle = std::clamp(angle, std::nextafter(-half_pi, 0.0), half_pi);

  s.csi.resize(model.subcarriers);
  const double centre = (static_cast<double>(model.subcarriers) - 1.0) / 2.0;
  for (std::size_t k = 0; k < model.subcarriers; ++k) {
    const double f = model.carrier_hz + (static_cast<double>(k) - centre) * model.subcarrier_spacing_hz;
    const double phi = mp.phase_rad - 2.0 * std::numbers::pi * f * mp.delay_s;
    const double mag = std::abs(1.0 + model.reflection_gain * std::polar(1.0, phi)) * (1.0 + id.iq_gain_imbalance);
    s.csi[k] = mag + gauss(rng, model.noise.csi);
  }
  return s;
}

std::uint64_t signature_hash(std::span<const RfSignature> stream) {
  std::uint64_t h = kFnvOffset;
  for (const auto& s : stream) {
    for (double v : s.profiled()) fnv_mix(h, v);
    fnv_mix(h, static_cast<double>(s.csi.size()));
    for (double v : s.csi) fnv_mix(h, v);
  }
  return h;
}

}  // namespace iotgan::profiler
