#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "iotgan/error.hpp"
#include "iotgan/profiler.hpp"
#include "iotgan/random.hpp"

using namespace iotgan;
using namespace iotgan::profiler;

TEST(Channel, NoiselessPathLossClosedForm) {
  ChannelModel m;
  m.noise = NoiseLevels::none();
  m.multipath_seed = 17;
  HardwareIdentity id{3, 5.0, 0.0, 0.0, 3.0, 4.0};
  const auto s = synthesize_signature(id, m, 1);
  // Free-space loss at 1 m in dB: 20 log10(f_MHz) + 20 log10(d_km) + 32.44.
  const double fspl_1m = 20 * std::log10(2437.0) + 20 * std::log10(0.001) + 32.45;
  const auto mp = device_multipath(m, 3);
  const double two_ray = std::sqrt(1 + 0.09 + 0.6 * std::cos(mp.phase_rad));
  const double expected = fspl_1m + 25.0 * std::log10(5.0) - 20 * std::log10(two_ray);
  EXPECT_NEAR(s.amplitude_attenuation, expected, 0.01);
  EXPECT_NEAR(s.frequency_offset, 2.437e9 * 5e-6, 1e-6);
  EXPECT_NEAR(s.arrival_angle, std::atan(3.0 / 4.0), 1e-12);
  EXPECT_EQ(s.csi.size(), 30u);
}

TEST(Channel, AttenuationGrowsWithDistance) {
  ChannelModel m;
  m.noise = NoiseLevels::none();
  double last = -1e9;
  for (double d = 1.5; d < 40; d *= 1.5) {
    const auto s = synthesize_signature({1, 0, 0, 0, 0, d}, m, 0);
    EXPECT_GT(s.amplitude_attenuation, last);
    last = s.amplitude_attenuation;
  }
}

TEST(Channel, DeterministicAndValidated) {
  ChannelModel m;
  const HardwareIdentity id{2, 1, 0.01, 0.02, 1, 6};
  EXPECT_EQ(synthesize_signature(id, m, 9), synthesize_signature(id, m, 9));
  EXPECT_NE(synthesize_signature(id, m, 9), synthesize_signature(id, m, 10));
  EXPECT_THROW(synthesize_signature({2, 0, 0, 0, 0, -1}, m, 0), ValidationError);
  EXPECT_THROW(synthesize_signature({2, 0, 0, 0, 0, 0.5}, m, 0), ValidationError);
  ChannelModel bad;
  bad.reflection_gain = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Channel, ArrivalAngleStaysInHalfOpenRange) {
  ChannelModel m;
  m.noise.angle_rad = 0.5;
  for (std::uint64_t k = 0; k < 500; ++k) {
    const auto s = synthesize_signature({k, 0, 0, 0, 50, 1.1}, m, k);
    EXPECT_GT(s.arrival_angle, -std::numbers::pi / 2);
    EXPECT_LE(s.arrival_angle, std::numbers::pi / 2);
  }
}

TEST(Channel, HashSeesEveryField) {
  ChannelModel m;
  std::vector<RfSignature> a{synthesize_signature({1, 2, 0, 0, 1, 5}, m, 3)};
  auto b = a;
  EXPECT_EQ(signature_hash(a), signature_hash(b));
  b[0].csi.back() = std::nextafter(b[0].csi.back(), 10.0);
  EXPECT_NE(signature_hash(a), signature_hash(b));
}

namespace {

std::vector<ProfiledDevice> devices(std::size_t n, std::uint64_t seed) {
  std::vector<ProfiledDevice> out;
  const auto ids = draw_identities(n, seed);
  for (std::size_t i = 0; i < n; ++i) out.push_back({ids[i], i});
  return out;
}

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("dev_" + std::to_string(i));
  return out;
}

}  // namespace

TEST(Profiler, IdentifiesDevicesFromSignatures) {
  const auto devs = devices(10, 4);
  ChannelModel m;
  m.multipath_seed = 8;
  const auto train = synthesize_corpus(devs, m, 30, 1);
  const auto test = synthesize_corpus(devs, m, 20, 2);
  ProfilerOptions o;
  o.epochs = 40;
  const auto c = fit_profiler(train, names(10), o);
  EXPECT_GE(profiler_rate(c, test), 0.95);
  for (const auto& s : test) {
    const auto [cls, score] = c.identify(s.signature);
    EXPECT_LT(cls, 10u);
    EXPECT_GT(score, 0.0);
    EXPECT_LT(score, 1.0);
  }
}

TEST(Profiler, GroupsPartitionClasses) {
  const auto devs = devices(12, 5);
  const auto c = fit_profiler(synthesize_corpus(devs, {}, 15, 1), names(12), {3, {16}, 5, 32, 3e-3, 0});
  std::vector<int> seen(12, 0);
  for (const auto& g : c.groups())
    for (auto cls : g.classes) ++seen[cls];
  for (int v : seen) EXPECT_EQ(v, 1);
  EXPECT_LE(c.tree().depth(), 3u);
}

TEST(Profiler, TooFewSignaturesRejected) {
  const auto devs = devices(3, 5);
  EXPECT_THROW(fit_profiler(synthesize_corpus(devs, {}, 9, 1), names(3)), ValidationError);
}

TEST(Profiler, CsvRoundTripAndErrors) {
  const auto devs = devices(3, 6);
  const auto data = synthesize_corpus(devs, {}, 4, 1);
  const auto n = names(3);
  const auto back = signatures_from_csv(signatures_to_csv(data, n), n);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].signature, data[i].signature);
    EXPECT_EQ(back[i].label, data[i].label);
  }
  std::string text = signatures_to_csv(data, n);
  const auto second_line = text.find('\n') + 1;
  text.replace(text.find(',', text.find(',', second_line) + 1) + 1, 1, "x");
  try {
    signatures_from_csv(text, n);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
