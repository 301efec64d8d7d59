#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "iotgan/experiment.hpp"

namespace iotgan::harness {

/// "# config_hash=<16 hex digits> seed=<seed>\n"
std::string csv_preamble(std::uint64_t hash, std::uint64_t seed);

/// model,target_train,target_test,substitute_train,substitute_test,subset_size
std::string table1_csv(const ExperimentResult& r);
/// model,clean_test,attacked_train,attacked_test,substitute_attacked_test,transfer_gap
std::string table2_csv(const ExperimentResult& r);
/// model,source,target,target_class,spoofing_rate,substitute_spoofing_rate
std::string table3_csv(const ExperimentResult& r);
/// model,epoch,agreement
std::string fig3_csv(const ExperimentResult& r);
/// epoch,traffic_identification_rate,profiling_clean_rate,profiling_attacked_rate,signature_hash_clean,signature_hash_attacked
std::string fig4_csv(const ExperimentResult& r);
/// model,L,agreement,overhead_s,gain,undefined_flag
std::string scan_csv(const ExperimentResult& r);

/// Settings, config hash, derived seeds and run status as key=value lines.
std::string manifest_text(const ExperimentConfig& cfg, const std::map<std::string, std::uint64_t>& seeds,
                          std::string_view status, std::string_view stage = {});

/// Aligned plain-text rendering of every report CSV found in `dir`, with the
/// spoofing grid pivoted to one row per model. Throws IoError if none exist.
std::string render_report(const std::filesystem::path& dir);

}  // namespace iotgan::harness
