#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iotgan/dataset.hpp"
#include "iotgan/schema.hpp"

namespace iotgan::harness {

/// Header `f_<name>,...,class`, one row per sample, values in shortest
/// round-trip form.
std::string dataset_to_csv(const Dataset& ds);
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

/// Parses a dataset. With `class_names`, labels must come from that list
/// (ValidationError otherwise); without it, the sorted distinct labels are
/// used. Throws ParseError with line and column for a malformed header,
/// cell, or out-of-range value, including an empty input.
Dataset parse_dataset_csv(const std::string& text, const FeatureSchema& schema,
                          const std::optional<std::vector<std::string>>& class_names = std::nullopt);
Dataset ingest_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                   const std::optional<std::vector<std::string>>& class_names = std::nullopt);

/// Schema as CSV: name,unit,min,max,mutable (mutable is 0 or 1).
std::string schema_to_csv(const FeatureSchema& schema);
FeatureSchema parse_schema_csv(const std::string& text);
FeatureSchema load_schema(const std::filesystem::path& path);

}  // namespace iotgan::harness
