#include "iotgan/report.hpp"

#include <algorithm>
#include <map>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/io.hpp"

namespace iotgan::harness {

namespace {

std::string rate(double v) { return fmt::format("{:.6f}", v); }

std::string preamble(const ExperimentResult& r) { return csv_preamble(r.hash, r.config.seed); }

std::vector<std::string> split_cells(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table parse_table(const std::string& text) {
  Table t;
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    const auto line = rest.substr(0, nl);
    rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;
    if (t.header.empty())
      t.header = split_cells(line);
    else
      t.rows.push_back(split_cells(line));
  }
  return t;
}

std::string render(const Table& t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
  };
  widen(t.header);
  for (const auto& r : t.rows) widen(r);
  auto line = [&](const std::vector<std::string>& row) {
    std::string out;
    for (std::size_t i = 0; i < width.size(); ++i)
      out += fmt::format("{}{:<{}}", i ? "  " : "", i < row.size() ? row[i] : "", width[i]);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(t.header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + "\n";
  for (const auto& r : t.rows) out += line(r);
  return out;
}

// One row per model, one column per directed device-type pair.
Table pivot_spoofing(const Table& t) {
  Table out;
  out.header = {"model"};
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, std::string> cell;
  for (const auto& r : t.rows) {
    if (r.size() < 5) continue;
    const std::string pair = r[1] + "=>" + r[2];
    if (std::find(out.header.begin(), out.header.end(), pair) == out.header.end()) out.header.push_back(pair);
    if (std::find(models.begin(), models.end(), r[0]) == models.end()) models.push_back(r[0]);
    cell[{r[0], pair}] = r[4];
  }
  for (const auto& m : models) {
    std::vector<std::string> row{m};
    for (std::size_t c = 1; c < out.header.size(); ++c) {
      auto it = cell.find({m, out.header[c]});
      row.push_back(it == cell.end() ? "" : it->second);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::string csv_preamble(std::uint64_t hash, std::uint64_t seed) {
  return fmt::format("# config_hash={:016x} seed={}\n", hash, seed);
}

std::string table1_csv(const ExperimentResult& r) {
  std::string out = preamble(r) + "model,target_train,target_test,substitute_train,substitute_test,subset_size\n";
  for (const auto& k : r.kinds)
    out += fmt::format("{},{},{},{},{},{}\n", learners::display_name(k.kind), rate(k.target_train_rate),
                       rate(k.target_test_rate), rate(k.substitute_train_agreement), rate(k.substitute_test_agreement),
                       k.selected_features.size());
  return out;
}

std::string table2_csv(const ExperimentResult& r) {
  std::string out = preamble(r) + "model,clean_test,attacked_train,attacked_test,substitute_attacked_test,transfer_gap\n";
  for (const auto& k : r.kinds) {
    if (!k.attacked) continue;
    // Success is one minus the identification rate; the gap is substitute success minus victim success.
    const double gap = k.attacked_test_rate - k.substitute_attacked_rate;
    out += fmt::format("{},{},{},{},{},{}\n", learners::display_name(k.kind), rate(k.target_test_rate),
                       rate(k.attacked_train_rate), rate(k.attacked_test_rate), rate(k.substitute_attacked_rate),
                       rate(gap));
  }
  return out;
}

std::string table3_csv(const ExperimentResult& r) {
  std::string out = preamble(r) + "model,source,target,target_class,spoofing_rate,substitute_spoofing_rate\n";
  for (const auto& s : r.spoofing)
    out += fmt::format("{},{},{},{},{},{}\n", learners::display_name(s.kind), to_string(s.source), to_string(s.target),
                       s.target_class, rate(s.rate), rate(s.substitute_rate));
  return out;
}

std::string fig3_csv(const ExperimentResult& r) {
  std::string out = preamble(r) + "model,epoch,agreement\n";
  for (const auto& k : r.kinds)
    for (std::size_t e = 0; e < k.substitute_curve.size(); ++e)
      out += fmt::format("{},{},{}\n", learners::display_name(k.kind), e + 1, rate(k.substitute_curve[e]));
  return out;
}

std::string fig4_csv(const ExperimentResult& r) {
  std::string out = preamble(r) +
                    "epoch,traffic_identification_rate,profiling_clean_rate,profiling_attacked_rate,"
                    "signature_hash_clean,signature_hash_attacked\n";
  if (r.defense)
    for (const auto& d : r.defense->rounds)
      out += fmt::format("{},{},{},{},{:016x},{:016x}\n", d.epoch, rate(d.traffic_rate), rate(d.clean_rate),
                         rate(d.attacked_rate), d.clean_hash, d.attacked_hash);
  return out;
}

std::string scan_csv(const ExperimentResult& r) {
  std::string out = preamble(r) + "model,L,agreement,overhead_s,gain,undefined_flag\n";
  for (const auto& k : r.kinds)
    for (const auto& p : k.scan)
      out += fmt::format("{},{},{},{:.9f},{},{}\n", learners::display_name(k.kind), p.subset_size, rate(p.agreement),
                         p.overhead_s, p.gain ? rate(*p.gain) : std::string(), p.undefined() ? 1 : 0);
  return out;
}

std::string manifest_text(const ExperimentConfig& cfg, const std::map<std::string, std::uint64_t>& seeds,
                          std::string_view status, std::string_view stage) {
  std::string out = canonical_settings(cfg);
  out += fmt::format("output_dir={}\n", cfg.output_dir);
  out += fmt::format("config_hash={:016x}\n", config_hash(cfg));
  for (const auto& [name, s] : seeds) out += fmt::format("derived.{}={}\n", name, s);
  out += fmt::format("status={}\n", status);
  if (!stage.empty()) out += fmt::format("stage={}\n", stage);
  return out;
}

std::string render_report(const std::filesystem::path& dir) {
  static constexpr std::pair<const char*, const char*> files[] = {
      {"table1.csv", "Clean identification: target vs substitute"},
      {"table2.csv", "Misidentification attack"},
      {"table3.csv", "Identity spoofing (device-type level)"},
      {"scan.csv", "Feature-subset scan"},
      {"fig3.csv", "Substitute agreement per epoch"},
      {"fig4.csv", "Device profiling under attack"},
  };
  std::string out;
  for (const auto& [file, title] : files) {
    const auto path = dir / file;
    if (!std::filesystem::exists(path)) continue;
    Table t = parse_table(read_file(path));
    if (std::string_view(file) == "table3.csv") t = pivot_spoofing(t);
    out += fmt::format("== {} ({})\n{}\n", title, file, render(t));
  }
  if (out.empty()) throw IoError(fmt::format("no report files in {}", dir.string()));
  return out;
}

}  // namespace iotgan::harness
