#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "lrt/experiments.hpp"
#include "lrt/model_selection.hpp"
#include "lrt/sampler.hpp"
#include "lrt/svg.hpp"

namespace lrt::io {

using json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// state / estimate matrices: {"k": 2, "matrix": [[[re, im], ...], ...]}

inline json matrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXcd matrix_from_json(const json& rows) {
  const Eigen::Index d = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXcd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const json& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != d)
      throw std::runtime_error("matrix JSON is not square");
    for (Eigen::Index j = 0; j < d; ++j) {
      const json& entry = row.at(static_cast<std::size_t>(j));
      m(i, j) = cxd(entry.at(0).get<double>(), entry.at(1).get<double>());
    }
  }
  return m;
}

inline void write_state_json(const std::string& path, int k, const Eigen::MatrixXcd& m) {
  json doc;
  doc["k"] = k;
  doc["matrix"] = matrix_to_json(m);
  write_text_file(path, doc.dump(2) + "\n");
}

struct StateFile {
  int k = 0;
  Eigen::MatrixXcd matrix;
};

inline StateFile read_state_json(const std::string& path) {
  const json doc = json::parse(read_text_file(path));
  StateFile out;
  out.k = doc.at("k").get<int>();
  out.matrix = matrix_from_json(doc.at("matrix"));
  if (out.matrix.rows() != (Eigen::Index(1) << out.k))
    throw std::runtime_error("state file " + path + ": matrix size does not match k");
  return out;
}

// ---------------------------------------------------------------------------
// counts dataset: {"k": 2, "n": 100, "settings": [...], "counts": [[...], ...]}

inline void write_dataset_json(const std::string& path, const CountsDataset& data) {
  json doc;
  doc["k"] = data.k;
  doc["n"] = data.n;
  json settings = json::array();
  for (const Setting& s : enumerate_settings(data.k))
    settings.push_back(setting_to_string(s));
  doc["settings"] = std::move(settings);
  json counts = json::array();
  for (Eigen::Index s = 0; s < data.counts.rows(); ++s) {
    json row = json::array();
    for (Eigen::Index o = 0; o < data.counts.cols(); ++o) row.push_back(data.counts(s, o));
    counts.push_back(std::move(row));
  }
  doc["counts"] = std::move(counts);
  write_text_file(path, doc.dump(2) + "\n");
}

inline CountsDataset read_dataset_json(const std::string& path) {
  const json doc = json::parse(read_text_file(path));
  CountsDataset data;
  data.k = doc.at("k").get<int>();
  data.n = doc.at("n").get<long long>();
  check_qubit_count(data.k);
  const long long n_settings = pow_ll(3, data.k);
  const Eigen::Index block = Eigen::Index(1) << data.k;

  const json& settings = doc.at("settings");
  if (static_cast<long long>(settings.size()) != n_settings)
    throw std::runtime_error("dataset " + path + ": wrong number of settings");
  for (long long s = 0; s < n_settings; ++s)
    if (settings.at(static_cast<std::size_t>(s)).get<std::string>() !=
        setting_to_string(setting_from_index(data.k, s)))
      throw std::runtime_error("dataset " + path +
                               ": settings are not in lexicographic order");

  const json& counts = doc.at("counts");
  if (static_cast<long long>(counts.size()) != n_settings)
    throw std::runtime_error("dataset " + path + ": wrong number of count rows");
  data.counts.resize(n_settings, block);
  for (long long s = 0; s < n_settings; ++s) {
    const json& row = counts.at(static_cast<std::size_t>(s));
    if (static_cast<Eigen::Index>(row.size()) != block)
      throw std::runtime_error("dataset " + path + ": wrong outcome count in a row");
    long long sum = 0;
    for (Eigen::Index o = 0; o < block; ++o) {
      data.counts(s, o) = row.at(static_cast<std::size_t>(o)).get<long long>();
      if (data.counts(s, o) < 0)
        throw std::runtime_error("dataset " + path + ": negative count");
      sum += data.counts(s, o);
    }
    if (sum != data.n)
      throw std::runtime_error("dataset " + path + ": a row does not sum to n");
  }
  return data;
}

// ---------------------------------------------------------------------------
// estimate file: matrix schema plus method metadata

inline void write_estimate_json(const std::string& path, int k,
                                const Eigen::MatrixXcd& estimate,
                                const std::string& method, int selected_rank,
                                double nu, double chosen_constant = std::nan("")) {
  json doc;
  doc["k"] = k;
  doc["matrix"] = matrix_to_json(estimate);
  doc["method"] = method;
  doc["selected_rank"] = selected_rank;
  doc["nu"] = nu;
  if (!std::isnan(chosen_constant)) doc["chosen_constant"] = chosen_constant;
  write_text_file(path, doc.dump(2) + "\n");
}

inline json cv_report_to_json(const CvReport& report) {
  json doc;
  doc["arguments"] = report.arguments;
  doc["criterion"] = report.criterion;
  doc["fold_discrepancies"] = report.fold_discrepancies;
  doc["selected_index"] = report.selected_index;
  doc["selected"] = report.arguments.at(static_cast<std::size_t>(report.selected_index));
  return doc;
}

// ---------------------------------------------------------------------------
// experiment config

inline ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig config;
  if (doc.contains("k")) config.k = doc.at("k").get<int>();
  if (doc.contains("ranks")) config.ranks = doc.at("ranks").get<std::vector<int>>();
  if (doc.contains("n"))
    config.repetition_counts = doc.at("n").get<std::vector<long long>>();
  if (doc.contains("replicates")) config.replicates = doc.at("replicates").get<int>();
  if (doc.contains("epsilon")) config.epsilon = doc.at("epsilon").get<double>();
  if (doc.contains("grid")) config.grid.values = doc.at("grid").get<std::vector<double>>();
  if (doc.contains("batches")) config.batches = doc.at("batches").get<int>();
  if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
  config.validate();
  return config;
}

inline ExperimentConfig read_config_json(const std::string& path) {
  return config_from_json(json::parse(read_text_file(path)));
}

inline json config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["k"] = config.k;
  doc["ranks"] = config.ranks;
  doc["n"] = config.repetition_counts;
  doc["replicates"] = config.replicates;
  doc["epsilon"] = config.epsilon;
  doc["grid"] = config.grid.values;
  doc["batches"] = config.batches;
  doc["seed"] = config.seed;
  return doc;
}

// ---------------------------------------------------------------------------
// records CSV

inline std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  out << "rank,n,replicate,estimator,sq_error,selected_rank,chosen_constant\n";
  for (const ExperimentRecord& r : records) {
    out << r.rank << ',' << r.n << ',' << r.replicate << ','
        << estimator_name(r.estimator) << ',' << format_double(r.sq_error) << ','
        << r.selected_rank << ',';
    if (!std::isnan(r.chosen_constant)) out << format_double(r.chosen_constant);
    out << '\n';
  }
  return out.str();
}

inline void write_records_csv(const std::string& path,
                              const std::vector<ExperimentRecord>& records) {
  write_text_file(path, records_to_csv(records));
}

inline std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) ||
      line != "rank,n,replicate,estimator,sq_error,selected_rank,chosen_constant")
    throw std::runtime_error("records CSV " + path + ": bad header");
  std::vector<ExperimentRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 7)
      throw std::runtime_error("records CSV " + path + ": bad row: " + line);
    ExperimentRecord r;
    r.rank = std::stoi(fields[0]);
    r.n = std::stoll(fields[1]);
    r.replicate = std::stoi(fields[2]);
    r.estimator = estimator_from_name(fields[3]);
    r.sq_error = std::stod(fields[4]);
    r.selected_rank = std::stoi(fields[5]);
    r.chosen_constant =
        fields[6].empty() ? std::nan("") : std::stod(fields[6]);
    records.push_back(r);
  }
  return records;
}

// ---------------------------------------------------------------------------
// summary JSON

inline json summary_to_json(const std::vector<SummaryRow>& summary) {
  json groups = json::array();
  for (const SummaryRow& row : summary) {
    json g;
    g["rank"] = row.rank;
    g["n"] = row.n;
    g["estimator"] = estimator_name(row.estimator);
    g["replicates"] = row.replicates;
    g["mean_sq_error"] = row.mean_sq_error;
    g["std_error"] = row.std_error;
    g["quartiles"] = {row.min, row.q1, row.median, row.q3, row.max};
    g["renormalized_mse"] = row.renormalized_mse;
    g["rank_histogram"] = row.rank_histogram;
    groups.push_back(std::move(g));
  }
  json doc;
  doc["groups"] = std::move(groups);
  return doc;
}

inline void write_summary_json(const std::string& path,
                               const std::vector<SummaryRow>& summary) {
  write_text_file(path, summary_to_json(summary).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// figures

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                 "#66ccee", "#aa3377", "#bbbbbb"};
  return colors[i % 7];
}

inline std::string boxplot_svg(const std::vector<SummaryRow>& rows,
                               const std::string& title) {
  const double width = 640, height = 400, left = 70, bottom = 350, top = 40;
  SvgCanvas svg(width, height);
  svg.text(width / 2, 20, title, 13);
  double max_value = 0.0;
  for (const SummaryRow& r : rows) max_value = std::max(max_value, r.max);
  if (max_value <= 0.0) max_value = 1.0;
  const auto y_of = [&](double v) {
    return bottom - (bottom - top) * (v / max_value);
  };
  svg.line(left, top, left, bottom);
  svg.line(left, bottom, width - 20, bottom);
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = max_value * tick / 4.0;
    svg.line(left - 4, y_of(v), left, y_of(v));
    svg.text(left - 8, y_of(v) + 4, format_double(std::round(v * 1e4) / 1e4), 10, "end");
  }
  const double slot = (width - 40 - left) / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SummaryRow& r = rows[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const double half = slot * 0.27;
    svg.line(cx, y_of(r.min), cx, y_of(r.q1));
    svg.line(cx, y_of(r.q3), cx, y_of(r.max));
    svg.line(cx - half * 0.6, y_of(r.min), cx + half * 0.6, y_of(r.min));
    svg.line(cx - half * 0.6, y_of(r.max), cx + half * 0.6, y_of(r.max));
    svg.rect(cx - half, y_of(r.q3), 2 * half, y_of(r.q1) - y_of(r.q3), "#e8eef7");
    svg.line(cx - half, y_of(r.median), cx + half, y_of(r.median), "#4477aa", 2.0);
    svg.text(cx, bottom + 16, estimator_name(r.estimator), 11);
  }
  return svg.str();
}

inline std::string renormalized_svg(
    const std::vector<long long>& ns,
    const std::vector<std::pair<int, std::vector<double>>>& per_rank,
    const std::string& title) {
  const double width = 640, height = 400, left = 80, bottom = 340, top = 40;
  SvgCanvas svg(width, height);
  svg.text(width / 2, 20, title, 13);
  double max_value = 0.0;
  for (const auto& [rank, values] : per_rank)
    for (double v : values) max_value = std::max(max_value, v);
  if (max_value <= 0.0) max_value = 1.0;
  const auto y_of = [&](double v) { return bottom - (bottom - top) * (v / max_value); };
  const auto x_of = [&](std::size_t i) {
    return ns.size() == 1
               ? (left + width - 40) / 2
               : left + (width - 40 - left) * static_cast<double>(i) /
                     static_cast<double>(ns.size() - 1);
  };
  svg.line(left, top, left, bottom);
  svg.line(left, bottom, width - 20, bottom);
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = max_value * tick / 4.0;
    svg.line(left - 4, y_of(v), left, y_of(v));
    svg.text(left - 8, y_of(v) + 4, format_double(std::round(v * 100) / 100), 10, "end");
  }
  for (std::size_t i = 0; i < ns.size(); ++i) {
    svg.line(x_of(i), bottom, x_of(i), bottom + 4);
    svg.text(x_of(i), bottom + 16, std::to_string(ns[i]), 10);
  }
  svg.text((left + width - 20) / 2, bottom + 32, "repetitions n", 11);
  std::size_t color = 0;
  for (const auto& [rank, values] : per_rank) {
    std::ostringstream points;
    for (std::size_t i = 0; i < values.size(); ++i)
      points << x_of(i) << ',' << y_of(values[i]) << ' ';
    svg.polyline(points.str(), palette(color));
    for (std::size_t i = 0; i < values.size(); ++i)
      svg.circle(x_of(i), y_of(values[i]), 2.5, palette(color));
    svg.text(width - 60, top + 14 * static_cast<double>(color) + 10,
             "rank " + std::to_string(rank), 11, "start");
    ++color;
  }
  return svg.str();
}

inline std::string rank_histogram_svg(
    const std::vector<long long>& ns,
    const std::vector<std::vector<double>>& freq_by_n,  // [n index][rank 0..]
    const std::string& title) {
  const double width = 640, height = 400, left = 60, bottom = 340, top = 40;
  SvgCanvas svg(width, height);
  svg.text(width / 2, 20, title, 13);
  std::size_t max_rank = 0;
  for (const auto& f : freq_by_n) max_rank = std::max(max_rank, f.size());
  const auto y_of = [&](double v) { return bottom - (bottom - top) * v; };
  svg.line(left, top, left, bottom);
  svg.line(left, bottom, width - 20, bottom);
  for (int tick = 0; tick <= 4; ++tick) {
    svg.line(left - 4, y_of(tick / 4.0), left, y_of(tick / 4.0));
    svg.text(left - 8, y_of(tick / 4.0) + 4, format_double(tick / 4.0), 10, "end");
  }
  const double group = (width - 40 - left) / static_cast<double>(max_rank);
  const double bar = group / (static_cast<double>(ns.size()) + 0.6);
  for (std::size_t rank = 0; rank < max_rank; ++rank) {
    const double gx = left + group * static_cast<double>(rank);
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
      const double f = rank < freq_by_n[ni].size() ? freq_by_n[ni][rank] : 0.0;
      if (f > 0.0)
        svg.rect(gx + bar * (static_cast<double>(ni) + 0.3), y_of(f), bar * 0.9,
                 bottom - y_of(f), palette(ni), "none");
    }
    svg.text(gx + group / 2, bottom + 16, std::to_string(rank), 10);
  }
  svg.text((left + width - 20) / 2, bottom + 32, "selected rank", 11);
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    svg.rect(width - 110, top + 16 * static_cast<double>(ni), 10, 10, palette(ni), "none");
    svg.text(width - 95, top + 16 * static_cast<double>(ni) + 9,
             "n = " + std::to_string(ns[ni]), 10, "start");
  }
  return svg.str();
}

}  // namespace detail

struct OutputPaths {
  std::string directory = "results";
  std::string records_csv = "records.csv";
  std::string summary_json = "summary.json";
  bool figures = true;
};

/// Writes the records CSV, the summary JSON and (optionally) static SVG
/// figures: per-scenario boxplots, renormalized-MSE curves per estimator and
/// selected-rank histograms. Returns every path written.
inline std::vector<std::string> emit_outputs(const std::vector<SummaryRow>& summary,
                                             const std::vector<ExperimentRecord>& records,
                                             const OutputPaths& paths) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(paths.directory, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " + paths.directory +
                             ": " + ec.message());
  std::vector<std::string> written;
  const auto join = [&](const std::string& name) {
    return (fs::path(paths.directory) / name).string();
  };

  write_records_csv(join(paths.records_csv), records);
  written.push_back(join(paths.records_csv));
  write_summary_json(join(paths.summary_json), summary);
  written.push_back(join(paths.summary_json));
  if (!paths.figures) return written;

  std::vector<int> ranks;
  std::vector<long long> ns;
  for (const SummaryRow& row : summary) {
    if (std::find(ranks.begin(), ranks.end(), row.rank) == ranks.end())
      ranks.push_back(row.rank);
    if (std::find(ns.begin(), ns.end(), row.n) == ns.end()) ns.push_back(row.n);
  }
  std::sort(ranks.begin(), ranks.end());
  std::sort(ns.begin(), ns.end());

  const auto find_row = [&](int rank, long long n, Estimator e) -> const SummaryRow* {
    for (const SummaryRow& row : summary)
      if (row.rank == rank && row.n == n && row.estimator == e) return &row;
    return nullptr;
  };

  // squared-error boxplots per scenario
  for (int rank : ranks)
    for (long long n : ns) {
      std::vector<SummaryRow> rows;
      for (Estimator e : kAllEstimators)
        if (const SummaryRow* row = find_row(rank, n, e)) rows.push_back(*row);
      if (rows.empty()) continue;
      const std::string name =
          "boxplot_rank" + std::to_string(rank) + "_n" + std::to_string(n) + ".svg";
      write_text_file(join(name),
                      detail::boxplot_svg(rows, "squared error, rank " +
                                                    std::to_string(rank) + ", n = " +
                                                    std::to_string(n)));
      written.push_back(join(name));
    }

  // renormalized MSE across n, one curve per rank, one figure per estimator
  for (Estimator e : kAllEstimators) {
    std::vector<std::pair<int, std::vector<double>>> per_rank;
    for (int rank : ranks) {
      std::vector<double> values;
      for (long long n : ns)
        if (const SummaryRow* row = find_row(rank, n, e))
          values.push_back(row->renormalized_mse);
      if (!values.empty()) per_rank.emplace_back(rank, std::move(values));
    }
    if (per_rank.empty()) continue;
    const std::string name = std::string("renormalized_mse_") + estimator_name(e) + ".svg";
    write_text_file(join(name),
                    detail::renormalized_svg(ns, per_rank,
                                             std::string("n * mean squared error, ") +
                                                 estimator_name(e)));
    written.push_back(join(name));
  }

  // selected-rank histograms grouped by n, per (estimator, rank)
  for (Estimator e : kAllEstimators) {
    if (e == Estimator::ls) continue;
    for (int rank : ranks) {
      std::vector<std::vector<double>> freq_by_n;
      for (long long n : ns) {
        const SummaryRow* row = find_row(rank, n, e);
        if (!row) continue;
        std::vector<double> freq;
        for (long long count : row->rank_histogram)
          freq.push_back(static_cast<double>(count) / row->replicates);
        freq_by_n.push_back(std::move(freq));
      }
      if (freq_by_n.empty()) continue;
      const std::string name = "rank_hist_rank" + std::to_string(rank) + "_" +
                               estimator_name(e) + ".svg";
      write_text_file(join(name),
                      detail::rank_histogram_svg(ns, freq_by_n,
                                                 std::string(estimator_name(e)) +
                                                     ", true rank " +
                                                     std::to_string(rank)));
      written.push_back(join(name));
    }
  }
  return written;
}

}  // namespace lrt::io
