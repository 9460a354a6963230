#include "tvcn/panel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace tvcn {

std::vector<Pair> hypothesis_pairs(std::size_t p) {
  std::vector<Pair> out;
  out.reserve(pair_count(p));
  for (std::size_t i = 1; i < p; ++i) {
    for (std::size_t l = 0; l < i; ++l) out.push_back({i, l});
  }
  return out;
}

namespace {

std::vector<std::string> default_labels(std::size_t p) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < p; ++i) labels.push_back(fmt::format("x{}", i + 1));
  return labels;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

TimeSeriesPanel::TimeSeriesPanel(Matrix values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
  if (values_.rows() < 20) {
    throw Error(fmt::format("panel needs at least 20 time points, got {}", values_.rows()));
  }
  if (values_.cols() < 2) {
    throw Error(fmt::format("panel needs at least 2 series, got {}", values_.cols()));
  }
  if (labels_.size() != values_.cols()) {
    throw Error(fmt::format("{} labels for {} columns", labels_.size(), values_.cols()));
  }
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
    throw Error("panel labels must be unique");
  }
  for (std::size_t r = 0; r < values_.rows(); ++r) {
    for (std::size_t c = 0; c < values_.cols(); ++c) {
      if (!std::isfinite(values_(r, c))) {
        throw Error(fmt::format("non-finite value at row {}, column {}", r + 1, c + 1));
      }
    }
  }
}

TimeSeriesPanel::TimeSeriesPanel(Matrix values)
    : TimeSeriesPanel(values, default_labels(values.cols())) {}

DifferencedPanel::DifferencedPanel(std::size_t lag, std::size_t parent_n, Matrix diffs)
    : lag_(lag), parent_n_(parent_n), diffs_(std::move(diffs)) {
  if (diffs_.rows() + lag_ != parent_n_) {
    throw Error("differenced panel row count must equal n - h");
  }
}

TimeSeriesPanel load_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));

  std::vector<std::string> labels;
  std::vector<double> cells;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto row = split_row(line);
    if (has_header && labels.empty()) {
      for (auto& cell : row) labels.push_back(trim(cell));
      width = labels.size();
      continue;
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw Error(fmt::format("{}:{}: expected {} columns, found {}", path.string(), line_no,
                              width, row.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string cell = trim(row[c]);
      double value = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      if (!cell.empty() && *begin == '+') ++begin;
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (cell.empty() || ec != std::errc() || ptr != end) {
        throw Error(fmt::format("{}:{}: column {}: cannot parse '{}' as a number", path.string(),
                                line_no, c + 1, cell));
      }
      if (!std::isfinite(value)) {
        throw Error(fmt::format("{}:{}: column {}: non-finite value '{}'", path.string(),
                                line_no, c + 1, cell));
      }
      cells.push_back(value);
    }
  }
  if (width == 0) throw Error(fmt::format("'{}' contains no data", path.string()));

  const std::size_t rows = cells.size() / width;
  Matrix values(rows, width);
  std::copy(cells.begin(), cells.end(), values.data().begin());
  if (labels.empty()) return TimeSeriesPanel(std::move(values));
  return TimeSeriesPanel(std::move(values), std::move(labels));
}

void write_csv(const TimeSeriesPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  const auto& labels = panel.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? "," : "") << labels[i];
  out << '\n';
  const auto& v = panel.values();
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < v.cols(); ++c) {
      out << (c ? "," : "") << fmt::format("{}", v(r, c));
    }
    out << '\n';
  }
}

DifferencedPanel difference(const TimeSeriesPanel& panel, std::size_t h) {
  const std::size_t n = panel.n();
  if (h < 1 || 4 * h >= n) {
    throw UsageError(fmt::format("lag h = {} outside [1, n/4) for n = {}", h, n));
  }
  Matrix diffs(n - h, panel.p());
  for (std::size_t j = h + 1; j <= n; ++j) {
    for (std::size_t i = 0; i < panel.p(); ++i) {
      diffs(j - h - 1, i) = panel.at(j, i) - panel.at(j - h, i);
    }
  }
  return DifferencedPanel(h, n, std::move(diffs));
}

TimeSeriesPanel stack_lags(const TimeSeriesPanel& panel, std::size_t K) {
  const std::size_t n = panel.n();
  const std::size_t p = panel.p();
  if (10 * K >= n) {
    throw UsageError(fmt::format("lag stack K = {} must be below n/10 for n = {}", K, n));
  }
  if (K == 0) return panel;

  Matrix values(n - K, p * (K + 1));
  for (std::size_t r = 0; r < n - K; ++r) {
    for (std::size_t k = 0; k <= K; ++k) {
      for (std::size_t i = 0; i < p; ++i) values(r, k * p + i) = panel.values()(r + k, i);
    }
  }
  std::vector<std::string> labels;
  for (std::size_t k = 0; k <= K; ++k) {
    for (const auto& label : panel.labels()) labels.push_back(fmt::format("{}_lag{}", label, k));
  }
  return TimeSeriesPanel(std::move(values), std::move(labels));
}

}  // namespace tvcn
