#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wgdn/errors.hpp"
#include "wgdn/graph.hpp"
#include "wgdn/matrix.hpp"

namespace wgdn::io {

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view tok, const std::filesystem::path& path, std::size_t line) {
  T value{};
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw InputError(path.string() + ":" + std::to_string(line) + ": cannot parse '" + std::string(tok) + "'");
  }
  return value;
}

}  // namespace detail

// Edge list: two whitespace-separated 0-based ids per line, '#' starts a comment.
inline EdgeList read_edge_list(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  EdgeList edges;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto s = detail::trim(std::string_view(line).substr(0, line.find('#')));
    if (s.empty()) continue;
    std::istringstream ss{std::string(s)};
    std::string a, b, extra;
    if (!(ss >> a >> b) || (ss >> extra)) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected two node ids");
    }
    edges.emplace_back(detail::parse_number<NodeId>(a, path, lineno), detail::parse_number<NodeId>(b, path, lineno));
  }
  return edges;
}

// Node count is one past the largest id unless given explicitly.
inline Graph read_graph(const std::filesystem::path& path, std::size_t num_nodes = 0) {
  const auto edges = read_edge_list(path);
  std::size_t n = num_nodes;
  if (n == 0)
    for (const auto& [u, v] : edges) n = std::max<std::size_t>(n, std::max(u, v) + std::size_t{1});
  return build_graph(edges, n);
}

// Dense CSV without header; every row must have the same width.
inline Matrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto s = detail::trim(line);
    if (s.empty()) continue;
    std::size_t width = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      const auto tok = detail::trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
      values.push_back(detail::parse_number<double>(tok, path, lineno));
      ++width;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = width;
    if (width != cols) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                       " columns, found " + std::to_string(width));
    }
    ++rows;
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data().begin());
  return m;
}

inline std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<int> labels;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto s = detail::trim(line);
    if (s.empty()) continue;
    labels.push_back(detail::parse_number<int>(s, path, lineno));
  }
  return labels;
}

// 17 significant digits: round-trips every double, identical values give identical text.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_labels(const std::filesystem::path& path, std::span<const int> labels) {
  auto out = open_output(path);
  for (int y : labels) out << y << '\n';
}

inline void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  auto out = open_output(path);
  out << "# " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
  for (const auto& [u, v] : g.edge_list()) out << u << ' ' << v << '\n';
}

}  // namespace wgdn::io
