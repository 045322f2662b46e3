#include "drst/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "drst/errors.hpp"

namespace drst {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(std::move(field));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw DataError("line " + std::to_string(line_no) + ": not a number: '" + field + "'");
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<double> values;
  std::size_t rows = 0;
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    for (const auto& f : fields) t.values.push_back(parse_number(f, line_no));
    ++t.rows;
  }
  if (t.header.empty()) throw DataError("CSV is missing its header row");
  return t;
}

RowMatrix block(const Table& t, std::size_t cols) {
  RowMatrix x(static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < t.rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.values[i * t.header.size() + j];
    }
  }
  return x;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_header(std::ostream& out, std::size_t d, bool with_y) {
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << "x_" << (j + 1);
  if (with_y) out << ",y";
  out << '\n';
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

UnlabeledSet read_unlabeled_csv(std::istream& in) {
  const Table t = read_table(in);
  return UnlabeledSet(block(t, t.header.size()));
}

LabeledSet read_labeled_csv(std::istream& in) {
  const Table t = read_table(in);
  if (t.header.size() < 2 || t.header.back() != "y") {
    throw DataError("labeled CSV must end with a column named \"y\"");
  }
  const std::size_t d = t.header.size() - 1;
  Vector y(static_cast<Eigen::Index>(t.rows));
  for (std::size_t i = 0; i < t.rows; ++i) y[static_cast<Eigen::Index>(i)] = t.values[i * t.header.size() + d];
  return LabeledSet(block(t, d), std::move(y));
}

UnlabeledSet load_unlabeled_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_unlabeled_csv(in);
}

LabeledSet load_labeled_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_labeled_csv(in);
}

void write_unlabeled_csv(std::ostream& out, const UnlabeledSet& set) {
  write_header(out, set.dim(), false);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto x = set.covariate(i);
    for (std::size_t j = 0; j < x.size(); ++j) out << (j ? "," : "") << fmt17(x[j]);
    out << '\n';
  }
}

void write_labeled_csv(std::ostream& out, const LabeledSet& set) {
  write_header(out, set.dim(), true);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto x = set.covariate(i);
    for (std::size_t j = 0; j < x.size(); ++j) out << fmt17(x[j]) << ',';
    out << fmt17(set.response(i)) << '\n';
  }
}

}  // namespace drst
