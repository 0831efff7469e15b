#include "interlace/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace interlace {

using nlohmann::json;

namespace {

constexpr std::string_view kSlotOrder =
    "U = F[M] P[M-1] ... P[0] F[0]; theta row m is phase layer P[m]; slot 0 acts first";

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

// Line/column diagnostic for a byte offset into `text` (1-based offset as
// reported by the JSON parser).
std::string locate(std::string_view text, std::size_t byte) {
  const std::size_t offset = std::min(byte == 0 ? 0 : byte - 1, text.size());
  const std::size_t line_start = text.rfind('\n', offset == 0 ? 0 : offset - 1);
  const std::size_t begin = line_start == std::string_view::npos ? 0 : line_start + 1;
  std::size_t end = text.find('\n', begin);
  if (end == std::string_view::npos) end = text.size();
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(begin), '\n');
  std::ostringstream out;
  out << "line " << line << ", column " << (offset - begin + 1) << ": "
      << text.substr(begin, std::min<std::size_t>(end - begin, 120));
  return out.str();
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": malformed JSON at " + locate(text, e.byte));
  }
}

template <typename T>
T field(const json& doc, const char* key, std::string_view what) {
  if (!doc.contains(key)) throw FormatError(std::string(what) + ": missing field '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": field '" + key + "' has the wrong type");
  }
}

RealMatrix grid(const json& doc, const char* key, int rows, int cols, std::string_view what) {
  const auto values = field<std::vector<std::vector<double>>>(doc, key, what);
  if (static_cast<int>(values.size()) != rows) {
    throw FormatError(std::string(what) + ": '" + key + "' must have " + std::to_string(rows) + " rows");
  }
  RealMatrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(values[static_cast<std::size_t>(i)].size()) != cols) {
      throw FormatError(std::string(what) + ": '" + key + "' row " + std::to_string(i) + " must have " +
                        std::to_string(cols) + " entries");
    }
    for (int j = 0; j < cols; ++j) out(i, j) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  if (!out.allFinite()) throw FormatError(std::string(what) + ": '" + key + "' has non-finite entries");
  return out;
}

json rows_of(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void check_kind(const json& doc, std::string_view expected, std::string_view what) {
  if (!doc.is_object()) throw FormatError(std::string(what) + ": expected a JSON object");
  check_schema_version(field<std::string>(doc, "schema_version", what), what);
  const auto kind = field<std::string>(doc, "kind", what);
  if (kind != expected) {
    throw FormatError(std::string(what) + ": kind is '" + kind + "', expected '" + std::string(expected) + "'");
  }
}

}  // namespace

void check_schema_version(const std::string& version, std::string_view what) {
  const auto major_end = version.find('.');
  const std::string major = version.substr(0, major_end);
  const std::string expected(kSchemaVersion.substr(0, kSchemaVersion.find('.')));
  if (major != expected) {
    throw FormatError(std::string(what) + ": unsupported schema version '" + version + "' (expected " +
                      expected + ".x)");
  }
}

std::string matrix_to_json(const ComplexMatrix& matrix, MatrixRole role) {
  if (matrix.rows() != matrix.cols()) throw FormatError("matrix file: matrix must be square");
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "matrix";
  doc["role"] = role == MatrixRole::Unitary ? "unitary" : "general";
  doc["n"] = matrix.rows();
  doc["re"] = rows_of(matrix.real());
  doc["im"] = rows_of(matrix.imag());
  return doc.dump(1) + "\n";
}

MatrixFile matrix_from_json(std::string_view text) {
  constexpr std::string_view what = "matrix file";
  const json doc = parse_json(text, what);
  check_kind(doc, "matrix", what);
  const int n = field<int>(doc, "n", what);
  if (n < 1) throw FormatError("matrix file: n must be >= 1");
  const auto role_name = doc.contains("role") ? field<std::string>(doc, "role", what) : "general";
  if (role_name != "unitary" && role_name != "general") {
    throw FormatError("matrix file: role must be 'unitary' or 'general'");
  }
  MatrixFile out;
  out.role = role_name == "unitary" ? MatrixRole::Unitary : MatrixRole::General;
  const RealMatrix re = grid(doc, "re", n, n, what);
  const RealMatrix im = grid(doc, "im", n, n, what);
  out.matrix.resize(n, n);
  out.matrix.real() = re;
  out.matrix.imag() = im;
  if (out.role == MatrixRole::Unitary) {
    out.unitarity_defect = unitarity_defect(out.matrix);
    if (out.unitarity_defect > kUnitaryLoadTolerance) {
      std::ostringstream msg;
      msg << "matrix file: claims role 'unitary' but ||U^H U - I||_F = " << out.unitarity_defect;
      throw FormatError(msg.str());
    }
  }
  return out;
}

void write_matrix_file(const std::filesystem::path& path, const ComplexMatrix& matrix, MatrixRole role) {
  write_text(path, matrix_to_json(matrix, role));
}

MatrixFile read_matrix_file(const std::filesystem::path& path) {
  try {
    return matrix_from_json(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string phases_to_json(const PhaseFile& file) {
  const PhaseProgram& program = file.program;
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "phases";
  doc["n"] = program.ports();
  doc["m"] = program.layers();
  doc["slot_order"] = kSlotOrder;
  doc["theta"] = rows_of(program.canonical_theta());
  json mask = json::array();
  for (int m = 0; m < program.layers(); ++m) {
    json row = json::array();
    for (int p = 0; p < program.ports(); ++p) {
      if (program.is_fixed(m, p)) {
        row.push_back(canonical_phase(program.theta()(m, p)));
      } else {
        row.push_back("free");
      }
    }
    mask.push_back(std::move(row));
  }
  doc["mask"] = std::move(mask);
  if (file.loss) doc["loss"] = *file.loss;
  if (file.seed) doc["seed"] = *file.seed;
  return doc.dump(1) + "\n";
}

PhaseFile phases_from_json(std::string_view text) {
  constexpr std::string_view what = "phase file";
  const json doc = parse_json(text, what);
  check_kind(doc, "phases", what);
  const int n = field<int>(doc, "n", what);
  const int m = field<int>(doc, "m", what);
  if (n < 1 || m < 0) throw FormatError("phase file: invalid dimensions");
  const RealMatrix theta = grid(doc, "theta", m, n, what);

  std::vector<Fault> faults;
  if (doc.contains("mask")) {
    const json& mask = doc.at("mask");
    if (!mask.is_array() || static_cast<int>(mask.size()) != m) {
      throw FormatError("phase file: 'mask' must have " + std::to_string(m) + " rows");
    }
    for (int i = 0; i < m; ++i) {
      const json& row = mask[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<int>(row.size()) != n) {
        throw FormatError("phase file: 'mask' row " + std::to_string(i) + " must have " + std::to_string(n) +
                          " entries");
      }
      for (int p = 0; p < n; ++p) {
        const json& cell = row[static_cast<std::size_t>(p)];
        if (cell.is_string() && cell.get<std::string>() == "free") continue;
        if (!cell.is_number()) {
          throw FormatError("phase file: mask entries must be \"free\" or a phase value");
        }
        faults.push_back({i, p, cell.get<double>()});
      }
    }
  }
  PhaseFile out;
  try {
    out.program = apply_fault_plan(PhaseProgram(theta), faults);
  } catch (const std::exception& e) {
    throw FormatError(std::string("phase file: ") + e.what());
  }
  if (doc.contains("loss")) out.loss = field<double>(doc, "loss", what);
  if (doc.contains("seed")) out.seed = field<std::uint64_t>(doc, "seed", what);
  return out;
}

void write_phase_file(const std::filesystem::path& path, const PhaseFile& file) {
  write_text(path, phases_to_json(file));
}

PhaseFile read_phase_file(const std::filesystem::path& path) {
  try {
    return phases_from_json(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Record CSV

namespace {

constexpr std::array<std::string_view, 26> kColumns = {
    "schema_version", "label",       "task",          "n",           "m",
    "sigma_k",        "init_mode",   "layout",        "combo_index", "fault_plan",
    "free_count",     "target_index", "run_index",    "seed",        "loss_ideal",
    "loss_before",    "loss_after",  "delta_f",       "delta_u",     "mu_dx",
    "sigma_dx",       "corr_x",      "iterations",    "restarts_used", "converged",
    "wall_time",
};

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string number_field(double value) {
  return std::isnan(value) ? std::string() : format_double(value);
}

// Splits one CSV record per RFC 4180; quoted fields may span lines.
bool read_row(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  for (int ch; (ch = in.get()) != EOF;) {
    any = true;
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else {
      field += c;
    }
  }
  if (quoted) throw FormatError("record CSV: unterminated quoted field near line " + std::to_string(line));
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

template <typename T>
T parse_integer(const std::string& text, std::size_t line, std::string_view column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("record CSV line " + std::to_string(line) + ": bad integer in column '" +
                      std::string(column) + "': '" + text + "'");
  }
  return value;
}

double parse_number(const std::string& text, std::size_t line, std::string_view column) {
  if (text.empty()) return kNotApplicable;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("record CSV line " + std::to_string(line) + ": bad number in column '" +
                      std::string(column) + "': '" + text + "'");
  }
  return value;
}

}  // namespace

std::span<const std::string_view> record_columns() { return kColumns; }

std::string format_double(double value) {
  std::array<char, 64> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) throw FormatError("format_double: conversion failed");
  return std::string(buffer.data(), ptr);
}

void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records, bool header) {
  if (header) {
    for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
    out << '\n';
  }
  for (const ExperimentRecord& r : records) {
    const std::array<std::string, kColumns.size()> fields = {
        std::string(kSchemaVersion),
        quote(r.label),
        std::to_string(r.task),
        std::to_string(r.n),
        std::to_string(r.m),
        number_field(r.sigma_k),
        quote(r.init_mode),
        quote(r.layout),
        std::to_string(r.combo_index),
        quote(r.fault_plan),
        std::to_string(r.free_count),
        std::to_string(r.target_index),
        std::to_string(r.run_index),
        std::to_string(r.seed),
        number_field(r.loss_ideal),
        number_field(r.loss_before),
        number_field(r.loss_after),
        number_field(r.delta_f),
        number_field(r.delta_u),
        number_field(r.mu_dx),
        number_field(r.sigma_dx),
        number_field(r.corr_x),
        std::to_string(r.iterations),
        std::to_string(r.restarts_used),
        r.converged ? "1" : "0",
        number_field(r.wall_time),
    };
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  }
}

std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::vector<ExperimentRecord> records;
  std::vector<std::string> fields;
  std::size_t line = 1;
  if (!read_row(in, fields, line)) return records;
  if (fields.size() != kColumns.size() || !std::equal(fields.begin(), fields.end(), kColumns.begin())) {
    throw FormatError("record CSV: unexpected header");
  }
  while (true) {
    const std::size_t row_line = line;
    if (!read_row(in, fields, line)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != kColumns.size()) {
      throw FormatError("record CSV line " + std::to_string(row_line) + ": expected " +
                        std::to_string(kColumns.size()) + " fields, found " + std::to_string(fields.size()));
    }
    check_schema_version(fields[0], "record CSV line " + std::to_string(row_line));
    auto col = [&](std::size_t i) -> const std::string& { return fields[i]; };
    ExperimentRecord r;
    r.label = col(1);
    r.task = parse_integer<std::uint64_t>(col(2), row_line, kColumns[2]);
    r.n = parse_integer<int>(col(3), row_line, kColumns[3]);
    r.m = parse_integer<int>(col(4), row_line, kColumns[4]);
    r.sigma_k = parse_number(col(5), row_line, kColumns[5]);
    r.init_mode = col(6);
    r.layout = col(7);
    r.combo_index = parse_integer<std::int64_t>(col(8), row_line, kColumns[8]);
    r.fault_plan = col(9);
    r.free_count = parse_integer<int>(col(10), row_line, kColumns[10]);
    r.target_index = parse_integer<std::int64_t>(col(11), row_line, kColumns[11]);
    r.run_index = parse_integer<std::int64_t>(col(12), row_line, kColumns[12]);
    r.seed = parse_integer<std::uint64_t>(col(13), row_line, kColumns[13]);
    r.loss_ideal = parse_number(col(14), row_line, kColumns[14]);
    r.loss_before = parse_number(col(15), row_line, kColumns[15]);
    r.loss_after = parse_number(col(16), row_line, kColumns[16]);
    r.delta_f = parse_number(col(17), row_line, kColumns[17]);
    r.delta_u = parse_number(col(18), row_line, kColumns[18]);
    r.mu_dx = parse_number(col(19), row_line, kColumns[19]);
    r.sigma_dx = parse_number(col(20), row_line, kColumns[20]);
    r.corr_x = parse_number(col(21), row_line, kColumns[21]);
    r.iterations = parse_integer<int>(col(22), row_line, kColumns[22]);
    r.restarts_used = parse_integer<int>(col(23), row_line, kColumns[23]);
    r.converged = parse_integer<int>(col(24), row_line, kColumns[24]) != 0;
    r.wall_time = parse_number(col(25), row_line, kColumns[25]);
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Config

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

std::optional<std::string> parse_string(std::string_view token) {
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
    return std::string(token.substr(1, token.size() - 2));
  }
  return std::nullopt;
}

std::optional<double> parse_real(std::string_view token) {
  double value = 0.0;
  const char* begin = token.data();
  if (!token.empty() && token.front() == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

std::optional<std::int64_t> parse_int(std::string_view token) {
  std::string digits;
  for (char c : token) {
    if (c != '_') digits += c;
  }
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

}  // namespace

Config Config::parse(std::string_view text, std::string_view source) {
  Config config;
  config.source_ = source;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    auto fail = [&](const std::string& why) {
      throw FormatError(std::string(source) + ":" + std::to_string(line_no) + ": " + why + ": " +
                        std::string(trim(raw)));
    };
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[' && line.find('=') == std::string_view::npos) {
      fail("sections are not supported; use flat keys");
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("expected key = value");
    if (config.values_.contains(key)) fail("duplicate key '" + key + "'");

    if (value == "true" || value == "false") {
      config.values_[key] = value == "true";
    } else if (auto s = parse_string(value)) {
      config.values_[key] = *s;
    } else if (value.front() == '[') {
      if (value.back() != ']') fail("unterminated list");
      const std::string_view body = trim(value.substr(1, value.size() - 2));
      std::vector<double> numbers;
      std::vector<std::string> strings;
      std::size_t start = 0;
      while (!body.empty() && start <= body.size()) {
        const std::size_t comma = std::min(body.find(',', start), body.size());
        const std::string_view item = trim(body.substr(start, comma - start));
        start = comma + 1;
        if (item.empty()) {
          if (comma == body.size()) break;
          fail("empty list element");
        }
        if (auto s = parse_string(item)) {
          strings.push_back(*s);
        } else if (auto d = parse_real(item)) {
          numbers.push_back(*d);
        } else {
          fail("bad list element '" + std::string(item) + "'");
        }
        if (comma == body.size()) break;
      }
      if (!numbers.empty() && !strings.empty()) fail("lists must not mix numbers and strings");
      if (!strings.empty()) {
        config.values_[key] = strings;
      } else {
        config.values_[key] = numbers;
      }
    } else if (auto i = parse_int(value)) {
      config.values_[key] = *i;
    } else if (auto d = parse_real(value)) {
      config.values_[key] = *d;
    } else {
      fail("cannot parse value");
    }
    if (end == text.size()) break;
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  return parse(read_text(path), path.string());
}

namespace {

[[noreturn]] void wrong_type(const std::string& source, const std::string& key, const char* expected) {
  throw FormatError(source + ": key '" + key + "' must be " + expected);
}

}  // namespace

double Config::number(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  wrong_type(source_, key, "a number");
}

int Config::integer(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) {
    if (*i >= std::numeric_limits<int>::min() && *i <= std::numeric_limits<int>::max()) {
      return static_cast<int>(*i);
    }
  }
  wrong_type(source_, key, "an integer");
}

std::uint64_t Config::seed(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* i = std::get_if<std::int64_t>(&it->second); i && *i >= 0) {
    return static_cast<std::uint64_t>(*i);
  }
  wrong_type(source_, key, "a non-negative integer");
}

bool Config::flag(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* b = std::get_if<bool>(&it->second)) return *b;
  wrong_type(source_, key, "true or false");
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  wrong_type(source_, key, "a quoted string");
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return {static_cast<double>(*i)};
  if (const auto* d = std::get_if<double>(&it->second)) return {*d};
  wrong_type(source_, key, "a list of numbers");
}

std::vector<int> Config::integers(const std::string& key, const std::vector<int>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<int> out;
  for (double d : numbers(key, {})) {
    if (d != std::floor(d) || std::abs(d) > 1e9) wrong_type(source_, key, "a list of integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

std::vector<std::string> Config::texts(const std::string& key,
                                       const std::vector<std::string>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* v = std::get_if<std::vector<std::string>>(&it->second)) return *v;
  if (const auto* s = std::get_if<std::string>(&it->second)) return {*s};
  if (const auto* v = std::get_if<std::vector<double>>(&it->second); v && v->empty()) return {};
  wrong_type(source_, key, "a list of strings");
}

void Config::require_known(std::span<const std::string_view> keys) const {
  for (const auto& [key, value] : values_) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw FormatError(source_ + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace interlace
