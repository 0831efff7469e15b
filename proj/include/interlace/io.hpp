#pragma once

// File formats: matrix and phase JSON, experiment record CSV, and the flat
// key = value configuration files used by `interlace experiment`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "interlace/circuit.hpp"
#include "interlace/experiments.hpp"

namespace interlace {

/// Version written into every JSON and CSV artifact. Loaders accept any minor
/// version of the same major.
inline constexpr std::string_view kSchemaVersion = "1.0";

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws FormatError unless `version` is "<kSchemaMajor>.<minor>".
void check_schema_version(const std::string& version, std::string_view what);

enum class MatrixRole { Unitary, General };

struct MatrixFile {
  ComplexMatrix matrix;
  MatrixRole role = MatrixRole::General;
  /// ||U^H U - I||_F, computed on load for unitary files.
  double unitarity_defect = 0.0;
};

/// Files claiming role "unitary" with a larger defect are rejected on load.
inline constexpr double kUnitaryLoadTolerance = 1e-6;

std::string matrix_to_json(const ComplexMatrix& matrix, MatrixRole role);
MatrixFile matrix_from_json(std::string_view text);
void write_matrix_file(const std::filesystem::path& path, const ComplexMatrix& matrix, MatrixRole role);
MatrixFile read_matrix_file(const std::filesystem::path& path);

struct PhaseFile {
  PhaseProgram program;
  std::optional<double> loss;
  std::optional<std::uint64_t> seed;
};

std::string phases_to_json(const PhaseFile& file);
PhaseFile phases_from_json(std::string_view text);
void write_phase_file(const std::filesystem::path& path, const PhaseFile& file);
PhaseFile read_phase_file(const std::filesystem::path& path);

/// Column names of the record CSV, in order.
std::span<const std::string_view> record_columns();
/// Header line followed by one line per record. Doubles use the shortest
/// representation that round-trips; NaN is written as an empty field.
void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records,
                       bool header = true);
std::vector<ExperimentRecord> read_records_csv(std::istream& in);

/// Shortest round-trip decimal for a finite double.
std::string format_double(double value);

/// Flat typed key = value configuration: numbers, "strings", true/false and
/// one-line [lists]. '#' starts a comment. Unknown keys are rejected by
/// require_known().
class Config {
 public:
  using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>,
                             std::vector<std::string>>;

  static Config parse(std::string_view text, std::string_view source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, Value>& values() const { return values_; }
  void set(const std::string& key, Value value) { values_[key] = std::move(value); }

  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& fallback) const;

  void require_known(std::span<const std::string_view> keys) const;

 private:
  std::string source_;
  std::map<std::string, Value> values_;
};

}  // namespace interlace
