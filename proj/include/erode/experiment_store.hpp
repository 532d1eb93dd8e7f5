#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace erode {

/// Largest accepted gap between the recorded power and voltage * current, in watts.
inline constexpr double kPowerTolerance = 0.5;

/// A record or dataset violates a domain invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed CSV, store, or model text. `line()` is 1-based; `column()` is 0 when
/// the error concerns the whole line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// One debiting experiment. The processed object (PO) is the workpiece and the
/// transfer object (TO) is the tool electrode.
struct ExperimentRecord {
  std::int64_t id = 0;
  std::string po_material;
  std::string to_material;
  std::string machine;
  std::string operation;
  std::string regime;
  double voltage_u = 0.0;  // V
  double current_i = 0.0;  // A
  double power_p = 0.0;    // W
  double time_tp = 0.0;    // s

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// Throws ValidationError when `record` breaks an invariant: U, I, P, t_p finite and
/// strictly positive, |P - U*I| <= kPowerTolerance, and text fields non-empty without
/// commas, tabs, line breaks, surrounding blanks or a leading '#'. The id is not checked.
void validate(const ExperimentRecord& record);

/// Conjunction of optional exact, case-sensitive matches. Absent fields match anything.
struct QueryFilter {
  std::optional<std::string> po_material;
  std::optional<std::string> to_material;
  std::optional<std::string> machine;
  std::optional<std::string> operation;
  std::optional<std::string> regime;

  bool matches(const ExperimentRecord& record) const;
};

struct DataPoint {
  double x = 0.0;  // induced power, W
  double y = 0.0;  // processing time, s

  friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

/// Processing time versus induced power samples. Repeated x values are allowed.
struct Dataset {
  std::vector<DataPoint> points;
  std::string label;

  /// Throws ValidationError on an empty or non-finite dataset.
  void validate() const;
};

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "po_material,to_material,machine,operation,regime,voltage_v,current_a,power_w,time_s";

struct RowReject {
  std::size_t line = 0;
  std::string reason;
};

struct CsvParseOutcome {
  std::vector<ExperimentRecord> records;
  std::vector<RowReject> rejects;
};

/// Parses every data row, collecting bad rows instead of stopping at the first one.
/// A missing or wrong header still throws ParseError since no row can be trusted then.
CsvParseOutcome parse_csv_lenient(std::istream& in);

/// Strict variant: the first bad row throws ParseError (shape, number) or
/// ValidationError (invariant). Record ids are left at 0.
std::vector<ExperimentRecord> parse_csv(std::istream& in);
std::vector<ExperimentRecord> parse_csv(std::string_view text);

/// Writes the header and one row per record, using shortest round-trip number text.
void write_csv(std::ostream& out, std::span<const ExperimentRecord> records);
std::string to_csv(std::span<const ExperimentRecord> records);

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

inline constexpr std::string_view kStoreHeader = "erode-store v1";

/// In-memory experiment database with monotonically increasing ids.
///
/// A single writer may call add(); concurrent readers of a store that is not being
/// mutated are safe since every read is const.
class ExperimentStore {
 public:
  ExperimentStore() = default;

  /// Validates `record`, assigns the next id and appends it. On failure the store is
  /// left unchanged. Any id already set on `record` is ignored.
  std::int64_t add(ExperimentRecord record);

  const ExperimentRecord* find(std::int64_t id) const;

  /// Records matching every present field of `filter`, ordered by id.
  std::vector<ExperimentRecord> query(const QueryFilter& filter) const;

  std::span<const ExperimentRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::int64_t next_id() const noexcept { return next_id_; }

  /// Line layout: `erode-store v1` then one tab-separated line per record
  /// (id, po, to, machine, operation, regime, U, I, P, t_p).
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& destination) const;

  /// Inverse of save(). An empty stream yields an empty store.
  static ExperimentStore load(std::istream& in);
  static ExperimentStore load(const std::filesystem::path& source);

  friend bool operator==(const ExperimentStore&, const ExperimentStore&) = default;

 private:
  std::vector<ExperimentRecord> records_;
  std::int64_t next_id_ = 1;
};

/// (P, t_p) pairs in record order. The label joins the PO material, TO material
/// and operation, with `*` standing for any field that differs across records.
Dataset extract_dataset(std::span<const ExperimentRecord> records);

/// Two-column `power_w,time_s` CSV with shortest round-trip numbers.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Reads either a `power_w,time_s` file or a full experiment CSV. The label is taken
/// from `label`.
Dataset read_dataset_csv(std::istream& in, std::string label = {});

/// Shortest text that parses back to exactly `value`.
std::string format_exact(double value);

}  // namespace erode
