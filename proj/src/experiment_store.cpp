#include "erode/experiment_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "text_util.hpp"

namespace erode {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error(column == 0 ? "line " + std::to_string(line) + ": " + message
                                     : "line " + std::to_string(line) + ", column " +
                                           std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

void check_text_field(std::string_view name, const std::string& value) {
  if (value.empty()) {
    throw ValidationError(std::string(name) + " must not be empty");
  }
  if (value.front() == '#') {
    throw ValidationError(std::string(name) + " must not start with '#': \"" + value + "\"");
  }
  if (detail::trim(value) != value) {
    throw ValidationError(std::string(name) + " has surrounding blanks: \"" + value + "\"");
  }
  for (const char c : value) {
    if (c == ',' || c == '\t' || c == '\n' || c == '\r') {
      throw ValidationError(std::string(name) + " contains a separator character: \"" +
                            value + "\"");
    }
  }
}

void check_positive(std::string_view name, double value) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw ValidationError(std::string(name) + " must be finite and positive, got " +
                          format_exact(value));
  }
}

// Column names in schema order, used for error messages.
constexpr std::string_view kColumns[] = {"po_material", "to_material", "machine",
                                         "operation",   "regime",      "voltage_v",
                                         "current_a",   "power_w",     "time_s"};
constexpr std::size_t kColumnCount = std::size(kColumns);

double parse_number_field(std::string_view field, std::size_t line, std::size_t column) {
  const auto value = detail::parse_double(field);
  if (!value) {
    throw ParseError(line, column,
                     std::string(kColumns[column - 1]) + " is not a number: \"" +
                         std::string(field) + "\"");
  }
  return *value;
}

ExperimentRecord parse_row(std::string_view row, std::size_t line) {
  const auto fields = detail::split(row, ',');
  if (fields.size() != kColumnCount) {
    throw ParseError(line, 0,
                     "expected " + std::to_string(kColumnCount) + " columns, found " +
                         std::to_string(fields.size()));
  }
  ExperimentRecord record;
  record.po_material = std::string(detail::trim(fields[0]));
  record.to_material = std::string(detail::trim(fields[1]));
  record.machine = std::string(detail::trim(fields[2]));
  record.operation = std::string(detail::trim(fields[3]));
  record.regime = std::string(detail::trim(fields[4]));
  record.voltage_u = parse_number_field(fields[5], line, 6);
  record.current_i = parse_number_field(fields[6], line, 7);
  record.power_p = parse_number_field(fields[7], line, 8);
  record.time_tp = parse_number_field(fields[8], line, 9);
  try {
    validate(record);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line) + ": " + e.what());
  }
  return record;
}

bool is_skippable(std::string_view line) {
  const auto t = detail::trim(line);
  return t.empty() || t.front() == '#';
}

// Checks the header, then hands every data line to `on_row` with its 1-based number.
template <typename OnRow>
void for_each_data_row(std::istream& in, OnRow&& on_row) {
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::strip_cr(raw);
    if (is_skippable(line)) {
      continue;
    }
    if (!header_seen) {
      if (detail::trim(line) != kCsvHeader) {
        throw ParseError(line_no, 0, "expected header \"" + std::string(kCsvHeader) + "\"");
      }
      header_seen = true;
      continue;
    }
    on_row(line, line_no);
  }
  if (in.bad()) {
    throw std::runtime_error("read error while parsing CSV");
  }
}

}  // namespace

void validate(const ExperimentRecord& record) {
  check_text_field("po_material", record.po_material);
  check_text_field("to_material", record.to_material);
  check_text_field("machine", record.machine);
  check_text_field("operation", record.operation);
  check_text_field("regime", record.regime);
  check_positive("voltage_v", record.voltage_u);
  check_positive("current_a", record.current_i);
  check_positive("power_w", record.power_p);
  check_positive("time_s", record.time_tp);
  const double product = record.voltage_u * record.current_i;
  const double gap = std::abs(record.power_p - product);
  if (!(gap <= kPowerTolerance)) {
    throw ValidationError("power_w " + format_exact(record.power_p) +
                          " differs from voltage_v * current_a = " + format_exact(product) +
                          " by " + format_exact(gap) + " > " + format_exact(kPowerTolerance));
  }
}

bool QueryFilter::matches(const ExperimentRecord& record) const {
  const auto ok = [](const std::optional<std::string>& want, const std::string& have) {
    return !want || *want == have;
  };
  return ok(po_material, record.po_material) && ok(to_material, record.to_material) &&
         ok(machine, record.machine) && ok(operation, record.operation) &&
         ok(regime, record.regime);
}

void Dataset::validate() const {
  if (points.empty()) {
    throw ValidationError("dataset is empty");
  }
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError("dataset contains a non-finite point");
    }
  }
}

CsvParseOutcome parse_csv_lenient(std::istream& in) {
  CsvParseOutcome outcome;
  for_each_data_row(in, [&](std::string_view line, std::size_t line_no) {
    try {
      outcome.records.push_back(parse_row(line, line_no));
    } catch (const std::exception& e) {
      outcome.rejects.push_back({line_no, e.what()});
    }
  });
  return outcome;
}

std::vector<ExperimentRecord> parse_csv(std::istream& in) {
  std::vector<ExperimentRecord> records;
  for_each_data_row(in, [&](std::string_view line, std::size_t line_no) {
    records.push_back(parse_row(line, line_no));
  });
  return records;
}

std::vector<ExperimentRecord> parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_csv(in);
}

void write_csv(std::ostream& out, std::span<const ExperimentRecord> records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.po_material << ',' << r.to_material << ',' << r.machine << ',' << r.operation
        << ',' << r.regime << ',' << format_exact(r.voltage_u) << ','
        << format_exact(r.current_i) << ',' << format_exact(r.power_p) << ','
        << format_exact(r.time_tp) << '\n';
  }
}

std::string to_csv(std::span<const ExperimentRecord> records) {
  std::ostringstream out;
  write_csv(out, records);
  return out.str();
}

// ---------------------------------------------------------------------------

std::int64_t ExperimentStore::add(ExperimentRecord record) {
  validate(record);
  record.id = next_id_;
  records_.push_back(std::move(record));
  return next_id_++;
}

const ExperimentRecord* ExperimentStore::find(std::int64_t id) const {
  const auto it = std::lower_bound(
      records_.begin(), records_.end(), id,
      [](const ExperimentRecord& r, std::int64_t key) { return r.id < key; });
  return (it != records_.end() && it->id == id) ? &*it : nullptr;
}

std::vector<ExperimentRecord> ExperimentStore::query(const QueryFilter& filter) const {
  std::vector<ExperimentRecord> out;
  std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
               [&](const ExperimentRecord& r) { return filter.matches(r); });
  return out;
}

void ExperimentStore::save(std::ostream& out) const {
  out << kStoreHeader << '\n';
  for (const auto& r : records_) {
    out << r.id << '\t' << r.po_material << '\t' << r.to_material << '\t' << r.machine << '\t'
        << r.operation << '\t' << r.regime << '\t' << format_exact(r.voltage_u) << '\t'
        << format_exact(r.current_i) << '\t' << format_exact(r.power_p) << '\t'
        << format_exact(r.time_tp) << '\n';
  }
}

void ExperimentStore::save(const std::filesystem::path& destination) const {
  // Write beside the target and rename so a failed write never truncates the store.
  auto tmp = destination;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open store for writing: " + destination.string());
    }
    save(out);
    out.flush();
    if (!out) {
      throw std::runtime_error("write failed: " + destination.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, destination, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot replace store " + destination.string());
  }
}

ExperimentStore ExperimentStore::load(std::istream& in) {
  ExperimentStore store;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::strip_cr(raw);
    if (line_no == 1) {
      if (line != kStoreHeader) {
        if (line.starts_with("erode-store ")) {
          throw ParseError(line_no, 0,
                           "unsupported store version \"" + std::string(line) + "\", expected \"" +
                               std::string(kStoreHeader) + "\"");
        }
        throw ParseError(line_no, 0, "not an erode store (missing header)");
      }
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 10) {
      throw ParseError(line_no, 0,
                       "expected 10 tab-separated fields, found " + std::to_string(fields.size()));
    }
    ExperimentRecord r;
    const auto id = detail::parse_int(fields[0]);
    if (!id || *id < 1) {
      throw ParseError(line_no, 1, "bad record id \"" + std::string(fields[0]) + "\"");
    }
    r.id = *id;
    r.po_material = std::string(fields[1]);
    r.to_material = std::string(fields[2]);
    r.machine = std::string(fields[3]);
    r.operation = std::string(fields[4]);
    r.regime = std::string(fields[5]);
    double* numbers[] = {&r.voltage_u, &r.current_i, &r.power_p, &r.time_tp};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto v = detail::parse_double(fields[6 + k]);
      if (!v) {
        throw ParseError(line_no, 7 + k, "bad number \"" + std::string(fields[6 + k]) + "\"");
      }
      *numbers[k] = *v;
    }
    try {
      validate(r);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, 0, e.what());
    }
    if (r.id < store.next_id_) {
      throw ParseError(line_no, 1, "record ids must be strictly increasing");
    }
    store.next_id_ = r.id + 1;
    store.records_.push_back(std::move(r));
  }
  if (in.bad()) {
    throw std::runtime_error("read error while loading store");
  }
  return store;
}

ExperimentStore ExperimentStore::load(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open store: " + source.string());
  }
  return load(in);
}

// ---------------------------------------------------------------------------

Dataset extract_dataset(std::span<const ExperimentRecord> records) {
  if (records.empty()) {
    throw ValidationError("cannot extract a dataset from an empty record list");
  }
  Dataset data;
  data.points.reserve(records.size());
  for (const auto& r : records) {
    data.points.push_back({r.power_p, r.time_tp});
  }
  const auto common = [&](auto field) {
    const std::string& first = records.front().*field;
    const bool same = std::all_of(records.begin(), records.end(),
                                  [&](const ExperimentRecord& r) { return r.*field == first; });
    return same ? first : std::string("*");
  };
  data.label = common(&ExperimentRecord::po_material) + "/" +
               common(&ExperimentRecord::to_material) + " " +
               common(&ExperimentRecord::operation);
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "power_w,time_s\n";
  for (const auto& p : data.points) {
    out << format_exact(p.x) << ',' << format_exact(p.y) << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, std::string label) {
  std::string first;
  std::size_t line_no = 0;
  // Find the header to decide which layout follows.
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!is_skippable(detail::strip_cr(raw))) {
      first = std::string(detail::trim(detail::strip_cr(raw)));
      break;
    }
  }
  Dataset data;
  data.label = std::move(label);
  if (first == kCsvHeader) {
    // Re-feed the header so parse_csv sees a complete file.
    std::ostringstream buf;
    buf << std::string(line_no - 1, '\n') << first << '\n' << in.rdbuf();
    std::istringstream full(buf.str());
    for (const auto& r : parse_csv(full)) {
      data.points.push_back({r.power_p, r.time_tp});
    }
    return data;
  }
  if (first != "power_w,time_s") {
    throw ParseError(line_no, 0, "expected header \"power_w,time_s\" or the experiment header");
  }
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (is_skippable(line)) {
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 2) {
      throw ParseError(line_no, 0, "expected 2 columns, found " + std::to_string(fields.size()));
    }
    const auto x = detail::parse_double(fields[0]);
    if (!x) {
      throw ParseError(line_no, 1, "power_w is not a number");
    }
    const auto y = detail::parse_double(fields[1]);
    if (!y) {
      throw ParseError(line_no, 2, "time_s is not a number");
    }
    data.points.push_back({*x, *y});
  }
  return data;
}

std::string format_exact(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace erode
