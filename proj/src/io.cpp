#include "lco/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lco/errors.hpp"

namespace lco {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInputError("bad number '" + s + "' in " + what);
}

}  // namespace

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_dynamics_csv(std::ostream& out, std::span<const DynamicsRecord> records) {
  out << kDynamicsHeader << '\n';
  for (const DynamicsRecord& r : records) {
    out << r.step << ',' << format_real(r.loss) << ',' << format_real(r.grad_norm_param) << ','
        << format_real(r.grad_sampled_logit) << ',' << format_real(r.grad_nonsampled_logit) << ','
        << format_real(r.entropy) << ',' << format_real(r.sampled_prob) << ',' << to_string(r.adv_bucket) << ','
        << (r.bound ? format_real(*r.bound) : std::string()) << '\n';
  }
}

void write_dynamics_csv(const std::filesystem::path& path, std::span<const DynamicsRecord> records) {
  auto out = open_for_write(path);
  write_dynamics_csv(out, records);
}

void write_converge_csv(std::ostream& out, const ConvergeResult& result) {
  out << kConvergeHeader << '\n';
  for (const ConvergeRow& r : result.rows) {
    out << r.k << ',' << format_real(r.loss) << ',' << format_real(r.bound) << ',' << format_real(result.rho) << '\n';
  }
}

void write_converge_csv(const std::filesystem::path& path, const ConvergeResult& result) {
  auto out = open_for_write(path);
  write_converge_csv(out, result);
}

void write_model(std::ostream& out, const PolicyModel& model) {
  out << "# family=" << to_string(model.family()) << " vocab=" << model.vocab()
      << " horizon=" << model.states().horizon() << " params=" << model.parameter_count();
  if (model.family() == ModelFamily::kMlp1) out << " hidden=" << model.hidden_width();
  out << '\n';
  for (double p : model.parameters()) out << format_real(p) << '\n';
}

void write_model(const std::filesystem::path& path, const PolicyModel& model) {
  auto out = open_for_write(path);
  write_model(out, model);
}

std::vector<double> read_model_parameters(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open " + path.string());
  std::vector<double> out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.front() == '#') continue;
    out.push_back(to_real(line, path.string()));
  }
  return out;
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    if (first) {
      table.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw InvalidInputError(source + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(table.header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (first) throw InvalidInputError(source + ": missing header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

std::vector<DynamicsRecord> dynamics_from_csv(const CsvTable& table) {
  const std::vector<std::string> expected = split(std::string(kDynamicsHeader), ',');
  for (const std::string& name : expected) {
    if (!table.column(name)) throw SchemaError("missing column '" + name + "'", name);
  }
  auto col = [&](const char* name) { return *table.column(name); };
  std::vector<DynamicsRecord> out;
  for (const auto& row : table.rows) {
    DynamicsRecord r;
    r.step = static_cast<int>(to_real(row[col("step")], "step"));
    r.loss = to_real(row[col("loss")], "loss");
    r.grad_norm_param = to_real(row[col("grad_norm_param")], "grad_norm_param");
    r.grad_sampled_logit = to_real(row[col("grad_sampled_logit")], "grad_sampled_logit");
    r.grad_nonsampled_logit = to_real(row[col("grad_nonsampled_logit")], "grad_nonsampled_logit");
    r.entropy = to_real(row[col("entropy")], "entropy");
    r.sampled_prob = to_real(row[col("sampled_prob")], "sampled_prob");
    const std::string& bucket = row[col("adv_bucket")];
    if (bucket == "positive") r.adv_bucket = AdvantageBucket::kPositive;
    else if (bucket == "negative") r.adv_bucket = AdvantageBucket::kNegative;
    else throw InvalidInputError("bad adv_bucket '" + bucket + "'");
    const std::string& bound = row[col("bound")];
    if (!bound.empty()) r.bound = to_real(bound, "bound");
    out.push_back(r);
  }
  return out;
}

}  // namespace lco
