#include "ddcd/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ddcd/error.hpp"

namespace ddcd {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  if (ec == std::errc() && ptr == t.data() + t.size()) return true;
  // from_chars rejects "inf"/"nan" spellings some tools emit; strtod does not.
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

// Splits one CSV line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

std::string line_error(const std::string& what, std::size_t line) {
  return what + " at line " + std::to_string(line);
}

// Applies `setters` to every key of `j`; unknown keys are an error.
using Setter = std::function<void(const Json&)>;
void apply_keys(const Json& j, const std::string& what, const std::map<std::string, Setter>& setters) {
  require(j.is_object(), what + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    require(it != setters.end(), what + ": unknown key \"" + key + "\"");
    try {
      it->second(value);
    } catch (const Json::exception& e) {
      throw ValidationError(what + ": bad value for \"" + key + "\": " + e.what());
    }
  }
}

std::uint64_t as_u64(const Json& v) {
  require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
          "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const auto names = data.column_names.empty() ? default_column_names(data.d()) : data.column_names;
  require(names.size() == data.d(), "write csv: column name count differs from the data");
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << csv_quote(names[j]);
  out << '\n';
  for (std::size_t r = 0; r < data.n(); ++r) {
    for (std::size_t j = 0; j < data.d(); ++j) out << (j ? "," : "") << format_double(data.X(r, j));
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  auto out = open_out(path);
  write_dataset_csv(out, data);
}

Dataset read_dataset_csv(std::istream& in) {
  Dataset data;
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (first) {
      first = false;
      cols = fields.size();
      bool numeric = true;
      double tmp;
      for (const auto& f : fields) numeric = numeric && parse_double(f, tmp);
      if (!numeric) {
        for (const auto& f : fields) data.column_names.push_back(trim(f));
        continue;
      }
    }
    if (fields.size() != cols)
      throw ValidationError(line_error("csv: expected " + std::to_string(cols) + " fields, found " +
                                           std::to_string(fields.size()),
                                       line_no));
    for (const auto& f : fields) {
      double v;
      if (!parse_double(f, v)) throw ValidationError(line_error("csv: non-numeric value \"" + f + "\"", line_no));
      values.push_back(v);
    }
    ++rows;
  }
  require(cols > 0, "csv: file is empty");
  require(rows > 0, "csv: no data rows");
  data.X = Matrix(rows, cols);
  std::copy(values.begin(), values.end(), data.X.data());
  if (data.column_names.empty()) data.column_names = default_column_names(cols);
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  auto in = open_in(path);
  return read_dataset_csv(in);
}

void write_adjacency_tsv(std::ostream& out, const Matrix& W, AdjacencyFormat format) {
  require(W.is_square(), "write tsv: adjacency must be square");
  const std::size_t d = W.rows();
  if (format == AdjacencyFormat::kDense) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) out << (j ? "\t" : "") << format_double(W(i, j));
      out << '\n';
    }
    return;
  }
  out << "# nodes " << d << "\nsource\ttarget\tweight\n";
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (W(i, j) != 0.0) out << i << '\t' << j << '\t' << format_double(W(i, j)) << '\n';
}

void write_adjacency_tsv(const std::string& path, const Matrix& W, AdjacencyFormat format) {
  auto out = open_out(path);
  write_adjacency_tsv(out, W, format);
}

Matrix read_adjacency_tsv(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    lines.push_back(line);
  }
  std::size_t k = 0;
  while (k < lines.size() && trim(lines[k]).empty()) ++k;
  require(k < lines.size(), "tsv: file is empty");

  if (lines[k].rfind("#", 0) == 0) {
    std::istringstream hdr(lines[k].substr(1));
    std::string word;
    long long d = -1;
    hdr >> word >> d;
    if (word != "nodes" || d < 0) throw ValidationError(line_error("tsv: expected \"# nodes d\"", k + 1));
    Matrix W(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
    for (std::size_t i = k + 1; i < lines.size(); ++i) {
      const std::string t = trim(lines[i]);
      if (t.empty() || t.rfind("source", 0) == 0) continue;
      const auto f = split_on(t, '\t');
      if (f.size() != 3) throw ValidationError(line_error("tsv: expected source, target, weight", i + 1));
      double s, g, w;
      if (!parse_double(f[0], s) || !parse_double(f[1], g) || !parse_double(f[2], w) || s < 0 || g < 0 ||
          s != std::floor(s) || g != std::floor(g) || s >= d || g >= d)
        throw ValidationError(line_error("tsv: bad edge", i + 1));
      W(static_cast<std::size_t>(s), static_cast<std::size_t>(g)) = w;
    }
    return W;
  }

  std::vector<double> values;
  std::size_t d = 0;
  std::size_t rows = 0;
  for (std::size_t i = k; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split_on(lines[i], '\t');
    if (d == 0) d = f.size();
    if (f.size() != d)
      throw ValidationError(line_error("tsv: expected " + std::to_string(d) + " fields, found " +
                                           std::to_string(f.size()),
                                       i + 1));
    for (const auto& s : f) {
      double v;
      if (!parse_double(s, v)) throw ValidationError(line_error("tsv: non-numeric value \"" + s + "\"", i + 1));
      values.push_back(v);
    }
    ++rows;
  }
  require(rows == d, "tsv: dense adjacency must be square");
  Matrix W(d, d);
  std::copy(values.begin(), values.end(), W.data());
  return W;
}

Matrix read_adjacency_tsv(const std::string& path) {
  auto in = open_in(path);
  return read_adjacency_tsv(in);
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
  auto out = open_out(path);
  out << "iter,loss,h,k,lambda_dag\n";
  for (const auto& r : history)
    out << r.iter << ',' << format_double(r.loss) << ',' << format_double(r.h) << ',' << r.k << ','
        << format_double(r.lambda_dag) << '\n';
}

void write_curve_csv(const std::string& path, const std::vector<std::pair<double, double>>& curve) {
  auto out = open_out(path);
  out << "x,y\n";
  for (const auto& [x, y] : curve) out << format_double(x) << ',' << format_double(y) << '\n';
}

Json schedule_to_json(const ScheduleSpec& s) {
  return {{"kind", std::string(to_string(s.kind))},
          {"T", s.T},
          {"beta_start", s.beta_start},
          {"beta_end", s.beta_end},
          {"power_exponent", s.power_exponent}};
}

ScheduleSpec schedule_from_json(const Json& j) {
  ScheduleSpec s;
  apply_keys(j, "noise_schedule",
             {{"kind", [&](const Json& v) { s.kind = parse_schedule_kind(v.get<std::string>()); }},
              {"T", [&](const Json& v) { s.T = static_cast<int>(v.get<std::int64_t>()); }},
              {"beta_start", [&](const Json& v) { s.beta_start = v.get<double>(); }},
              {"beta_end", [&](const Json& v) { s.beta_end = v.get<double>(); }},
              {"power_exponent", [&](const Json& v) { s.power_exponent = v.get<double>(); }}});
  return s;
}

Json khop_to_json(const KHopSchedule& s) {
  return {{"boundaries", s.boundaries}, {"phase_k", s.phase_k}, {"gamma", s.gamma}};
}

KHopSchedule khop_from_json(const Json& j) {
  KHopSchedule s;
  apply_keys(j, "khop_schedule",
             {{"boundaries", [&](const Json& v) { s.boundaries = v.get<std::vector<double>>(); }},
              {"phase_k", [&](const Json& v) { s.phase_k = v.get<std::vector<int>>(); }},
              {"gamma", [&](const Json& v) { s.gamma = v.get<double>(); }}});
  return s;
}

Json config_to_json(const TrainConfig& c) {
  return {{"n_iter", c.n_iter},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"lambda_dag_max", c.lambda_dag_max},
          {"penalty_mode", std::string(to_string(c.penalty_mode))},
          {"al_rho_init", c.al_rho_init},
          {"al_rho_max", c.al_rho_max},
          {"al_rounds", c.al_rounds},
          {"khop_schedule", khop_to_json(c.khop)},
          {"noise_schedule", schedule_to_json(c.noise)},
          {"threshold", c.threshold},
          {"seed", c.seed},
          {"log_every", c.log_every},
          {"hidden_width", c.hidden_width},
          {"denoise_weight", c.denoise_weight},
          {"normalizer_gain", c.normalizer_gain}};
}

TrainConfig config_from_json(const Json& j, const TrainConfig& base) {
  TrainConfig c = base;
  apply_keys(j, "config",
             {{"n_iter", [&](const Json& v) { c.n_iter = as_u64(v); }},
              {"batch_size", [&](const Json& v) { c.batch_size = as_u64(v); }},
              {"learning_rate", [&](const Json& v) { c.learning_rate = v.get<double>(); }},
              {"adam_beta1", [&](const Json& v) { c.adam_beta1 = v.get<double>(); }},
              {"adam_beta2", [&](const Json& v) { c.adam_beta2 = v.get<double>(); }},
              {"adam_epsilon", [&](const Json& v) { c.adam_epsilon = v.get<double>(); }},
              {"lambda1", [&](const Json& v) { c.lambda1 = v.get<double>(); }},
              {"lambda2", [&](const Json& v) { c.lambda2 = v.get<double>(); }},
              {"lambda_dag_max", [&](const Json& v) { c.lambda_dag_max = v.get<double>(); }},
              {"penalty_mode", [&](const Json& v) { c.penalty_mode = parse_penalty_mode(v.get<std::string>()); }},
              {"al_rho_init", [&](const Json& v) { c.al_rho_init = v.get<double>(); }},
              {"al_rho_max", [&](const Json& v) { c.al_rho_max = v.get<double>(); }},
              {"al_rounds", [&](const Json& v) { c.al_rounds = as_u64(v); }},
              {"khop_schedule", [&](const Json& v) { c.khop = khop_from_json(v); }},
              {"noise_schedule", [&](const Json& v) { c.noise = schedule_from_json(v); }},
              {"threshold", [&](const Json& v) { c.threshold = v.get<double>(); }},
              {"seed", [&](const Json& v) { c.seed = as_u64(v); }},
              {"log_every", [&](const Json& v) { c.log_every = as_u64(v); }},
              {"hidden_width", [&](const Json& v) { c.hidden_width = as_u64(v); }},
              {"denoise_weight", [&](const Json& v) { c.denoise_weight = v.get<double>(); }},
              {"normalizer_gain", [&](const Json& v) { c.normalizer_gain = v.get<double>(); }}});
  validate(c);
  return c;
}

Json graph_spec_to_json(const GraphSpec& g) {
  return {{"d", g.d},
          {"family", std::string(to_string(g.family))},
          {"degree", g.expected_degree},
          {"seed", g.seed},
          {"weight_low", g.weight_low},
          {"weight_high", g.weight_high}};
}

GraphSpec graph_spec_from_json(const Json& j) {
  GraphSpec g;
  apply_keys(j, "graph",
             {{"d", [&](const Json& v) { g.d = as_u64(v); }},
              {"family", [&](const Json& v) { g.family = parse_graph_family(v.get<std::string>()); }},
              {"degree", [&](const Json& v) { g.expected_degree = v.get<double>(); }},
              {"seed", [&](const Json& v) { g.seed = as_u64(v); }},
              {"weight_low", [&](const Json& v) { g.weight_low = v.get<double>(); }},
              {"weight_high", [&](const Json& v) { g.weight_high = v.get<double>(); }}});
  validate(g);
  return g;
}

Json sem_spec_to_json(const SemSpec& s) {
  return {{"mechanism", std::string(to_string(s.mechanism))}, {"noise_std", s.noise_std}, {"n", s.n}};
}

SemSpec sem_spec_from_json(const Json& j) {
  SemSpec s;
  apply_keys(j, "sem",
             {{"mechanism", [&](const Json& v) { s.mechanism = parse_mechanism(v.get<std::string>()); }},
              {"noise_std", [&](const Json& v) { s.noise_std = v.get<double>(); }},
              {"n", [&](const Json& v) { s.n = as_u64(v); }}});
  validate(s);
  return s;
}

Json report_to_json(const EvalReport& r) {
  return {{"shd", r.shd},
          {"shd_reversed", r.shd_reversed},
          {"shd_extra", r.shd_extra},
          {"shd_missing", r.shd_missing},
          {"true_positive", r.true_positive},
          {"false_positive", r.false_positive},
          {"predicted", r.predicted},
          {"condition_positive", r.condition_positive},
          {"condition_negative", r.condition_negative},
          {"tpr", r.tpr},
          {"fdr", r.fdr},
          {"fpr", r.fpr},
          {"prediction_cyclic", r.prediction_cyclic},
          {"runtime_seconds", r.runtime_seconds},
          {"config_fingerprint", r.config_fingerprint}};
}

BenchGrid grid_from_json(const Json& j) {
  std::vector<GraphSpec> graphs;
  std::vector<SemSpec> sems;
  std::vector<ModelKind> models;
  Json config = Json::object();
  BenchGrid grid;
  apply_keys(j, "grid",
             {{"graphs", [&](const Json& v) { for (const auto& g : v) graphs.push_back(graph_spec_from_json(g)); }},
              {"sems", [&](const Json& v) { for (const auto& s : v) sems.push_back(sem_spec_from_json(s)); }},
              {"models", [&](const Json& v) { for (const auto& m : v) models.push_back(parse_model_kind(m.get<std::string>())); }},
              {"seeds", [&](const Json& v) { for (const auto& s : v) grid.seeds.push_back(as_u64(s)); }},
              {"config", [&](const Json& v) { config = v; }}});
  require(!graphs.empty() && !sems.empty() && !models.empty(), "grid: graphs, sems and models must be nonempty");
  require(!grid.seeds.empty(), "grid: seeds must be nonempty");
  // The shared config overrides each model's own defaults.
  for (const auto& g : graphs)
    for (const auto& s : sems)
      for (ModelKind m : models)
        grid.cells.push_back({g, s, m, config_from_json(config, TrainConfig::defaults_for(m))});
  return grid;
}

void write_bench_rows(std::ostream& out, const std::vector<BenchRow>& rows, bool header) {
  if (header)
    out << "family,d,degree,mechanism,model,n,seed,shd,shd_rev,shd_extra,shd_miss,tpr,fdr,fpr,runtime_s,"
           "cell,error\n";
  for (const auto& r : rows) {
    out << r.family << ',' << r.d << ',' << format_double(r.degree) << ',' << r.mechanism << ','
        << r.model << ',' << r.n << ',' << r.seed << ',';
    if (r.error.empty()) {
      const EvalReport& e = r.report;
      out << e.shd << ',' << e.shd_reversed << ',' << e.shd_extra << ',' << e.shd_missing << ','
          << format_double(e.tpr) << ',' << format_double(e.fdr) << ',' << format_double(e.fpr) << ','
          << format_double(e.runtime_seconds);
    } else {
      out << ",,,,,,,";
    }
    out << ',' << r.cell << ',' << csv_quote(r.error) << '\n';
  }
}

std::vector<BenchRow> read_bench_rows(const std::string& path) {
  auto in = open_in(path);
  std::vector<BenchRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line_no == 1 || trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 17) throw ValidationError(line_error("results: expected 17 fields", line_no));
    try {
      BenchRow r;
      r.family = f[0];
      r.d = std::stoull(f[1]);
      r.degree = std::stod(f[2]);
      r.mechanism = f[3];
      r.model = f[4];
      r.n = std::stoull(f[5]);
      r.seed = std::stoull(f[6]);
      r.cell = std::stoull(f[15]);
      r.error = f[16];
      if (r.error.empty()) {
        r.report.shd = std::stoull(f[7]);
        r.report.shd_reversed = std::stoull(f[8]);
        r.report.shd_extra = std::stoull(f[9]);
        r.report.shd_missing = std::stoull(f[10]);
        r.report.tpr = std::stod(f[11]);
        r.report.fdr = std::stod(f[12]);
        r.report.fpr = std::stod(f[13]);
        r.report.runtime_seconds = std::stod(f[14]);
      }
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ValidationError(line_error("results: malformed number", line_no));
    }
  }
  return rows;
}

void write_aggregate_csv(const std::string& path, const std::vector<BenchAggregate>& rows) {
  auto out = open_out(path);
  out << "cell,family,d,degree,mechanism,model,n,runs,failures";
  for (const auto& m : aggregate_metric_names()) out << ',' << m << "_mean," << m << "_std";
  out << '\n';
  for (const auto& a : rows) {
    out << a.cell << ',' << a.family << ',' << a.d << ',' << format_double(a.degree) << ',' << a.mechanism
        << ',' << a.model << ',' << a.n << ',' << a.runs << ',' << a.failures;
    for (std::size_t k = 0; k < a.mean.size(); ++k)
      out << ',' << (std::isnan(a.mean[k]) ? "" : format_double(a.mean[k])) << ','
          << (std::isnan(a.std[k]) ? "" : format_double(a.std[k]));
    out << '\n';
  }
}

Json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace ddcd
