#include "sepvar/io.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sepvar {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text.empty()) throw InvalidInput("empty numeric field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  // Underflow to a subnormal is fine; overflow is not.
  if (end != text.c_str() + text.size() || (errno == ERANGE && std::isinf(v))) {
    throw InvalidInput("malformed number '" + text + "'");
  }
  return v;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double get_num(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (!j.is_number()) throw InvalidInput("expected a number, got " + j.dump());
  return j.get<double>();
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Vector vec_from(const json& j) {
  if (!j.is_array()) throw InvalidInput("expected an array, got " + j.dump());
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = get_num(j[i]);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else if (c != '\r') {
      cells.back() += c;
    }
  }
  if (quoted) throw InvalidInput("unterminated quote in CSV line");
  return cells;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::string dataset_file(Index k) { return "dataset_" + std::to_string(k) + ".csv"; }

json truth_json(const TruthSpec& t) {
  json j;
  j["kind"] = std::string(to_string(t.kind));
  j["alpha_true"] = vec_json(t.alpha_true);
  j["beta_true"] = json::array();
  for (const auto& b : t.beta_true) j["beta_true"].push_back(vec_json(b));
  j["grids"] = json::array();
  for (const auto& g : t.grids) {
    j["grids"].push_back({{"length", g.length}, {"t_min", num(g.t_min)}, {"t_max", num(g.t_max)}});
  }
  j["snr"] = num(t.snr);
  j["seed"] = t.seed;
  if (t.kind == ModelKind::Beer) {
    j["band"] = t.band;
    j["mu_sun"] = json::array();
    for (double mu : t.mu_sun) j["mu_sun"].push_back(num(mu));
    j["half_width"] = num(t.half_width);
    j["spectroscopy_seed"] = t.spectroscopy_seed;
  }
  return j;
}

TruthSpec truth_from(const json& j) {
  TruthSpec t;
  t.kind = parse_model_kind(j.at("kind").get<std::string>());
  t.alpha_true = vec_from(j.at("alpha_true"));
  for (const auto& b : j.at("beta_true")) t.beta_true.push_back(vec_from(b));
  for (const auto& g : j.at("grids")) {
    t.grids.push_back({g.at("length").get<Index>(), get_num(g.at("t_min")), get_num(g.at("t_max"))});
  }
  t.snr = get_num(j.at("snr"));
  t.seed = j.at("seed").get<std::uint64_t>();
  if (t.kind == ModelKind::Beer) {
    t.band = j.at("band").get<std::vector<int>>();
    for (const auto& mu : j.at("mu_sun")) t.mu_sun.push_back(get_num(mu));
    t.half_width = get_num(j.at("half_width"));
    t.spectroscopy_seed = j.at("spectroscopy_seed").get<std::uint64_t>();
  }
  t.validate();
  return t;
}

}  // namespace

void write_bundle(const fs::path& dir, const MultiProblem& problem, const TruthSpec* truth) {
  problem.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const std::string kind(problem.model->kind());
  const bool beer = kind == "beer";
  const Index p = problem.p();

  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["model"] = {{"kind", kind}, {"n", problem.n()}, {"p", p}};
  manifest["rng"] = std::string(kRngAlgorithm);
  manifest["seed"] = truth ? json(truth->seed) : json(nullptr);
  manifest["snr"] = truth ? num(truth->snr) : json(nullptr);
  manifest["truth"] = truth ? truth_json(*truth) : json(nullptr);
  manifest["datasets"] = json::array();

  for (Index k = 0; k < problem.s(); ++k) {
    const Dataset& d = problem.datasets[static_cast<std::size_t>(k)];
    json entry = {{"id", d.id}, {"file", dataset_file(k)}, {"m", d.size()}};

    std::string csv = "t,y";
    if (beer) {
      csv += ",I0";
      for (Index l = 0; l < p; ++l) csv += ",tau_" + std::to_string(l + 1);
    }
    csv += '\n';
    const BeerAux* aux = d.beer();
    if (aux) {
      entry["mu_sun"] = num(aux->mu_sun);
      entry["half_width"] = num(aux->half_width);
    }
    for (Index i = 0; i < d.size(); ++i) {
      csv += format_double(d.t[i]) + ',' + format_double(d.y[i]);
      if (aux) {
        csv += ',' + format_double(aux->i0[i]);
        for (Index l = 0; l < p; ++l) csv += ',' + format_double(aux->tau(i, l));
      }
      csv += '\n';
    }
    write_text_file(dir / dataset_file(k), csv);
    manifest["datasets"].push_back(std::move(entry));
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Bundle read_bundle(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw InvalidInput("manifest.json: " + std::string(e.what()));
  }

  Bundle bundle;
  try {
    const int version = manifest.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw InvalidInput("unsupported schema_version " + std::to_string(version));
    }
    const auto& model = manifest.at("model");
    const std::string kind = model.at("kind").get<std::string>();
    const Index n = model.at("n").get<Index>();
    const Index p = model.at("p").get<Index>();
    const bool beer = parse_model_kind(kind) == ModelKind::Beer;
    if (beer) {
      bundle.problem.model = std::make_shared<BeerModel>(n, p);
    } else {
      if (n != p) throw InvalidInput("exponential model needs n == p");
      bundle.problem.model = std::make_shared<ExponentialModel>(p);
    }

    std::string expected = "t,y";
    if (beer) {
      expected += ",I0";
      for (Index l = 0; l < p; ++l) expected += ",tau_" + std::to_string(l + 1);
    }
    const Index cols = beer ? 3 + p : 2;

    for (const auto& entry : manifest.at("datasets")) {
      const std::string file = entry.at("file").get<std::string>();
      const auto lines = lines_of(read_text_file(dir / file));
      if (lines.empty() || lines.front() != expected) {
        throw InvalidInput(file + ": expected header '" + expected + "'");
      }
      const Index m = static_cast<Index>(lines.size()) - 1;
      if (entry.contains("m") && entry.at("m").get<Index>() != m) {
        throw InvalidInput(file + ": row count differs from manifest");
      }
      Matrix table(m, cols);
      for (Index i = 0; i < m; ++i) {
        const auto cells = split_csv(lines[static_cast<std::size_t>(i + 1)]);
        if (static_cast<Index>(cells.size()) != cols) {
          throw InvalidInput(file + ": wrong column count on row " + std::to_string(i + 1));
        }
        for (Index c = 0; c < cols; ++c) table(i, c) = parse_double(cells[static_cast<std::size_t>(c)]);
      }

      Dataset d;
      d.id = entry.value("id", std::string());
      d.t = table.col(0);
      d.y = table.col(1);
      if (beer) {
        BeerAux aux;
        aux.mu_sun = get_num(entry.at("mu_sun"));
        aux.half_width = get_num(entry.at("half_width"));
        aux.i0 = table.col(2);
        aux.tau = table.rightCols(p);
        d.aux = std::move(aux);
      }
      bundle.problem.datasets.push_back(std::move(d));
    }
    if (manifest.contains("truth") && !manifest.at("truth").is_null()) {
      bundle.truth = truth_from(manifest.at("truth"));
    }
  } catch (const json::exception& e) {
    throw InvalidInput("manifest.json: " + std::string(e.what()));
  }
  bundle.problem.validate();
  return bundle;
}

std::string run_record_json(const RunRecord& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = r.kind;
  j["method"] = r.method;
  j["mode"] = r.mode;
  j["s"] = r.s;
  j["snr"] = num(r.snr);
  j["seed"] = r.seed;
  j["dataset"] = r.dataset;
  j["alpha_hat"] = vec_json(r.alpha_hat);
  j["relative_errors"] = vec_json(r.relative_errors);
  j["sigma"] = num(r.sigma);
  j["r_score"] = num(r.r_score);
  j["conf_bound_alpha"] = vec_json(r.conf_bound_alpha);
  j["wall_time_s"] = num(r.wall_time_s);
  j["n_iter"] = num(r.n_iter);
  j["status"] = r.status;
  j["error"] = r.error;
  return j.dump(2) + "\n";
}

RunRecord parse_run_record_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw InvalidInput("unsupported run record schema");
    }
    RunRecord r;
    r.kind = j.at("kind").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.s = j.at("s").get<Index>();
    r.snr = get_num(j.at("snr"));
    r.seed = j.at("seed").get<std::uint64_t>();
    r.dataset = j.at("dataset").get<int>();
    r.alpha_hat = vec_from(j.at("alpha_hat"));
    r.relative_errors = vec_from(j.at("relative_errors"));
    r.sigma = get_num(j.at("sigma"));
    r.r_score = get_num(j.at("r_score"));
    r.conf_bound_alpha = vec_from(j.at("conf_bound_alpha"));
    r.wall_time_s = get_num(j.at("wall_time_s"));
    r.n_iter = get_num(j.at("n_iter"));
    r.status = j.at("status").get<std::string>();
    r.error = j.at("error").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput("run record: " + std::string(e.what()));
  }
}

namespace {

std::string join_vec(const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

Vector split_vec(const std::string& cell) {
  std::vector<double> vals;
  std::size_t start = 0;
  while (start < cell.size()) {
    const std::size_t end = std::min(cell.find(';', start), cell.size());
    vals.push_back(parse_double(cell.substr(start, end - start)));
    start = end + 1;
  }
  return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

}  // namespace

std::string run_record_csv_header() {
  return "schema_version,kind,method,mode,s,snr,seed,dataset,alpha_hat,relative_errors,sigma,"
         "r_score,conf_bound_alpha,wall_time_s,n_iter,status,error";
}

std::string run_record_csv_row(const RunRecord& r) {
  std::string row = std::to_string(kSchemaVersion);
  auto cell = [&row](const std::string& v) { row += ',' + csv_escape(v); };
  cell(r.kind);
  cell(r.method);
  cell(r.mode);
  cell(std::to_string(r.s));
  cell(format_double(r.snr));
  cell(std::to_string(r.seed));
  cell(std::to_string(r.dataset));
  cell(join_vec(r.alpha_hat));
  cell(join_vec(r.relative_errors));
  cell(format_double(r.sigma));
  cell(format_double(r.r_score));
  cell(join_vec(r.conf_bound_alpha));
  cell(format_double(r.wall_time_s));
  cell(format_double(r.n_iter));
  cell(r.status);
  cell(r.error);
  return row;
}

RunRecord parse_run_record_csv_row(const std::string& line) {
  const auto c = split_csv(line);
  if (c.size() != 17) throw InvalidInput("results row has " + std::to_string(c.size()) + " fields");
  if (c[0] != std::to_string(kSchemaVersion)) throw InvalidInput("unsupported results schema");
  RunRecord r;
  try {
    r.kind = c[1];
    r.method = c[2];
    r.mode = c[3];
    r.s = std::stol(c[4]);
    r.snr = parse_double(c[5]);
    r.seed = std::stoull(c[6]);
    r.dataset = std::stoi(c[7]);
  } catch (const std::logic_error&) {
    throw InvalidInput("malformed integer field in results row");
  }
  r.alpha_hat = split_vec(c[8]);
  r.relative_errors = split_vec(c[9]);
  r.sigma = parse_double(c[10]);
  r.r_score = parse_double(c[11]);
  r.conf_bound_alpha = split_vec(c[12]);
  r.wall_time_s = parse_double(c[13]);
  r.n_iter = parse_double(c[14]);
  r.status = c[15];
  r.error = c[16];
  return r;
}

std::string error_json(const std::exception& e) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["status"] = "error";
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["error"] = {{"kind", err->kind()}, {"message", err->what()}, {"method", err->method()},
                  {"dataset", err->dataset()}};
    if (const auto* ev = dynamic_cast<const EvaluationFailed*>(err)) {
      j["error"]["iterate"] = vec_json(ev->iterate());
    }
  } else {
    j["error"] = {{"kind", "internal"}, {"message", e.what()}, {"method", ""}, {"dataset", -1}};
  }
  return j.dump() + "\n";
}

}  // namespace sepvar
