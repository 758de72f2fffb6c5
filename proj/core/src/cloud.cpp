#include "lgc/cloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lgc/error.hpp"

namespace lgc {

Cloud collect(std::vector<WalkTrace> traces) {
  Cloud cloud;
  if (traces.empty()) return cloud;
  cloud.cell = traces.front().cell;
  std::size_t total = 0;
  for (const auto& t : traces) {
    if (t.cell != cloud.cell)
      throw UsageError("cannot merge walks from different experiment cells ('" + cloud.cell + "' and '" + t.cell +
                       "')");
    total += t.records.size();
  }
  std::stable_sort(traces.begin(), traces.end(),
                   [](const WalkTrace& a, const WalkTrace& b) { return a.walk_id < b.walk_id; });
  cloud.records.reserve(total);
  for (auto& t : traces)
    for (auto& r : t.records) cloud.records.push_back(std::move(r));
  return cloud;
}

// ---------------------------------------------------------------------------------

std::string_view to_string(AttractorKind k) {
  switch (k) {
    case AttractorKind::GlobalMinimumCandidate: return "global_minimum_candidate";
    case AttractorKind::SuboptimalCritical: return "suboptimal_critical";
    case AttractorKind::NonStationary: return "non_stationary";
  }
  return "?";
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double default_grad_threshold(const Cloud& cloud) {
  if (cloud.records.empty()) throw DataError("gradient threshold of an empty cloud");
  std::vector<double> g;
  g.reserve(cloud.size());
  for (const auto& r : cloud.records) g.push_back(r.grad_norm);
  return 1e-3 * median(std::move(g));
}

std::vector<AttractorSummary> find_attractors(const Cloud& cloud, const AttractorOptions& options) {
  std::vector<AttractorSummary> out;
  if (cloud.records.empty()) return out;
  const double theta_g = options.grad_threshold.value_or(default_grad_threshold(cloud));

  std::vector<std::pair<double, double>> stationary;  // (e_train, grad_norm)
  for (const auto& r : cloud.records)
    if (r.grad_norm < theta_g) stationary.emplace_back(r.e_train, r.grad_norm);
  std::sort(stationary.begin(), stationary.end());

  auto flush = [&](std::size_t begin, std::size_t end) {
    AttractorSummary a;
    a.cluster_id = out.size();
    a.member_count = end - begin;
    a.min_error = stationary[begin].first;
    a.max_error = stationary[end - 1].first;
    double se = 0.0, sg = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      se += stationary[i].first;
      sg += stationary[i].second;
    }
    a.mean_error = se / static_cast<double>(a.member_count);
    a.mean_grad_norm = sg / static_cast<double>(a.member_count);
    if (a.mean_grad_norm >= theta_g)
      a.classification = AttractorKind::NonStationary;
    else if (a.mean_error < options.error_threshold)
      a.classification = AttractorKind::GlobalMinimumCandidate;
    else
      a.classification = AttractorKind::SuboptimalCritical;
    out.push_back(a);
  };

  std::size_t begin = 0;
  for (std::size_t i = 1; i <= stationary.size(); ++i) {
    if (i == stationary.size() || stationary[i].first - stationary[i - 1].first > options.link_radius) {
      if (i > begin) flush(begin, i);
      begin = i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------
// Files

namespace {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(where + ": malformed number '" + std::string(s) + "'");
  return v;
}

std::size_t parse_count(std::string_view s, const std::string& where) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(where + ": malformed count '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

nlohmann::json record_to_json(const StepRecord& r) {
  nlohmann::json j;
  j["walk_id"] = r.walk_id;
  j["step"] = r.step;
  j["e_train"] = r.e_train;
  j["e_gen"] = r.e_gen ? nlohmann::json(*r.e_gen) : nlohmann::json(nullptr);
  j["grad_norm"] = r.grad_norm;
  if (r.curvature) {
    j["curvature"] = to_string(r.curvature->kind);
    j["n_pos"] = r.curvature->n_pos;
    j["n_neg"] = r.curvature->n_neg;
    j["n_zero"] = r.curvature->n_zero;
  } else {
    j["curvature"] = "skipped";
    j["n_pos"] = nullptr;
    j["n_neg"] = nullptr;
    j["n_zero"] = nullptr;
  }
  if (r.saturation) {
    j["saturation"] = r.saturation->value;
    j["saturation_method"] = to_string(r.saturation->method);
  } else {
    j["saturation"] = nullptr;
    j["saturation_method"] = nullptr;
  }
  j["kink_adjacent"] = r.kink_adjacent;
  return j;
}

StepRecord record_from_json(const nlohmann::json& j) {
  StepRecord r;
  r.walk_id = j.at("walk_id").get<std::size_t>();
  r.step = j.at("step").get<std::size_t>();
  r.e_train = j.at("e_train").get<double>();
  if (!j.at("e_gen").is_null()) r.e_gen = j.at("e_gen").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  const auto curv = j.at("curvature").get<std::string>();
  if (curv != "skipped")
    r.curvature = Curvature{parse_curvature(curv), j.at("n_pos").get<std::size_t>(), j.at("n_neg").get<std::size_t>(),
                            j.at("n_zero").get<std::size_t>()};
  if (!j.at("saturation").is_null())
    r.saturation = SaturationReading{j.at("saturation").get<double>(),
                                     parse_saturation_method(j.at("saturation_method").get<std::string>())};
  r.kink_adjacent = j.at("kink_adjacent").get<bool>();
  return r;
}

std::string record_to_csv(const StepRecord& r) {
  std::string s;
  s += std::to_string(r.walk_id) + ',' + std::to_string(r.step) + ',' + format_real(r.e_train) + ',';
  if (r.e_gen) s += format_real(*r.e_gen);
  s += ',' + format_real(r.grad_norm) + ',';
  if (r.curvature) {
    s += std::string(to_string(r.curvature->kind)) + ',' + std::to_string(r.curvature->n_pos) + ',' +
         std::to_string(r.curvature->n_neg) + ',' + std::to_string(r.curvature->n_zero);
  } else {
    s += "skipped,,,";
  }
  s += ',';
  if (r.saturation) s += format_real(r.saturation->value) + ',' + std::string(to_string(r.saturation->method));
  else s += ',';
  s += r.kink_adjacent ? ",1" : ",0";
  return s;
}

StepRecord record_from_csv(std::string_view line, const std::string& where) {
  const auto f = split_commas(line);
  if (f.size() != 12) throw DataError(where + ": expected 12 fields, found " + std::to_string(f.size()));
  StepRecord r;
  r.walk_id = parse_count(f[0], where);
  r.step = parse_count(f[1], where);
  r.e_train = parse_real(f[2], where);
  if (!f[3].empty()) r.e_gen = parse_real(f[3], where);
  r.grad_norm = parse_real(f[4], where);
  if (f[5] != "skipped")
    r.curvature = Curvature{parse_curvature(f[5]), parse_count(f[6], where), parse_count(f[7], where),
                            parse_count(f[8], where)};
  if (!f[9].empty()) r.saturation = SaturationReading{parse_real(f[9], where), parse_saturation_method(f[10])};
  if (f[11] != "0" && f[11] != "1") throw DataError(where + ": kink_adjacent must be 0 or 1");
  r.kink_adjacent = f[11] == "1";
  return r;
}

}  // namespace

std::filesystem::path metadata_path(const std::filesystem::path& cloud_path) {
  return cloud_path.string() + ".meta.json";
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void write_cloud(const Cloud& cloud, const std::filesystem::path& path, CloudFormat format,
                 const nlohmann::json& metadata) {
  std::string body;
  body.reserve(cloud.size() * 96 + 128);
  if (format == CloudFormat::CSV) {
    body += kCloudColumns;
    body += '\n';
    for (const auto& r : cloud.records) {
      body += record_to_csv(r);
      body += '\n';
    }
  } else {
    for (const auto& r : cloud.records) {
      body += record_to_json(r).dump();
      body += '\n';
    }
  }
  nlohmann::json meta = metadata;
  meta["cell"] = cloud.cell;
  meta["record_count"] = cloud.size();
  meta["format"] = format == CloudFormat::CSV ? "csv" : "jsonl";
  meta["columns"] = std::string(kCloudColumns);
  write_file_atomic(path, body);
  write_file_atomic(metadata_path(path), meta.dump(2) + "\n");
}

nlohmann::json read_metadata(const std::filesystem::path& cloud_path) {
  const auto p = metadata_path(cloud_path);
  std::ifstream in(p);
  if (!in) throw DataError("missing metadata sidecar " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt metadata " + p.string() + ": " + e.what());
  }
}

Cloud read_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cloud file " + path.string());
  Cloud cloud;
  if (std::filesystem::exists(metadata_path(path))) cloud.cell = read_metadata(path).value("cell", std::string());

  const bool jsonl = path.extension() == ".jsonl";
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!jsonl && line_no == 1) {
      if (line != kCloudColumns) throw DataError(where + ": unexpected cloud header");
      continue;
    }
    if (line.empty()) continue;
    if (jsonl) {
      try {
        cloud.records.push_back(record_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": " + e.what());
      }
    } else {
      cloud.records.push_back(record_from_csv(line, where));
    }
  }
  if (!jsonl && line_no == 0) throw DataError(path.string() + ": empty cloud file (missing header)");
  return cloud;
}

// ---------------------------------------------------------------------------------
// Summaries

FiveNumber five_number_summary(std::vector<double> v) {
  if (v.empty()) throw DataError("five-number summary of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  auto med = [&](std::size_t begin, std::size_t end) {
    const std::size_t len = end - begin;
    return len % 2 ? v[begin + len / 2] : 0.5 * (v[begin + len / 2 - 1] + v[begin + len / 2]);
  };
  FiveNumber f;
  f.count = n;
  f.min = v.front();
  f.max = v.back();
  f.median = med(0, n);
  const std::size_t half = (n + 1) / 2;  // includes the median when n is odd
  f.q1 = med(0, half);
  f.q3 = med(n - half, n);
  return f;
}

std::map<CurvatureClass, FiveNumber> saturation_by_curvature(const Cloud& cloud) {
  std::map<CurvatureClass, std::vector<double>> groups;
  for (const auto& r : cloud.records)
    if (r.curvature && r.saturation) groups[r.curvature->kind].push_back(r.saturation->value);
  if (groups.empty()) throw DataError("cloud has no records with both curvature and saturation");
  std::map<CurvatureClass, FiveNumber> out;
  for (auto& [k, v] : groups) out[k] = five_number_summary(std::move(v));
  return out;
}

CurvatureFractions curvature_fractions(const Cloud& cloud) {
  CurvatureFractions f;
  std::map<CurvatureClass, std::size_t> counts;
  for (const auto& r : cloud.records) {
    if (r.curvature) {
      ++counts[r.curvature->kind];
      ++f.classified;
    } else {
      ++f.skipped;
    }
  }
  for (const auto& [k, c] : counts) f.fraction[k] = static_cast<double>(c) / static_cast<double>(f.classified);
  return f;
}

std::optional<TwoClusterDiagnostic> two_cluster_diagnostic(const Cloud& cloud) {
  if (cloud.records.size() < 4) return std::nullopt;
  std::vector<double> errors;
  for (const auto& r : cloud.records) errors.push_back(r.e_train);
  const double e_median = median(errors);

  std::vector<double> x;
  for (const auto& r : cloud.records)
    if (r.e_train < e_median && r.grad_norm > 0.0) x.push_back(std::log(r.grad_norm));
  if (x.size() < 4) return std::nullopt;
  std::sort(x.begin(), x.end());

  const double n = static_cast<double>(x.size());
  double mean_all = 0.0;
  for (double v : x) mean_all += v;
  mean_all /= n;
  double var_all = 0.0;
  for (double v : x) var_all += (v - mean_all) * (v - mean_all);
  var_all /= n;
  const double var_floor = std::max(1e-6, 1e-4 * var_all);

  double mu[2] = {x[x.size() / 4], x[(3 * x.size()) / 4]};
  double var[2] = {std::max(var_all, var_floor), std::max(var_all, var_floor)};
  double w[2] = {0.5, 0.5};
  if (mu[0] == mu[1]) {
    mu[0] = x.front();
    mu[1] = x.back();
  }

  std::vector<double> resp(x.size());
  double prev_ll = -INFINITY;
  std::size_t it = 0;
  constexpr double kLog2Pi = 1.8378770664093453;
  for (; it < 500; ++it) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double lp[2];
      for (int k = 0; k < 2; ++k)
        lp[k] = std::log(w[k]) - 0.5 * (kLog2Pi + std::log(var[k]) + (x[i] - mu[k]) * (x[i] - mu[k]) / var[k]);
      const double top = std::max(lp[0], lp[1]);
      const double lse = top + std::log(std::exp(lp[0] - top) + std::exp(lp[1] - top));
      resp[i] = std::exp(lp[1] - lse);
      ll += lse;
    }
    double nk[2] = {0.0, 0.0}, sx[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
      nk[0] += 1.0 - resp[i];
      nk[1] += resp[i];
      sx[0] += (1.0 - resp[i]) * x[i];
      sx[1] += resp[i] * x[i];
    }
    for (int k = 0; k < 2; ++k) {
      nk[k] = std::max(nk[k], 1e-12);
      mu[k] = sx[k] / nk[k];
      w[k] = nk[k] / n;
    }
    double sv[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
      sv[0] += (1.0 - resp[i]) * (x[i] - mu[0]) * (x[i] - mu[0]);
      sv[1] += resp[i] * (x[i] - mu[1]) * (x[i] - mu[1]);
    }
    for (int k = 0; k < 2; ++k) var[k] = std::max(sv[k] / nk[k], var_floor);
    if (std::abs(ll - prev_ll) <= 1e-10 * std::max(1.0, std::abs(ll))) break;
    prev_ll = ll;
  }

  const int lo = mu[0] <= mu[1] ? 0 : 1;
  const int hi = 1 - lo;
  TwoClusterDiagnostic d;
  d.n_points = x.size();
  d.mean_low = mu[lo];
  d.mean_high = mu[hi];
  d.sd_low = std::sqrt(var[lo]);
  d.sd_high = std::sqrt(var[hi]);
  d.weight_low = w[lo];
  d.weight_high = w[hi];
  d.gap = mu[hi] - mu[lo];
  d.iterations = it + 1;
  d.separated = d.gap > 1.0 && std::min(w[0], w[1]) >= 0.01;
  return d;
}

nlohmann::json to_json(const AttractorSummary& a) {
  return {{"cluster_id", a.cluster_id},         {"mean_error", a.mean_error},
          {"mean_grad_norm", a.mean_grad_norm}, {"min_error", a.min_error},
          {"max_error", a.max_error},           {"member_count", a.member_count},
          {"classification", std::string(to_string(a.classification))}};
}

nlohmann::json to_json(const FiveNumber& f) {
  return {{"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}, {"count", f.count}};
}

nlohmann::json to_json(const TwoClusterDiagnostic& d) {
  return {{"n_points", d.n_points},     {"mean_low", d.mean_low},       {"mean_high", d.mean_high},
          {"sd_low", d.sd_low},         {"sd_high", d.sd_high},         {"weight_low", d.weight_low},
          {"weight_high", d.weight_high}, {"gap", d.gap},               {"iterations", d.iterations},
          {"separated", d.separated}};
}

}  // namespace lgc
