#include "ltts/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "ltts/parallel.hpp"

#ifndef LTTS_VERSION
#define LTTS_VERSION "0.0.0"
#endif

namespace ltts::cli {

namespace fs = std::filesystem;

const char* version() noexcept { return LTTS_VERSION; }

std::string git_blob_hash(std::string_view content) {
  std::string header = "blob " + std::to_string(content.size());
  header.push_back('\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

template <typename T>
T parse_number(const std::string& text, const std::string& field) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(field + ": cannot parse '" + text + "'");
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& field) {
  std::vector<T> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_number<T>(part, field));
  if (out.empty()) throw ConfigError(field + ": empty list");
  return out;
}

template <typename T>
T field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + key + "' has the wrong type");
  }
}

} // namespace

std::vector<std::pair<std::size_t, int>> parse_configs(const std::string& text) {
  std::vector<std::pair<std::size_t, int>> out;
  if (text.find('x') != std::string::npos || text.find('X') != std::string::npos) {
    for (const auto& part : split(text, ',')) {
      const auto pos = part.find_first_of("xX");
      if (pos == std::string::npos) throw ConfigError("configs: expected NxP, got '" + part + "'");
      out.emplace_back(parse_number<std::size_t>(part.substr(0, pos), "configs"),
                       parse_number<int>(part.substr(pos + 1), "configs"));
    }
  } else {
    const auto nums = parse_list<int>(text, "configs");
    if (nums.size() % 2 != 0) throw ConfigError("configs: expected N,P pairs or an NxP list");
    for (std::size_t i = 0; i < nums.size(); i += 2) {
      if (nums[i] < 1) throw ConfigError("configs: N must be >= 1");
      out.emplace_back(static_cast<std::size_t>(nums[i]), nums[i + 1]);
    }
  }
  if (out.empty()) throw ConfigError("configs: empty list");
  return out;
}

std::vector<FamilyKind> parse_families(const std::string& text) {
  static const std::vector<FamilyKind> kAll{FamilyKind::ExpSum,        FamilyKind::ProductCos, FamilyKind::PolyMatched,
                                            FamilyKind::PolyHigher,    FamilyKind::QuadraticForm,
                                            FamilyKind::Trig,          FamilyKind::Gauss};
  std::vector<FamilyKind> out;
  auto add = [&out](FamilyKind k) {
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  };
  for (const auto& raw : split(text, ',')) {
    const std::string name = lower(raw);
    if (name == "all") {
      for (auto k : kAll) add(k);
    } else if (name == "separable") {
      add(FamilyKind::ExpSum);
      add(FamilyKind::ProductCos);
    } else if (name == "poly") {
      add(FamilyKind::PolyMatched);
      add(FamilyKind::PolyHigher);
    } else if (name == "trig+gauss") {
      add(FamilyKind::Trig);
      add(FamilyKind::Gauss);
    } else {
      bool found = false;
      for (auto k : kAll) {
        if (lower(std::string(to_string(k))) == name) {
          add(k);
          found = true;
        }
      }
      if (!found) throw ConfigError("families: unknown family '" + raw + "'");
    }
  }
  if (out.empty()) throw ConfigError("families: empty list");
  return out;
}

json default_config(std::string_view subcommand) {
  const json common{{"seed", 20240601}, {"threads", default_threads()}, {"strict", false}, {"out", "ltts_out"}};
  const json qcnn{{"kind", "qcnn"}, {"qubits", 6}, {"dim", 6}, {"model_seed", 20240601}};
  json j = common;
  if (subcommand == "rank-scan") {
    j.update({{"families", {"ExpSum", "ProductCos", "PolyMatched", "PolyHigher", "QuadraticForm", "Trig", "Gauss"}},
              {"configs", {{4, 3}, {4, 4}, {6, 2}, {6, 3}}},
              {"eps", {1e-2, 1e-3}},
              {"criteria", {"common", "self"}},
              {"chi_max", 25},
              {"counts", {{"separable_random", 5}, {"poly", 10}, {"quadratic", 4}, {"trig", 4}, {"gauss", 4}}}});
  } else if (subcommand == "certify") {
    j.update({{"oracle", qcnn},
              {"center", nullptr},
              {"r", {0.05, 0.1, 0.2, 0.4, 0.6, 0.8}},
              {"chi", {1, 2, 3, 4, 5}},
              {"p", 2},
              {"derivatives", "auto"},
              {"fd_step", nullptr},
              {"y_max", nullptr},
              {"n", 600},
              {"delta", 0.05},
              {"eta", 0.1}});
  } else if (subcommand == "validate") {
    j.update({{"oracle", qcnn},
              {"centers", nullptr},
              {"r", {0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0}},
              {"chi", {1, 2, 3, 4, 5}},
              {"p", 2},
              {"n_train", 600},
              {"n_test", 2000},
              {"noise", {{"kind", "none"}}},
              {"fd_step", nullptr},
              {"max_sweeps", 50},
              {"rel_tol", 1e-9},
              {"timing", false},
              {"timing_evals", 10000},
              {"primary_r", 0.1}});
  } else if (subcommand == "eval") {
    j.update({{"surrogate", nullptr}, {"points", nullptr}});
    j.erase("threads");
  } else {
    throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'");
  }
  return j;
}

void merge_config(json& base, const json& overlay, const std::string& where) {
  if (!overlay.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : overlay.items()) {
    if (!base.contains(key)) throw ConfigError(where + ": unknown field '" + key + "'");
    if (key == "counts") {
      merge_config(base[key], value, where + "." + key);
    } else {
      base[key] = value;
    }
  }
}

namespace {

struct OracleSetup {
  ValidationOracle oracle;
  std::optional<FamilyInstance> family;
  json descriptor;
};

OracleSetup make_oracle(const json& spec, int p) {
  if (!spec.is_object()) throw ConfigError("oracle: expected an object");
  const auto kind = spec.value("kind", std::string("qcnn"));
  if (kind == "qcnn") {
    for (const auto& [key, _] : spec.items()) {
      if (key != "kind" && key != "qubits" && key != "dim" && key != "model_seed") {
        throw ConfigError("oracle: unknown field '" + key + "'");
      }
    }
    const auto qubits = spec.value("qubits", std::size_t{6});
    const auto dim = spec.value("dim", qubits);
    const auto seed = spec.value("model_seed", std::uint64_t{20240601});
    const QcnnModel model = QcnnModel::random(qubits, seed);
    OracleSetup s{qcnn_oracle(model, dim), std::nullopt, to_json(model)};
    s.descriptor["input_dim"] = dim;
    return s;
  }
  if (kind == "family") {
    FamilyInstance f;
    if (spec.contains("instance")) {
      f = family_from_json(spec.at("instance"));
    } else {
      const auto name = field<std::string>(spec, "family");
      const auto fk = parse_families(name);
      if (fk.size() != 1) throw ConfigError("oracle.family: name exactly one family");
      const auto dim = spec.value("dim", std::size_t{4});
      const auto seed = spec.value("instance_seed", std::uint64_t{1});
      const bool separable = fk[0] == FamilyKind::ExpSum || fk[0] == FamilyKind::ProductCos;
      f = separable && seed == 0 ? ones_instance(fk[0], dim) : draw_instance(fk[0], dim, p, seed);
    }
    OracleSetup s{family_oracle(f), f, to_json(f)};
    return s;
  }
  throw ConfigError("oracle.kind: expected 'qcnn' or 'family', got '" + kind + "'");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

std::string read_file(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(what + ": cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fixed(double v, int width, int precision, bool sci = true) {
  char buf[64];
  if (std::isfinite(v)) {
    std::snprintf(buf, sizeof buf, sci ? "%*.*e" : "%*.*f", width, precision, v);
  } else {
    std::snprintf(buf, sizeof buf, "%*s", width, std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
  }
  return buf;
}

std::string padded(const std::string& s, int width) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%*s", width, s.c_str());
  return buf;
}

// A fully resolved invocation: the config to echo, the inputs to hash and the work to run.
struct Plan {
  json resolved;
  std::string input_blob;
  std::function<int(const fs::path&, std::ostream&)> job;
};

Plan plan_rank_scan(const json& c) {
  RankScanConfig cfg;
  cfg.families.clear();
  for (const auto& name : field<std::vector<std::string>>(c, "families")) {
    for (auto k : parse_families(name)) {
      if (std::find(cfg.families.begin(), cfg.families.end(), k) == cfg.families.end()) cfg.families.push_back(k);
    }
  }
  cfg.configs.clear();
  for (const auto& pair : field<std::vector<std::vector<int>>>(c, "configs")) {
    if (pair.size() != 2 || pair[0] < 1) throw ConfigError("configs: each entry must be [N, p] with N >= 1");
    cfg.configs.emplace_back(static_cast<std::size_t>(pair[0]), pair[1]);
  }
  cfg.epsilons = field<std::vector<double>>(c, "eps");
  cfg.criteria.clear();
  for (const auto& name : field<std::vector<std::string>>(c, "criteria")) {
    if (name == "common") cfg.criteria.push_back(Criterion::CommonScale);
    else if (name == "self") cfg.criteria.push_back(Criterion::SelfRelative);
    else throw ConfigError("criteria: expected 'common' or 'self', got '" + name + "'");
  }
  cfg.chi_max = field<std::size_t>(c, "chi_max");
  const json& counts = c.at("counts");
  cfg.counts.separable_random = field<std::size_t>(counts, "separable_random");
  cfg.counts.poly = field<std::size_t>(counts, "poly");
  cfg.counts.quadratic = field<std::size_t>(counts, "quadratic");
  cfg.counts.trig = field<std::size_t>(counts, "trig");
  cfg.counts.gauss = field<std::size_t>(counts, "gauss");
  cfg.seed = field<std::uint64_t>(c, "seed");
  cfg.threads = field<std::size_t>(c, "threads");
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& [n, p] : cfg.configs) {
    std::size_t entries = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (entries > kDefaultDenseCap / static_cast<std::size_t>(p + 1)) {
        throw ConfigError("configs: (p+1)^N exceeds the dense cap for N=" + std::to_string(n));
      }
      entries *= static_cast<std::size_t>(p + 1);
    }
  }
  const bool strict = field<bool>(c, "strict");

  Plan plan;
  plan.job = [cfg, strict](const fs::path& dir, std::ostream& out) {
    const auto records = rank_scan(cfg);
    std::ostringstream csv;
    write_rank_scan_csv(csv, records);
    write_file(dir / "rank_scan.csv", csv.str());
    const auto rows = aggregate(records);
    std::size_t unreached = 0;
    for (const auto& r : records) unreached += r.rho() ? 0 : 1;
    const json summary{{"records", records.size()},
                       {"cases", scan_inventory(cfg).size()},
                       {"unreached", unreached},
                       {"table", rank_summary_json(rows)}};
    write_file(dir / "rank_scan_summary.json", summary.dump(2) + "\n");

    out << padded("bucket", 14) << padded("eps", 8) << padded("criterion", 10) << padded("n", 5)
        << padded("median_rho", 12) << padded("IQR", 16) << padded("ranks", 10) << padded("unreached", 10) << '\n';
    for (const auto& r : rows) {
      char iqr[64];
      std::snprintf(iqr, sizeof iqr, "[%.2f, %.2f]", r.q25_rho, r.q75_rho);
      char ranks[64];
      std::snprintf(ranks, sizeof ranks, "%.0f/%.0f", r.median_chi_box, r.median_chi_delta);
      out << padded(r.bucket, 14) << fixed(r.epsilon, 8, 0) << padded(std::string(to_string(r.criterion)), 10)
          << padded(std::to_string(r.n), 5) << fixed(r.median_rho, 12, 2, false) << padded(iqr, 16)
          << padded(ranks, 10) << padded(std::to_string(r.unreached), 10) << '\n';
    }
    out << records.size() << " records, " << unreached << " unreached\n";
    return strict && unreached > 0 ? kQualityGate : kOk;
  };
  return plan;
}

std::vector<double> center_from(const json& c, const std::string& key, const OracleSetup& setup, std::uint64_t seed) {
  if (c.at(key).is_null()) return default_centers(setup.oracle, seed).front();
  auto x0 = field<std::vector<double>>(c, key);
  if (x0.size() != setup.oracle.g.dim()) throw ConfigError(key + ": expected " + std::to_string(setup.oracle.g.dim()) + " coordinates");
  return x0;
}

Plan plan_certify(const json& c) {
  const int p = field<int>(c, "p");
  if (p < 0) throw ConfigError("p: must be >= 0");
  auto setup = std::make_shared<OracleSetup>(make_oracle(c.at("oracle"), p));
  const auto seed = field<std::uint64_t>(c, "seed");
  const auto x0 = center_from(c, "center", *setup, seed);
  const auto radii = field<std::vector<double>>(c, "r");
  const auto chis = field<std::vector<std::size_t>>(c, "chi");
  if (radii.empty() || chis.empty()) throw ConfigError("r and chi lists must be nonempty");
  for (double r : radii) {
    if (!(r > 0.0)) throw ConfigError("r: radii must be > 0");
  }
  for (std::size_t chi : chis) {
    if (chi < 1) throw ConfigError("chi: rank caps must be >= 1");
  }
  auto mode = field<std::string>(c, "derivatives");
  if (mode == "auto") mode = setup->family ? "exact" : "fd";
  if (mode != "exact" && mode != "fd") throw ConfigError("derivatives: expected 'auto', 'exact' or 'fd'");
  if (mode == "exact" && !setup->family) throw ConfigError("derivatives: 'exact' needs an analytic family oracle");
  if (mode == "fd" && p > 2) throw ConfigError("p: finite-difference extraction supports p <= 2");
  const std::optional<double> fd_step = c.at("fd_step").is_null() ? std::nullopt : std::optional(field<double>(c, "fd_step"));
  const std::optional<double> y_max = c.at("y_max").is_null() ? std::nullopt : std::optional(field<double>(c, "y_max"));
  const auto n = field<double>(c, "n");
  const auto delta = field<double>(c, "delta");
  const auto eta = field<double>(c, "eta");
  if (!(n >= 1.0)) throw ConfigError("n: must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta: must lie in (0, 1)");
  if (!(eta > 0.0)) throw ConfigError("eta: must be > 0");
  const bool strict = field<bool>(c, "strict");
  const std::size_t chi_top = *std::max_element(chis.begin(), chis.end());

  Plan plan;
  plan.job = [=](const fs::path& dir, std::ostream& out) {
    const std::size_t dim = setup->oracle.g.dim();
    json doc{{"oracle", setup->descriptor}, {"center", x0}, {"p", p}, {"derivatives", mode}, {"rows", json::array()}};
    fs::create_directories(dir / "surrogates");
    bool all_exact = true;
    out << padded("r", 7) << padded("chi", 5) << padded("E_taylor", 12) << padded("K^N*E_tt", 12)
        << padded("E_det", 12) << padded("Lambda*", 12) << padded("M", 12) << padded("n_required", 20) << '\n';
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      const PatchSpec patch{x0, radii[ri], p, static_cast<int>(chi_top)};
      patch.validate();
      const DerivativeMap derivs = mode == "exact"
                                       ? exact_derivatives(*setup->family, x0, p)
                                       : fd_derivatives(setup->oracle.g, x0, p, fd_step ? *fd_step : default_fd_step(radii[ri]));
      const CoefficientTensor coeffs = embed(derivs, patch);
      const std::string coeff_name = "coefficients_r" + std::to_string(ri) + ".json";
      write_file(dir / coeff_name, to_json(coeffs).dump() + "\n");
      const DenseTensor dense = coeffs.densify();
      const SmoothnessBudget budget = setup->oracle.budget(patch);
      all_exact = all_exact && budget.provenance == Provenance::Exact;
      const double label = y_max ? *y_max : setup->oracle.g_bound(patch);
      for (std::size_t chi : chis) {
        const auto svd = tt_svd(dense, chi);
        const double tt_err = tt_distance_dense(svd.tt, dense);
        const Certificate cert = build_certificate(budget, radii[ri], dim, p, tt_err, label);
        json stats;
        std::string n_req = "overflow";
        try {
          const StatBounds s = stat_bounds(cert, dim, static_cast<std::size_t>(p) + 1, chi, n, delta, eta);
          stats = to_json(s);
          n_req = std::to_string(s.n_required);
        } catch (const OverflowError&) {
          StatBounds s;
          s.d_hyp = pdim_hypothesis(dim, static_cast<std::size_t>(p) + 1, chi);
          s.d_loss = pdim_loss(s.d_hyp);
          s.delta_n = uniform_deviation(cert.m_bound, s.d_loss, n, delta);
          s.risk_bound = cert.e_det * cert.e_det + 2.0 * s.delta_n;
          stats = to_json(s);
          stats["n_required"] = nullptr;
        }
        const std::string sname = "surrogates/r" + std::to_string(ri) + "_chi" + std::to_string(chi) + ".json";
        write_file(dir / sname, to_json(Surrogate{PatchSpec{x0, radii[ri], p, static_cast<int>(chi)}, svd.tt}).dump() + "\n");
        doc["rows"].push_back({{"r", radii[ri]},
                               {"chi", chi},
                               {"budget", to_json(budget)},
                               {"certificate", to_json(cert)},
                               {"stat_bounds", stats},
                               {"svd_bound", svd.report.aggregate_bound()},
                               {"coefficients", coeff_name},
                               {"surrogate", sname}});
        out << fixed(radii[ri], 7, 3, false) << padded(std::to_string(chi), 5) << fixed(cert.e_taylor, 12, 3)
            << fixed(cert.k_n * cert.e_tt_raw, 12, 3) << fixed(cert.e_det, 12, 3) << fixed(cert.lambda, 12, 3)
            << fixed(cert.m_bound, 12, 3) << padded(n_req, 20) << '\n';
      }
    }
    write_file(dir / "certify.json", doc.dump(2) + "\n");
    return strict && !all_exact ? kQualityGate : kOk;
  };
  return plan;
}

Plan plan_validate(const json& c) {
  ValidationConfig cfg;
  cfg.p = field<int>(c, "p");
  auto setup = std::make_shared<OracleSetup>(make_oracle(c.at("oracle"), cfg.p));
  cfg.seed = field<std::uint64_t>(c, "seed");
  cfg.threads = field<std::size_t>(c, "threads");
  if (!c.at("centers").is_null()) {
    cfg.centers = field<std::vector<std::vector<double>>>(c, "centers");
    if (cfg.centers.empty()) throw ConfigError("centers: empty list");
    for (const auto& x : cfg.centers) {
      if (x.size() != setup->oracle.g.dim()) throw ConfigError("centers: wrong dimension");
    }
  }
  cfg.radii = field<std::vector<double>>(c, "r");
  cfg.chis = field<std::vector<std::size_t>>(c, "chi");
  cfg.n_train = field<std::size_t>(c, "n_train");
  cfg.n_test = field<std::size_t>(c, "n_test");
  const json& noise = c.at("noise");
  const auto kind = noise.is_object() ? noise.value("kind", std::string("none")) : std::string("?");
  if (kind == "none") cfg.noise = NoiseModel::none();
  else if (kind == "uniform") cfg.noise = NoiseModel::uniform(field<double>(noise, "sigma"));
  else if (kind == "shots") cfg.noise = NoiseModel::shot_noise(field<std::uint64_t>(noise, "shots"));
  else throw ConfigError("noise.kind: expected 'none', 'uniform' or 'shots'");
  if (cfg.noise.kind == NoiseModel::Kind::Uniform && !(cfg.noise.sigma >= 0.0)) throw ConfigError("noise.sigma: must be >= 0");
  if (cfg.noise.kind == NoiseModel::Kind::Shots && cfg.noise.shots == 0) throw ConfigError("noise.shots: must be >= 1");
  if (!c.at("fd_step").is_null()) cfg.fd_step = field<double>(c, "fd_step");
  cfg.max_sweeps = field<std::size_t>(c, "max_sweeps");
  cfg.rel_tol = field<double>(c, "rel_tol");
  cfg.timing = field<bool>(c, "timing");
  cfg.timing_evals = field<std::size_t>(c, "timing_evals");
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const double primary_r = field<double>(c, "primary_r");
  const bool strict = field<bool>(c, "strict");

  Plan plan;
  plan.job = [=](const fs::path& dir, std::ostream& out) {
    const ValidationResult result = ltts_validate(setup->oracle, cfg);
    std::ostringstream csv;
    write_validation_csv(csv, result.records);
    write_file(dir / "validation.csv", csv.str());
    json summary = validation_summary_json(result, 0, primary_r);
    summary["oracle"] = setup->descriptor;
    summary["noise"] = cfg.noise.describe();
    write_file(dir / "validation_summary.json", summary.dump(2) + "\n");

    bool gate_ok = true;
    for (const auto& r : result.records) {
      if (r.cert_rmse > r.e_det) gate_ok = false;
      if (r.chi >= 2 && r.te_ratio > 1.0) gate_ok = false;
    }
    if (summary.contains("primary")) {
      const json& prim = summary["primary"];
      out << "center " << prim["center"].get<std::size_t>() << ", r = " << prim["r"].get<double>() << '\n';
      out << padded("chi", 5) << padded("E_det", 12) << padded("cert_RMSE", 12) << padded("ERM_RMSE", 12)
          << padded("te_ratio", 10) << '\n';
      for (const auto& row : prim["rows"]) {
        out << padded(std::to_string(row["chi"].get<std::size_t>()), 5) << fixed(number_from_json(row["e_det"]), 12, 3)
            << fixed(number_from_json(row["cert_rmse"]), 12, 3) << fixed(number_from_json(row["erm_rmse"]), 12, 3)
            << fixed(number_from_json(row["te_ratio"]), 10, 3, false) << '\n';
      }
    }
    out << result.records.size() << " records written\n";
    return strict && !gate_ok ? kQualityGate : kOk;
  };
  return plan;
}

std::vector<double> parse_points(const std::string& text, std::size_t dim, std::size_t& rows) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (first) {
      first = false;
      double probe = 0.0;
      const auto res = std::from_chars(cells.empty() ? line.data() : cells[0].data(),
                                       cells.empty() ? line.data() + line.size() : cells[0].data() + cells[0].size(), probe);
      if (res.ec != std::errc()) continue;  // header row
    }
    if (cells.size() != dim) {
      throw ConfigError("points: row " + std::to_string(rows + 1) + " has " + std::to_string(cells.size()) +
                        " values, expected " + std::to_string(dim));
    }
    for (const auto& cell : cells) values.push_back(parse_number<double>(cell, "points"));
    ++rows;
  }
  return values;
}

Plan plan_eval(const json& c) {
  if (c.at("surrogate").is_null()) throw ConfigError("surrogate: a surrogate JSON file is required");
  if (c.at("points").is_null()) throw ConfigError("points: a CSV file of points is required");
  const fs::path spath = field<std::string>(c, "surrogate");
  const fs::path ppath = field<std::string>(c, "points");
  const std::string stext = read_file(spath, "surrogate");
  json sj;
  try {
    sj = json::parse(stext);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("surrogate: invalid JSON: ") + e.what());
  }
  Surrogate sur;
  try {
    if (sj.contains("tt") && !sj["tt"].contains("cores") && sj["tt"].contains("sidecar")) {
      std::ifstream bin(spath.parent_path() / sj["tt"]["sidecar"].get<std::string>(), std::ios::binary);
      if (!bin) throw ConfigError("surrogate: cannot read the binary sidecar");
      sur = Surrogate{patch_from_json(sj.at("patch")), read_tt_binary(bin)};
    } else {
      sur = surrogate_from_json(sj);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("surrogate: ") + e.what());
  }
  const std::string ptext = read_file(ppath, "points");
  std::size_t rows = 0;
  auto points = std::make_shared<std::vector<double>>(parse_points(ptext, sur.patch.order(), rows));
  const bool strict = field<bool>(c, "strict");

  Plan plan;
  plan.input_blob = stext + ptext;
  auto shared = std::make_shared<Surrogate>(std::move(sur));
  plan.job = [shared, points, rows, strict](const fs::path& dir, std::ostream& out) {
    const std::size_t dim = shared->patch.order();
    std::ofstream csv(dir / "predictions.csv", std::ios::binary);
    if (!csv) throw Error("cannot write predictions.csv");
    for (std::size_t j = 0; j < dim; ++j) csv << 'x' << j << ',';
    csv << "prediction,in_patch\n";
    std::size_t flagged = 0;
    std::string line;
    for (std::size_t i = 0; i < rows; ++i) {
      const std::span<const double> x(points->data() + i * dim, dim);
      line.clear();
      for (double v : x) {
        line += format_double(v);
        line += ',';
      }
      try {
        const auto xi = normalize(x, shared->patch);
        line += format_double(tt_eval(shared->tt, xi));
        line += ",true\n";
      } catch (const OutOfPatchError&) {
        ++flagged;
        line += ",false\n";
      }
      csv << line;
    }
    csv.close();
    if (!csv) throw Error("write failed for predictions.csv");
    out << rows << " points evaluated, " << flagged << " outside the patch\n";
    return strict && flagged > 0 ? kQualityGate : kOk;
  };
  return plan;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local tensor-train surrogates: rank scans, certificates, validation and deployment"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  struct Flags {
    std::string config, out, families, configs, eps, radii, chis, oracle, surrogate, points;
    std::uint64_t seed = 0, shots = 0;
    std::size_t threads = 0, chi_max = 0, n_train = 0, n_test = 0, dim = 0;
    double noise = 0.0;
    bool strict = false, timing = false;
  } f;
  std::map<std::string, CLI::Option*> opts;
  auto common = [&](CLI::App* sub) {
    opts[sub->get_name() + "config"] = sub->add_option("--config", f.config, "JSON config file; flags override it");
    opts[sub->get_name() + "out"] = sub->add_option("--out", f.out, "Output directory");
    opts[sub->get_name() + "seed"] = sub->add_option("--seed", f.seed, "Master seed");
    if (sub->get_name() != "eval") {
      opts[sub->get_name() + "threads"] = sub->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
    }
    opts[sub->get_name() + "strict"] = sub->add_flag("--strict", f.strict, "Exit 2 when a quality gate fails");
  };

  auto* scan = app.add_subcommand("rank-scan", "Simplex-versus-box TT rank study");
  common(scan);
  opts["rank-scanfamilies"] = scan->add_option("--families", f.families, "Comma list of families or buckets");
  opts["rank-scanconfigs"] = scan->add_option("--configs", f.configs, "NxP list, e.g. 4x3,6x2 (or the pair 4,3)");
  opts["rank-scaneps"] = scan->add_option("--eps", f.eps, "Comma list of tolerances");
  opts["rank-scanchi_max"] = scan->add_option("--chi-max", f.chi_max, "Largest rank tried");

  auto* certify = app.add_subcommand("certify", "Build A*, compress it and report certificates and sample bounds");
  common(certify);
  opts["certifyr"] = certify->add_option("--r", f.radii, "Comma list of patch radii");
  opts["certifychi"] = certify->add_option("--chi", f.chis, "Comma list of rank caps");
  opts["certifyoracle"] = certify->add_option("--oracle", f.oracle, "qcnn or a family name");
  opts["certifydim"] = certify->add_option("--dim", f.dim, "Input dimension");

  auto* validate = app.add_subcommand("validate", "End-to-end surrogate validation");
  common(validate);
  opts["validater"] = validate->add_option("--r", f.radii, "Comma list of patch radii");
  opts["validatechi"] = validate->add_option("--chi", f.chis, "Comma list of rank caps");
  opts["validateoracle"] = validate->add_option("--oracle", f.oracle, "qcnn or a family name");
  opts["validatedim"] = validate->add_option("--dim", f.dim, "Input dimension");
  opts["validaten_train"] = validate->add_option("--n-train", f.n_train, "Training samples per patch");
  opts["validaten_test"] = validate->add_option("--n-test", f.n_test, "Test samples per patch");
  opts["validateshots"] = validate->add_option("--shots", f.shots, "Finite-shot label noise");
  opts["validatenoise"] = validate->add_option("--noise", f.noise, "Uniform label noise half-width sigma");
  opts["validatetiming"] = validate->add_flag("--timing", f.timing, "Measure the wall-clock speedup column");

  auto* eval = app.add_subcommand("eval", "Evaluate a saved surrogate on points from a CSV file");
  common(eval);
  opts["evalsurrogate"] = eval->add_option("--surrogate", f.surrogate, "Surrogate JSON file");
  opts["evalpoints"] = eval->add_option("--points", f.points, "CSV of input points");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  auto given = [&](const std::string& key) {
    const auto it = opts.find(name + key);
    return it != opts.end() && it->second->count() > 0;
  };

  Plan plan;
  fs::path outdir;
  try {
    json resolved = default_config(name);
    if (given("config")) {
      json file;
      try {
        file = json::parse(read_file(f.config, "config"));
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
      }
      merge_config(resolved, file, "config");
    }
    json flags = json::object();
    if (given("out")) flags["out"] = f.out;
    if (given("seed")) flags["seed"] = f.seed;
    if (given("threads")) flags["threads"] = f.threads;
    if (given("strict")) flags["strict"] = true;
    if (given("families")) {
      json names = json::array();
      for (auto k : parse_families(f.families)) names.push_back(std::string(to_string(k)));
      flags["families"] = names;
    }
    if (given("configs")) {
      json pairs = json::array();
      for (const auto& [n, p] : parse_configs(f.configs)) pairs.push_back({n, p});
      flags["configs"] = pairs;
    }
    if (given("eps")) flags["eps"] = parse_list<double>(f.eps, "eps");
    if (given("chi_max")) flags["chi_max"] = f.chi_max;
    if (given("r")) flags["r"] = parse_list<double>(f.radii, "r");
    if (given("chi")) flags["chi"] = parse_list<std::size_t>(f.chis, "chi");
    if (given("oracle") || given("dim")) {
      json oracle = resolved.at("oracle");
      if (given("oracle")) {
        if (lower(f.oracle) == "qcnn") {
          oracle = json{{"kind", "qcnn"}, {"qubits", 6}, {"dim", 6}, {"model_seed", 20240601}};
        } else {
          oracle = json{{"kind", "family"}, {"family", f.oracle}, {"dim", 4}, {"instance_seed", 1}};
        }
      }
      if (given("dim")) oracle["dim"] = f.dim;
      flags["oracle"] = oracle;
    }
    if (given("n_train")) flags["n_train"] = f.n_train;
    if (given("n_test")) flags["n_test"] = f.n_test;
    if (given("shots") && given("noise")) throw ConfigError("noise: --shots and --noise are mutually exclusive");
    if (given("shots")) flags["noise"] = {{"kind", "shots"}, {"shots", f.shots}};
    if (given("noise")) flags["noise"] = {{"kind", "uniform"}, {"sigma", f.noise}};
    if (given("timing")) flags["timing"] = true;
    if (given("surrogate")) flags["surrogate"] = f.surrogate;
    if (given("points")) flags["points"] = f.points;
    merge_config(resolved, flags, "flag");

    outdir = field<std::string>(resolved, "out");
    if (name == "rank-scan") plan = plan_rank_scan(resolved);
    else if (name == "certify") plan = plan_certify(resolved);
    else if (name == "validate") plan = plan_validate(resolved);
    else plan = plan_eval(resolved);
    plan.resolved = std::move(resolved);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    fs::create_directories(outdir);
    const std::string config_text = plan.resolved.dump(2) + "\n";
    write_file(outdir / "config.json", config_text);
    const json run_info{{"tool", "ltts"},
                        {"version", version()},
                        {"subcommand", name},
                        {"seed", plan.resolved.at("seed")},
                        {"input_hash", git_blob_hash(config_text + plan.input_blob)}};
    write_file(outdir / "run.json", run_info.dump(2) + "\n");
    return plan.job(outdir, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

} // namespace ltts::cli
