#include "ltts/serialize.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

namespace ltts {

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto cols = n == 0 ? 0 : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols) throw ShapeError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw DomainError(std::string("missing JSON field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DomainError(std::string("JSON field '") + key + "' has the wrong type");
  }
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw DomainError("truncated TT sidecar");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

} // namespace

json number_or_string(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw DomainError("expected a number in JSON");
}

json to_json(const FamilyInstance& f) {
  json j{{"kind", std::string(to_string(f.kind))}, {"dim", f.dim}, {"seed", f.seed}};
  json params;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SeparableParams>) {
          params["c"] = p.c;
        } else if constexpr (std::is_same_v<P, PolynomialParams>) {
          params["degree"] = p.degree;
          params["terms"] = json::array();
          for (const auto& t : p.terms) {
            params["terms"].push_back({{"exponent", t.exponent.values()}, {"coefficient", t.coefficient}});
          }
        } else if constexpr (std::is_same_v<P, QuadraticParams>) {
          params["A"] = matrix_json(p.a);
          params["b"] = std::vector<double>(p.b.data(), p.b.data() + p.b.size());
          params["c"] = p.c;
        } else if constexpr (std::is_same_v<P, TrigParams>) {
          params["weights"] = p.weights;
          params["frequencies"] = p.frequencies;
        } else {
          params["Q"] = matrix_json(p.q);
        }
      },
      f.params);
  j["params"] = std::move(params);
  return j;
}

FamilyInstance family_from_json(const json& j) {
  const auto name = require<std::string>(j, "kind");
  const auto kind = parse_family(name);
  if (!kind) throw DomainError("unknown family '" + name + "'");
  const json& p = j.at("params");
  FamilyInstance f;
  switch (*kind) {
    case FamilyKind::ExpSum: f = make_exp_sum(require<std::vector<double>>(p, "c")); break;
    case FamilyKind::ProductCos: f = make_product_cos(require<std::vector<double>>(p, "c")); break;
    case FamilyKind::PolyMatched:
    case FamilyKind::PolyHigher: {
      std::vector<Monomial> terms;
      for (const auto& t : p.at("terms")) {
        terms.push_back({MultiIndex(require<std::vector<int>>(t, "exponent")), require<double>(t, "coefficient")});
      }
      f = make_polynomial(*kind, require<std::size_t>(j, "dim"), require<int>(p, "degree"), std::move(terms));
      break;
    }
    case FamilyKind::QuadraticForm: {
      const auto b = require<std::vector<double>>(p, "b");
      f = make_quadratic(matrix_from(p.at("A")), Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())),
                         require<double>(p, "c"));
      break;
    }
    case FamilyKind::Trig:
      f = make_trig(require<std::vector<double>>(p, "weights"), require<std::vector<std::vector<int>>>(p, "frequencies"));
      break;
    case FamilyKind::Gauss: f = make_gauss(matrix_from(p.at("Q"))); break;
  }
  if (f.dim != require<std::size_t>(j, "dim")) throw ShapeError("family dimension disagrees with its parameters");
  f.seed = require<std::uint64_t>(j, "seed");
  return f;
}

json to_json(const CoefficientTensor& c) {
  json entries = json::array();
  for (std::size_t i = 0; i < c.support().size(); ++i) {
    entries.push_back(json::array({c.support()[i].values(), c.values()[i]}));
  }
  return {{"N", c.order()}, {"p", c.degree()}, {"r", c.radius()}, {"x0", c.center()}, {"entries", std::move(entries)}};
}

CoefficientTensor coefficients_from_json(const json& j) {
  const auto n = require<std::size_t>(j, "N");
  const auto p = require<int>(j, "p");
  const auto x0 = require<std::vector<double>>(j, "x0");
  if (x0.size() != n) throw ShapeError("x0 length differs from N");
  std::map<MultiIndex, double> given;
  for (const auto& e : j.at("entries")) {
    MultiIndex alpha(e.at(0).get<std::vector<int>>());
    if (alpha.order() != n) throw ShapeError("coefficient index has the wrong order");
    given[alpha] = e.at(1).get<double>();
  }
  std::vector<double> values;
  for (const auto& alpha : simplex_indices(n, p)) {
    const auto it = given.find(alpha);
    if (it == given.end()) throw DomainError("coefficient JSON is missing a simplex entry");
    values.push_back(it->second);
  }
  if (given.size() != values.size()) throw DomainError("coefficient JSON has entries outside the simplex");
  return CoefficientTensor(x0, require<double>(j, "r"), p, std::move(values));
}

json to_json(const TTTensor& tt, bool include_cores) {
  std::vector<std::size_t> ranks{1};
  for (std::size_t r : tt.ranks()) ranks.push_back(r);
  ranks.push_back(1);
  json j{{"format", "ltts-tt"}, {"order", tt.order()}, {"mode", tt.mode_size()}, {"ranks", ranks}};
  if (include_cores) {
    json cores = json::array();
    for (const auto& c : tt.cores()) cores.push_back(c.data);
    j["cores"] = std::move(cores);
  }
  return j;
}

TTTensor tt_from_json(const json& j) {
  if (j.value("format", "") != "ltts-tt") throw DomainError("not a TT document");
  const auto order = require<std::size_t>(j, "order");
  const auto mode = require<std::size_t>(j, "mode");
  const auto ranks = require<std::vector<std::size_t>>(j, "ranks");
  if (ranks.size() != order + 1) throw ShapeError("TT ranks must have order + 1 entries");
  const auto cores = require<std::vector<std::vector<double>>>(j, "cores");
  if (cores.size() != order) throw ShapeError("TT core count differs from the order");
  std::vector<TTCore> out;
  for (std::size_t k = 0; k < order; ++k) {
    TTCore c(ranks[k], mode, ranks[k + 1]);
    if (cores[k].size() != c.data.size()) throw ShapeError("TT core " + std::to_string(k) + " has the wrong size");
    c.data = cores[k];
    out.push_back(std::move(c));
  }
  return TTTensor(std::move(out));
}

void write_tt_binary(std::ostream& out, const TTTensor& tt) {
  put_u64(out, tt.order());
  for (const auto& c : tt.cores()) {
    put_u64(out, c.left);
    put_u64(out, c.mode);
    put_u64(out, c.right);
    put_u64(out, c.data.size());
    for (double v : c.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
}

TTTensor read_tt_binary(std::istream& in) {
  const std::uint64_t order = get_u64(in);
  if (order == 0 || order > 4096) throw DomainError("implausible TT order in sidecar");
  std::vector<TTCore> cores;
  for (std::uint64_t k = 0; k < order; ++k) {
    const auto l = get_u64(in);
    const auto m = get_u64(in);
    const auto r = get_u64(in);
    const auto n = get_u64(in);
    if (l == 0 || m == 0 || r == 0 || n != l * m * r || n > (std::uint64_t{1} << 32)) {
      throw ShapeError("inconsistent core header in sidecar");
    }
    TTCore c(l, m, r);
    for (double& v : c.data) v = std::bit_cast<double>(get_u64(in));
    cores.push_back(std::move(c));
  }
  return TTTensor(std::move(cores));
}

json to_json(const SmoothnessBudget& b) {
  return {{"c_le_p", b.c_le_p}, {"c_p1", b.c_p1}, {"provenance", to_string(b.provenance)}};
}

json to_json(const Certificate& c) {
  return {{"e_taylor", c.e_taylor}, {"e_tt_raw", c.e_tt_raw}, {"k_n", c.k_n},       {"e_det", c.e_det},
          {"lambda", c.lambda},     {"y_max", c.y_max},       {"m_bound", c.m_bound}, {"provenance", to_string(c.provenance)}};
}

Certificate certificate_from_json(const json& j) {
  Certificate c;
  c.e_taylor = require<double>(j, "e_taylor");
  c.e_tt_raw = require<double>(j, "e_tt_raw");
  c.k_n = require<double>(j, "k_n");
  c.e_det = require<double>(j, "e_det");
  c.lambda = require<double>(j, "lambda");
  c.y_max = require<double>(j, "y_max");
  c.m_bound = require<double>(j, "m_bound");
  const auto prov = require<std::string>(j, "provenance");
  if (prov == to_string(Provenance::Exact)) c.provenance = Provenance::Exact;
  else if (prov == to_string(Provenance::Estimated)) c.provenance = Provenance::Estimated;
  else throw DomainError("unknown provenance '" + prov + "'");
  return c;
}

json to_json(const StatBounds& s) {
  return {{"d_hyp", s.d_hyp},
          {"d_loss", s.d_loss},
          {"delta_n", s.delta_n},
          {"risk_bound", s.risk_bound},
          {"n_required", s.n_required}};
}

StatBounds stat_bounds_from_json(const json& j) {
  return {require<double>(j, "d_hyp"), require<double>(j, "d_loss"), require<double>(j, "delta_n"),
          require<double>(j, "risk_bound"), require<std::uint64_t>(j, "n_required")};
}

json to_json(const FitReport& r) {
  return {{"sweep_risks", r.sweep_risks},
          {"half_sweep_risks", r.half_sweep_risks},
          {"final_risk", r.final_risk},
          {"sweeps", r.sweeps},
          {"converged", r.converged},
          {"norm", r.norm},
          {"budget_violation", r.budget_violation},
          {"rescaled", r.rescaled},
          {"ridge_retries", r.ridge_retries},
          {"method", "alternating least squares (heuristic; no global optimality claim)"}};
}

json to_json(const QcnnModel& m) {
  return {{"qubits", m.qubits}, {"seed", m.seed}, {"layout", QcnnModel::kLayoutVersion}, {"theta", m.theta}};
}

QcnnModel qcnn_from_json(const json& j) {
  const auto layout = require<std::string>(j, "layout");
  if (layout != QcnnModel::kLayoutVersion) throw DomainError("unsupported circuit layout '" + layout + "'");
  QcnnModel m;
  m.qubits = require<std::size_t>(j, "qubits");
  m.seed = require<std::uint64_t>(j, "seed");
  if (j.contains("theta")) {
    m.theta = require<std::vector<double>>(j, "theta");
  } else {
    m = QcnnModel::random(m.qubits, m.seed);
  }
  m.validate();
  return m;
}

json to_json(const PatchSpec& p) {
  return {{"x0", p.x0}, {"r", p.r}, {"p", p.p}, {"chi", p.chi}};
}

PatchSpec patch_from_json(const json& j) {
  PatchSpec p{require<std::vector<double>>(j, "x0"), require<double>(j, "r"), require<int>(j, "p"),
              require<int>(j, "chi")};
  p.validate();
  return p;
}

json to_json(const Surrogate& s) {
  return {{"format", "ltts-surrogate"}, {"patch", to_json(s.patch)}, {"tt", to_json(s.tt)}};
}

Surrogate surrogate_from_json(const json& j) {
  if (j.value("format", "") != "ltts-surrogate") throw DomainError("not a surrogate document");
  Surrogate s{patch_from_json(j.at("patch")), tt_from_json(j.at("tt"))};
  if (s.tt.order() != s.patch.order()) throw ShapeError("surrogate TT order differs from the patch dimension");
  if (s.tt.mode_size() != static_cast<std::size_t>(s.patch.p) + 1) {
    throw ShapeError("surrogate TT mode size differs from p + 1");
  }
  return s;
}

json rank_summary_json(const std::vector<RankSummaryRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"bucket", r.bucket},
                   {"epsilon", r.epsilon},
                   {"criterion", std::string(to_string(r.criterion))},
                   {"n", r.n},
                   {"unreached", r.unreached},
                   {"median_rho", number_or_string(r.median_rho)},
                   {"iqr", {number_or_string(r.q25_rho), number_or_string(r.q75_rho)}},
                   {"median_chi_box", number_or_string(r.median_chi_box)},
                   {"median_chi_delta", number_or_string(r.median_chi_delta)}});
  }
  return out;
}

json validation_summary_json(const ValidationResult& result, std::size_t primary_center, double primary_r) {
  std::map<std::pair<std::size_t, double>, json> patches;
  std::vector<std::pair<std::size_t, double>> order;
  for (const auto& rec : result.records) {
    const auto key = std::pair{rec.center, rec.r};
    if (!patches.contains(key)) {
      order.push_back(key);
      patches[key] = json::array();
    }
    patches[key].push_back({{"chi", rec.chi},
                            {"e_det", number_or_string(rec.e_det)},
                            {"cert_rmse", number_or_string(rec.cert_rmse)},
                            {"erm_rmse", number_or_string(rec.erm_rmse)},
                            {"te_ratio", number_or_string(rec.te_ratio)},
                            {"cert_le_e_det", rec.cert_rmse <= rec.e_det},
                            {"erm_norm", rec.erm_norm},
                            {"lambda_star", rec.lambda_star}});
  }
  // Nearest radius to the requested primary one.
  std::optional<std::pair<std::size_t, double>> primary;
  for (const auto& key : order) {
    if (key.first != primary_center) continue;
    if (!primary || std::abs(key.second - primary_r) < std::abs(primary->second - primary_r)) primary = key;
  }
  json out{{"centers", result.centers}, {"patches", json::array()}};
  if (primary) out["primary"] = {{"center", primary->first}, {"r", primary->second}, {"rows", patches[*primary]}};
  for (const auto& key : order) {
    out["patches"].push_back({{"center", key.first}, {"r", key.second}, {"rows", patches[key]}});
  }
  return out;
}

} // namespace ltts
