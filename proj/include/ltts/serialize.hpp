#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ltts/analytic_families.hpp"
#include "ltts/certificate.hpp"
#include "ltts/derivative_engine.hpp"
#include "ltts/erm.hpp"
#include "ltts/experiments.hpp"
#include "ltts/quantum_oracle.hpp"
#include "ltts/tt_format.hpp"

namespace ltts {

using json = nlohmann::json;

json to_json(const FamilyInstance& f);
FamilyInstance family_from_json(const json& j);

/// {N, p, r, x0, entries: [[alpha...], value]...}
json to_json(const CoefficientTensor& c);
CoefficientTensor coefficients_from_json(const json& j);

/// Shape metadata plus per-core flat row-major arrays. With include_cores = false the
/// "cores" field is omitted and the values are expected in a binary sidecar.
json to_json(const TTTensor& tt, bool include_cores = true);
TTTensor tt_from_json(const json& j);

/// Sidecar layout, all little-endian: u64 core count, then per core u64 left, mode, right,
/// u64 value count, and that many f64 values.
void write_tt_binary(std::ostream& out, const TTTensor& tt);
TTTensor read_tt_binary(std::istream& in);

json to_json(const SmoothnessBudget& b);
json to_json(const Certificate& c);
Certificate certificate_from_json(const json& j);
json to_json(const StatBounds& s);
StatBounds stat_bounds_from_json(const json& j);
json to_json(const FitReport& r);

/// Qubit count, seed, layout version and the frozen angles.
json to_json(const QcnnModel& m);
QcnnModel qcnn_from_json(const json& j);

json to_json(const PatchSpec& p);
PatchSpec patch_from_json(const json& j);

/// A deployable surrogate: the patch it is valid on and its TT.
struct Surrogate {
  PatchSpec patch;
  TTTensor tt;
};

json to_json(const Surrogate& s);
Surrogate surrogate_from_json(const json& j);

/// Rows keyed by bucket, epsilon and criterion, in the layout of the rank-ratio table.
json rank_summary_json(const std::vector<RankSummaryRow>& rows);

/// Per-patch chi tables (E_det, cert RMSE, ERM RMSE, te_ratio), primary patch first.
json validation_summary_json(const ValidationResult& result, std::size_t primary_center, double primary_r);

/// Non-finite numbers become strings ("inf", "-inf", "nan") since JSON has no literal for them.
json number_or_string(double v);
double number_from_json(const json& j);

} // namespace ltts
