#pragma once

// File formats: problem JSON, plan/report JSON and trace CSV.
//
// Problem JSON: {"costs": [C1, ..., CM], "a": [...], "b": [...]}, each Ci a
// row-major array of rows. Dimensions are inferred from the arrays.

#include "seqot/core.hpp"
#include "seqot/error.hpp"
#include "seqot/plans.hpp"
#include "seqot/sinkhorn.hpp"
#include "seqot/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace seqot::io {

using Json = nlohmann::json;

/// 17 significant digits, '.' decimal separator; "inf", "-inf", "nan" for
/// non-finite values.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Json to_json(const Vector& v) {
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline Json to_json(const Matrix& m) {
  Json j = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

namespace detail {

inline double read_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw Error(Errc::ParseError, where + " is not a number");
  return j.get<double>();
}

inline Vector read_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(Errc::ParseError, where + " is not an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = read_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix read_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(Errc::ParseError, where + " is not a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw Error(Errc::ParseError, where + "[0] is not an array");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rw = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) throw Error(Errc::ParseError, rw + " is not an array");
    if (j[r].size() != cols) throw Error(Errc::ShapeMismatch, rw + " has a different length than row 0");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = read_number(j[r][c], rw + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

}  // namespace detail

inline Problem problem_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "problem document must be an object");
  for (const char* key : {"costs", "a", "b"}) {
    if (!j.contains(key)) throw Error(Errc::ParseError, std::string("missing key \"") + key + "\"");
  }
  Problem p;
  const Json& costs = j.at("costs");
  if (!costs.is_array()) throw Error(Errc::ParseError, "\"costs\" is not an array");
  for (std::size_t i = 0; i < costs.size(); ++i) {
    p.costs.push_back(detail::read_matrix(costs[i], "costs[" + std::to_string(i) + "]"));
  }
  p.a = detail::read_vector(j.at("a"), "a");
  p.b = detail::read_vector(j.at("b"), "b");
  return p;
}

inline Json problem_to_json(const Problem& p) {
  Json costs = Json::array();
  for (const auto& c : p.costs) costs.push_back(to_json(c));
  return Json{{"costs", std::move(costs)}, {"a", to_json(p.a)}, {"b", to_json(p.b)}};
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::ParseError, origin + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::ParseError, "cannot write " + path);
  out << content;
}

inline Problem load_problem(const std::string& path) { return problem_from_json(parse_json_text(read_file(path), path)); }

/// {"kind", "iteration", "plans", "mass"}.
inline Json plans_to_json(const PlanSet& ps) {
  Json plans = Json::array();
  Json mass = Json::array();
  for (const auto& pl : ps.plans) {
    plans.push_back(to_json(pl));
    mass.push_back(pl.sum());
  }
  return Json{{"kind", std::string(to_string(ps.kind))},
              {"iteration", ps.iteration},
              {"plans", std::move(plans)},
              {"mass", std::move(mass)}};
}

inline PlanSet plans_from_json(const Json& j) {
  PlanSet ps;
  const std::string kind = j.at("kind").get<std::string>();
  for (PlanKind k : {PlanKind::Induced, PlanKind::Primed, PlanKind::HalfStep, PlanKind::Rounded, PlanKind::Exact}) {
    if (to_string(k) == kind) ps.kind = k;
  }
  ps.iteration = j.at("iteration").get<std::size_t>();
  const Json& plans = j.at("plans");
  for (std::size_t i = 0; i < plans.size(); ++i) {
    ps.plans.push_back(detail::read_matrix(plans[i], "plans[" + std::to_string(i) + "]"));
  }
  return ps;
}

constexpr const char* criterion_name(Criterion c) {
  return c == Criterion::HalfStepResidual ? "halfstep" : "boundary";
}
constexpr const char* backend_name(Backend b) { return b == Backend::Linear ? "linear" : "log"; }

/// Columns: n, halfstep_residual, boundary_residual, lagrangian, then
/// hilbert_1..hilbert_{M+1} and bound_1..bound_{M+1} when reference distances
/// are present.
inline std::string trace_to_csv(const std::vector<TraceRecord>& trace, const ContractionReport* bounds = nullptr) {
  std::ostringstream os;
  const bool with_ref = !trace.empty() && trace.front().hilbert_to_reference.has_value();
  const std::size_t layers = with_ref ? trace.front().hilbert_to_reference->size() : 0;
  os << "n,halfstep_residual,boundary_residual,lagrangian";
  for (std::size_t i = 0; i < layers; ++i) os << ",hilbert_" << i + 1;
  if (bounds) {
    for (std::size_t i = 0; i < layers; ++i) os << ",bound_" << i + 1;
  }
  os << '\n';
  for (const auto& r : trace) {
    os << r.n << ',';
    if (r.halfstep_residual) os << format_number(*r.halfstep_residual);
    os << ',' << format_number(r.boundary_residual) << ',' << format_number(r.lagrangian);
    if (with_ref) {
      for (double h : *r.hilbert_to_reference) os << ',' << format_number(h);
      if (bounds) {
        for (std::size_t i = 0; i < layers; ++i) os << ',' << format_number(bounds->vector_bound(r.n, i));
      }
    }
    os << '\n';
  }
  return os.str();
}

/// Run summary written next to the rounded plans.
struct RunManifest {
  std::string problem_path;
  std::optional<double> epsilon;
  std::optional<double> delta;
  Criterion criterion = Criterion::HalfStepResidual;
  Backend backend = Backend::LogDomain;
  std::size_t max_iters = 0;
  std::size_t terminal_n = 0;
  bool converged = false;
  double threshold = 0.0;
  double terminal_residual = 0.0;
  std::optional<double> rounded_objective;
  double induced_objective = 0.0;
  std::optional<double> oracle_optimum;
  bool suboptimality_guarantee = false;
  std::vector<std::string> warnings;
  std::string report_path;
  std::string trace_path;
};

inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json manifest_to_json(const RunManifest& m) {
  Json cfg{{"epsilon", m.epsilon ? Json(*m.epsilon) : Json(nullptr)},
           {"delta", m.delta ? Json(*m.delta) : Json(nullptr)},
           {"criterion", criterion_name(m.criterion)},
           {"backend", backend_name(m.backend)},
           {"max_iters", m.max_iters}};
  return Json{{"problem", m.problem_path},
              {"config", std::move(cfg)},
              {"iterations", m.terminal_n},
              {"converged", m.converged},
              {"threshold", number_or_null(m.threshold)},
              {"terminal_residual", number_or_null(m.terminal_residual)},
              {"objective", m.rounded_objective ? Json(*m.rounded_objective) : Json(nullptr)},
              {"induced_objective", m.induced_objective},
              {"oracle_optimum", m.oracle_optimum ? Json(*m.oracle_optimum) : Json(nullptr)},
              {"suboptimality_guarantee", m.suboptimality_guarantee},
              {"warnings", m.warnings},
              {"outputs", Json{{"report", m.report_path}, {"trace", m.trace_path}}}};
}

/// JSON text with every number printed to 17 significant digits.
inline std::string dump(const Json& j) {
  // nlohmann prints doubles in shortest round-trip form; re-render them with
  // the fixed precision the report format promises.
  std::function<void(const Json&, std::string&, int)> emit = [&](const Json& v, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string pad_close(static_cast<std::size_t>(2 * depth), ' ');
    if (v.is_object()) {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        emit(it.value(), out, depth + 1);
      }
      out += "\n" + pad_close + "}";
    } else if (v.is_array()) {
      const bool flat = std::none_of(v.begin(), v.end(), [](const Json& e) { return e.is_structured(); });
      if (v.empty()) {
        out += "[]";
      } else if (flat) {
        out += "[";
        bool first = true;
        for (const auto& e : v) {
          if (!first) out += ", ";
          first = false;
          emit(e, out, depth + 1);
        }
        out += "]";
      } else {
        out += "[\n";
        bool first = true;
        for (const auto& e : v) {
          if (!first) out += ",\n";
          first = false;
          out += pad;
          emit(e, out, depth + 1);
        }
        out += "\n" + pad_close + "]";
      }
    } else if (v.is_number_float()) {
      out += format_number(v.get<double>());
    } else {
      out += v.dump();
    }
  };
  std::string out;
  emit(j, out, 0);
  out += '\n';
  return out;
}

}  // namespace seqot::io
