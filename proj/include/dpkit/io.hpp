#pragma once

// JSON input/output helpers: field elements, E-matrices, points.

#include <regex>
#include <string>

#include "dpkit/evaluator.hpp"
#include "dpkit/measure.hpp"
#include "dpkit/parser.hpp"
#include "dpkit/quadext.hpp"
#include "json.hpp"

namespace dpkit::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// True for text that names backend-specific digits rather than a
/// portable expression.
inline bool is_backend_literal(const std::string& s) {
  return s.rfind("padic(", 0) == 0 || s.rfind("laurent(", 0) == 0;
}

/// Element from JSON: an integer, "c*pi^k", or a closed VF term over the
/// named constants; `padic(...)`/`laurent(...)` literals unless portable_only.
inline VFE element(const json& j, const Structure& S, bool portable_only = false) {
  if (j.is_number_integer()) return S.integer(BigInt(j.get<std::int64_t>()));
  if (!j.is_string()) fail(ErrorKind::InvalidArgument, "field element must be an integer or a string");
  std::string s = j.get<std::string>();
  if (is_backend_literal(s)) {
    if (portable_only) fail(ErrorKind::NonPortableParams, "backend-specific literal '" + s + "'");
    VFE v = parse_element_literal(s, S.precision);
    if (v.backend() != S.backend || v.prime() != S.p)
      fail(ErrorKind::BackendMismatch, "literal '" + s + "' does not belong to " + S.spec());
    return v;
  }
  static const std::regex pw(R"(^\s*(?:(-?\d+)\s*\*\s*)?pi\s*\^\s*(-?\d+)\s*$)");
  std::smatch m;
  if (std::regex_match(s, m, pw)) {
    VFE c = m[1].matched ? S.integer(BigInt(m[1].str())) : S.one();
    return c * S.pi_power(std::stoll(m[2].str()));
  }
  ParseOptions po;
  for (auto& [name, v] : S.constants) po.constants.insert(name);
  Term t = parse_term(s, Sort::VF, po);
  return measure_detail::vf_value(t, S, {});
}

inline MatrixE matrix(const json& j, const QuadField& E, bool portable_only = false) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::InvalidArgument, "matrix must be a non-empty array of rows");
  int n = static_cast<int>(j.size());
  MatrixE A = mat_zero(E, n);
  for (int i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n) fail(ErrorKind::InvalidArgument, "matrix must be square");
    for (int k = 0; k < n; ++k) {
      const json& e = row[static_cast<std::size_t>(k)];
      if (e.is_array()) {
        if (e.size() != 2) fail(ErrorKind::InvalidArgument, "entry must be an (x, y) pair");
        A.at(i, k) = {element(e[0], E.base(), portable_only), element(e[1], E.base(), portable_only)};
      } else {
        A.at(i, k) = {element(e, E.base(), portable_only), E.base().zero()};
      }
    }
  }
  return A;
}

inline json to_json(const QuadField&, const QE& z) { return json::array({z.x.str(), z.y.str()}); }

inline json to_json(const QuadField& E, const MatrixE& A) {
  json rows = json::array();
  for (int i = 0; i < A.n; ++i) {
    json row = json::array();
    for (int k = 0; k < A.n; ++k) row.push_back(to_json(E, A.at(i, k)));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const ZExt& z) {
  if (z.is_infinite()) return "INFINITY";
  return z.value();
}

/// Point for a signature: VF entries via element(), RF as integers,
/// VG as integers or "INFINITY" is not allowed (finite values only).
inline Assignment point(const json& j, const Signature& sig, const Structure& S, bool portable_only = false) {
  if (!j.is_object()) fail(ErrorKind::InvalidArgument, "point must be a JSON object");
  Assignment a;
  for (auto& [name, sort] : sig) {
    if (!j.contains(name)) fail(ErrorKind::SignatureMismatch, "point is missing '" + name + "'");
    const json& v = j.at(name);
    switch (sort) {
      case Sort::VF: a[name] = element(v, S, portable_only); break;
      case Sort::RF: a[name] = ResidueElement(v.get<std::int64_t>(), S.p); break;
      case Sort::VG: a[name] = v.get<std::int64_t>(); break;
    }
  }
  for (auto& [k, v] : j.items())
    if (std::none_of(sig.begin(), sig.end(), [&](auto& e) { return e.first == k; }))
      fail(ErrorKind::SignatureMismatch, "point has extra variable '" + k + "'");
  return a;
}

inline json signature_json(const Signature& sig) {
  json out = json::array();
  for (auto& [n, s] : sig) out.push_back(json::array({n, to_string(s)}));
  return out;
}

}  // namespace dpkit::io
