#pragma once

// Runs one quantity over Q_p and F_p((t)) for a list of primes and compares
// the results exactly.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/evaluator.hpp"
#include "dpkit/fixtures.hpp"
#include "dpkit/io.hpp"
#include "dpkit/jacquet_rallis.hpp"
#include "dpkit/measure.hpp"
#include "dpkit/parser.hpp"

namespace dpkit::transfer {

using json = nlohmann::json;

enum class FieldKind { CharZero, PositiveChar };

struct FieldFamily {
  FieldKind kind;
  std::vector<std::uint32_t> primes;
};

inline std::vector<std::uint32_t> default_primes() {
  std::vector<std::uint32_t> out;
  for (std::uint32_t p = 3; p <= 97; p += 2)
    if (is_prime(p)) out.push_back(p);
  return out;
}

inline void validate_primes(const std::vector<std::uint32_t>& ps) {
  if (ps.empty()) fail(ErrorKind::InvalidArgument, "prime list is empty");
  for (auto p : ps)
    if (p == 2 || !is_prime(p)) fail(ErrorKind::InvalidArgument, std::to_string(p) + " is not an odd prime");
}

/// "3..97" (odd primes in range) or "3,5,7".
inline std::vector<std::uint32_t> parse_primes(const std::string& s) {
  std::vector<std::uint32_t> out;
  auto dots = s.find("..");
  if (dots != std::string::npos) {
    std::uint32_t lo = static_cast<std::uint32_t>(std::stoul(s.substr(0, dots)));
    std::uint32_t hi = static_cast<std::uint32_t>(std::stoul(s.substr(dots + 2)));
    for (std::uint32_t p = std::max(lo, 3u); p <= hi; ++p)
      if (is_prime(p)) out.push_back(p);
  } else {
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(static_cast<std::uint32_t>(std::stoul(item)));
  }
  validate_primes(out);
  return out;
}

/// Result of a quantity on one field; "UNKNOWN" marks a three-valued gap.
using Quantity = std::function<std::string(const Structure&, const json&)>;

/// Formula reference: a fixture name, a definition `name(...) := ...;`, or a
/// bare formula.
inline DefinableSet resolve_set(const std::string& ref) {
  for (auto& s : fixtures::library())
    if (s.name == ref) return s.set;
  if (ref.find(":=") != std::string::npos) return parse_definitions(ref).at(0).set;
  Formula f = parse_formula(ref);
  return DefinableSet::make(sort_check(f), f);
}

inline std::string interval(const Rational& lo, const Rational& hi) {
  return lo == hi ? to_string(lo) : "[" + to_string(lo) + ", " + to_string(hi) + "]";
}

inline Quantity quantity(const std::string& name) {
  if (name == "eval")
    return [](const Structure& S, const json& params) {
      DefinableSet X = resolve_set(params.at("formula").get<std::string>());
      Assignment pt = io::point(params.value("point", json::object()), X.signature, S, true);
      return to_string(evaluate(X.formula, S, pt));
    };
  if (name == "volume")
    return [](const Structure& S, const json& params) {
      DefinableSet X = resolve_set(params.at("set").get<std::string>());
      MeasureConfig cfg;
      cfg.depth = params.value("depth", 2);
      auto r = volume(X, S, cfg);
      return interval(r.inner, r.outer);
    };
  if (name == "orbital")
    return [](const Structure& S, const json& params) {
      QuadField E(S);
      MatrixE A = io::matrix(params.at("matrix"), E, true);
      jr::OrbitalConfig cfg;
      cfg.depth = params.value("depth", 0);
      auto side = params.value("side", std::string("gl"));
      auto r = side == "u" ? jr::orbital_unitary(E, A, cfg) : jr::orbital_gl(E, A, cfg);
      return to_string(r.value);
    };
  if (name == "fl_residual")
    return [](const Structure& S, const json& params) {
      QuadField E(S);
      MatrixE A = io::matrix(params.at("matrix"), E, true);
      jr::MatchedPair pair{A, jr::match_unitary(E, A)};
      auto mode = jr::parse_sign_mode(params.value("sign_mode", std::string("eta_delta")));
      return to_string(jr::fl_check(E, pair, mode).residual);
    };
  fail(ErrorKind::InvalidArgument, "unknown quantity '" + name + "'");
}

struct TransferCell {
  std::uint32_t p = 0;
  std::string char_zero, positive_char;
  bool unknown = false;
  bool agree = false;
};

struct TransferReport {
  std::string quantity;
  json params;
  std::vector<TransferCell> cells;
  std::optional<std::uint32_t> empirical_M;
  std::size_t unknown_count = 0;
  std::size_t disagreements = 0;

  bool all_agree() const { return disagreements == 0; }
};

inline std::string run_guarded(const Quantity& q, const Structure& S, const json& params) {
  try {
    return q(S, params);
  } catch (const Error& e) {
    return std::string("ERROR(") + to_string(e.kind()) + ")";
  }
}

/// `swap` exchanges the roles of the two backends (the report fields keep
/// their names).
inline TransferReport transfer_compare(const std::string& name, const json& params,
                                       const std::vector<std::uint32_t>& primes, bool swap = false) {
  validate_primes(primes);
  Quantity q = quantity(name);
  TransferReport rep;
  rep.quantity = name;
  rep.params = params;
  for (auto p : primes) {
    TransferCell c;
    c.p = p;
    Backend first = swap ? Backend::Laurent : Backend::Padic;
    Backend second = swap ? Backend::Padic : Backend::Laurent;
    std::string v1 = run_guarded(q, Structure::make(first, p), params);
    std::string v2 = run_guarded(q, Structure::make(second, p), params);
    c.char_zero = swap ? v2 : v1;
    c.positive_char = swap ? v1 : v2;
    c.unknown = v1 == "UNKNOWN" || v2 == "UNKNOWN";
    c.agree = !c.unknown && v1 == v2;
    if (c.unknown) ++rep.unknown_count;
    else if (!c.agree) ++rep.disagreements;
    rep.cells.push_back(c);
  }
  // Smallest tested prime from which every decided cell agrees.
  std::optional<std::uint32_t> m;
  for (auto it = rep.cells.rbegin(); it != rep.cells.rend(); ++it) {
    if (!it->unknown && !it->agree) break;
    m = it->p;
  }
  rep.empirical_M = m;
  return rep;
}

struct SweepSummary {
  std::size_t total = 0, agreements = 0, disagreements = 0, unknowns = 0;
};

struct SweepReport {
  std::vector<TransferReport> reports;
  SweepSummary summary;
};

inline SweepReport sweep(const std::string& name, const std::vector<json>& grid, const std::vector<std::uint32_t>& primes) {
  SweepReport out;
  for (auto& params : grid) {
    auto r = transfer_compare(name, params, primes);
    for (auto& c : r.cells) {
      ++out.summary.total;
      if (c.unknown) ++out.summary.unknowns;
      else if (c.agree) ++out.summary.agreements;
      else ++out.summary.disagreements;
    }
    out.reports.push_back(std::move(r));
  }
  return out;
}

inline json to_json(const TransferReport& r) {
  json cells = json::array();
  for (auto& c : r.cells)
    cells.push_back({{"p", c.p},
                     {"char_zero", c.char_zero},
                     {"positive_char", c.positive_char},
                     {"agree", c.agree},
                     {"unknown", c.unknown}});
  return {{"quantity", r.quantity},
          {"params", r.params},
          {"cells", cells},
          {"empirical_M", r.empirical_M ? json(*r.empirical_M) : json(nullptr)},
          {"unknown_count", r.unknown_count},
          {"disagreements", r.disagreements},
          {"all_agree", r.all_agree()}};
}

inline json to_json(const SweepReport& s) {
  json reps = json::array();
  for (auto& r : s.reports) reps.push_back(to_json(r));
  return {{"reports", reps},
          {"summary",
           {{"total", s.summary.total},
            {"agreements", s.summary.agreements},
            {"disagreements", s.summary.disagreements},
            {"unknowns", s.summary.unknowns}}}};
}

}  // namespace dpkit::transfer
