#pragma once

// Named formula library: s_n, u_n and their integral points, U_{n-1},
// strong regularity, the eps predicate and the two eta formulas, plus a
// few sets used for volume checks. Matrix predicates are generated by
// expanding E-arithmetic symbolically in the coordinates (x_ij, y_ij).

#include <map>
#include <string>
#include <vector>

#include "dpkit/formula.hpp"
#include "dpkit/parser.hpp"
#include "dpkit/quadext.hpp"

namespace dpkit::fixtures {

namespace detail {

// Integer polynomial in named VF variables; "eps" expands to the constant
// unless eps_is_var.
struct Poly {
  std::map<std::vector<std::string>, std::int64_t> terms;

  static Poly var(const std::string& v) { return Poly{{{{v}, 1}}}; }
  static Poly num(std::int64_t c) {
    Poly p;
    if (c) p.terms[{}] = c;
    return p;
  }
  bool is_zero() const { return terms.empty(); }

  friend Poly operator+(Poly a, const Poly& b) {
    for (auto& [m, c] : b.terms) {
      a.terms[m] += c;
      if (a.terms[m] == 0) a.terms.erase(m);
    }
    return a;
  }
  friend Poly operator-(const Poly& a) {
    Poly r = a;
    for (auto& [m, c] : r.terms) c = -c;
    return r;
  }
  friend Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }
  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly r;
    for (auto& [ma, ca] : a.terms)
      for (auto& [mb, cb] : b.terms) {
        std::vector<std::string> m = ma;
        m.insert(m.end(), mb.begin(), mb.end());
        std::sort(m.begin(), m.end());
        r.terms[m] += ca * cb;
        if (r.terms[m] == 0) r.terms.erase(m);
      }
    return r;
  }

  Term to_term(bool eps_is_var = false) const {
    auto atom = [&](const std::string& v) {
      return v == "eps" && !eps_is_var ? term::constant("eps") : term::var(v, Sort::VF);
    };
    if (terms.empty()) return term::zero(Sort::VF);
    Term acc;
    std::vector<std::pair<std::vector<std::string>, std::int64_t>> order(terms.begin(), terms.end());
    if (order.front().first.empty()) std::rotate(order.begin(), order.begin() + 1, order.end());
    for (auto& [m, c] : order) {
      Term t;
      std::int64_t mag = c < 0 ? -c : c;
      if (mag != 1 || m.empty()) t = term::lit(mag, Sort::VF);
      for (auto& v : m) t = t ? term::mul(t, atom(v)) : atom(v);
      if (!acc) acc = c < 0 ? term::neg(t) : t;
      else acc = c < 0 ? term::sub(acc, t) : term::add(acc, t);
    }
    return acc;
  }
};

struct SymE {
  Poly x, y;
};

inline SymE add(const SymE& a, const SymE& b) { return {a.x + b.x, a.y + b.y}; }
inline SymE neg(const SymE& a) { return {-a.x, -a.y}; }
inline SymE mul(const SymE& a, const SymE& b) {
  Poly e = Poly::var("eps");
  return {a.x * b.x + e * a.y * b.y, a.x * b.y + a.y * b.x};
}

inline std::string xn(int i, int j) { return "x" + std::to_string(i) + std::to_string(j); }
inline std::string yn(int i, int j) { return "y" + std::to_string(i) + std::to_string(j); }

inline Signature matrix_signature(int n, const std::string& prefix = "") {
  Signature s;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      s.push_back({prefix + xn(i, j), Sort::VF});
      s.push_back({prefix + yn(i, j), Sort::VF});
    }
  return s;
}

inline std::vector<std::vector<SymE>> sym_matrix(int n) {
  std::vector<std::vector<SymE>> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(i)].push_back({Poly::var(xn(i, j)), Poly::var(yn(i, j))});
  return m;
}

inline std::vector<std::vector<SymE>> sym_mul(const std::vector<std::vector<SymE>>& a,
                                              const std::vector<std::vector<SymE>>& b) {
  std::size_t n = a.size();
  std::vector<std::vector<SymE>> c(n, std::vector<SymE>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) c[i][j] = add(c[i][j], mul(a[i][k], b[k][j]));
  return c;
}

inline SymE sym_det(const std::vector<std::vector<SymE>>& m) {
  SymE one{Poly::num(1), {}};
  return laplace_det<SymE>(m, SymE{}, one, add, mul, neg);
}

inline Formula is_zero(const Poly& p) { return fml::eq(p.to_term(), term::zero(Sort::VF)); }
inline Formula ord_nonneg(const std::string& v) {
  return fml::geq(term::ord(term::var(v, Sort::VF)), term::zero(Sort::VG));
}

inline Formula nonzero_e(const SymE& z) {
  return fml::lnot(fml::land(is_zero(z.x), is_zero(z.y)));
}

}  // namespace detail

inline DefinableSet s_n(int n) {
  std::vector<Formula> ks;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ks.push_back(detail::is_zero(detail::Poly::var(detail::xn(i, j))));
  return DefinableSet::make(detail::matrix_signature(n), fml::land(ks));
}

inline DefinableSet s_n_integral(int n) {
  std::vector<Formula> ks{s_n(n).formula};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ks.push_back(detail::ord_nonneg(detail::yn(i, j)));
  return DefinableSet::make(detail::matrix_signature(n), fml::land(ks));
}

inline DefinableSet u_n(int n) {
  using detail::Poly;
  std::vector<Formula> ks;
  for (int i = 0; i < n; ++i) {
    ks.push_back(detail::is_zero(Poly::var(detail::xn(i, i))));
    for (int j = i + 1; j < n; ++j) {
      ks.push_back(detail::is_zero(Poly::var(detail::xn(i, j)) + Poly::var(detail::xn(j, i))));
      ks.push_back(detail::is_zero(Poly::var(detail::yn(i, j)) - Poly::var(detail::yn(j, i))));
    }
  }
  return DefinableSet::make(detail::matrix_signature(n), fml::land(ks));
}

inline DefinableSet u_n_integral(int n) {
  std::vector<Formula> ks{u_n(n).formula};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ks.push_back(detail::ord_nonneg(detail::xn(i, j)));
      ks.push_back(detail::ord_nonneg(detail::yn(i, j)));
    }
  return DefinableSet::make(detail::matrix_signature(n), fml::land(ks));
}

/// U_m for the identity Hermitian form: sigma(g)^T g = 1.
inline DefinableSet unitary_group(int m) {
  using namespace detail;
  auto g = sym_matrix(m);
  std::vector<Formula> ks;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      SymE s;
      for (int k = 0; k < m; ++k) {
        const SymE& a = g[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        s = add(s, mul({a.x, -a.y}, g[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]));
      }
      ks.push_back(is_zero(s.x - Poly::num(i == j ? 1 : 0)));
      if (i != j) ks.push_back(is_zero(s.y));
    }
  return DefinableSet::make(matrix_signature(m), fml::land(ks));
}

inline DefinableSet strongly_regular(int n) {
  using namespace detail;
  auto A = sym_matrix(n);
  std::vector<std::vector<std::vector<SymE>>> pw{std::vector<std::vector<SymE>>(static_cast<std::size_t>(n),
                                                                                std::vector<SymE>(static_cast<std::size_t>(n)))};
  for (int i = 0; i < n; ++i) pw[0][static_cast<std::size_t>(i)][static_cast<std::size_t>(i)].x = Poly::num(1);
  for (int k = 1; k < n; ++k) pw.push_back(sym_mul(pw.back(), A));
  std::vector<std::vector<SymE>> K(static_cast<std::size_t>(n)), R(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
    for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
      K[i].push_back(pw[j][i][0]);
      R[i].push_back(pw[i][0][j]);
    }
  return DefinableSet::make(matrix_signature(n), fml::land(nonzero_e(sym_det(K)), nonzero_e(sym_det(R))));
}

/// eps is a non-square unit.
inline DefinableSet lambda() {
  Term e = term::var("eps", Sort::VF);
  Term r = term::var("r", Sort::RF);
  Formula f = fml::land(fml::eq(term::ord(e), term::zero(Sort::VG)),
                        fml::lnot(fml::exists("r", Sort::RF, fml::eq(term::mul(r, r), term::ac(e)))));
  return DefinableSet::make({{"eps", Sort::VF}}, f);
}

/// x is a norm from E: exists a, b with a^2 - eps b^2 = x.
inline DefinableSet eta_norm() {
  Term a = term::var("a", Sort::VF), b = term::var("b", Sort::VF);
  Term lhs = term::sub(term::mul(a, a), term::mul(term::constant("eps"), term::mul(b, b)));
  Formula f = fml::exists("a", Sort::VF, fml::exists("b", Sort::VF, fml::eq(lhs, term::var("x", Sort::VF))));
  return DefinableSet::make({{"x", Sort::VF}}, f);
}

inline DefinableSet eta_parity() {
  Formula f = fml::congr(term::ord(term::var("x", Sort::VF)), term::zero(Sort::VG), 2);
  return DefinableSet::make({{"x", Sort::VF}}, f);
}

/// Named sets written to fixtures/<name>.dpf, in order.
inline std::vector<NamedSet> library() {
  auto parse1 = [](const std::string& text) { return parse_definitions(text).at(0); };
  std::vector<NamedSet> out{
      {"s_2", s_n(2)},
      {"s_3", s_n(3)},
      {"s_2_integral", s_n_integral(2)},
      {"s_3_integral", s_n_integral(3)},
      {"u_2", u_n(2)},
      {"u_3", u_n(3)},
      {"u_2_integral", u_n_integral(2)},
      {"u_3_integral", u_n_integral(3)},
      {"unitary_1", unitary_group(1)},
      {"unitary_2", unitary_group(2)},
      {"strongly_regular_2", strongly_regular(2)},
      {"strongly_regular_3", strongly_regular(3)},
      {"lambda", lambda()},
      {"eta_norm", eta_norm()},
      {"eta_parity", eta_parity()},
  };
  out.push_back(parse1("units(x:VF) := ord(x) == 0;"));
  out.push_back(parse1("ord_ge_2(x:VF) := ord(x) >= 2;"));
  out.push_back(parse1("cylinder(x:VF) := ord(x) >= 1 && ac(x) == 1;"));
  out.push_back(parse1("unit_squares(x:VF) := ord(x) == 0 && exists y:VF. y*y == x;"));
  out.push_back(parse1("gl_2(a:VF, b:VF, c:VF, d:VF) := ord(a*d - b*c) == 0;"));
  out.push_back(parse1("even_ord_pair(x:VF, y:VF) := ord(x) >= 0 && ord(y) >= 0 && congr(ord(x) + ord(y), 0, 2);"));
  return out;
}

/// Names of the volume quantities used by the transfer checks.
inline const std::vector<std::string>& volume_quantities() {
  static const std::vector<std::string> v{"units", "ord_ge_2", "cylinder", "unit_squares", "gl_2"};
  return v;
}

inline NamedSet get(const std::string& name) {
  for (auto& s : library())
    if (s.name == name) return s;
  fail(ErrorKind::InvalidArgument, "unknown fixture '" + name + "'");
}

/// Matched-pair fixtures: portable s_2 matrices; the unitary partner is
/// built per field by jr::match_unitary when "A_prime" is null.
inline std::map<std::string, std::string> pair_files() {
  auto pair = [](const std::string& a) {
    return "{\n  \"n\": 2,\n  \"A\": " + a + ",\n  \"A_prime\": null\n}\n";
  };
  return {
      {"pair_01.json", pair(R"([[[0, 1], [0, "pi^2"]], [[0, 1], [0, 2]]])")},
      {"pair_02.json", pair(R"([[[0, 1], [0, "pi"]], [[0, "pi"], [0, -1]]])")},
      {"pair_03.json", pair(R"([[[0, 2], [0, "pi^3"]], [[0, "pi"], [0, 1]]])")},
      {"pair_04.json", pair(R"([[[0, 1], [0, "pi^-1"]], [[0, "pi"], [0, 1]]])")},
      {"pair_05.json", pair(R"([[[0, "pi^-1"], [0, 1]], [[0, 1], [0, 1]]])")},
  };
}

/// File name -> contents for every .dpf fixture.
inline std::map<std::string, std::string> dpf_files() {
  std::map<std::string, std::string> out;
  for (auto& s : library()) out[s.name + ".dpf"] = print_definition(s.name, s.set) + "\n";
  return out;
}

}  // namespace dpkit::fixtures
