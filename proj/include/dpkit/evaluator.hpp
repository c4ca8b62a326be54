#pragma once

// Three-valued evaluation of DP formulas over a Structure.
//
// Formulas are lowered to a small IR whose leaves are three-valued constants
// or Presburger atoms. Value-group quantifiers stay symbolic and are decided
// by Cooper elimination; residue-field quantifiers are expanded; valued-field
// quantifiers are searched over cells w^v (u + O(w^k)) with symbolic tails
// beyond the search window.
//
// Anything not known exactly (digits lost to cancellation, ord of a ball)
// becomes a fresh universally quantified integer, so TRUE and FALSE are only
// reported when they hold for every completion.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/formula.hpp"
#include "dpkit/numeric.hpp"
#include "dpkit/presburger.hpp"
#include "dpkit/valued_field.hpp"

namespace dpkit {

enum class Truth { False, True, Unknown };

inline const char* to_string(Truth t) {
  switch (t) {
    case Truth::False: return "FALSE";
    case Truth::True: return "TRUE";
    case Truth::Unknown: return "UNKNOWN";
  }
  return "?";
}

inline Truth truth_of(bool b) { return b ? Truth::True : Truth::False; }
inline Truth truth_not(Truth t) {
  return t == Truth::Unknown ? t : (t == Truth::True ? Truth::False : Truth::True);
}
inline Truth truth_and(Truth a, Truth b) {
  if (a == Truth::False || b == Truth::False) return Truth::False;
  if (a == Truth::True && b == Truth::True) return Truth::True;
  return Truth::Unknown;
}
inline Truth truth_or(Truth a, Truth b) { return truth_not(truth_and(truth_not(a), truth_not(b))); }

struct EvalConfig {
  std::int64_t v_min = -6;
  std::int64_t v_max = 6;
  int vf_depth = 4;
  bool stability_check = true;
  std::size_t cell_budget = 200000;
  presburger::Options presburger;

  void validate() const {
    if (v_min > v_max) fail(ErrorKind::InvalidArgument, "vf_window needs v_min <= v_max");
    if (vf_depth < 1) fail(ErrorKind::InvalidArgument, "vf_depth must be >= 1");
  }
};

using Value = std::variant<VFE, ResidueElement, std::int64_t>;
using Assignment = std::map<std::string, Value>;

struct EvalResult {
  Truth value = Truth::Unknown;
  std::vector<std::string> certificate;
  std::size_t cells = 0;
};

namespace eval_detail {

using presburger::LinearTerm;
namespace pb = presburger;

// ---- polynomials with valued-field coefficients --------------------------

using Monomial = std::vector<std::pair<std::string, int>>;

struct Poly {
  std::map<Monomial, VFE> terms;

  static Poly constant(const VFE& c) {
    Poly p;
    if (!c.is_zero()) p.terms[{}] = c;
    return p;
  }
  static Poly variable(const std::string& v, const Structure& S) {
    Poly p;
    p.terms[{{v, 1}}] = S.one();
    return p;
  }

  bool is_constant() const { return terms.empty() || (terms.size() == 1 && terms.begin()->first.empty()); }
  VFE constant_value(const Structure& S) const { return terms.empty() ? S.zero() : terms.begin()->second; }

  void accumulate(const Monomial& m, const VFE& c) {
    auto it = terms.find(m);
    VFE s = it == terms.end() ? c : it->second + c;
    if (s.is_zero()) {
      if (it != terms.end()) terms.erase(it);
    } else {
      terms[m] = s;
    }
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    Poly r = a;
    for (auto& [m, c] : b.terms) r.accumulate(m, c);
    return r;
  }
  friend Poly operator-(const Poly& a) {
    Poly r;
    for (auto& [m, c] : a.terms) r.terms[m] = -c;
    return r;
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly r;
    for (auto& [ma, ca] : a.terms)
      for (auto& [mb, cb] : b.terms) {
        std::map<std::string, int> e;
        for (auto& [v, k] : ma) e[v] += k;
        for (auto& [v, k] : mb) e[v] += k;
        r.accumulate(Monomial(e.begin(), e.end()), ca * cb);
      }
    return r;
  }

  std::set<std::string> variables() const {
    std::set<std::string> vs;
    for (auto& [m, _] : terms)
      for (auto& [v, k] : m) vs.insert(v);
    return vs;
  }

  /// Coefficient of v^i in a polynomial in the single variable v.
  std::map<int, VFE> by_degree(const std::string& v) const {
    std::map<int, VFE> out;
    for (auto& [m, c] : terms) {
      int d = 0;
      for (auto& [x, k] : m)
        if (x == v) d = k;
      out.emplace(d, c);
    }
    return out;
  }
};

// ---- IR -------------------------------------------------------------------

struct Fresh {
  std::string name;
  std::int64_t lo;
  std::optional<std::int64_t> hi;
};

struct IR;
using IRp = std::shared_ptr<const IR>;

struct IR {
  enum class K { Const, Atom, Not, And, Or, Ex, All } k;
  Truth t = Truth::Unknown;
  pb::Formula pf;
  std::vector<Fresh> fresh;
  std::string sym;
  std::vector<IRp> kids;
};

inline IRp ir_const(Truth t) {
  static const IRp T = std::make_shared<const IR>(IR{IR::K::Const, Truth::True, nullptr, {}, {}, {}});
  static const IRp F = std::make_shared<const IR>(IR{IR::K::Const, Truth::False, nullptr, {}, {}, {}});
  static const IRp U = std::make_shared<const IR>(IR{IR::K::Const, Truth::Unknown, nullptr, {}, {}, {}});
  return t == Truth::True ? T : t == Truth::False ? F : U;
}

inline bool is_const(const IRp& n) { return n->k == IR::K::Const; }

inline IRp ir_not(IRp a) {
  if (is_const(a)) return ir_const(truth_not(a->t));
  return std::make_shared<const IR>(IR{IR::K::Not, Truth::Unknown, nullptr, {}, {}, {std::move(a)}});
}

// Kleene folding: a decided short-circuit constant wins; otherwise constants
// that cannot affect the result are dropped.
inline IRp ir_junction(bool conj, std::vector<IRp> ks) {
  Truth absorbing = conj ? Truth::False : Truth::True;
  Truth neutral = conj ? Truth::True : Truth::False;
  std::vector<IRp> keep;
  bool unknown = false;
  for (auto& k : ks) {
    if (is_const(k)) {
      if (k->t == absorbing) return ir_const(absorbing);
      if (k->t == Truth::Unknown) unknown = true;
      continue;
    }
    keep.push_back(k);
  }
  if (keep.empty()) return ir_const(unknown ? Truth::Unknown : neutral);
  if (unknown) keep.push_back(ir_const(Truth::Unknown));
  if (keep.size() == 1) return keep[0];
  return std::make_shared<const IR>(IR{conj ? IR::K::And : IR::K::Or, Truth::Unknown, nullptr, {}, {}, std::move(keep)});
}

inline IRp ir_quant(bool ex, const std::string& sym, IRp body) {
  if (is_const(body)) return body;
  return std::make_shared<const IR>(IR{ex ? IR::K::Ex : IR::K::All, Truth::Unknown, nullptr, {}, sym, {std::move(body)}});
}

inline pb::Formula guard_of(const std::vector<Fresh>& fr) {
  std::vector<pb::Formula> gs;
  for (auto& f : fr) {
    gs.push_back(pb::ge(LinearTerm::var(f.name), LinearTerm(f.lo)));
    if (f.hi) gs.push_back(pb::ge(LinearTerm(*f.hi), LinearTerm::var(f.name)));
  }
  if (gs.empty()) return pb::top();
  return pb::nary(pb::Kind::And, std::move(gs));
}

/// Exact truth of a Presburger formula whose fresh variables range over
/// their guards: TRUE/FALSE when the answer is the same for all of them.
inline Truth decide_universal(const pb::Formula& f, const std::vector<Fresh>& fresh, const pb::Options& o) {
  if (fresh.empty()) return truth_of(pb::decide(f, {}, o));
  pb::Formula g = guard_of(fresh);
  auto close = [&](pb::Formula body) {
    pb::Formula r = pb::lor(pb::lnot(g), std::move(body));
    for (auto it = fresh.rbegin(); it != fresh.rend(); ++it) r = pb::forall(it->name, r);
    return r;
  };
  if (pb::decide(close(f), {}, o)) return Truth::True;
  if (pb::decide(close(pb::lnot(f)), {}, o)) return Truth::False;
  return Truth::Unknown;
}

class Resolver {
 public:
  explicit Resolver(const pb::Options& o) : opts_(o) {}

  Truth eval3(const IRp& n) {
    switch (n->k) {
      case IR::K::Const: return n->t;
      case IR::K::Not: return truth_not(eval3(n->kids[0]));
      case IR::K::And:
      case IR::K::Or: {
        bool conj = n->k == IR::K::And;
        Truth acc = conj ? Truth::True : Truth::False;
        for (auto& k : n->kids) {
          Truth t = eval3(k);
          acc = conj ? truth_and(acc, t) : truth_or(acc, t);
          if (acc == (conj ? Truth::False : Truth::True)) break;
        }
        return acc;
      }
      default: {
        std::vector<Fresh> fresh;
        pb::Formula f = to_pf(n, fresh);
        return decide_universal(f, fresh, opts_);
      }
    }
  }

 private:
  pb::Formula to_pf(const IRp& n, std::vector<Fresh>& fresh) {
    switch (n->k) {
      case IR::K::Const:
        if (n->t == Truth::Unknown) {
          std::string u = "?u" + std::to_string(counter_++);
          fresh.push_back({u, 0, 1});
          return pb::ge(LinearTerm::var(u), LinearTerm(1));
        }
        return pb::boolean(n->t == Truth::True);
      case IR::K::Atom:
        fresh.insert(fresh.end(), n->fresh.begin(), n->fresh.end());
        return n->pf;
      case IR::K::Not: return pb::lnot(to_pf(n->kids[0], fresh));
      case IR::K::And:
      case IR::K::Or: {
        std::vector<pb::Formula> ks;
        for (auto& k : n->kids) ks.push_back(to_pf(k, fresh));
        return pb::nary(n->k == IR::K::And ? pb::Kind::And : pb::Kind::Or, std::move(ks));
      }
      case IR::K::Ex: return pb::exists(n->sym, to_pf(n->kids[0], fresh));
      case IR::K::All: return pb::forall(n->sym, to_pf(n->kids[0], fresh));
    }
    return pb::bottom();
  }

  pb::Options opts_;
  int counter_ = 0;
};

// ---- environments -----------------------------------------------------------

struct Tail {
  std::string vsym;  // symbolic valuation of the bound variable
  std::uint32_t u0;  // its angular component
  bool upper;        // v -> +infinity side (else -infinity)
};

struct VFBind {
  std::optional<VFE> value;
  std::optional<Tail> tail;
};

struct Env {
  std::map<std::string, VFBind> vf;
  std::map<std::string, std::uint32_t> rf;
  std::map<std::string, LinearTerm> vg;
};

// ord(ball) contributes coeff * (INFINITY or w with w >= lo).
struct BallOcc {
  std::int64_t lo;
  std::int64_t coeff;
};

// Value-group values live in Z*INF + Z (lexicographic), so ord(0) behaves as
// a top element while staying linear.
struct VGVal {
  std::int64_t inf = 0;
  LinearTerm fin;
  std::vector<BallOcc> balls;

  bool is_constant() const { return inf == 0 && fin.coeffs.empty() && balls.empty(); }

  friend VGVal operator+(VGVal a, const VGVal& b) {
    a.inf = pb::checked_add(a.inf, b.inf);
    a.fin = a.fin + b.fin;
    a.balls.insert(a.balls.end(), b.balls.begin(), b.balls.end());
    return a;
  }
  friend VGVal operator*(std::int64_t k, VGVal a) {
    a.inf = pb::checked_mul(k, a.inf);
    a.fin = k * a.fin;
    for (auto& b : a.balls) b.coeff = pb::checked_mul(k, b.coeff);
    return a;
  }
};

struct TermUnknown {};

}  // namespace eval_detail

/// Evaluation engine; one instance per top-level query.
class Evaluator {
 public:
  Evaluator(const Structure& S, EvalConfig cfg = {}) : S_(S), cfg_(std::move(cfg)) { cfg_.validate(); }

  EvalResult evaluate(const Formula& f, const Assignment& point) {
    eval_detail::Env env;
    for (auto& [name, sort] : free_signature(f)) {
      auto it = point.find(name);
      if (it == point.end()) fail(ErrorKind::SignatureMismatch, "no value for free variable '" + name + "'");
      const Value& v = it->second;
      switch (sort) {
        case Sort::VF: {
          auto* x = std::get_if<VFE>(&v);
          if (!x) fail(ErrorKind::SignatureMismatch, "'" + name + "' needs a VF value");
          if (x->backend() != S_.backend || x->prime() != S_.p)
            fail(ErrorKind::BackendMismatch, "value of '" + name + "' does not belong to " + S_.spec());
          env.vf[name] = {*x, std::nullopt};
          break;
        }
        case Sort::RF: {
          std::uint32_t r = 0;
          if (auto* re = std::get_if<ResidueElement>(&v)) {
            if (re->modulus != S_.p) fail(ErrorKind::BackendMismatch, "residue of '" + name + "' has the wrong modulus");
            r = re->value;
          } else if (auto* iv = std::get_if<std::int64_t>(&v)) {
            r = static_cast<std::uint32_t>(mod_floor(*iv, S_.p));
          } else {
            fail(ErrorKind::SignatureMismatch, "'" + name + "' needs an RF value");
          }
          env.rf[name] = r;
          break;
        }
        case Sort::VG: {
          auto* iv = std::get_if<std::int64_t>(&v);
          if (!iv) fail(ErrorKind::SignatureMismatch, "'" + name + "' needs a VG integer");
          env.vg[name] = eval_detail::LinearTerm(*iv);
          break;
        }
      }
    }
    depth_ = 0;
    EvalResult r;
    r.value = eval(f, env);
    r.certificate = notes_;
    r.cells = cells_;
    if (budget_hit_) r.certificate.push_back("cell budget exhausted");
    return r;
  }

 private:
  using Env = eval_detail::Env;
  using IRp = eval_detail::IRp;
  using Poly = eval_detail::Poly;
  using VGVal = eval_detail::VGVal;
  using LinearTerm = eval_detail::LinearTerm;

  Truth eval(const Formula& f, Env& env) {
    IRp ir = lower(f, env);
    eval_detail::Resolver res(cfg_.presburger);
    return res.eval3(ir);
  }

  // ---- terms ------------------------------------------------------------

  Poly vf_poly(const Term& t, const Env& env) const {
    switch (t->kind) {
      case TermKind::Var: {
        auto it = env.vf.find(t->name);
        if (it == env.vf.end() || it->second.tail) return Poly::variable(t->name, S_);
        return Poly::constant(*it->second.value);
      }
      case TermKind::Int: return Poly::constant(S_.integer(t->value));
      case TermKind::Const: return Poly::constant(S_.constant(t->name));
      case TermKind::Add: return vf_poly(t->args[0], env) + vf_poly(t->args[1], env);
      case TermKind::Sub: return vf_poly(t->args[0], env) + (-vf_poly(t->args[1], env));
      case TermKind::Neg: return -vf_poly(t->args[0], env);
      case TermKind::Mul: return vf_poly(t->args[0], env) * vf_poly(t->args[1], env);
      default: fail(ErrorKind::SortError, "non-VF term in VF position: " + print(t));
    }
  }

  // The tail variable bound in env among the polynomial's variables.
  const eval_detail::Tail* tail_of(const Poly& P, const Env& env, std::string& var) const {
    for (auto& v : P.variables()) {
      auto it = env.vf.find(v);
      if (it != env.vf.end() && it->second.tail) {
        var = v;
        return &*it->second.tail;
      }
      throw eval_detail::TermUnknown{};
    }
    return nullptr;
  }

  // Dominant monomial of P on a tail, recording the valuation threshold from
  // which that monomial strictly dominates. nullopt when P is identically 0.
  std::optional<std::pair<VFE, int>> dominant(const Poly& P, const std::string& var, const eval_detail::Tail& tl) {
    auto coeffs = P.by_degree(var);
    if (coeffs.empty()) return std::nullopt;
    auto pick = tl.upper ? coeffs.begin() : std::prev(coeffs.end());
    const VFE& c0 = pick->second;
    int i0 = pick->first;
    if (!c0.is_nonzero()) throw eval_detail::TermUnknown{};
    std::int64_t o0 = c0.valuation().value();
    for (auto& [j, c] : coeffs) {
      if (j == i0) continue;
      std::int64_t lb = c.valuation().value();
      if (tl.upper) {
        std::int64_t t = presburger::detail::floor_div(o0 - lb, j - i0) + 1;
        need_upper_ = std::max(need_upper_, t);
      } else {
        std::int64_t num = lb - o0, den = i0 - j;
        std::int64_t t = -presburger::detail::floor_div(-num, den) - 1;
        need_lower_ = std::min(need_lower_, t);
      }
    }
    return std::make_pair(c0, i0);
  }

  std::optional<std::uint32_t> rf_value(const Term& t, const Env& env) {
    std::uint32_t p = S_.p;
    switch (t->kind) {
      case TermKind::Var: return env.rf.at(t->name);
      case TermKind::Int: return static_cast<std::uint32_t>(mod_floor(t->value, p));
      case TermKind::Add:
      case TermKind::Sub: {
        auto a = rf_value(t->args[0], env), b = rf_value(t->args[1], env);
        if (!a || !b) return std::nullopt;
        return t->kind == TermKind::Add ? (*a + *b) % p : (*a + p - *b) % p;
      }
      case TermKind::Neg: {
        auto a = rf_value(t->args[0], env);
        if (!a) return std::nullopt;
        return (p - *a) % p;
      }
      case TermKind::Mul: {
        auto a = rf_value(t->args[0], env), b = rf_value(t->args[1], env);
        if ((a && *a == 0) || (b && *b == 0)) return 0u;
        if (!a || !b) return std::nullopt;
        return static_cast<std::uint32_t>(static_cast<std::uint64_t>(*a) * *b % p);
      }
      case TermKind::Ac: {
        Poly P = vf_poly(t->args[0], env);
        std::string var;
        if (auto* tl = tail_of(P, env, var)) {
          auto d = dominant(P, var, *tl);
          if (!d) return 0u;
          std::uint64_t r = *d->first.leading_digit();
          r = r * pow_mod(tl->u0, static_cast<std::uint64_t>(d->second), p) % p;
          return static_cast<std::uint32_t>(r);
        }
        VFE c = P.constant_value(S_);
        return c.leading_digit();
      }
      default: fail(ErrorKind::SortError, "non-RF term in RF position: " + print(t));
    }
  }

  VGVal vg_value(const Term& t, const Env& env) {
    switch (t->kind) {
      case TermKind::Var: return VGVal{0, env.vg.at(t->name), {}};
      case TermKind::Int: return VGVal{0, LinearTerm(t->value), {}};
      case TermKind::Add: return vg_value(t->args[0], env) + vg_value(t->args[1], env);
      case TermKind::Sub: return vg_value(t->args[0], env) + (-1) * vg_value(t->args[1], env);
      case TermKind::Neg: return (-1) * vg_value(t->args[0], env);
      case TermKind::Mul: {
        VGVal a = vg_value(t->args[0], env), b = vg_value(t->args[1], env);
        if (a.is_constant()) return a.fin.constant * b;
        if (b.is_constant()) return b.fin.constant * a;
        fail(ErrorKind::SortError, "non-linear value-group product: " + print(t));
      }
      case TermKind::Ord: {
        Poly P = vf_poly(t->args[0], env);
        std::string var;
        if (auto* tl = tail_of(P, env, var)) {
          auto d = dominant(P, var, *tl);
          if (!d) return VGVal{1, {}, {}};
          LinearTerm lt = LinearTerm(d->first.valuation().value()) + LinearTerm::var(tl->vsym, d->second);
          return VGVal{0, lt, {}};
        }
        VFE c = P.constant_value(S_);
        if (c.is_zero()) return VGVal{1, {}, {}};
        if (c.is_ball()) return VGVal{0, {}, {{c.valuation().value(), 1}}};
        return VGVal{0, LinearTerm(c.valuation().value()), {}};
      }
      default: fail(ErrorKind::SortError, "non-VG term in VG position: " + print(t));
    }
  }

  // ---- atoms ------------------------------------------------------------

  // Each side is +INF, -INF or finite by the sign of its INF count; INF
  // absorbs finite summands. Congruences never hold on an infinite side.
  static presburger::Formula vg_atom(FormulaKind k, std::int64_t inf_l, std::int64_t inf_r, const LinearTerm& fin,
                                     std::int64_t d) {
    namespace pb = presburger;
    int sl = (inf_l > 0) - (inf_l < 0), sr = (inf_r > 0) - (inf_r < 0);
    if (sl != 0 || sr != 0) {
      switch (k) {
        case FormulaKind::Geq: return pb::boolean(sl >= sr);
        case FormulaKind::Eq: return pb::boolean(sl == sr);
        default: return pb::bottom();
      }
    }
    switch (k) {
      case FormulaKind::Geq: return pb::ge(fin, LinearTerm(0));
      case FormulaKind::Eq: return pb::eq(fin, LinearTerm(0));
      default: return pb::congr(fin, LinearTerm(0), d);
    }
  }

  IRp lower_vg_atom(const Formula& f, const Env& env) {
    namespace pb = presburger;
    VGVal lhs = vg_value(f->lhs, env), rhs = vg_value(f->rhs, env);
    std::size_t nl = lhs.balls.size();
    VGVal diff = lhs + (-1) * rhs;
    std::size_t nb = diff.balls.size();
    if (nb > 8) return eval_detail::ir_const(Truth::Unknown);
    std::vector<std::string> w(nb), z(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      w[k] = "?w" + std::to_string(fresh_++);
      z[k] = "?z" + std::to_string(fresh_++);
    }
    auto branch = [&](std::size_t mask) {
      std::int64_t inf_l = lhs.inf, inf_r = rhs.inf;
      LinearTerm fin = diff.fin;
      for (std::size_t k = 0; k < nb; ++k) {
        if (mask >> k & 1) {
          // diff.balls lists lhs occurrences first, then negated rhs ones.
          if (k < nl) inf_l = pb::checked_add(inf_l, diff.balls[k].coeff);
          else inf_r = pb::checked_add(inf_r, -diff.balls[k].coeff);
        } else {
          fin = fin + LinearTerm::var(w[k], diff.balls[k].coeff);
        }
      }
      return vg_atom(f->kind, inf_l, inf_r, fin, f->modulus);
    };
    bool symbolic = !diff.fin.coeffs.empty();
    if (!symbolic) {
      Truth acc = Truth::Unknown;
      bool first = true;
      for (std::size_t mask = 0; mask < (std::size_t{1} << nb); ++mask) {
        std::vector<eval_detail::Fresh> fr;
        for (std::size_t k = 0; k < nb; ++k)
          if (!(mask >> k & 1)) fr.push_back({w[k], diff.balls[k].lo, std::nullopt});
        Truth t = eval_detail::decide_universal(branch(mask), fr, cfg_.presburger);
        if (first) acc = t;
        else if (acc != t) acc = Truth::Unknown;
        first = false;
        if (acc == Truth::Unknown) break;
      }
      return eval_detail::ir_const(acc);
    }
    if (nb == 0) {
      return std::make_shared<const eval_detail::IR>(
          eval_detail::IR{eval_detail::IR::K::Atom, Truth::Unknown, branch(0), {}, {}, {}});
    }
    std::vector<pb::Formula> alts;
    std::vector<eval_detail::Fresh> fr;
    for (std::size_t k = 0; k < nb; ++k) {
      fr.push_back({w[k], diff.balls[k].lo, std::nullopt});
      fr.push_back({z[k], 0, 1});
    }
    for (std::size_t mask = 0; mask < (std::size_t{1} << nb); ++mask) {
      std::vector<pb::Formula> sel{branch(mask)};
      for (std::size_t k = 0; k < nb; ++k) {
        if (mask >> k & 1) sel.push_back(pb::ge(LinearTerm::var(z[k]), LinearTerm(1)));
        else sel.push_back(pb::ge(LinearTerm(0), LinearTerm::var(z[k])));
      }
      alts.push_back(pb::nary(pb::Kind::And, std::move(sel)));
    }
    return std::make_shared<const eval_detail::IR>(eval_detail::IR{
        eval_detail::IR::K::Atom, Truth::Unknown, pb::nary(pb::Kind::Or, std::move(alts)), fr, {}, {}});
  }

  Truth vf_equal(const Term& a, const Term& b, const Env& env) {
    Poly P = vf_poly(a, env) + (-vf_poly(b, env));
    std::string var;
    if (auto* tl = tail_of(P, env, var)) return truth_of(!dominant(P, var, *tl));
    VFE d = P.constant_value(S_);
    if (d.is_zero()) return Truth::True;
    if (d.is_nonzero()) return Truth::False;
    return Truth::Unknown;
  }

  // ---- formulas ------------------------------------------------------------

  IRp lower(const Formula& f, Env& env) {
    using eval_detail::ir_const;
    switch (f->kind) {
      case FormulaKind::True: return ir_const(Truth::True);
      case FormulaKind::False: return ir_const(Truth::False);
      case FormulaKind::Eq:
        try {
          if (f->sort == Sort::VF) return ir_const(vf_equal(f->lhs, f->rhs, env));
          if (f->sort == Sort::RF) {
            auto a = rf_value(f->lhs, env), b = rf_value(f->rhs, env);
            if (!a || !b) return ir_const(Truth::Unknown);
            return ir_const(truth_of(*a == *b));
          }
          return lower_vg_atom(f, env);
        } catch (const eval_detail::TermUnknown&) {
          return ir_const(Truth::Unknown);
        }
      case FormulaKind::Geq:
      case FormulaKind::Congr:
        try {
          return lower_vg_atom(f, env);
        } catch (const eval_detail::TermUnknown&) {
          return ir_const(Truth::Unknown);
        }
      case FormulaKind::Not: return eval_detail::ir_not(lower(f->kids[0], env));
      case FormulaKind::And:
      case FormulaKind::Or: {
        bool conj = f->kind == FormulaKind::And;
        std::vector<IRp> ks;
        for (auto& k : f->kids) {
          ks.push_back(settle_closed_atom(lower(k, env)));
          if (eval_detail::is_const(ks.back()) && ks.back()->t == (conj ? Truth::False : Truth::True)) break;
        }
        return eval_detail::ir_junction(conj, std::move(ks));
      }
      case FormulaKind::Exists:
      case FormulaKind::Forall: {
        bool ex = f->kind == FormulaKind::Exists;
        switch (f->sort) {
          case Sort::VG: {
            std::string sym = "g" + std::to_string(fresh_++) + "_" + f->var;
            auto saved = env.vg.find(f->var) == env.vg.end() ? std::nullopt : std::optional<LinearTerm>(env.vg[f->var]);
            env.vg[f->var] = LinearTerm::var(sym);
            IRp body = lower(f->kids[0], env);
            if (saved) env.vg[f->var] = *saved;
            else env.vg.erase(f->var);
            return eval_detail::ir_quant(ex, sym, body);
          }
          case Sort::RF: {
            auto saved = env.rf.find(f->var) == env.rf.end() ? std::nullopt : std::optional<std::uint32_t>(env.rf[f->var]);
            std::vector<IRp> ks;
            for (std::uint32_t r = 0; r < S_.p; ++r) {
              env.rf[f->var] = r;
              ks.push_back(lower(f->kids[0], env));
              if (eval_detail::is_const(ks.back()) && ks.back()->t == (ex ? Truth::True : Truth::False)) break;
            }
            if (saved) env.rf[f->var] = *saved;
            else env.rf.erase(f->var);
            return eval_detail::ir_junction(!ex, std::move(ks));
          }
          case Sort::VF: return ir_const(vf_quantifier(f, env));
        }
      }
    }
    return ir_const(Truth::Unknown);
  }

  // An atom over fresh variables only is decided now so that a conjunction
  // can stop before evaluating later (possibly expensive) conjuncts.
  eval_detail::IRp settle_closed_atom(eval_detail::IRp n) {
    if (n->k != eval_detail::IR::K::Atom) return n;
    for (auto& v : presburger::free_vars(n->pf))
      if (std::none_of(n->fresh.begin(), n->fresh.end(), [&](auto& fr) { return fr.name == v; })) return n;
    eval_detail::Resolver res(cfg_.presburger);
    Truth t = res.eval3(n);
    return t == Truth::Unknown ? n : eval_detail::ir_const(t);
  }

  // ---- valued-field quantifiers -----------------------------------------

  bool depends_on_symbols(const Formula& f, const Env& env) const {
    for (auto& [n, s] : free_signature(f)) {
      if (s == Sort::VG) {
        auto it = env.vg.find(n);
        if (it != env.vg.end() && !it->second.coeffs.empty()) return true;
      }
      if (s == Sort::VF) {
        auto it = env.vf.find(n);
        if (it != env.vf.end() && it->second.tail) return true;
      }
    }
    return false;
  }

  std::string env_key(const Formula& f, const Env& env) const {
    std::ostringstream os;
    os << f.get();
    for (auto& [n, s] : free_signature(f)) {
      os << '|' << n << '=';
      if (s == Sort::VF) os << env.vf.at(n).value->literal();
      else if (s == Sort::RF) os << env.rf.at(n);
      else os << env.vg.at(n).str();
    }
    return os.str();
  }

  Truth vf_quantifier(const Formula& f, Env& env) {
    if (depends_on_symbols(f, env)) return Truth::Unknown;
    std::string key = env_key(f, env);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    ++depth_;
    Truth r;
    try {
      if (f->kind == FormulaKind::Exists) {
        r = search_exists(f->var, f->kids[0], env);
      } else {
        Formula neg = f->kids[0]->kind == FormulaKind::Not ? f->kids[0]->kids[0] : fml::lnot(f->kids[0]);
        r = truth_not(search_exists(f->var, neg, env));
      }
    } catch (...) {
      --depth_;
      throw;
    }
    --depth_;
    memo_[key] = r;
    return r;
  }

  void note(const std::string& s) {
    if (depth_ == 1) notes_.push_back(s);
  }

  static bool is_square_class(const VFE& u, std::uint32_t p) {
    return u.valuation().value() % 2 == 0 && legendre(*u.leading_digit(), p) == 1;
  }

  int hilbert(const VFE& a, const VFE& b) const {
    std::int64_t al = a.valuation().value(), be = b.valuation().value();
    int s = 1;
    if ((al & 1) && (be & 1) && ((S_.p - 1) / 2 % 2 == 1)) s = -s;
    if (be & 1) s *= legendre(*a.leading_digit(), S_.p);
    if (al & 1) s *= legendre(*b.leading_digit(), S_.p);
    return s;
  }

  // Closed-form answers for polynomial equations of degree <= 2 in one
  // variable and for diagonal binary quadratic forms.
  std::optional<Truth> fast_path(const std::string& y, const Formula& body, Env& env) {
    if (body->kind == FormulaKind::Eq && body->sort == Sort::VF) {
      Poly P = vf_poly(body->lhs, env) + (-vf_poly(body->rhs, env));
      for (auto& v : P.variables())
        if (v != y) return std::nullopt;
      auto c = P.by_degree(y);
      if (c.empty()) { note("identically zero equation"); return Truth::True; }
      int deg = c.rbegin()->first;
      if (deg > 2 || !c.rbegin()->second.is_nonzero()) return std::nullopt;
      auto coef = [&](int i) { return c.count(i) ? c.at(i) : S_.zero(); };
      if (deg == 0) return Truth::False;
      if (deg == 1) {
        // The root must lie inside the search window, like any other witness.
        VFE c0 = coef(0);
        std::int64_t v = c0.is_zero() ? 0 : c0.valuation().value() - coef(1).valuation().value();
        if (c0.is_ball() || v < cfg_.v_min || v > cfg_.v_max) return std::nullopt;
        note("linear equation with root of valuation " + std::to_string(v));
        return Truth::True;
      }
      VFE D = coef(1) * coef(1) - S_.integer(4) * coef(2) * coef(0);
      if (D.is_zero()) { note("double root"); return Truth::True; }
      if (D.is_ball()) return std::nullopt;
      bool sq = is_square_class(D, S_.p);
      note(std::string("discriminant ") + (sq ? "is" : "is not") + " a square (ord parity and residue character)");
      return truth_of(sq);
    }
    if (body->kind == FormulaKind::Exists && body->sort == Sort::VF && body->kids[0]->kind == FormulaKind::Eq &&
        body->kids[0]->sort == Sort::VF) {
      const std::string& z = body->var;
      if (z == y) return std::nullopt;
      auto saved = env.vf.find(z) == env.vf.end() ? std::nullopt : std::optional<eval_detail::VFBind>(env.vf[z]);
      env.vf.erase(z);
      const Formula& eq = body->kids[0];
      Poly P = vf_poly(eq->lhs, env) + (-vf_poly(eq->rhs, env));
      if (saved) env.vf[z] = *saved;
      Monomial yy{{y, 2}}, zz{{z, 2}}, one{};
      for (auto& [m, _] : P.terms)
        if (m != yy && m != zz && m != one) return std::nullopt;
      if (!P.terms.count(yy) || !P.terms.count(zz)) return std::nullopt;
      VFE A = P.terms.at(yy), B = P.terms.at(zz);
      VFE C = P.terms.count(one) ? P.terms.at(one) : S_.zero();
      if (!A.is_nonzero() || !B.is_nonzero() || C.is_ball()) return std::nullopt;
      if (C.is_zero()) { note("binary form represents 0 trivially"); return Truth::True; }
      int h = hilbert(-A * C, -B * C);
      note("Hilbert symbol " + std::to_string(h));
      return truth_of(h == 1);
    }
    return std::nullopt;
  }

  using Monomial = eval_detail::Monomial;

  bool spend() {
    if (budget_hit_) return false;
    if (++cells_ > cfg_.cell_budget) {
      budget_hit_ = true;
      return false;
    }
    return true;
  }

  // Evaluates body with y bound to a cell; refines UNKNOWN cells.
  // Returns TRUE on a witness; otherwise reports whether everything was refuted.
  Truth explore(const std::string& y, const Formula& body, Env& env, std::int64_t v, std::vector<std::uint32_t>& digits,
                bool& unresolved) {
    if (!spend()) {
      unresolved = true;
      return Truth::Unknown;
    }
    int k = static_cast<int>(digits.size());
    VFE cell = VFE::from_digits(S_.backend, S_.p, v, digits, k, S_.precision);
    env.vf[y] = {cell, std::nullopt};
    Truth t = eval(body, env);
    if (t == Truth::True) {
      if (cfg_.stability_check) {
        env.vf[y] = {cell.exact_representative(), std::nullopt};
        if (eval(body, env) == Truth::False)
          fail(ErrorKind::InvariantMismatch, "cell verdict contradicted by its representative");
      }
      note("witness " + y + " in " + cell.literal());
      return Truth::True;
    }
    if (t == Truth::False) return Truth::False;
    if (k < cfg_.vf_depth) {
      for (std::uint32_t d = 0; d < S_.p; ++d) {
        digits.push_back(d);
        Truth c = explore(y, body, env, v, digits, unresolved);
        digits.pop_back();
        if (c == Truth::True) return c;
      }
      return Truth::False;
    }
    VFE point = cell.exact_representative();
    env.vf[y] = {point, std::nullopt};
    if (eval(body, env) == Truth::True) {
      note("witness " + y + " = " + point.str());
      return Truth::True;
    }
    unresolved = true;
    return Truth::Unknown;
  }

  Truth search_exists(const std::string& y, const Formula& body, Env& env) {
    auto saved = env.vf.find(y) == env.vf.end() ? std::nullopt : std::optional<eval_detail::VFBind>(env.vf[y]);
    auto restore = [&] {
      if (saved) env.vf[y] = *saved;
      else env.vf.erase(y);
    };
    env.vf.erase(y);
    std::optional<Truth> fp;
    try {
      fp = fast_path(y, body, env);
    } catch (...) {
      restore();
      throw;
    }
    if (fp) {
      restore();
      return *fp;
    }
    if (budget_hit_) {
      restore();
      return Truth::Unknown;
    }

    Truth result = Truth::False;
    bool unresolved = false;
    try {
      env.vf[y] = {S_.zero(), std::nullopt};
      if (eval(body, env) == Truth::True) {
        note("witness " + y + " = 0");
        restore();
        return Truth::True;
      }
      for (std::int64_t v = cfg_.v_min; v <= cfg_.v_max; ++v) {
        for (std::uint32_t u = 1; u < S_.p; ++u) {
          std::vector<std::uint32_t> digits{u};
          if (explore(y, body, env, v, digits, unresolved) == Truth::True) {
            restore();
            return Truth::True;
          }
        }
      }
      if (unresolved) {
        restore();
        return Truth::Unknown;
      }
      // Every cell in the window is refuted; certify the two tails.
      for (bool upper : {true, false}) {
        for (std::uint32_t u = 1; u < S_.p; ++u) {
          Truth t = tail(y, body, env, upper, u);
          if (t == Truth::True) {
            restore();
            return Truth::True;
          }
          if (t == Truth::Unknown) result = Truth::Unknown;
        }
        if (result == Truth::Unknown) break;
      }
    } catch (...) {
      restore();
      throw;
    }
    restore();
    if (result == Truth::False) note("refuted on window [" + std::to_string(cfg_.v_min) + ", " + std::to_string(cfg_.v_max) + "] with monomial-dominance tails");
    else note("window could not be certified sufficient");
    return result;
  }

  // Decides the body on {y : ord(y) beyond the window, ac(y) = u}, where
  // every term of the body is dominated by a single monomial in y.
  Truth tail(const std::string& y, const Formula& body, Env& env, bool upper, std::uint32_t u) {
    namespace pb = presburger;
    std::string vs = "?v" + std::to_string(fresh_++);
    env.vf[y] = {std::nullopt, eval_detail::Tail{vs, u, upper}};
    std::int64_t su = need_upper_, sl = need_lower_;
    need_upper_ = INT64_MIN;
    need_lower_ = INT64_MAX;
    IRp ir = lower(body, env);
    std::int64_t nu = need_upper_, nl = need_lower_;
    need_upper_ = su;
    need_lower_ = sl;
    if (upper && nu > cfg_.v_max + 1) return Truth::Unknown;
    if (!upper && nl < cfg_.v_min - 1) return Truth::Unknown;
    pb::Formula range = upper ? pb::ge(LinearTerm::var(vs), LinearTerm(cfg_.v_max + 1))
                              : pb::ge(LinearTerm(cfg_.v_min - 1), LinearTerm::var(vs));
    IRp guard = std::make_shared<const eval_detail::IR>(
        eval_detail::IR{eval_detail::IR::K::Atom, Truth::Unknown, range, {}, {}, {}});
    IRp q = std::make_shared<const eval_detail::IR>(eval_detail::IR{
        eval_detail::IR::K::Ex, Truth::Unknown, nullptr, {}, vs, {eval_detail::ir_junction(true, {guard, ir})}});
    eval_detail::Resolver res(cfg_.presburger);
    return res.eval3(q);
  }

  Structure S_;
  EvalConfig cfg_;
  int fresh_ = 0;
  int depth_ = 0;
  std::size_t cells_ = 0;
  bool budget_hit_ = false;
  std::int64_t need_upper_ = INT64_MIN;
  std::int64_t need_lower_ = INT64_MAX;
  std::map<std::string, Truth> memo_;
  std::vector<std::string> notes_;
};

/// Three-valued truth of f at point.
inline Truth evaluate(const Formula& f, const Structure& S, const Assignment& point, const EvalConfig& cfg = {}) {
  return Evaluator(S, cfg).evaluate(f, point).value;
}

}  // namespace dpkit
