#pragma once

// `dpkit` command line. Every subcommand prints one JSON object on stdout.
// Exit codes: 0 ok, 1 computation error (or transfer disagreement),
// 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpkit/evaluator.hpp"
#include "dpkit/fixtures.hpp"
#include "dpkit/io.hpp"
#include "dpkit/jacquet_rallis.hpp"
#include "dpkit/measure.hpp"
#include "dpkit/parser.hpp"
#include "dpkit/transfer.hpp"

namespace dpkit::cli {

using json = nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError("cannot read '" + p.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool is_file(const std::string& s) {
  std::error_code ec;
  return !s.empty() && s.size() < 4096 && std::filesystem::is_regular_file(s, ec);
}

/// A formula argument: a file, a fixture name (with or without .dpf), a
/// definition or a bare formula.
inline DefinableSet formula_arg(const std::string& arg) {
  std::string text;
  if (is_file(arg)) {
    text = slurp(arg);
  } else {
    std::string name = arg;
    if (name.size() > 4 && name.substr(name.size() - 4) == ".dpf") {
      name = std::filesystem::path(name).stem().string();
      for (auto& s : fixtures::library())
        if (s.name == name) return s.set;
      throw UsageError("no such formula file '" + arg + "'");
    }
    text = arg;
  }
  return transfer::resolve_set(text);
}

/// All definitions in a formula argument (for `parse`).
inline std::vector<NamedSet> definitions_arg(const std::string& arg) {
  std::string text = is_file(arg) ? slurp(arg) : arg;
  if (text.find(":=") != std::string::npos) return parse_definitions(text);
  return {{"", formula_arg(arg)}};
}

inline json json_arg(const std::string& arg) {
  std::string text = is_file(arg) ? slurp(arg) : arg;
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("invalid JSON: ") + e.what());
  }
}

// Configuration problems are usage errors, reported before any computation.
template <class F>
auto config(F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

inline Structure structure_arg(const std::string& spec) {
  return config([&] { return Structure::parse(spec); });
}

inline json base() { return json{{"schema_version", io::kSchemaVersion}}; }

inline json orbital_json(const jr::OrbitalResult& r) {
  return {{"value", to_string(r.value)},
          {"plus_part", to_string(r.plus_part)},
          {"minus_part", to_string(r.minus_part)},
          {"method", jr::to_string(r.method)},
          {"depth", r.depth},
          {"depth_insufficient", r.depth_insufficient}};
}

inline json fl_json(const jr::FlReport& r) {
  return {{"sign_mode", jr::to_string(r.mode)},
          {"factor", r.factor},
          {"gl", orbital_json(r.gl)},
          {"unitary", orbital_json(r.u)},
          {"residual", to_string(r.residual)},
          {"equal", r.equal},
          {"nu", io::to_json(r.nu)}};
}

inline void threads_env() {
  if (const char* t = std::getenv("DPKIT_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(t, &end, 10);
    if (end == t || *end != '\0' || v < 1) throw UsageError("DPKIT_THREADS must be a positive integer");
  }
}

}  // namespace detail

/// Runs the command line; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dpkit: Denef-Pas formulas over Q_p and F_p((t))", "dpkit"};
  app.require_subcommand(1);
  json result = detail::base();
  std::function<int()> action;

  std::string formula, structure = "padic:3", point = "{}", set, matrix, side = "gl", pair, sign_mode = "eta_delta",
                       quantity, grid, primes = "3..97", expr, write_dir, check_dir;
  int depth = -1, max_depth = 6, orb_depth = 0;
  std::int64_t v_min = -6, v_max = 6;
  int vf_depth = 4;
  bool all_modes = false, list = false;

  auto eval_cfg = [&] {
    EvalConfig c;
    c.v_min = v_min;
    c.v_max = v_max;
    c.vf_depth = vf_depth;
    c.validate();
    return c;
  };
  auto add_eval_opts = [&](CLI::App* s) {
    s->add_option("--v-min", v_min, "lower end of the valued-field search window");
    s->add_option("--v-max", v_max, "upper end of the valued-field search window");
    s->add_option("--vf-depth", vf_depth, "digits per valued-field search cell");
  };

  auto* c_parse = app.add_subcommand("parse", "parse and pretty-print formulas");
  c_parse->add_option("--formula", formula, "file, fixture name, definition or formula")->required();
  c_parse->callback([&] {
    action = [&] {
      json defs = json::array();
      for (auto& d : detail::definitions_arg(formula))
        defs.push_back({{"name", d.name},
                        {"signature", io::signature_json(d.set.signature)},
                        {"formula", print(d.set.formula)}});
      result["definitions"] = defs;
      return 0;
    };
  });

  auto* c_check = app.add_subcommand("check", "sort-check a formula");
  c_check->add_option("--formula", formula)->required();
  c_check->callback([&] {
    action = [&] {
      DefinableSet X = detail::formula_arg(formula);
      result["signature"] = io::signature_json(X.signature);
      result["ok"] = true;
      return 0;
    };
  });

  auto* c_eval = app.add_subcommand("eval", "three-valued evaluation at a point");
  c_eval->add_option("--formula", formula)->required();
  c_eval->add_option("--structure", structure);
  c_eval->add_option("--point", point, "JSON object or file");
  add_eval_opts(c_eval);
  c_eval->callback([&] {
    action = [&] {
      Structure S = detail::structure_arg(structure);
      DefinableSet X = detail::formula_arg(formula);
      Evaluator ev(S, eval_cfg());
      auto r = ev.evaluate(X.formula, io::point(detail::json_arg(point), X.signature, S));
      result["value"] = to_string(r.value);
      result["cells"] = r.cells;
      result["certificate"] = r.certificate;
      return 0;
    };
  });

  auto* c_volume = app.add_subcommand("volume", "measure of a definable subset of O^m");
  c_volume->add_option("--set", set)->required();
  c_volume->add_option("--structure", structure);
  c_volume->add_option("--depth", depth, "fixed residue depth");
  c_volume->add_option("--max-depth", max_depth, "adaptive refinement limit");
  add_eval_opts(c_volume);
  c_volume->callback([&] {
    action = [&] {
      Structure S = detail::structure_arg(structure);
      MeasureConfig cfg;
      if (depth >= 0) cfg.depth = depth;
      cfg.max_depth = max_depth;
      cfg.eval = eval_cfg();
      auto r = volume(detail::formula_arg(set), S, cfg);
      result["inner"] = to_string(r.inner);
      result["outer"] = to_string(r.outer);
      result["depth"] = r.depth;
      result["stabilized"] = r.stabilized;
      result["cells"] = r.cells;
      return 0;
    };
  });

  auto* c_int = app.add_subcommand("integrate", "integral of a constructible function over O^m");
  c_int->add_option("--expr", expr, "JSON object or file")->required();
  c_int->add_option("--structure", structure);
  c_int->add_option("--depth", depth);
  c_int->add_option("--max-depth", max_depth);
  c_int->callback([&] {
    action = [&] {
      Structure S = detail::structure_arg(structure);
      json j = detail::json_arg(expr);
      auto sig_of = [](const json& a) {
        Signature s;
        for (auto& e : a) {
          auto so = parse_sort(e.at(1).get<std::string>());
          if (!so) throw UsageError("unknown sort in signature");
          s.push_back({e.at(0).get<std::string>(), *so});
        }
        return s;
      };
      ConstructibleExpr phi;
      phi.domain = sig_of(j.at("domain"));
      for (auto& t : j.at("terms")) {
        ConstructibleTerm ct;
        ct.coeff = parse_rational(t.value("coeff", std::string("1")));
        ct.fiber_vars = sig_of(t.value("fiber_vars", json::array()));
        Signature scope = phi.domain;
        scope.insert(scope.end(), ct.fiber_vars.begin(), ct.fiber_vars.end());
        ParseOptions po;
        po.declared = scope;
        if (t.contains("exponent")) ct.exponent = parse_term(t.at("exponent").get<std::string>(), Sort::VG, po);
        if (t.contains("fiber")) ct.fiber = parse_formula(t.at("fiber").get<std::string>(), po);
        if (t.contains("indicator")) {
          ParseOptions pd;
          pd.declared = phi.domain;
          ct.indicator = parse_formula(t.at("indicator").get<std::string>(), pd);
        }
        phi.terms.push_back(ct);
      }
      MeasureConfig cfg;
      if (depth >= 0) cfg.depth = depth;
      cfg.max_depth = max_depth;
      auto r = integrate(phi, S, cfg);
      result["lower"] = to_string(r.lower);
      result["upper"] = to_string(r.upper);
      result["exact"] = r.exact;
      result["depth"] = r.depth;
      return 0;
    };
  });

  auto* c_inv = app.add_subcommand("invariants", "matrix invariants and strong regularity");
  c_inv->add_option("--matrix", matrix, "JSON array of (x, y) pairs, or file")->required();
  c_inv->add_option("--structure", structure);
  c_inv->callback([&] {
    action = [&] {
      Structure S = detail::structure_arg(structure);
      QuadField E(S);
      MatrixE A = io::matrix(detail::json_arg(matrix), E);
      auto iv = jr::invariants(E, A);
      json a = json::array(), b = json::array();
      for (auto& z : iv.a) a.push_back(io::to_json(E, z));
      for (auto& z : iv.b) b.push_back(io::to_json(E, z));
      result["a"] = a;
      result["b"] = b;
      result["delta"] = io::to_json(E, iv.delta);
      result["nu"] = io::to_json(iv.nu);
      result["strongly_regular"] = jr::strongly_regular(E, A);
      return 0;
    };
  });

  auto* c_orb = app.add_subcommand("orbital", "orbital integral on the GL or unitary side");
  c_orb->add_option("--side", side)->check(CLI::IsMember({"gl", "u"}));
  c_orb->add_option("--matrix", matrix)->required();
  c_orb->add_option("--structure", structure);
  c_orb->add_option("--depth", orb_depth, "lattice window for n = 3 (0: automatic)");
  c_orb->callback([&] {
    action = [&] {
      Structure S = detail::structure_arg(structure);
      QuadField E(S);
      MatrixE A = io::matrix(detail::json_arg(matrix), E);
      jr::OrbitalConfig cfg;
      cfg.depth = orb_depth;
      auto r = side == "u" ? jr::orbital_unitary(E, A, cfg) : jr::orbital_gl(E, A, cfg);
      result["side"] = side;
      result.update(detail::orbital_json(r));
      return 0;
    };
  });

  auto* c_fl = app.add_subcommand("fl-check", "compare both orbital integrals of a matched pair");
  c_fl->add_option("--pair", pair, "JSON file with A and optional A_prime")->required();
  c_fl->add_option("--structure", structure);
  c_fl->add_option("--sign-mode", sign_mode, "plus | minus | eta_delta | parity_nu");
  c_fl->add_flag("--all-modes", all_modes, "report every sign mode");
  c_fl->add_option("--depth", orb_depth);
  c_fl->callback([&] {
    action = [&] {
      Structure S = detail::structure_arg(structure);
      QuadField E(S);
      json j = detail::json_arg(pair);
      MatrixE A = io::matrix(j.at("A"), E);
      MatrixE Ap = j.contains("A_prime") && !j.at("A_prime").is_null() ? io::matrix(j.at("A_prime"), E)
                                                                        : jr::match_unitary(E, A);
      jr::OrbitalConfig cfg;
      cfg.depth = orb_depth;
      result["A_prime"] = io::to_json(E, Ap);
      if (all_modes) {
        json reps = json::array();
        for (auto m : jr::all_sign_modes()) reps.push_back(detail::fl_json(jr::fl_check(E, {A, Ap}, m, cfg)));
        result["reports"] = reps;
      } else {
        result.update(detail::fl_json(jr::fl_check(E, {A, Ap}, jr::parse_sign_mode(sign_mode), cfg)));
      }
      return 0;
    };
  });

  auto* c_tr = app.add_subcommand("transfer", "compare a quantity over Q_p and F_p((t))");
  c_tr->add_option("--quantity", quantity, "eval | volume | orbital | fl_residual")->required();
  c_tr->add_option("--grid", grid, "JSON parameter object, array of them, or file")->required();
  c_tr->add_option("--primes", primes, "e.g. 3..97 or 3,5,7");
  c_tr->callback([&] {
    action = [&] {
      auto ps = detail::config([&] { return transfer::parse_primes(primes); });
      (void)detail::config([&] { return transfer::quantity(quantity); });
      json g = detail::json_arg(grid);
      std::vector<json> cells;
      if (g.is_array())
        for (auto& e : g) cells.push_back(e);
      else
        cells.push_back(g);
      auto rep = transfer::sweep(quantity, cells, ps);
      result.update(transfer::to_json(rep));
      return rep.summary.disagreements == 0 ? 0 : 1;
    };
  });

  auto* c_fx = app.add_subcommand("fixtures", "list, write or verify the fixture library");
  c_fx->add_flag("--list", list);
  c_fx->add_option("--write", write_dir, "directory to write fixtures into");
  c_fx->add_option("--check", check_dir, "directory whose fixtures must match the library");
  c_fx->callback([&] {
    action = [&] {
      auto files = fixtures::dpf_files();
      for (auto& [k, v] : fixtures::pair_files()) files[k] = v;
      json names = json::array();
      for (auto& [k, v] : files) names.push_back(k);
      result["files"] = names;
      if (!write_dir.empty()) {
        std::filesystem::create_directories(write_dir);
        for (auto& [k, v] : files) std::ofstream(std::filesystem::path(write_dir) / k) << v;
        result["written"] = write_dir;
      }
      if (!check_dir.empty()) {
        json stale = json::array();
        for (auto& [k, v] : files) {
          auto path = std::filesystem::path(check_dir) / k;
          if (!std::filesystem::exists(path) || detail::slurp(path) != v) stale.push_back(k);
        }
        result["stale"] = stale;
        result["ok"] = stale.empty();
        return stale.empty() ? 0 : 1;
      }
      return 0;
    };
  });

  std::vector<const char*> argv{"dpkit"};
  for (auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    detail::threads_env();
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  int code = 0;
  try {
    code = action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const SyntaxError& e) {
    result["ok"] = false;
    result["error"] = {{"kind", to_string(e.kind())}, {"detail", e.what()}, {"line", e.line()}, {"column", e.column()}};
    code = 1;
  } catch (const Error& e) {
    result["ok"] = false;
    result["error"] = {{"kind", to_string(e.kind())}, {"detail", e.detail()}};
    code = 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    result["ok"] = false;
    result["error"] = {{"kind", "InvalidArgument"}, {"detail", e.what()}};
    code = 1;
  }
  out << result.dump(2) << "\n";
  return code;
}

}  // namespace dpkit::cli
