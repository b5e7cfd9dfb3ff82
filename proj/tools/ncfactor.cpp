// Copyright 2026 The ncfactor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Batch command-line driver: factor noncommutative polynomials over finite
// fields, linearize them to pencils, decide stable association and
// irreducibility, and re-verify emitted factorizations.
//
// Exit codes: 0 success (and, for factor/irreducible/verify, the
// verification passed), 2 verification failure, 1 input errors.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncfactor/pipeline.hpp"

namespace {

using namespace ncfactor;

// Fixed seed for extension-field construction so that the defining modulus
// (and with it every serialized coefficient) is identical across runs.
constexpr uint64_t kModulusSeed = 0;

FieldCtx parse_field(const std::string& spec) {
  uint64_t p = 0;
  uint32_t k = 1;
  size_t caret = spec.find('^');
  try {
    if (caret == std::string::npos) {
      p = std::stoull(spec);
    } else {
      p = std::stoull(spec.substr(0, caret));
      unsigned long kk = std::stoul(spec.substr(caret + 1));
      k = static_cast<uint32_t>(kk);
    }
  } catch (const std::exception&) {
    throw input_error("cannot parse field spec '" + spec +
                      "': expected p or p^k");
  }
  NCF_INPUT(k >= 1, "field extension degree must be at least 1");
  if (k == 1) return FieldCtx::prime(p);
  return build_extension(p, k, kModulusSeed);
}

std::string read_input(const std::string& expr, const std::string& in_path) {
  NCF_INPUT(expr.empty() != in_path.empty(),
            "provide exactly one of --expr and --in");
  std::string text;
  if (!expr.empty()) {
    text = expr;
  } else if (in_path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    std::ifstream file(in_path);
    NCF_INPUT(file.good(), "cannot open input file '", in_path, "'");
    std::ostringstream ss;
    ss << file.rdbuf();
    text = ss.str();
  }
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' ||
                           text.back() == ' ' || text.back() == '\t'))
    text.pop_back();
  return text;
}

std::string var_name(uint32_t i) {
  static const char* kShort[] = {"x", "y", "z"};
  if (i < 3) return kShort[i];
  return "x" + std::to_string(i + 1);
}

std::string fe_to_string(const FieldCtx& F, const Fe& c) {
  if (F.k() == 1) return std::to_string(c[0]);
  std::string out = "{";
  bool first = true;
  for (uint32_t i = 0; i < F.k(); ++i) {
    if (!c[i]) continue;
    if (!first) out += "+";
    first = false;
    if (i == 0) {
      out += std::to_string(c[0]);
    } else {
      if (c[i] != 1) out += std::to_string(c[i]) + "*";
      out += (i == 1) ? "t" : "t^" + std::to_string(i);
    }
  }
  if (first) out += "0";
  return out + "}";
}

std::string sparse_to_string(const FieldCtx& F, const FreePoly& f) {
  if (f.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [w, c] : f.terms) {
    if (!first) out += " + ";
    first = false;
    std::string word;
    for (size_t i = 0; i < w.size(); ++i) {
      if (i) word += "*";
      word += var_name(w[i]);
    }
    bool coeff_is_one = F.is_one(c);
    if (word.empty()) {
      out += fe_to_string(F, c);
    } else if (coeff_is_one) {
      out += word;
    } else {
      out += fe_to_string(F, c) + "*" + word;
    }
  }
  return out;
}

void print_pretty(const FieldCtx& F, const Factorization& fact,
                  const std::string& input) {
  std::cout << "field: " << F.spec_string() << "\n";
  std::cout << "input: " << input << "\n";
  std::cout << "route: " << fact.route << "\n";
  std::cout << "r: " << fact.r() << "\n";
  std::cout << "verification: " << fact.verification.mode << " ("
            << (fact.verification.ok ? "ok" : "FAILED") << ")\n";
  long total = 0;
  for (const auto& g : fact.factors) total += std::max(abp_degree(F, g), 0l);
  for (size_t i = 0; i < fact.factors.size(); ++i) {
    const Abp& g = fact.factors[i];
    long d = abp_degree(F, g);
    std::cout << "factor " << (i + 1) << " (degree " << d << "): ";
    if (fact.sparse_factors.has_value()) {
      std::cout << sparse_to_string(F, (*fact.sparse_factors)[i]);
    } else if (total <= 8) {
      std::cout << sparse_to_string(F, abp_to_freepoly(F, g));
    } else {
      std::cout << "[program with " << g.vertex_count() << " vertices, "
                << g.edges.size() << " edges]";
    }
    std::cout << "\n";
  }
}

int cmd_factor(const std::string& field_spec, uint64_t seed,
               const std::string& expr, const std::string& in_path,
               const std::string& format, bool sparse, size_t trials,
               const std::string& route) {
  FieldCtx F = parse_field(field_spec);
  std::string text = read_input(expr, in_path);
  Formula f = parse(text, F);
  FactorOptions opt;
  opt.trials = trials;
  opt.reverse_words = (route == "right");

  Factorization fact;
  if (sparse) {
    fact = factor_sparse(F, to_sparse(F, f, 64), seed, opt);
  } else {
    fact = factor_polynomial(F, f, seed, opt);
  }

  if (format == "pretty") {
    print_pretty(F, fact, text);
  } else {
    std::cout << factorization_to_json(F, fact, text).dump(2) << "\n";
  }
  return fact.verification.ok ? 0 : 2;
}

int cmd_linearize(const std::string& field_spec, const std::string& expr,
                  const std::string& in_path) {
  FieldCtx F = parse_field(field_spec);
  std::string text = read_input(expr, in_path);
  Formula f = parse(text, F);
  HigmanCert cert = linearize(F, f);
  nlohmann::json j = higman_to_json(F, cert);
  j["input"] = text;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_stable_assoc(const std::string& field_spec, uint64_t seed,
                     const std::string& expr1, const std::string& expr2,
                     const std::string& format) {
  FieldCtx F = parse_field(field_spec);
  bool yes = stable_associates(F, parse(expr1, F), parse(expr2, F), seed);
  if (format == "pretty") {
    std::cout << (yes ? "true" : "false") << "\n";
  } else {
    nlohmann::json j;
    j["field"] = F.spec_string();
    j["lhs"] = expr1;
    j["rhs"] = expr2;
    j["seed"] = seed;
    j["stable_associates"] = yes;
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_irreducible(const std::string& field_spec, uint64_t seed,
                    const std::string& expr, const std::string& in_path,
                    const std::string& format, size_t trials) {
  FieldCtx F = parse_field(field_spec);
  std::string text = read_input(expr, in_path);
  Formula f = parse(text, F);
  FactorOptions opt;
  opt.trials = trials;
  Factorization fact = factor_polynomial(F, f, seed, opt);
  long deg = abp_degree(F, from_formula(F, f));
  bool irr = fact.r() == 1 && deg >= 1;  // units are not atoms
  if (format == "pretty") {
    std::cout << (irr ? "true" : "false") << "\n";
  } else {
    nlohmann::json j;
    j["field"] = F.spec_string();
    j["input"] = text;
    j["seed"] = seed;
    j["r"] = fact.r();
    j["irreducible"] = irr;
    std::cout << j.dump(2) << "\n";
  }
  return fact.verification.ok ? 0 : 2;
}

int cmd_verify(const std::string& in_path, const std::string& expr,
               size_t trials, uint64_t seed, const std::string& format) {
  NCF_INPUT(!in_path.empty(), "verify requires --in with a factorization file");
  NCF_INPUT(!expr.empty(), "verify requires --expr with the claimed input");
  std::string text = read_input("", in_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw input_error(std::string("cannot parse factorization JSON: ") +
                      e.what());
  }
  NCF_INPUT(j.contains("field") && j["field"].is_string(),
            "factorization JSON lacks a 'field' string");
  NCF_INPUT(j.contains("factors") && j["factors"].is_array(),
            "factorization JSON lacks a 'factors' array");
  FieldCtx F = parse_field(j["field"].get<std::string>());
  Formula f = parse(expr, F);
  Factorization fact;
  fact.p = F.p();
  fact.k = F.k();
  for (const auto& item : j["factors"])
    fact.factors.push_back(abp_from_json(F, item));
  bool ok = verify_factorization(F, f, fact, trials, seed);
  if (format == "pretty") {
    std::cout << (ok ? "true" : "false") << "\n";
  } else {
    nlohmann::json out;
    out["input"] = expr;
    out["mode"] = fact.verification.mode;
    out["trials"] = fact.verification.trials;
    out["ok"] = ok;
    std::cout << out.dump(2) << "\n";
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ncfactor: factorization of noncommutative polynomials over finite "
      "fields, with exact certificates"};
  app.require_subcommand(1);

  std::string field_spec = "2^1";
  uint64_t seed = 0;
  std::string expr, in_path, format = "json", route = "left";
  std::string expr1, expr2;
  bool sparse = false;
  size_t trials = 40;

  auto add_io = [&](CLI::App* cmd) {
    cmd->add_option("--expr", expr, "input polynomial as a formula");
    cmd->add_option("--in", in_path, "input file path, or - for stdin");
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--field", field_spec, "finite field, p or p^k");
    cmd->add_option("--seed", seed, "master seed for randomized steps");
    cmd->add_option("--format", format, "output format: json or pretty")
        ->check(CLI::IsMember({"json", "pretty"}));
  };

  CLI::App* factor = app.add_subcommand("factor", "factor into irreducibles");
  add_common(factor);
  add_io(factor);
  factor->add_flag("--sparse", sparse,
                   "also emit sparse forms of every factor");
  factor->add_option("--trials", trials, "verification evaluation budget");
  factor->add_option("--route", route, "peeling direction: left or right")
      ->check(CLI::IsMember({"left", "right"}));

  CLI::App* lin = app.add_subcommand("linearize", "emit the linear pencil");
  lin->add_option("--field", field_spec, "finite field, p or p^k");
  add_io(lin);

  CLI::App* sa = app.add_subcommand("stable-assoc",
                                    "decide stable association of two inputs");
  add_common(sa);
  sa->add_option("--expr1", expr1, "first polynomial")->required();
  sa->add_option("--expr2", expr2, "second polynomial")->required();

  CLI::App* irr = app.add_subcommand("irreducible",
                                     "decide irreducibility (r == 1)");
  add_common(irr);
  add_io(irr);
  irr->add_option("--trials", trials, "verification evaluation budget");

  CLI::App* ver = app.add_subcommand(
      "verify", "re-check a serialized factorization against an input");
  add_common(ver);
  add_io(ver);
  ver->add_option("--trials", trials, "verification evaluation budget");

  CLI11_PARSE(app, argc, argv);

  try {
    if (factor->parsed())
      return cmd_factor(field_spec, seed, expr, in_path, format, sparse,
                        trials, route);
    if (lin->parsed()) return cmd_linearize(field_spec, expr, in_path);
    if (sa->parsed())
      return cmd_stable_assoc(field_spec, seed, expr1, expr2, format);
    if (irr->parsed())
      return cmd_irreducible(field_spec, seed, expr, in_path, format, trials);
    if (ver->parsed()) return cmd_verify(in_path, expr, trials, seed, format);
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
