#include "rareflow/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "rareflow/bridge.hpp"
#include "rareflow/cramer.hpp"
#include "rareflow/credit.hpp"
#include "rareflow/isdrift.hpp"
#include "rareflow/longterm.hpp"
#include "rareflow/mc.hpp"
#include "rareflow/numeric.hpp"
#include "rareflow/oracles.hpp"
#include "rareflow/ruin.hpp"

namespace rareflow::cli {

using nlohmann::json;

namespace {

constexpr std::pair<Subcommand, std::string_view> kNames[] = {
    {Subcommand::cramer, "cramer"},   {Subcommand::ruin, "ruin"},     {Subcommand::ruin_invest, "ruin-invest"},
    {Subcommand::barrier, "barrier"}, {Subcommand::fw_bond, "fw-bond"}, {Subcommand::ghs, "ghs"},
    {Subcommand::credit, "credit"},   {Subcommand::longterm, "longterm"},
};

// ---------------------------------------------------------------------------------------------
// Schema

enum class Kind { number, integer, text, numbers };

using Check = std::function<std::string(const json&)>;
using Applies = std::function<bool(const json&)>;

struct Field {
  std::string name;
  Kind kind;
  json fallback;  // null: optional with no default
  std::vector<std::string> choices;
  Check check;
  Applies applies;
  std::function<json(const json&)> fallback_fn;  // default that depends on earlier fields
};

struct LadderSpec {
  std::vector<double> fallback;
  bool integer = false;
  double min = 0.0;
  bool min_open = false;
  std::size_t min_size = 1;
  std::string meaning;
};

using CrossCheck = std::function<void(const json&, const std::vector<double>&, std::vector<Diagnostic>&)>;

struct Schema {
  std::vector<Field> fields;
  std::optional<LadderSpec> ladder;
  std::size_t default_n;
  CrossCheck cross;
};

Check positive() {
  return [](const json& v) { return v.get<double>() > 0.0 ? "" : "must be > 0"; };
}
Check nonnegative() {
  return [](const json& v) { return v.get<double>() >= 0.0 ? "" : "must be >= 0"; };
}
Check open_unit() {
  return [](const json& v) {
    const double x = v.get<double>();
    return x > 0.0 && x < 1.0 ? "" : "must lie in (0, 1)";
  };
}
Check at_least(std::int64_t m) {
  return [m](const json& v) { return v.get<std::int64_t>() >= m ? "" : "must be >= " + std::to_string(m); };
}
Applies when(std::string key, std::string value) {
  return [key, value](const json& p) { return p.contains(key) && p.at(key) == value; };
}

Field number(std::string name, json fallback, Check check = {}, Applies applies = {}) {
  return {std::move(name), Kind::number, std::move(fallback), {}, std::move(check), std::move(applies), {}};
}
Field integer(std::string name, json fallback, Check check = {}, Applies applies = {}) {
  return {std::move(name), Kind::integer, std::move(fallback), {}, std::move(check), std::move(applies), {}};
}
Field choice(std::string name, std::string fallback, std::vector<std::string> choices, Applies applies = {}) {
  return {std::move(name), Kind::text, json(std::move(fallback)), std::move(choices), {}, std::move(applies), {}};
}
Field numbers(std::string name, std::vector<double> fallback, Applies applies = {}) {
  return {std::move(name), Kind::numbers, json(std::move(fallback)), {}, {}, std::move(applies), {}};
}

std::vector<Field> claim_fields() {
  return {
      number("premium", 2.0, positive()),
      number("intensity", 1.0, positive()),
      choice("claims", "exponential", {"exponential", "bernoulli", "poisson"}),
      number("claim_parameter", 1.0, positive()),
  };
}

void check_claims(const json& p, std::vector<Diagnostic>& out) {
  if (p.at("claims") == "bernoulli" && !(p.at("claim_parameter").get<double>() < 1.0))
    out.push_back({"claim_parameter", 0, "Bernoulli claim probability must lie in (0, 1)"});
}

Schema schema_for(Subcommand s) {
  switch (s) {
    case Subcommand::cramer: {
      Field x = number("x", nullptr);
      x.fallback_fn = [](const json& p) -> json {
        const std::string f = p.at("family");
        if (f == "bernoulli") return 0.5;
        if (f == "poisson") return 2.0;
        if (f == "normal") return 1.0;
        return 2.0;
      };
      return {{choice("family", "bernoulli", {"bernoulli", "poisson", "normal", "exponential"}),
               number("p", 0.25, open_unit(), when("family", "bernoulli")),
               number("lambda", 1.0, positive(), when("family", "poisson")),
               number("mean", 0.0, {}, when("family", "normal")),
               number("variance", 1.0, positive(), when("family", "normal")),
               number("rate", 1.0, positive(), when("family", "exponential")), x,
               number("theta", nullptr, nonnegative())},
              LadderSpec{{25, 50, 100, 200}, true, 1.0, false, 3, "sample sizes n"},
              100000,
              [](const json& p, const std::vector<double>&, std::vector<Diagnostic>& out) {
                const std::string f = p.at("family");
                const double x = p.at("x");
                double mean = 0.0;
                if (f == "bernoulli") mean = p.at("p");
                if (f == "poisson") mean = p.at("lambda");
                if (f == "normal") mean = p.at("mean");
                if (f == "exponential") mean = 1.0 / p.at("rate").get<double>();
                if (!(x > mean)) out.push_back({"x", 0, "x must exceed the family mean " + format_number(mean)});
                if (f == "bernoulli" && !(x < 1.0)) out.push_back({"x", 0, "x must be < 1 for a Bernoulli family"});
              }};
    }
    case Subcommand::ruin:
      return {claim_fields(), LadderSpec{{2, 4, 8, 16}, false, 0.0, false, 1, "initial reserves x"}, 100000,
              [](const json& p, const std::vector<double>&, std::vector<Diagnostic>& out) { check_claims(p, out); }};
    case Subcommand::ruin_invest: {
      auto f = claim_fields();
      f.push_back(number("b", 1.0));
      f.push_back(number("sigma", 1.0, positive()));
      f.push_back(number("horizon", 50.0, positive()));
      f.push_back(number("alpha", nullptr));
      f.push_back(number("step", nullptr, positive()));
      return {f, LadderSpec{{1, 2, 3, 4}, false, 0.0, false, 1, "initial reserves x"}, 10000,
              [](const json& p, const std::vector<double>&, std::vector<Diagnostic>& out) { check_claims(p, out); }};
    }
    case Subcommand::barrier:
      return {{number("s0", 100.0, positive()), number("strike", 100.0, nonnegative()),
               number("upper", 130.0, positive()), number("lower", nullptr, positive()),
               number("rate", 0.05), number("sigma", 0.3, positive()), number("maturity", 1.0, positive())},
              LadderSpec{{8, 16, 32, 64, 128}, true, 1.0, false, 1, "time steps n"},
              100000,
              [](const json& p, const std::vector<double>&, std::vector<Diagnostic>& out) {
                const double s0 = p.at("s0");
                if (!(p.at("upper").get<double>() > s0)) out.push_back({"upper", 0, "upper barrier must exceed s0"});
                if (p.contains("lower") && !(p.at("lower").get<double>() < s0))
                  out.push_back({"lower", 0, "lower barrier must be below s0"});
              }};
    case Subcommand::fw_bond:
      return {{number("s0", 50.0, positive()), number("barrier", 150.0, positive()),
               number("sigma", 0.2, positive()), number("maturity", 0.25, positive()),
               integer("steps", 100, at_least(1)), choice("monitoring", "bridge", {"bridge", "grid"})},
              std::nullopt,
              100000,
              [](const json& p, const std::vector<double>&, std::vector<Diagnostic>& out) {
                if (!(p.at("barrier").get<double>() > p.at("s0").get<double>()))
                  out.push_back({"barrier", 0, "barrier must exceed s0"});
              }};
    case Subcommand::ghs:
      return {{choice("payoff", "asian", {"asian", "linear"}),
               number("s0", 50.0, positive(), when("payoff", "asian")),
               number("strike", 70.0, nonnegative(), when("payoff", "asian")),
               number("sigma", 0.3, positive(), when("payoff", "asian")),
               number("maturity", 1.0, positive(), when("payoff", "asian")),
               integer("steps", 4, at_least(1), when("payoff", "asian")),
               number("rate", 0.0, {}, when("payoff", "asian")),
               numbers("c", {0.5, -0.25, 1.0}, when("payoff", "linear")),
               number("d", 0.0, {}, when("payoff", "linear")), number("start", 1.5),
               number("tol", 1e-10, positive()), integer("max_iter", 1000, at_least(1))},
              std::nullopt,
              100000,
              [](const json& p, const std::vector<double>&, std::vector<Diagnostic>& out) {
                if (p.contains("c") && p.at("c").empty()) out.push_back({"c", 0, "c must not be empty"});
              }};
    case Subcommand::credit:
      return {{number("p", 0.1, open_unit()),
               number("rho", 0.4,
                      [](const json& v) {
                        const double r = v.get<double>();
                        return r >= 0.0 && r < 1.0 ? "" : "must lie in [0, 1)";
                      }),
               choice("threshold", "fixed", {"fixed", "schedule"}),
               number("q", 0.5, open_unit(), when("threshold", "fixed")),
               number("c", 0.5, open_unit(), when("threshold", "schedule")),
               number("a", 1.0, positive(), when("threshold", "schedule")),
               choice("shift", "mu_n", {"mu_n", "z_n", "custom"}),
               number("shift_value", 0.0, {}, when("shift", "custom"))},
              LadderSpec{{20}, true, 1.0, false, 1, "portfolio sizes n"},
              100000,
              [](const json& p, const std::vector<double>& ladder, std::vector<Diagnostic>& out) {
                const double pd = p.at("p");
                if (p.at("threshold") == "fixed") {
                  if (!(p.at("q").get<double>() > pd)) out.push_back({"q", 0, "q must exceed p"});
                  return;
                }
                const double c = p.at("c"), a = p.at("a");
                for (double n : ladder)
                  if (!(1.0 - c * std::pow(n, -a) > pd)) {
                    out.push_back({"c", 0, "q_n = 1 - c n^-a must exceed p for every n in the ladder"});
                    return;
                  }
              }};
    case Subcommand::longterm:
      return {{choice("model", "bs", {"bs", "lq"}), number("a", 0.2, {}, when("model", "bs")),
               number("a0", 0.0, {}, when("model", "bs")), number("sigma", 1.0, positive(), when("model", "bs")),
               number("beta0", 0.0, {}, when("model", "lq")), number("beta2", 0.0, {}, when("model", "lq")),
               number("beta3", 0.0, {}, when("model", "lq")), number("beta4", 0.0, {}, when("model", "lq")),
               number("delta0", 0.0, {}, when("model", "lq")), number("delta1", 1.0, {}, when("model", "lq")),
               number("delta2", 0.0, {}, when("model", "lq")), number("k", 1.0, positive(), when("model", "lq")),
               number("x", 0.08), number("theta", nullptr, nonnegative()), number("policy_index", 1.0, positive()),
               number("step", 1e-2, positive())},
              LadderSpec{{25, 50, 100}, false, 0.0, true, 1, "horizons T"},
              10000,
              {}};
  }
  return {};
}

// ---------------------------------------------------------------------------------------------
// Parsing

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

std::size_t line_of_key(std::string_view text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string_view::npos ? 0 : line_of_byte(text, pos);
}

// Reads one field into `out`; returns an error message or "".
std::string read_field(const Field& f, const json& v, json& out) {
  switch (f.kind) {
    case Kind::number:
      if (!v.is_number()) return "expected a number";
      out = v.get<double>();
      if (!std::isfinite(out.get<double>())) return "must be finite";
      return "";
    case Kind::integer:
      if (v.is_number_integer()) {
        out = v.get<std::int64_t>();
        return "";
      }
      if (v.is_number_float() && std::nearbyint(v.get<double>()) == v.get<double>() &&
          std::abs(v.get<double>()) < 9e15) {
        out = static_cast<std::int64_t>(v.get<double>());
        return "";
      }
      return "expected an integer";
    case Kind::text: {
      if (!v.is_string()) return "expected a string";
      const std::string s = v;
      if (!f.choices.empty() && std::find(f.choices.begin(), f.choices.end(), s) == f.choices.end()) {
        std::string msg = "must be one of";
        for (const auto& c : f.choices) msg += " " + c;
        return msg;
      }
      out = s;
      return "";
    }
    case Kind::numbers: {
      if (!v.is_array()) return "expected an array of numbers";
      std::vector<double> xs;
      for (const auto& e : v) {
        if (!e.is_number()) return "expected an array of numbers";
        xs.push_back(e.get<double>());
      }
      out = xs;
      return "";
    }
  }
  return "";
}

bool read_count(const json& v, std::uint64_t& out) {
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
    return true;
  }
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    return true;
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d < 1.8e19 && std::nearbyint(d) == d) {
      out = static_cast<std::uint64_t>(d);
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view subcommand_name(Subcommand s) noexcept {
  for (const auto& [k, n] : kNames)
    if (k == s) return n;
  return "";
}

std::optional<Subcommand> subcommand_from_name(std::string_view name) noexcept {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

namespace {
std::string render(const std::vector<Diagnostic>& ds) {
  std::string s;
  for (const auto& d : ds) {
    if (!s.empty()) s += "\n";
    if (d.line) s += "line " + std::to_string(d.line) + ": ";
    if (!d.field.empty()) s += "'" + d.field + "': ";
    s += d.message;
  }
  return s;
}
}  // namespace

ParseError::ParseError(ErrorCode code, std::vector<Diagnostic> diagnostics)
    : Error(code, render(diagnostics)), diagnostics_(std::move(diagnostics)) {}

ExperimentConfig parse_config(std::string_view text, std::optional<Subcommand> expected) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(ErrorCode::parse, {{"", line_of_byte(text, e.byte == 0 ? 0 : e.byte - 1), e.what()}});
  }
  if (!doc.is_object()) throw ParseError(ErrorCode::parse, {{"", 1, "config must be a JSON object"}});

  std::vector<Diagnostic> errs;
  auto fail = [&](const std::string& field, std::string msg) {
    errs.push_back({field, line_of_key(text, field), std::move(msg)});
  };

  ExperimentConfig cfg;
  std::optional<Subcommand> sub = expected;
  if (doc.contains("subcommand")) {
    const json& v = doc.at("subcommand");
    const auto named = v.is_string() ? subcommand_from_name(v.get<std::string>()) : std::nullopt;
    if (!named)
      fail("subcommand", "unknown subcommand");
    else if (expected && *expected != *named)
      fail("subcommand", "config is for '" + std::string(subcommand_name(*named)) + "' but '" +
                             std::string(subcommand_name(*expected)) + "' was requested");
    else
      sub = named;
  } else if (!expected) {
    fail("subcommand", "missing subcommand");
  }
  if (!sub) throw ParseError(ErrorCode::config, errs);
  cfg.subcommand = *sub;
  const Schema schema = schema_for(*sub);

  cfg.replications = schema.default_n;
  if (doc.contains("N")) {
    std::uint64_t n = 0;
    if (!read_count(doc.at("N"), n) || n == 0)
      fail("N", "must be a positive integer");
    else
      cfg.replications = n;
  }
  if (doc.contains("seed")) {
    std::uint64_t s = 0;
    if (!read_count(doc.at("seed"), s))
      fail("seed", "must be an unsigned 64-bit integer");
    else
      cfg.seed = s;
  }
  if (doc.contains("output")) {
    const json& v = doc.at("output");
    if (v == "csv")
      cfg.output = OutputFormat::csv;
    else if (v == "json")
      cfg.output = OutputFormat::json;
    else
      fail("output", "must be csv or json");
  }
  if (doc.contains("oracle")) {
    if (!doc.at("oracle").is_boolean())
      fail("oracle", "expected true or false");
    else
      cfg.oracle = doc.at("oracle");
  }

  if (schema.ladder) {
    const LadderSpec& ls = *schema.ladder;
    cfg.ladder = ls.fallback;
    if (doc.contains("ladder")) {
      const json& v = doc.at("ladder");
      std::vector<double> xs;
      bool ok = v.is_array();
      if (ok)
        for (const auto& e : v) {
          if (!e.is_number()) {
            ok = false;
            break;
          }
          xs.push_back(e.get<double>());
        }
      if (!ok) {
        fail("ladder", "expected an array of " + ls.meaning);
      } else {
        std::string problem;
        if (xs.size() < ls.min_size) problem = "needs at least " + std::to_string(ls.min_size) + " entries";
        for (double x : xs) {
          if (!std::isfinite(x) || (ls.min_open ? !(x > ls.min) : !(x >= ls.min)))
            problem = ls.meaning + " must be " + (ls.min_open ? "> " : ">= ") + format_number(ls.min);
          else if (ls.integer && std::nearbyint(x) != x)
            problem = ls.meaning + " must be integers";
        }
        for (std::size_t i = 1; i < xs.size() && problem.empty(); ++i)
          if (std::find(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(i), xs[i]) !=
              xs.begin() + static_cast<std::ptrdiff_t>(i))
            problem = "entries must be distinct";
        if (problem.empty())
          cfg.ladder = xs;
        else
          fail("ladder", problem);
      }
    }
  } else if (doc.contains("ladder")) {
    fail("ladder", "does not apply to " + std::string(subcommand_name(*sub)));
  }

  json params = json::object();
  std::vector<std::string> known = {"subcommand", "N", "seed", "ladder", "output", "oracle"};
  bool typed = true;
  for (const Field& f : schema.fields) {
    known.push_back(f.name);
    const bool applies = !f.applies || f.applies(params);
    if (!applies) {
      if (doc.contains(f.name)) fail(f.name, "does not apply with the chosen options");
      continue;
    }
    json value;
    if (doc.contains(f.name)) {
      const std::string msg = read_field(f, doc.at(f.name), value);
      if (!msg.empty()) {
        fail(f.name, msg);
        typed = false;
        continue;
      }
    } else if (f.fallback_fn) {
      value = f.fallback_fn(params);
    } else if (!f.fallback.is_null()) {
      json tmp;
      read_field(f, f.fallback, tmp);
      value = tmp;
    } else {
      continue;
    }
    if (f.check) {
      const std::string msg = f.check(value);
      if (!msg.empty()) {
        fail(f.name, msg);
        typed = false;
        continue;
      }
    }
    params[f.name] = value;
  }
  for (const auto& [key, _] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) fail(key, "unknown key");

  if (typed && schema.cross) {
    std::vector<Diagnostic> cross;
    schema.cross(params, cfg.ladder, cross);
    for (auto& d : cross) fail(d.field, d.message);
  }
  if (!errs.empty()) throw ParseError(ErrorCode::config, errs);
  cfg.params = std::move(params);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& c) {
  json doc = c.params;
  doc["subcommand"] = std::string(subcommand_name(c.subcommand));
  doc["N"] = static_cast<std::uint64_t>(c.replications);
  doc["seed"] = c.seed;
  if (schema_for(c.subcommand).ladder) doc["ladder"] = c.ladder;
  doc["output"] = c.output == OutputFormat::csv ? "csv" : "json";
  doc["oracle"] = c.oracle;
  return doc.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------------------------
// Output

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "row",           "scale", "replications", "mean",  "variance",  "std_error", "relative_error",
      "log_mean",      "second_moment", "slope", "intercept", "r_squared", "reference"};
  return cols;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "na";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_cell(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return "na"; }
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& s) const { return s; }
  } f;
  return std::visit(f, c);
}

std::string to_csv(const Report& r) {
  std::string out;
  for (const auto& [k, v] : r.metadata) out += "# " + k + "=" + v + "\n";
  for (std::size_t i = 0; i < r.columns.size(); ++i) out += (i ? "," : "") + r.columns[i];
  out += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += "\n";
  }
  return out;
}

// Keys keep column order so the JSON reads like the CSV.
using ojson = nlohmann::ordered_json;

std::string to_json(const Report& r) {
  ojson meta = ojson::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  ojson rows = ojson::array();
  for (const auto& row : r.rows) {
    ojson obj = ojson::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& c = row[i];
      if (const double* d = std::get_if<double>(&c))
        obj[r.columns[i]] = std::isfinite(*d) ? ojson(*d) : ojson(format_number(*d));
      else if (const std::int64_t* n = std::get_if<std::int64_t>(&c))
        obj[r.columns[i]] = *n;
      else if (const std::string* s = std::get_if<std::string>(&c))
        obj[r.columns[i]] = *s;
      else
        obj[r.columns[i]] = "na";
    }
    rows.push_back(obj);
  }
  ojson doc = {{"metadata", meta}, {"columns", r.columns}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::io, "write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::io, "cannot move output into " + path.string());
  }
}

int exit_code(ErrorCode code) noexcept { return static_cast<int>(code); }

// ---------------------------------------------------------------------------------------------
// Runners

namespace {

class Table {
 public:
  void estimate(const std::string& label, Cell scale, const EstimatorResult& r, std::optional<double> ref = {}) {
    rows_.push_back({label, std::move(scale), static_cast<std::int64_t>(r.n), r.mean, r.variance, r.std_error,
                     opt(r.relative_error), opt(r.log_mean), r.second_moment, {}, {}, {}, opt(ref)});
  }
  void fit(const std::string& label, const DecayFit& f) {
    rows_.push_back({label, {}, static_cast<std::int64_t>(f.points.size()), {}, {}, {}, {}, {}, {}, f.slope,
                     f.intercept, f.r_squared, {}});
  }
  // Fit rows need three distinct rungs with nonzero estimates; anything less is reported as na.
  void try_fit(const std::string& label, const std::function<DecayFit()>& make) {
    try {
      fit(label, make());
    } catch (const InsufficientData&) {
      rows_.push_back({label, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}});
    }
  }
  void value(const std::string& label, Cell scale, double v, std::optional<double> ref = {}) {
    rows_.push_back({label, std::move(scale), {}, v, {}, {}, {}, {}, {}, {}, {}, {}, opt(ref)});
  }
  std::vector<std::vector<Cell>> take() { return std::move(rows_); }

 private:
  static Cell opt(std::optional<double> v) { return v ? Cell(*v) : Cell(); }
  std::vector<std::vector<Cell>> rows_;
};

double num(const json& p, const char* key) { return p.at(key).get<double>(); }
std::optional<double> opt_num(const json& p, const char* key) {
  return p.contains(key) ? std::optional<double>(p.at(key).get<double>()) : std::nullopt;
}
std::size_t count(double x) { return static_cast<std::size_t>(x); }
Cell scale_of(double x) { return x; }
Cell scale_of(std::size_t n) { return static_cast<std::int64_t>(n); }

BasicFamily claim_family(const json& p) {
  const std::string c = p.at("claims");
  const double v = num(p, "claim_parameter");
  if (c == "bernoulli") return Bernoulli{v};
  if (c == "poisson") return Poisson{v};
  return Exponential{v};
}

std::optional<double> exact_mean_tail(const TiltableFamily& fam, std::size_t n, double x) {
  const double nd = static_cast<double>(n);
  if (const auto* b = std::get_if<Bernoulli>(&fam)) return oracle::binomial_tail(n, oracle::lattice_threshold(n, x), b->p);
  if (const auto* q = std::get_if<Poisson>(&fam))
    return oracle::poisson_tail(nd * q->lambda, oracle::lattice_threshold(n, x));
  if (const auto* g = std::get_if<Normal>(&fam)) return numeric::normal_sf((x - g->mean) * std::sqrt(nd / g->variance));
  if (const auto* e = std::get_if<Exponential>(&fam)) return oracle::poisson_cdf(e->rate * nd * x, n - 1);
  return std::nullopt;
}

void run_cramer(const ExperimentConfig& c, Table& t) {
  const json& p = c.params;
  const std::string f = p.at("family");
  TiltableFamily fam = Bernoulli{0.5};
  if (f == "bernoulli") fam = Bernoulli{num(p, "p")};
  if (f == "poisson") fam = Poisson{num(p, "lambda")};
  if (f == "normal") fam = Normal{num(p, "mean"), num(p, "variance")};
  if (f == "exponential") fam = Exponential{num(p, "rate")};
  validate(fam);
  const double x = num(p, "x");
  const LegendreResult lr = legendre(fam, x);
  const double theta = p.contains("theta") ? num(p, "theta") : saddle_theta(fam, x);
  std::vector<std::size_t> ladder;
  for (double n : c.ladder) ladder.push_back(count(n));

  const RateLadder rl = run_rate_ladder(fam, x, ladder, c.replications, c.seed, theta);
  t.value("rate", {}, lr.rate.value_or(std::numeric_limits<double>::infinity()));
  t.value("theta", {}, theta);
  for (std::size_t i = 0; i < ladder.size(); ++i)
    t.estimate("is", scale_of(ladder[i]), rl.results[i],
               c.oracle ? exact_mean_tail(fam, ladder[i], x) : std::nullopt);
  t.fit("fit_prob", rl.prob_fit);
  t.fit("fit_second_moment", rl.second_moment_fit);
  t.value("optimality_gap", {}, optimality_gap(rl.second_moment_fit, rl.prob_fit));
}

void run_ruin(const ExperimentConfig& c, Table& t) {
  const json& p = c.params;
  RuinModel m{num(p, "premium"), num(p, "intensity"), claim_family(p), std::nullopt};
  m.validate();
  const ExponentSolution th = adjustment_coefficient(m);
  t.value("theta_l", {}, th.value);
  t.value("safety_loading", {}, m.safety_loading());
  const bool exp_claims = p.at("claims") == "exponential";
  std::vector<EstimatorResult> results;
  for (double x : c.ladder) {
    std::optional<double> ref;
    if (c.oracle && exp_claims)
      ref = oracle::exponential_ruin_prob(num(p, "claim_parameter"), m.intensity, m.premium, x);
    results.push_back(simulate_ruin_is(m, x, c.replications, c.seed));
    t.estimate("is", scale_of(x), results.back(), ref);
    t.value("lundberg_bound", scale_of(x), lundberg_bound(m, x));
  }
  if (c.ladder.size() >= 3) t.try_fit("fit_prob", [&] { return fit_decay(c.ladder, results); });
}

void run_ruin_invest(const ExperimentConfig& c, Table& t) {
  const json& p = c.params;
  RuinModel plain{num(p, "premium"), num(p, "intensity"), claim_family(p), std::nullopt};
  RuinModel m = plain;
  m.invest = InvestParams{num(p, "b"), num(p, "sigma")};
  m.validate();
  const double theta_l = adjustment_coefficient(plain).value;
  const double theta_star = invest_exponent(m).value;
  const double alpha_star = optimal_fraction(m);
  const double alpha = p.contains("alpha") ? num(p, "alpha") : alpha_star;
  t.value("theta_l", {}, theta_l);
  t.value("theta_star", {}, theta_star);
  t.value("alpha_star", {}, alpha_star);
  t.value("uniform_tail", {}, uniform_exp_tail_check(m.claims, theta_star));
  std::vector<EstimatorResult> results;
  for (double x : c.ladder) {
    results.push_back(
        simulate_wealth_ruin(m, x, alpha, num(p, "horizon"), c.replications, c.seed, opt_num(p, "step")));
    t.estimate("wealth_ruin", scale_of(x), results.back());
  }
  if (c.ladder.size() >= 3) t.try_fit("fit_prob", [&] { return fit_decay(c.ladder, results); });
}

void run_barrier(const ExperimentConfig& c, Table& t) {
  const json& p = c.params;
  const double r = num(p, "rate"), sigma = num(p, "sigma"), strike = num(p, "strike");
  const auto lower = opt_num(p, "lower");
  const BarrierSpec spec =
      lower ? BarrierSpec::constant_double(*lower, num(p, "upper")) : BarrierSpec::constant_up(num(p, "upper"));
  spec.validate({0.0, num(p, "maturity")});
  const Payoff call = [strike](double s) { return std::max(s - strike, 0.0); };
  std::optional<double> ref;
  if (c.oracle && !lower)
    ref = oracle::up_out_call(num(p, "s0"), strike, num(p, "upper"), r, sigma, num(p, "maturity"));

  std::vector<DecayPoint> naive_bias, corrected_bias;
  for (double nd : c.ladder) {
    const EulerModel model{[r](double s) { return r * s; }, [sigma](double s) { return sigma * s; },
                           num(p, "maturity"), count(nd), num(p, "s0"), r};
    const auto pr = price_knockout_paired(model, call, spec, c.replications, c.seed);
    t.estimate("naive", scale_of(count(nd)), pr[0], ref);
    t.estimate("corrected", scale_of(count(nd)), pr[1], ref);
    if (ref) {
      naive_bias.push_back({std::log(nd), std::log(std::abs(pr[0].mean - *ref))});
      corrected_bias.push_back({std::log(nd), std::log(std::abs(pr[1].mean - *ref))});
    }
  }
  // Slopes of ln|bias| against ln n: minus the convergence order of each method.
  if (ref && c.ladder.size() >= 3) {
    auto guarded = [](const std::vector<DecayPoint>& pts) {
      return [&pts] {
        try {
          return fit_decay(pts);
        } catch (const NonFiniteInput&) {
          throw InsufficientData("a bias estimate is exactly zero");
        }
      };
    };
    t.try_fit("bias_naive", guarded(naive_bias));
    t.try_fit("bias_corrected", guarded(corrected_bias));
  }
}

void run_fw_bond(const ExperimentConfig& c, Table& t) {
  const json& p = c.params;
  const UpInBond spec{num(p, "s0"), num(p, "barrier"), num(p, "sigma"), num(p, "maturity"),
                      static_cast<std::size_t>(p.at("steps").get<std::int64_t>())};
  const Monitoring mon = p.at("monitoring") == "grid" ? Monitoring::grid : Monitoring::bridge;
  std::optional<double> ref;
  if (c.oracle)
    ref = oracle::drifted_bm_max_prob(-0.5 * spec.sigma * spec.sigma, spec.sigma, spec.maturity,
                                      std::log(spec.barrier / spec.s0));
  t.value("fw_distance", {}, fw_distance_bs(spec.s0, spec.barrier, spec.sigma));
  t.estimate("naive", {}, price_up_in_bond(spec, c.replications, c.seed, false, mon), ref);
  t.estimate("is", {}, price_up_in_bond(spec, c.replications, c.seed, true, mon), ref);
}

void run_ghs(const ExperimentConfig& c, Table& t) {
  const json& p = c.params;
  PathPayoff payoff;
  std::optional<double> ref;
  if (p.at("payoff") == "linear") {
    const Vec cv = p.at("c").get<Vec>();
    payoff = exp_linear_payoff(cv, num(p, "d"));
    double q = 0.0;
    for (double v : cv) q += v * v;
    if (c.oracle) ref = std::exp(num(p, "d") + 0.5 * q);
  } else {
    payoff = asian_call_payoff(num(p, "s0"), num(p, "strike"), num(p, "sigma"), num(p, "maturity"),
                               static_cast<std::size_t>(p.at("steps").get<std::int64_t>()), num(p, "rate"));
  }
  const DriftResult dr = require_converged(ghs_drift(payoff, Vec(payoff.dim(), num(p, "start")), num(p, "tol"),
                                                     static_cast<std::size_t>(p.at("max_iter").get<std::int64_t>())));
  for (std::size_t i = 0; i < dr.mu.size(); ++i) t.value("mu", scale_of(i), dr.mu[i]);
  t.value("objective", {}, dr.objective);
  t.value("iterations", {}, static_cast<double>(dr.iterations));
  t.value("residual", {}, dr.residual);
  const auto pr = mu_is_paired(payoff, dr.mu, c.replications, c.seed);
  t.estimate("naive", {}, pr[0], ref);
  t.estimate("is", {}, pr[1], ref);
}

void run_credit(const ExperimentConfig& c, Table& t) {
  const json& p = c.params;
  PortfolioModel model{num(p, "p"), num(p, "rho"), FixedThreshold{0.5}};
  if (p.at("threshold") == "fixed")
    model.threshold = FixedThreshold{num(p, "q")};
  else
    model.threshold = ThresholdSchedule{num(p, "c"), num(p, "a")};
  FactorShift shift;
  if (p.at("shift") == "z_n") shift.kind = FactorShift::Kind::z_n;
  if (p.at("shift") == "custom") shift = FactorShift::custom(num(p, "shift_value"));
  for (double n : c.ladder) model.validate(count(n));

  std::vector<double> log_n;
  std::vector<EstimatorResult> results;
  for (double nd : c.ladder) {
    const std::size_t n = count(nd);
    t.value("z_n", scale_of(n), factor_threshold(model, n));
    t.value("shift", scale_of(n), resolve_shift(model, n, shift));
    std::optional<double> ref;
    if (c.oracle) ref = oracle::copula_loss_prob(model.p, model.rho, n, model.q(n));
    results.push_back(two_step_is(model, n, c.replications, c.seed, shift));
    log_n.push_back(std::log(nd));
    t.estimate("is", scale_of(n), results.back(), ref);
  }
  if (c.ladder.size() >= 3) t.try_fit("fit_prob_log_n", [&] { return fit_decay(log_n, results); });
}

void run_longterm(const ExperimentConfig& c, Table& t) {
  const json& p = c.params;
  const bool bs = p.at("model") == "bs";
  LqModel model;
  if (bs) {
    model = LqModel::from_market({num(p, "a0"), 0.0, num(p, "a"), 0.0, num(p, "sigma")}, 1.0);
  } else {
    model.beta0 = num(p, "beta0");
    model.beta2 = num(p, "beta2");
    model.beta3 = num(p, "beta3");
    model.beta4 = num(p, "beta4");
    model.delta0 = num(p, "delta0");
    model.delta1 = num(p, "delta1");
    model.delta2 = num(p, "delta2");
    model.k = num(p, "k");
  }
  model.validate();
  const DualSolution dual = solve_dual(model);
  const double x = num(p, "x");
  const double xn = model.normalized_target(x);
  if (const auto theta = opt_num(p, "theta")) {
    if (!(*theta < dual.theta_bar))
      throw OutOfDualDomain("theta = " + format_number(*theta) + " is outside [0, " + format_number(dual.theta_bar) +
                            ")");
    t.value("lambda", *theta, dual.Lambda(*theta));
  }
  const DualValue dv = dual_to_value(dual, xn);
  std::optional<BsOutperformance> closed;
  if (bs && c.oracle) closed = bs_outperformance(num(p, "a"), num(p, "a0"), num(p, "sigma"), x);
  t.value("theta_bar", {}, dual.theta_bar);
  t.value("steep", {}, dual.steep ? 1.0 : 0.0);
  t.value("v", {}, dv.v, closed ? std::optional<double>(closed->v) : std::nullopt);
  t.value("theta_x", {}, dv.theta_x, closed ? std::optional<double>(closed->theta_x) : std::nullopt);
  if (bs) {
    // Optimal constant fraction: the feedback policy does not depend on y when b = b0 = 0.
    const double alpha = model.market_alpha(feedback_policy(model, dv.theta_x, 0.0));
    t.value("alpha_star", {}, alpha, closed ? std::optional<double>(closed->alpha_star) : std::nullopt);
  }
  const OutperformanceFit mc =
      mc_outperformance(model, OutperformancePolicy::nearly_optimal(num(p, "policy_index")), xn, c.ladder,
                        c.replications, c.seed, num(p, "step"));
  t.value("theta_policy", {}, mc.theta_policy);
  for (std::size_t i = 0; i < mc.horizons.size(); ++i) t.estimate("mc", scale_of(mc.horizons[i]), mc.results[i]);
  if (c.ladder.size() >= 3) t.try_fit("fit_prob", [&] { return fit_decay(c.ladder, mc.results); });
}

}  // namespace

Report run_experiment(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  Table t;
  switch (c.subcommand) {
    case Subcommand::cramer: run_cramer(c, t); break;
    case Subcommand::ruin: run_ruin(c, t); break;
    case Subcommand::ruin_invest: run_ruin_invest(c, t); break;
    case Subcommand::barrier: run_barrier(c, t); break;
    case Subcommand::fw_bond: run_fw_bond(c, t); break;
    case Subcommand::ghs: run_ghs(c, t); break;
    case Subcommand::credit: run_credit(c, t); break;
    case Subcommand::longterm: run_longterm(c, t); break;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Report r;
  r.columns = report_columns();
  r.rows = t.take();
  r.metadata = {{"subcommand", std::string(subcommand_name(c.subcommand))},
                {"seed", std::to_string(c.seed)},
                {"replications", std::to_string(c.replications)},
                {"threads", std::to_string(thread_budget())},
                {"wall_time_s", format_number(wall)},
                {"version", std::string(kVersion)},
                {"config_hash", config_hash(c)}};
  return r;
}

}  // namespace rareflow::cli
