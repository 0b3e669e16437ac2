#pragma once

// Key-value text configuration.
//
//   # comment
//   key = value
//   [state]
//   kind = thermal
//
// Keys before any section header belong to the root section.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cvtomo/states.hpp"
#include "cvtomo/types.hpp"

namespace cvtomo {

class KeyValueConfig {
 public:
  using Section = std::map<std::string, std::string>;

  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ValidationError("config line " + std::to_string(lineno) + ": bad section");
        section = trim(line.substr(1, line.size() - 2));
        cfg.sections_[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
      cfg.sections_[section][key] = trim(line.substr(eq + 1));
    }
    return cfg;
  }

  static KeyValueConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    return parse(in);
  }

  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }
  const Section& section(const std::string& name = "") const {
    static const Section empty;
    auto it = sections_.find(name);
    return it == sections_.end() ? empty : it->second;
  }
  Section& section(const std::string& name = "") { return sections_[name]; }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  std::map<std::string, Section> sections_;
};

namespace config {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (KeyValueConfig::trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ValidationError("config key '" + key + "': '" + v + "' is not a number");
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  const std::string s = KeyValueConfig::trim(v);
  Int out{};
  // accept plain integers and exact scientific notation such as 1e6
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec == std::errc() && p == s.data() + s.size()) return out;
  const double x = to_double(key, s);
  if (x == std::floor(x) && std::abs(x) < 9.2e18) return static_cast<Int>(x);
  throw ValidationError("config key '" + key + "': '" + v + "' is not an integer");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = KeyValueConfig::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace config

/// StateSpec from keys kind, lambda, alpha_re, alpha_im, r, n, coeffs,
/// purity_low, purity_high, seed, n_c. Missing keys take the defaults of
/// the canonical states.
inline StateSpec parse_state_spec(const KeyValueConfig::Section& kv) {
  for (const auto& [k, v] : kv) {
    static const char* known[] = {"kind", "lambda", "alpha_re", "alpha_im", "r", "n",
                                  "coeffs", "purity_low", "purity_high", "seed", "n_c"};
    if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
      throw ValidationError("unknown state key '" + k + "'");
    }
  }
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto num = [&](const char* key, double fallback) {
    const auto* v = get(key);
    return v ? config::to_double(key, *v) : fallback;
  };

  StateSpec spec;
  if (const auto* v = get("n_c")) spec.n_c = config::to_int<Index>("n_c", *v);
  const std::string kind = get("kind") ? *get("kind") : "thermal";
  if (kind == "thermal") {
    spec.kind = Thermal{num("lambda", 0.5)};
  } else if (kind == "coherent") {
    spec.kind = Coherent{Complex(num("alpha_re", 1.8), num("alpha_im", 0.0))};
  } else if (kind == "squeezed" || kind == "squeezed_vacuum") {
    spec.kind = SqueezedVacuum{num("r", 0.6908)};
  } else if (kind == "fock") {
    spec.kind = Fock{get("n") ? config::to_int<Index>("n", *get("n")) : 5};
  } else if (kind == "superposition") {
    std::vector<Complex> coeffs;
    if (const auto* v = get("coeffs")) {
      for (const auto& c : config::split_list(*v)) coeffs.emplace_back(config::to_double("coeffs", c), 0.0);
    } else {
      coeffs = {0, 0, 0, 0, 1, 1, 1};
    }
    spec = StateSpec::superposition(std::move(coeffs), spec.n_c);
  } else if (kind == "random" || kind == "random_mixed") {
    RandomMixed r;
    r.purity_low = num("purity_low", r.purity_low);
    r.purity_high = num("purity_high", r.purity_high);
    if (const auto* v = get("seed")) r.seed = config::to_int<std::uint64_t>("seed", *v);
    spec.kind = r;
  } else {
    throw ValidationError("unknown state kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

/// Inverse of parse_state_spec; only the keys relevant to the kind are written.
inline KeyValueConfig::Section state_spec_entries(const StateSpec& spec) {
  using config::format_double;
  KeyValueConfig::Section kv;
  kv["kind"] = spec.kind_name();
  kv["n_c"] = std::to_string(spec.n_c);
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Thermal>) {
          kv["lambda"] = format_double(k.lambda);
        } else if constexpr (std::is_same_v<T, Coherent>) {
          kv["alpha_re"] = format_double(k.alpha.real());
          kv["alpha_im"] = format_double(k.alpha.imag());
        } else if constexpr (std::is_same_v<T, SqueezedVacuum>) {
          kv["r"] = format_double(k.r);
        } else if constexpr (std::is_same_v<T, Fock>) {
          kv["n"] = std::to_string(k.n);
        } else if constexpr (std::is_same_v<T, Superposition>) {
          std::string s;
          for (std::size_t i = 0; i < k.coeffs.size(); ++i) {
            if (k.coeffs[i].imag() != 0.0) throw ValidationError("complex superposition coefficients cannot be serialized");
            s += (i ? "," : "") + format_double(k.coeffs[i].real());
          }
          kv["coeffs"] = s;
        } else {
          kv["purity_low"] = format_double(k.purity_low);
          kv["purity_high"] = format_double(k.purity_high);
          kv["seed"] = std::to_string(k.seed);
        }
      },
      spec.kind);
  return kv;
}

inline std::string to_config_text(const KeyValueConfig::Section& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

}  // namespace cvtomo
