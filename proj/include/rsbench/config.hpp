// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsbench/error.hpp"
#include "rsbench/pipeline.hpp"

namespace rsbench {

namespace detail {

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Config, "config key '" + key + "' expects a number, got '" + v + "'");
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& v) {
  Int out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw Error(ErrorKind::Config, "config key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

inline std::vector<std::string> split_list(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const auto& in : inputs) {
    std::size_t start = 0;
    while (start <= in.size()) {
      const std::size_t comma = in.find(',', start);
      std::string item = in.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (!item.empty()) out.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<TextRegime> parse_regime_list(const std::vector<std::string>& names) {
  std::vector<TextRegime> out;
  for (const auto& n : detail::split_list(names)) {
    auto r = parse_regime(n);
    if (!r) throw Error(ErrorKind::Config, "unknown text regime '" + n + "'");
    if (std::find(out.begin(), out.end(), *r) == out.end()) out.push_back(*r);
  }
  return out;
}

/// Reads a flat key = value file (INI/TOML subset, via CLI11's reader) on top
/// of `base`. Unknown keys are rejected; relative paths resolve against the
/// file's directory.
inline RunConfig load_run_config(const fs::path& path, RunConfig base = {}) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path.string());
  } catch (const CLI::Error& e) {
    throw Error(ErrorKind::Config, "cannot read config " + path.string() + ": " + e.what());
  }
  const fs::path root = path.parent_path();
  auto as_path = [&](const std::string& v) {
    if (v.empty()) return v;
    const fs::path p(v);
    return (p.is_absolute() ? p : (root / p).lexically_normal()).string();
  };
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    auto scalar = [&]() -> const std::string& {
      if (item.inputs.size() != 1) throw Error(ErrorKind::Config, "config key '" + key + "' expects one value");
      return item.inputs.front();
    };
    if (key == "manifest") base.manifest = as_path(scalar());
    else if (key == "out") base.out = as_path(scalar());
    else if (key == "templates") base.templates = as_path(scalar());
    else if (key == "rewrites") base.rewrites = as_path(scalar());
    else if (key == "responses") base.responses = as_path(scalar());
    else if (key == "eval_responses") base.eval_responses = as_path(scalar());
    else if (key == "strength") base.strength = detail::parse_real(key, scalar());
    else if (key == "homoglyph_rate") base.homoglyph_rate = detail::parse_real(key, scalar());
    else if (key == "min_gap") base.min_gap = detail::parse_real(key, scalar());
    else if (key == "seed") base.seed = detail::parse_integer<std::uint64_t>(key, scalar());
    else if (key == "draws") base.draws = detail::parse_integer<int>(key, scalar());
    else if (key == "k") base.k = detail::parse_integer<int>(key, scalar());
    else if (key == "regimes") base.regimes = parse_regime_list(item.inputs);
    else if (key == "tasks") base.tasks = detail::split_list(item.inputs);
    else throw Error(ErrorKind::Config, "unknown config key '" + key + "' in " + path.string());
  }
  return base;
}

}  // namespace rsbench
