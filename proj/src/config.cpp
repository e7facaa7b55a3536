#include "drf/core/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

#include "drf/core/error.hpp"

namespace drf {
namespace {

using FieldPtr = std::variant<std::uint64_t RunConfig::*, int RunConfig::*,
                              double RunConfig::*, bool RunConfig::*,
                              std::string RunConfig::*,
                              std::vector<int> RunConfig::*,
                              Precision RunConfig::*>;

struct Field {
  const char* section;  // "" = top level
  const char* key;
  FieldPtr ptr;
};

// Declaration order here is the canonical file order.
const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"", "seed", &RunConfig::seed},
      {"", "precision", &RunConfig::precision},
      {"", "threads", &RunConfig::threads},
      {"time", "delta", &RunConfig::delta},
      {"model", "branches", &RunConfig::branches},
      {"model", "adaptive_window", &RunConfig::adaptive_window},
      {"model", "hidden", &RunConfig::hidden},
      {"model", "v_pre", &RunConfig::v_pre},
      {"model", "train_alpha", &RunConfig::train_alpha},
      {"model", "smooth_spikes", &RunConfig::smooth_spikes},
      {"surrogate", "sigma", &RunConfig::surrogate_sigma},
      {"surrogate", "h", &RunConfig::surrogate_h},
      {"surrogate", "s", &RunConfig::surrogate_s},
      {"task", "id", &RunConfig::task},
      {"task", "length", &RunConfig::length},
      {"task", "classes", &RunConfig::classes},
      {"task", "noise", &RunConfig::noise},
      {"task", "amplitude", &RunConfig::amplitude},
      {"task", "train_size", &RunConfig::train_size},
      {"task", "test_size", &RunConfig::test_size},
      {"task", "permutation_seed", &RunConfig::permutation_seed},
      {"task", "data_dir", &RunConfig::data_dir},
      {"task", "mirror", &RunConfig::mirror},
      {"optim", "lr", &RunConfig::lr},
      {"optim", "epochs", &RunConfig::epochs},
      {"optim", "batch", &RunConfig::batch},
      {"optim", "beta1", &RunConfig::beta1},
      {"optim", "beta2", &RunConfig::beta2},
      {"optim", "eps", &RunConfig::eps},
      {"optim", "clip_norm", &RunConfig::clip_norm},
      {"optim", "schedule", &RunConfig::schedule},
      {"bench", "lengths", &RunConfig::bench_lengths},
      {"bench", "reps", &RunConfig::bench_reps},
      {"bench", "warmups", &RunConfig::bench_warmups},
      {"bench", "batch", &RunConfig::bench_batch},
      {"bench", "neurons", &RunConfig::bench_neurons},
  };
  return f;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string field_name(const Field& f) {
  return f.section[0] ? std::string(f.section) + "." + f.key : std::string(f.key);
}

[[noreturn]] void bad_value(const Field& f, const std::string& reason) {
  fail(ErrorCode::InvalidValue,
       "config: invalid value for '" + field_name(f) + "': " + reason);
}

double parse_double(const Field& f, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos != s.size()) bad_value(f, "trailing characters in number '" + s + "'");
    return x;
  } catch (const std::logic_error&) {
    bad_value(f, "not a number: '" + s + "'");
  }
}

long long parse_ll(const Field& f, const std::string& s) {
  std::size_t pos = 0;
  try {
    const long long x = std::stoll(s, &pos);
    if (pos != s.size()) bad_value(f, "trailing characters in integer '" + s + "'");
    return x;
  } catch (const std::logic_error&) {
    bad_value(f, "not an integer: '" + s + "'");
  }
}

void set_field(RunConfig& cfg, const Field& f, const std::string& raw) {
  const std::string value = trim(raw);
  std::visit(
      [&](auto ptr) {
        using M = std::remove_cvref_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<M, std::uint64_t>) {
          try {
            std::size_t pos = 0;
            if (!value.empty() && value[0] == '-') bad_value(f, "must be >= 0");
            const unsigned long long x = std::stoull(value, &pos);
            if (pos != value.size())
              bad_value(f, "trailing characters in integer '" + value + "'");
            cfg.*ptr = static_cast<std::uint64_t>(x);
          } catch (const std::logic_error&) {
            bad_value(f, "not an integer: '" + value + "'");
          }
        } else if constexpr (std::is_same_v<M, int>) {
          const long long x = parse_ll(f, value);
          cfg.*ptr = static_cast<int>(x);
        } else if constexpr (std::is_same_v<M, double>) {
          cfg.*ptr = parse_double(f, value);
        } else if constexpr (std::is_same_v<M, bool>) {
          if (value == "true")
            cfg.*ptr = true;
          else if (value == "false")
            cfg.*ptr = false;
          else
            bad_value(f, "expected true or false, got '" + value + "'");
        } else if constexpr (std::is_same_v<M, std::string>) {
          cfg.*ptr = value;
        } else if constexpr (std::is_same_v<M, std::vector<int>>) {
          std::vector<int> out;
          std::istringstream iss(value);
          std::string tok;
          while (iss >> tok) out.push_back(static_cast<int>(parse_ll(f, tok)));
          if (out.empty()) bad_value(f, "expected at least one integer");
          cfg.*ptr = out;
        } else if constexpr (std::is_same_v<M, Precision>) {
          if (value == "f32")
            cfg.*ptr = Precision::f32;
          else if (value == "f64")
            cfg.*ptr = Precision::f64;
          else
            bad_value(f, "expected f32 or f64, got '" + value + "'");
        }
      },
      f.ptr);
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string get_field(const RunConfig& cfg, const Field& f) {
  return std::visit(
      [&](auto ptr) -> std::string {
        using M = std::remove_cvref_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<M, std::uint64_t>) {
          return std::to_string(cfg.*ptr);
        } else if constexpr (std::is_same_v<M, int>) {
          return std::to_string(cfg.*ptr);
        } else if constexpr (std::is_same_v<M, double>) {
          return format_double(cfg.*ptr);
        } else if constexpr (std::is_same_v<M, bool>) {
          return (cfg.*ptr) ? "true" : "false";
        } else if constexpr (std::is_same_v<M, std::string>) {
          return cfg.*ptr;
        } else if constexpr (std::is_same_v<M, std::vector<int>>) {
          std::string out;
          for (std::size_t i = 0; i < (cfg.*ptr).size(); ++i) {
            if (i) out += ' ';
            out += std::to_string((cfg.*ptr)[i]);
          }
          return out;
        } else if constexpr (std::is_same_v<M, Precision>) {
          return cfg.*ptr == Precision::f32 ? "f32" : "f64";
        } else {
          return std::string();  // unreachable: every field kind handled above
        }
      },
      f.ptr);
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) return &f;
  }
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& field, const std::string& reason) {
    if (!ok)
      fail(ErrorCode::InvalidValue,
           "config: invalid value for '" + field + "': " + reason);
  };
  check(threads >= 0, "threads", "must be >= 0");
  check(delta > 0.0, "time.delta", "must be > 0");
  check(branches >= 1, "model.branches", "must be >= 1");
  check(adaptive_window >= 0, "model.adaptive_window", "must be >= 0");
  check(!hidden.empty(), "model.hidden", "must list at least one width");
  for (const int w : hidden) check(w >= 1, "model.hidden", "all widths must be >= 1");
  check(v_pre > 0.0, "model.v_pre", "must be > 0");
  check(surrogate_sigma > 0.0, "surrogate.sigma", "must be > 0");
  check(surrogate_h >= 0.0 && surrogate_h < 1.0, "surrogate.h", "must be in [0,1)");
  check(surrogate_s > 1.0, "surrogate.s", "must be > 1");
  check(task == "multitone" || task == "smnist" || task == "psmnist", "task.id",
        "must be one of multitone|smnist|psmnist");
  check(length >= 16, "task.length", "must be >= 16");
  check(classes >= 2, "task.classes", "must be >= 2");
  check(noise >= 0.0, "task.noise", "must be >= 0");
  check(train_size >= 1, "task.train_size", "must be >= 1");
  check(test_size >= 1, "task.test_size", "must be >= 1");
  check(lr > 0.0, "optim.lr", "must be > 0");
  check(epochs >= 1, "optim.epochs", "must be >= 1");
  check(batch >= 1, "optim.batch", "must be >= 1");
  check(beta1 >= 0.0 && beta1 < 1.0, "optim.beta1", "must be in [0,1)");
  check(beta2 >= 0.0 && beta2 < 1.0, "optim.beta2", "must be in [0,1)");
  check(eps > 0.0, "optim.eps", "must be > 0");
  check(clip_norm >= 0.0, "optim.clip_norm", "must be >= 0");
  check(schedule == "constant" || schedule == "cosine", "optim.schedule",
        "must be constant or cosine");
  check(!bench_lengths.empty(), "bench.lengths", "must list at least one length");
  for (const int l : bench_lengths) check(l >= 16, "bench.lengths", "lengths must be >= 16");
  check(bench_reps >= 1, "bench.reps", "must be >= 1");
  check(bench_warmups >= 0, "bench.warmups", "must be >= 0");
  check(bench_batch >= 1, "bench.batch", "must be >= 1");
  check(bench_neurons >= 1, "bench.neurons", "must be >= 1");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(ErrorCode::ParseError,
             "config: line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ParseError,
           "config: line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = line.substr(eq + 1);
    const Field* f = find_field(section, key);
    if (!f) {
      const std::string full = section.empty() ? key : section + "." + key;
      fail(ErrorCode::InvalidValue, "config: unknown key '" + full + "'");
    }
    set_field(cfg, *f, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string save_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      section = f.section;
      out += "\n[" + section + "]\n";
    }
    out += std::string(f.key) + " = " + get_field(cfg, f) + "\n";
  }
  return out;
}

void save_config_file(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "config: cannot write '" + path + "'");
  out << save_config(cfg);
}

void apply_override(RunConfig& cfg, const std::string& dotted_key,
                    const std::string& value) {
  const auto dot = dotted_key.find('.');
  const std::string section = dot == std::string::npos ? "" : dotted_key.substr(0, dot);
  const std::string key = dot == std::string::npos ? dotted_key : dotted_key.substr(dot + 1);
  const Field* f = find_field(section, key);
  if (!f)
    fail(ErrorCode::InvalidValue, "override: unknown key '" + dotted_key + "'");
  set_field(cfg, *f, value);
}

}  // namespace drf
