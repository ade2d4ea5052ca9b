#include "galab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "galab/error.hpp"

namespace galab {
namespace {

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(line) + ": " + msg);
}

class Parser {
 public:
  Parser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  ConfigValue::Table parse() {
    ConfigValue::Table root;
    ConfigValue::Table* current = &root;
    std::set<std::string> sections;
    while (pos_ < text_.size()) {
      skip_blank();
      if (pos_ >= text_.size()) break;
      const char c = text_[pos_];
      if (c == '\n') {
        advance_line();
        continue;
      }
      if (c == '#') {
        skip_comment();
        continue;
      }
      if (c == '[') {
        ++pos_;
        skip_blank();
        const std::string name = parse_key();
        skip_blank();
        expect(']');
        end_of_line();
        if (!sections.insert(name).second) fail(source_, line_, "section [" + name + "] appears twice");
        if (root.count(name)) fail(source_, line_, "section [" + name + "] redefines key '" + name + "'");
        ConfigValue v;
        v.line = line_;
        v.data = std::make_shared<ConfigValue::Table>();
        auto it = root.emplace(name, std::move(v)).first;
        current = std::get<std::shared_ptr<ConfigValue::Table>>(it->second.data).get();
        continue;
      }
      const int key_line = line_;
      const std::string key = parse_key();
      skip_blank();
      expect('=');
      skip_blank();
      ConfigValue v = parse_value();
      v.line = key_line;
      if (current->count(key)) fail(source_, key_line, "duplicate key '" + key + "'");
      current->emplace(key, std::move(v));
      end_of_line();
    }
    return root;
  }

 private:
  void skip_blank() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }
  void skip_comment() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
  }
  void advance_line() {
    ++pos_;
    ++line_;
  }
  void end_of_line() {
    skip_blank();
    if (pos_ < text_.size() && text_[pos_] == '#') skip_comment();
    if (pos_ < text_.size()) {
      if (text_[pos_] != '\n') fail(source_, line_, std::string("unexpected '") + text_[pos_] + "' after value");
      advance_line();
    }
  }
  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(source_, line_, std::string("expected '") + c + "'");
    ++pos_;
  }
  // Skips whitespace, newlines and comments inside arrays.
  void skip_space_multiline() {
    for (;;) {
      skip_blank();
      if (pos_ < text_.size() && text_[pos_] == '\n') {
        advance_line();
      } else if (pos_ < text_.size() && text_[pos_] == '#') {
        skip_comment();
      } else {
        return;
      }
    }
  }

  std::string parse_key() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail(source_, line_, "expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  ConfigValue parse_value() {
    if (pos_ >= text_.size()) fail(source_, line_, "missing value");
    ConfigValue v;
    v.line = line_;
    const char c = text_[pos_];
    if (c == '"') {
      v.data = parse_string();
    } else if (c == '[') {
      ++pos_;
      auto arr = std::make_shared<ConfigValue::Array>();
      skip_space_multiline();
      while (pos_ < text_.size() && text_[pos_] != ']') {
        arr->push_back(parse_value());
        skip_space_multiline();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_space_multiline();
        } else {
          break;
        }
      }
      expect(']');
      v.data = arr;
    } else if (c == '{') {
      ++pos_;
      auto tab = std::make_shared<ConfigValue::Table>();
      skip_blank();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const int kl = line_;
        const std::string key = parse_key();
        skip_blank();
        expect('=');
        skip_blank();
        ConfigValue item = parse_value();
        item.line = kl;
        if (tab->count(key)) fail(source_, kl, "duplicate key '" + key + "'");
        tab->emplace(key, std::move(item));
        skip_blank();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_blank();
        } else {
          break;
        }
      }
      expect('}');
      v.data = tab;
    } else if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.data = true;
    } else if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.data = false;
    } else {
      v.data = parse_number();
    }
    return v;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\n') fail(source_, line_, "unterminated string");
      if (c == '\\') {
        if (pos_ >= text_.size()) break;
        const char e = text_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(source_, line_, std::string("unknown escape \\") + e);
        }
      }
      out.push_back(c);
    }
    expect('"');
    return out;
  }

  double parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                                   text_[pos_] == '+' || text_[pos_] == '-' || text_[pos_] == '_')) {
      ++pos_;
    }
    std::string tok;
    for (char c : text_.substr(start, pos_ - start)) {
      if (c != '_') tok.push_back(c);
    }
    if (tok.empty()) fail(source_, line_, "expected a value");
    const char* first = tok.data();
    if (*first == '+') ++first;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
      fail(source_, line_, "invalid value '" + tok + "'");
    }
    return value;
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

// Typed accessors with key/line context.
class Reader {
 public:
  Reader(const ConfigValue::Table& table, std::string source, std::string prefix)
      : table_(table), source_(std::move(source)), prefix_(std::move(prefix)) {}

  const ConfigValue* find(const std::string& key) {
    seen_.insert(key);
    auto it = table_.find(key);
    return it == table_.end() ? nullptr : &it->second;
  }

  [[noreturn]] void bad(const ConfigValue& v, const std::string& key, const std::string& what) const {
    fail(source_, v.line, "key '" + prefix_ + key + "': " + what);
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) bad(*v, key, "expected a number");
      out = std::get<double>(v->data);
    }
  }
  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const auto* v = find(key)) out = as_integer<Int>(*v, key);
  }
  void boolean(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_bool()) bad(*v, key, "expected true or false");
      out = std::get<bool>(v->data);
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) bad(*v, key, "expected a string");
      out = std::get<std::string>(v->data);
    }
  }
  template <class Int>
  void integer_list(const std::string& key, std::vector<Int>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array()) bad(*v, key, "expected an array");
      out.clear();
      for (const auto& item : v->array()) out.push_back(as_integer<Int>(item, key));
    }
  }

  /// Raises on any key never looked up.
  void reject_unknown() const {
    for (const auto& [key, value] : table_) {
      if (!seen_.count(key)) fail(source_, value.line, "unknown key '" + prefix_ + key + "'");
    }
  }

 private:
  template <class Int>
  Int as_integer(const ConfigValue& v, const std::string& key) const {
    if (!v.is_number()) bad(v, key, "expected an integer");
    const double d = std::get<double>(v.data);
    if (d != std::floor(d) || std::abs(d) > 9.0e15) bad(v, key, "expected an integer");
    if (d < 0 && std::is_unsigned_v<Int>) bad(v, key, "expected a non-negative integer");
    return static_cast<Int>(d);
  }

  const ConfigValue::Table& table_;
  std::string source_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void apply_agent_table(const ConfigValue::Table& t, const std::string& source, AgentConfig& a) {
  Reader r(t, source, "agent.");
  r.integer_list("actor_hidden", a.actor_hidden);
  r.integer_list("critic_hidden", a.critic_hidden);
  if (const auto* v = r.find("hidden")) {
    if (!v->is_array()) r.bad(*v, "hidden", "expected an array");
    std::vector<int> h;
    for (const auto& item : v->array()) {
      if (!item.is_number() || std::get<double>(item.data) != std::floor(std::get<double>(item.data))) {
        r.bad(*v, "hidden", "expected integers");
      }
      h.push_back(static_cast<int>(std::get<double>(item.data)));
    }
    a.actor_hidden = a.critic_hidden = h;
  }
  r.integer("batch_size", a.batch_size);
  if (const auto* v = r.find("lr")) {
    if (!v->is_number()) r.bad(*v, "lr", "expected a number");
    a.actor_lr = a.critic_lr = std::get<double>(v->data);
  }
  r.number("actor_lr", a.actor_lr);
  r.number("critic_lr", a.critic_lr);
  r.number("gamma", a.gamma);
  r.number("tau", a.tau);
  r.number("exploration_sigma", a.exploration_sigma);
  r.number("target_sigma", a.target_sigma);
  r.number("target_clip", a.target_clip);
  r.integer("policy_interval", a.policy_interval);
  r.integer("noise_count", a.noise_count);
  r.integer("warmup_steps", a.warmup_steps);
  r.integer("buffer_capacity", a.buffer_capacity);
  r.reject_unknown();
}

void apply_bias_table(const ConfigValue::Table& t, const std::string& source, BiasConfig& b) {
  Reader r(t, source, "bias.");
  r.boolean("enabled", b.enabled);
  r.integer("cadence", b.cadence);
  r.integer("n_states", b.n_states);
  r.integer("n_rollouts", b.n_rollouts);
  r.reject_unknown();
}

}  // namespace

ConfigValue::Table parse_config_text(std::string_view text, const std::string& source) {
  return Parser(text, source).parse();
}

ActivationSpec activation_from_table(const ConfigValue::Table& table, const std::string& source) {
  Reader r(table, source, "activation.");
  std::string family;
  r.string("family", family);
  if (family.empty()) {
    const int line = table.empty() ? 0 : table.begin()->second.line;
    fail(source, line, "key 'activation.family' is required");
  }
  ActivationSpec spec;
  try {
    spec.family = parse_family(family);
  } catch (const Error&) {
    fail(source, table.at("family").line, "key 'activation.family': unknown family '" + family + "'");
  }
  r.number("alpha", spec.alpha);
  r.number("k", spec.k);
  r.number("beta", spec.beta);
  r.number("bias", spec.bias);
  r.reject_unknown();
  try {
    validate(spec);
  } catch (const Error& e) {
    fail(source, table.at("family").line, "activation: " + e.detail());
  }
  return spec;
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (env != "bandit" && env != "pointmass1d" && env != "pendulum") bad("unknown env '" + env + "'");
  if (total_steps < 0) bad("total_steps must be >= 0");
  if (eval_interval <= 0) bad("eval_interval must be positive");
  if (eval_episodes <= 0) bad("eval_episodes must be positive");
  if (seeds.empty()) bad("seeds must not be empty");
  if (out.empty()) bad("out must not be empty");
  if (bias.cadence <= 0 || bias.n_states <= 0 || bias.n_rollouts <= 0) bad("bias settings must be positive");
  agent.validate();
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source) {
  const ConfigValue::Table root = parse_config_text(text, source);
  ExperimentConfig cfg;
  cfg.source_text = std::string(text);
  Reader r(root, source, "");
  r.string("env", cfg.env);
  std::string algorithm(algorithm_name(cfg.agent.algorithm));
  r.string("algorithm", algorithm);
  try {
    cfg.agent.algorithm = parse_algorithm(algorithm);
  } catch (const Error&) {
    fail(source, root.at("algorithm").line, "key 'algorithm': unknown algorithm '" + algorithm + "'");
  }
  r.integer("total_steps", cfg.total_steps);
  r.integer("eval_interval", cfg.eval_interval);
  r.integer("eval_episodes", cfg.eval_episodes);
  r.integer_list("seeds", cfg.seeds);
  r.string("out", cfg.out);
  r.boolean("save_checkpoint", cfg.save_checkpoint);
  if (const auto* v = r.find("activation")) {
    if (!v->is_table()) r.bad(*v, "activation", "expected a table");
    cfg.agent.activation = activation_from_table(v->table(), source);
  }
  if (const auto* v = r.find("agent")) {
    if (!v->is_table()) r.bad(*v, "agent", "expected a table");
    apply_agent_table(v->table(), source, cfg.agent);
  }
  if (const auto* v = r.find("bias")) {
    if (!v->is_table()) r.bad(*v, "bias", "expected a table");
    apply_bias_table(v->table(), source, cfg.bias);
  }
  r.reject_unknown();
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, source + ": " + e.detail());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_experiment_config(ss.str(), path);
}

}  // namespace galab
