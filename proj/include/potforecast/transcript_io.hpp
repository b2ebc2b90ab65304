#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "potforecast/core.hpp"
#include "potforecast/errors.hpp"
#include "potforecast/game.hpp"
#include "potforecast/randomized.hpp"

// Transcript file layout:
//
//   line 1      the GameConfig as one JSON object
//   averaged    t,f_1..f_N,p_1..p_N,a,b,r_1..r_N,blackwell,telescoping
//   randomized  t,p_1..p_N,i,b,r_1..r_N,sampled_loss,blackwell,telescoping
//
// i is the one-based sampled action. Numbers use the shortest decimal that
// round-trips, so parse(serialize(t)) reproduces t bit for bit.

namespace potforecast {

using json = nlohmann::json;

inline json config_to_json(const GameConfig& c) {
  if (c.loss.kind() == LossKind::custom) throw InputError("custom losses cannot be serialized");
  json j;
  j["horizon"] = c.horizon;
  j["experts"] = c.experts;
  j["loss"] = c.loss.name();
  j["eta"] = c.eta ? json(*c.eta) : json(nullptr);
  j["hessian_constant"] = c.hessian_constant ? json(*c.hessian_constant) : json(nullptr);
  j["expert_policy"] = std::string(to_string(c.expert_policy));
  j["advice_table"] = c.advice_table;
  j["adversary"] = std::string(to_string(c.adversary));
  j["lookahead_depth"] = c.lookahead_depth;
  j["seed"] = c.seed;
  j["mode"] = std::string(to_string(c.mode));
  j["actions"] = std::string(to_string(c.actions));
  return j;
}

namespace detail {

template <typename T>
T json_get(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw InputError("field '" + key + "': " + e.what());
  }
}

inline std::size_t json_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw InputError("field '" + key + "' must be an integer");
  if (j.is_number_integer() && j.get<long long>() < 0) throw InputError("field '" + key + "' must be nonnegative");
  return j.get<std::size_t>();
}

}  // namespace detail

/// Overwrites the fields present in `j`. Keys outside the config schema and
/// `extra_keys` are rejected.
inline void apply_config_json(GameConfig& c, const json& j, const std::set<std::string>& extra_keys = {}) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "horizon") {
      c.horizon = detail::json_count(value, key);
    } else if (key == "experts") {
      c.experts = detail::json_count(value, key);
    } else if (key == "loss") {
      c.loss = LossFunction::from_name(detail::json_get<std::string>(value, key));
    } else if (key == "eta") {
      c.eta = value.is_null() ? std::nullopt : std::optional<double>(detail::json_get<double>(value, key));
    } else if (key == "hessian_constant") {
      c.hessian_constant = value.is_null() ? std::nullopt : std::optional<double>(detail::json_get<double>(value, key));
    } else if (key == "expert_policy") {
      c.expert_policy = parse_expert_policy(detail::json_get<std::string>(value, key));
    } else if (key == "advice_table") {
      c.advice_table = detail::json_get<std::vector<AdviceVector>>(value, key);
    } else if (key == "adversary") {
      c.adversary = parse_adversary(detail::json_get<std::string>(value, key));
    } else if (key == "lookahead_depth") {
      c.lookahead_depth = detail::json_count(value, key);
    } else if (key == "seed") {
      c.seed = detail::json_count(value, key);
    } else if (key == "mode") {
      c.mode = parse_mode(detail::json_get<std::string>(value, key));
    } else if (key == "actions") {
      c.actions = parse_actions(detail::json_get<std::string>(value, key));
    } else if (!extra_keys.contains(key)) {
      throw InputError("unknown key '" + key + "'");
    }
  }
}

/// Writes the header on construction and one line per round after that.
class TranscriptWriter {
 public:
  TranscriptWriter(std::ostream& out, const GameConfig& config) : out_(out) { out_ << config_to_json(config).dump() << '\n'; }

  void write(const RoundRecord& r) {
    line_.clear();
    line_ += std::to_string(r.round);
    for (double v : r.advice) append(v);
    for (double v : r.weights.values()) append(v);
    append(r.prediction);
    append(r.outcome);
    for (double v : r.increments) append(v);
    append(r.blackwell_value);
    append(r.telescoping_value);
    out_ << line_ << '\n';
  }

  void write(const RandomizedRound& r) {
    line_.clear();
    line_ += std::to_string(r.round);
    for (double v : r.distribution.values()) append(v);
    line_ += ',';
    line_ += std::to_string(r.sampled_action + 1);
    append(r.outcome);
    for (double v : r.expected_increment) append(v);
    append(r.sampled_loss);
    append(r.blackwell_value);
    append(r.telescoping_value);
    out_ << line_ << '\n';
  }

 private:
  void append(double v) {
    line_ += ',';
    line_ += format_double(v);
  }

  std::ostream& out_;
  std::string line_;
};

inline void write_transcript(std::ostream& out, const GameTranscript& t) {
  TranscriptWriter w(out, t.config);
  for (const auto& r : t.rounds) w.write(r);
  for (const auto& r : t.randomized_rounds) w.write(r);
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::size_t parse_index(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("not an index: '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Reads a transcript back. Summary fields (regrets, bound, certificate
/// maxima, first violation) are recomputed from the rounds.
inline GameTranscript parse_transcript(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("transcript is empty");
  GameTranscript t;
  try {
    apply_config_json(t.config, json::parse(line));
  } catch (const json::exception& e) {
    throw InputError(std::string("bad transcript header: ") + e.what());
  }
  t.config.validate();
  const std::size_t n = t.config.experts;
  const bool randomized = t.config.mode == GameMode::randomized;
  const std::size_t width = randomized ? 2 * n + 6 : 3 * n + 5;
  TranscriptAudit audit(t.config);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != width)
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, got " +
                       std::to_string(fields.size()));
    std::size_t k = 0;
    auto next = [&] { return parse_double(fields[k++]); };
    auto next_vec = [&] {
      std::vector<double> v(n);
      for (double& x : v) x = next();
      return v;
    };
    const std::size_t round = detail::parse_index(fields[k++]);
    if (randomized) {
      RandomizedRound r;
      r.round = round;
      r.distribution = WeightVector(next_vec());
      const std::size_t action = detail::parse_index(fields[k++]);
      if (action == 0 || action > n) throw InputError("line " + std::to_string(line_no) + ": action index out of range");
      r.sampled_action = action - 1;
      r.outcome = next();
      r.expected_increment = next_vec();
      r.sampled_loss = next();
      r.blackwell_value = next();
      r.telescoping_value = next();
      audit.add(r);
      t.randomized_rounds.push_back(std::move(r));
    } else {
      RoundRecord r;
      r.round = round;
      r.advice = next_vec();
      r.weights = WeightVector(next_vec());
      r.prediction = next();
      r.outcome = next();
      r.increments = next_vec();
      r.blackwell_value = next();
      r.telescoping_value = next();
      audit.add(r);
      t.rounds.push_back(std::move(r));
    }
  }
  audit.finish(t);
  return t;
}

}  // namespace potforecast
