#include "lco/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "lco/errors.hpp"

namespace lco {

ToyEnvironment::ToyEnvironment(std::size_t vocab, std::size_t horizon, RewardRule rule)
    : vocab_(vocab), horizon_(horizon), rule_(std::move(rule)) {
  if (vocab < 2 || vocab > kMaxToyVocab) throw InvalidInputError("vocab must lie in [2, 64]");
  if (horizon < 1 || horizon > kMaxToyHorizon) throw InvalidInputError("horizon must lie in [1, 16]");
  if (const auto* ts = std::get_if<TargetSequenceRule>(&rule_)) {
    if (ts->target.size() != horizon_) throw InvalidInputError("target sequence length must equal the horizon");
    for (ActionIndex a : ts->target)
      if (a >= vocab_) throw InvalidInputError("target token outside the vocabulary");
  } else {
    check_table(std::get<ScorerTableRule>(rule_).table, "reward table");
  }
}

void ToyEnvironment::check_table(const Table& t, const char* what) const {
  if (t.size() < horizon_) {
    throw InvalidInputError(std::string(what) + " has " + std::to_string(t.size()) + " rows, horizon needs " +
                            std::to_string(horizon_));
  }
  for (const auto& row : t) {
    if (row.size() != vocab_) throw InvalidInputError(std::string(what) + " rows must have one entry per token");
  }
}

double ToyEnvironment::sequence_reward(std::span<const ActionIndex> sequence) const {
  if (sequence.size() != horizon_) throw InvalidInputError("sequence length must equal the horizon");
  if (const auto* ts = std::get_if<TargetSequenceRule>(&rule_)) {
    return std::equal(sequence.begin(), sequence.end(), ts->target.begin()) ? 1.0 : -1.0;
  }
  const auto& table = std::get<ScorerTableRule>(rule_).table;
  double total = 0.0;
  for (std::size_t t = 0; t < horizon_; ++t) total += table[t][sequence[t]];
  return total;
}

std::vector<double> ToyEnvironment::sampled_advantages(std::span<const ActionIndex> sequence) const {
  if (sequence.size() != horizon_) throw InvalidInputError("sequence length must equal the horizon");
  if (std::holds_alternative<TargetSequenceRule>(rule_)) {
    return std::vector<double>(horizon_, sequence_reward(sequence));
  }
  const auto& table = std::get<ScorerTableRule>(rule_).table;
  std::vector<double> out(horizon_);
  for (std::size_t t = 0; t < horizon_; ++t) out[t] = table[t][sequence[t]];
  return out;
}

void ToyEnvironment::set_scorer_log_probs(Table t) {
  check_table(t, "scorer table");
  scorer_ = std::move(t);
}

void ToyEnvironment::set_reference_log_probs(Table t) {
  check_table(t, "reference table");
  reference_ = std::move(t);
}

Table read_table(const std::filesystem::path& path, std::size_t vocab) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open table file " + path.string());
  Table rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) {
      double value = 0.0;
      try {
        std::size_t used = 0;
        value = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        // stod rejects "-inf"/"nan" spellings on some platforms; accept them explicitly.
        if (token == "-inf" || token == "-Inf") value = -INFINITY;
        else if (token == "inf" || token == "Inf") value = INFINITY;
        else if (token == "nan" || token == "NaN") value = NAN;
        else throw InvalidInputError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + token + "'");
      }
      row.push_back(value);
    }
    if (row.empty()) continue;
    if (row.size() != vocab) {
      throw InvalidInputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(vocab) + " values, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lco
