#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <unordered_map>

#include "hmd/csv.hpp"
#include "hmd/errors.hpp"

namespace hmd {

inline constexpr double kDefaultTauT = 0.5;

struct UtteranceDecision {
  double score = 0.0;
  int label = 0;
  double threshold_used = kDefaultTauT;
};

/// Binarizes a post score: hateful iff score >= tau_t.
inline UtteranceDecision classify_utterance(double score, double tau_t = kDefaultTauT) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorKind::kValidation, "score " + std::to_string(score) + " outside [0,1]");
  }
  if (!(tau_t > 0.0 && tau_t <= 1.0)) {
    throw Error(ErrorKind::kValidation, "tau_t " + std::to_string(tau_t) + " outside (0,1]");
  }
  return {score, score >= tau_t ? 1 : 0, tau_t};
}

inline double logistic(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Deterministic lexicon stand-in for a learned post classifier.
struct LexiconScorer {
  std::unordered_map<std::string, double> term_weights;
  double bias = 0.0;
};

/// logistic(bias + sum of weights of matched tokens). Tokens are maximal
/// ASCII alphanumeric runs, lowercased; every occurrence counts.
inline double stub_score(std::string_view text, const LexiconScorer& scorer) {
  double z = scorer.bias;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (auto it = scorer.term_weights.find(token); it != scorer.term_weights.end()) z += it->second;
    token.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      token += static_cast<char>(std::tolower(uc));
    } else {
      flush();
    }
  }
  flush();
  return logistic(z);
}

/// Reads a `term,weight` CSV; a row with term `__bias__` sets the bias.
inline LexiconScorer load_lexicon(const std::string& path) {
  csv::LineReader reader(path);
  csv::expect_header(reader, "term,weight");
  LexiconScorer scorer;
  std::string line;
  while (reader.next(line)) {
    const auto fields = csv::split(line, reader.line_no());
    if (fields.size() != 2) throw Error(ErrorKind::kFormat, "expected term,weight", reader.line_no());
    double weight = 0.0;
    try {
      std::size_t used = 0;
      weight = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, "bad weight '" + fields[1] + "'", reader.line_no());
    }
    if (!std::isfinite(weight)) throw Error(ErrorKind::kValidation, "weight not finite", reader.line_no());
    if (fields[0] == "__bias__") {
      scorer.bias = weight;
      continue;
    }
    if (weight <= 0.0) {
      throw Error(ErrorKind::kValidation, "term weight must be positive", reader.line_no());
    }
    std::string term;
    for (char c : fields[0]) term += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!scorer.term_weights.emplace(term, weight).second) {
      throw Error(ErrorKind::kDuplicate, "duplicate term '" + term + "'", reader.line_no());
    }
  }
  return scorer;
}

}  // namespace hmd
