#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trafficlens/core/random.hpp"
#include "trafficlens/io/csv.hpp"

namespace trafficlens::datasynth {

using Stopwords = std::set<std::string>;

inline const Stopwords& default_stopwords() {
  static const Stopwords words = {
      "a",     "about", "after", "all",   "also",  "an",    "and",   "any",   "are",   "as",    "at",
      "be",    "been",  "before", "but",  "by",    "can",   "could", "did",   "do",    "does",  "for",
      "from",  "had",   "has",   "have",  "he",    "her",   "his",   "how",   "i",     "if",    "in",
      "into",  "is",    "it",    "its",   "more",  "most",  "no",    "not",   "of",    "on",    "one",
      "or",    "our",   "out",   "over",  "she",   "so",    "some",  "such",  "than",  "that",  "the",
      "their", "them",  "then",  "there", "these", "they",  "this",  "those", "through", "to",  "too",
      "under", "up",    "very",  "was",   "we",    "were",  "what",  "when",  "where", "which", "while",
      "who",   "will",  "with",  "would", "you",   "your",  "during", "near", "onto"};
  return words;
}

// Newline-delimited, one word per line; blank lines and surrounding spaces
// are ignored, words are lowercased.
inline Stopwords parse_stopwords(std::string_view text) {
  Stopwords out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    std::string w;
    for (char ch : line) {
      if (!std::isspace(static_cast<unsigned char>(ch))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (!w.empty()) out.insert(w);
  }
  return out;
}

inline Stopwords load_stopwords(const std::string& path) { return parse_stopwords(csv::read_file(path)); }

struct TermCount {
  std::string term;
  std::size_t count = 0;
  bool operator==(const TermCount&) const = default;
};

inline std::vector<TermCount> word_freq(const std::vector<std::string>& texts, const Stopwords& stopwords) {
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    std::string token;
    auto flush = [&] {
      if (token.size() >= 3 && !stopwords.contains(token)) ++counts[token];
      token.clear();
    };
    for (char ch : text) {
      const auto u = static_cast<unsigned char>(ch);
      if (std::isalnum(u)) {
        token += static_cast<char>(std::tolower(u));
      } else {
        flush();
      }
    }
    flush();
  }
  std::vector<TermCount> out;
  for (auto& [term, n] : counts) out.push_back({term, n});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
  return out;
}

inline std::string word_freq_csv(const std::vector<TermCount>& terms) {
  std::ostringstream os;
  csv::Writer w(os);
  w.row({"term", "count"});
  for (const auto& t : terms) w.row({t.term, std::to_string(t.count)});
  return os.str();
}

// Short crash narratives. "speed", "driving" and "turnover" are planted in
// every narrative with high probability, so they lead the frequency table.
inline std::vector<std::string> gen_narratives(std::size_t n, std::uint64_t seed) {
  static constexpr std::array<std::string_view, 6> kLead = {
      "Vehicle was travelling at excessive speed when the driver lost control",
      "Witnesses report the driving was erratic and the speed far above the limit",
      "Driver reported driving home after a long shift before the turnover",
      "Police noted unsafe speed on the wet carriageway and careless driving",
      "The car left the road at speed and rolled in a turnover on the verge",
      "Reckless driving at high speed preceded a turnover near the junction"};
  static constexpr std::array<std::string_view, 10> kDetail = {
      "a second vehicle was struck in the adjacent lane",
      "the motorcyclist sustained injuries to the leg",
      "emergency services closed the road for two hours",
      "debris was scattered across both lanes",
      "a pedestrian crossing was nearby",
      "visibility was reduced by heavy rain",
      "the truck trailer jackknifed after braking",
      "alcohol was suspected by attending officers",
      "the intersection signal was reported faulty",
      "the passenger was taken to hospital"};
  static constexpr std::array<std::string_view, 4> kTail = {
      "Investigators cite speed as the main factor.", "Distracted driving is under review.",
      "A turnover of the vehicle caused the worst injuries.", "No further driving offences were recorded."};
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string s(kLead[rng.index(kLead.size())]);
    s += ", and ";
    s += kDetail[rng.index(kDetail.size())];
    s += ". ";
    if (rng.uniform() < 0.5) {
      s += "Also ";
      s += kDetail[rng.index(kDetail.size())];
      s += ". ";
    }
    s += kTail[rng.index(kTail.size())];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace trafficlens::datasynth
