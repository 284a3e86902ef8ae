#pragma once

#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace outage::text {

// Special tokens. All are always present in every vocabulary.
inline constexpr const char* kUnk = "<unk>";
inline constexpr const char* kTp = "<tp>";
inline constexpr const char* kCl = "<cl>";
inline constexpr const char* kFeeder = "<feeder>";
inline constexpr const char* kPole = "<pole>";
inline constexpr const char* kNum = "<num>";
inline constexpr const char* kAddr = "<addr>";
inline constexpr const char* kEnd = "<end>";

const std::vector<std::string>& special_tokens();

// ID-substitution rule: regex applied to the lowercased, punctuation-stripped
// text, replaced by a type token. Rules apply in order.
struct PatternRule {
  std::string pattern;
  std::string replacement;
};

class Patterns {
 public:
  explicit Patterns(std::vector<PatternRule> rules);
  static const Patterns& defaults();
  static Patterns load(const std::string& path);
  void save(const std::string& path) const;
  std::string apply(const std::string& text) const;
  const std::vector<PatternRule>& rules() const { return rules_; }

 private:
  std::vector<PatternRule> rules_;
  std::vector<std::regex> compiled_;
};

struct NormalizedLog {
  std::string text;                           // normalized form
  std::vector<std::string> tokens;            // whitespace-split
  std::vector<std::pair<int, int>> spans;     // [begin, end) offsets into text
};

// Total and idempotent: normalize(normalize(x).text) == normalize(x).
NormalizedLog normalize(std::string_view raw, const Patterns& patterns = Patterns::defaults());

struct TokenSeq {
  std::vector<int> ids;
  std::vector<std::pair<int, int>> spans;  // monotone; empty pair (0,0) when unknown

  size_t size() const { return ids.size(); }
};

class Vocab {
 public:
  // Token kept iff its training count exceeds `cutoff`. Specials always kept.
  // Index order: specials first, then by descending count, ties lexicographic.
  static Vocab build(const std::vector<std::vector<std::string>>& corpus, int cutoff);

  int size() const { return int(tokens_.size()); }
  int cutoff() const { return cutoff_; }
  int unk_id() const { return unk_id_; }
  int end_id() const { return end_id_; }
  int index(const std::string& token) const;  // unk_id for OOV
  const std::string& token(int id) const { return tokens_.at(id); }

  TokenSeq encode(const NormalizedLog& log) const;
  TokenSeq encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const TokenSeq& seq) const;

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int> index_;
  int cutoff_ = 0;
  int unk_id_ = 0;
  int end_id_ = 0;
};

}  // namespace outage::text
