#include "outage/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace outage::text {

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials = {kUnk,  kTp,  kCl,   kFeeder,
                                                    kPole, kNum, kAddr, kEnd};
  return specials;
}

Patterns::Patterns(std::vector<PatternRule> rules) : rules_(std::move(rules)) {
  for (const PatternRule& r : rules_) {
    compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::optimize);
  }
}

const Patterns& Patterns::defaults() {
  static const Patterns p(std::vector<PatternRule>{
      // equipment / report IDs
      {R"(\btp[- ]\d+)", kTp},
      {R"(\bcl[- ]\d+)", kCl},
      {R"(\bfeeder[- ]\d+)", kFeeder},
      {R"(\bp-\d+)", kPole},
      {R"(\bpole[- ]\d+)", kPole},
      // street addresses: number, optional compass direction, name, suffix
      {R"(\b\d+( [nsew]{1,2})? [a-z0-9]+ (st|ave|av|rd|blvd|pl|way|dr|ln)\b)", kAddr},
      // any remaining standalone number
      {R"(\b\d+\b)", kNum},
  });
  return p;
}

Patterns Patterns::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pattern file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "outage-patterns v1")
    throw std::runtime_error("bad pattern file header: " + path);
  std::vector<PatternRule> rules;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("pattern file line missing tab separator: " + line);
    rules.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return Patterns(std::move(rules));
}

void Patterns::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pattern file: " + path);
  out << "outage-patterns v1\n";
  for (const PatternRule& r : rules_) out << r.pattern << "\t" << r.replacement << "\n";
}

std::string Patterns::apply(const std::string& text) const {
  std::string cur = text;
  for (const std::regex& re : compiled_) {
    cur = std::regex_replace(cur, re,
                             rules_[&re - compiled_.data()].replacement);
  }
  return cur;
}

NormalizedLog normalize(std::string_view raw, const Patterns& patterns) {
  // Lowercase, drop punctuation, map invalid/control bytes to spaces.
  // Hyphens and slashes stay: terms like "26kv" and "s/s" carry meaning.
  static const std::string kPunct = ".,!?;:\"'()@#";
  std::string clean;
  clean.reserve(raw.size());
  for (unsigned char c : raw) {
    if (c >= 0x80 || c < 0x20) {
      clean.push_back(' ');
    } else if (kPunct.find(char(c)) != std::string::npos) {
      clean.push_back(' ');
    } else {
      clean.push_back(char(std::tolower(c)));
    }
  }

  clean = patterns.apply(clean);

  NormalizedLog out;
  std::string text;
  size_t i = 0;
  while (i < clean.size()) {
    while (i < clean.size() && clean[i] == ' ') ++i;
    size_t j = i;
    while (j < clean.size() && clean[j] != ' ') ++j;
    if (j > i) {
      if (!text.empty()) text.push_back(' ');
      int begin = int(text.size());
      text.append(clean, i, j - i);
      out.tokens.emplace_back(clean.substr(i, j - i));
      out.spans.emplace_back(begin, int(text.size()));
    }
    i = j;
  }
  out.text = std::move(text);
  return out;
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& corpus, int cutoff) {
  if (cutoff < 0) throw std::invalid_argument("Vocab::build: cutoff must be >= 0");
  if (corpus.empty()) throw std::invalid_argument("Vocab::build: empty corpus");
  std::unordered_map<std::string, int64_t> counts;
  for (const auto& doc : corpus)
    for (const auto& tok : doc) ++counts[tok];

  Vocab v;
  v.cutoff_ = cutoff;
  for (const std::string& s : special_tokens()) {
    v.index_[s] = int(v.tokens_.size());
    v.tokens_.push_back(s);
    auto it = counts.find(s);
    v.counts_.push_back(it == counts.end() ? 0 : it->second);
  }
  v.unk_id_ = v.index_.at(kUnk);
  v.end_id_ = v.index_.at(kEnd);

  std::vector<std::pair<std::string, int64_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n > cutoff && !v.index_.count(tok)) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [tok, n] : kept) {
    v.index_[tok] = int(v.tokens_.size());
    v.tokens_.push_back(tok);
    v.counts_.push_back(n);
  }
  return v;
}

int Vocab::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id_ : it->second;
}

TokenSeq Vocab::encode(const NormalizedLog& log) const {
  TokenSeq seq;
  if (log.tokens.empty()) {
    seq.ids.push_back(unk_id_);
    seq.spans.emplace_back(0, 0);
    return seq;
  }
  for (size_t i = 0; i < log.tokens.size(); ++i) {
    seq.ids.push_back(index(log.tokens[i]));
    seq.spans.push_back(log.spans[i]);
  }
  return seq;
}

TokenSeq Vocab::encode(const std::vector<std::string>& tokens) const {
  TokenSeq seq;
  if (tokens.empty()) {
    seq.ids.push_back(unk_id_);
    seq.spans.emplace_back(0, 0);
    return seq;
  }
  for (const std::string& t : tokens) {
    seq.ids.push_back(index(t));
    seq.spans.emplace_back(0, 0);
  }
  return seq;
}

std::vector<std::string> Vocab::decode(const TokenSeq& seq) const {
  std::vector<std::string> out;
  for (int id : seq.ids) out.push_back(token(id));
  return out;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocab file: " + path);
  out << "outage-vocab v1 cutoff " << cutoff_ << "\n";
  for (size_t i = 0; i < tokens_.size(); ++i)
    out << tokens_[i] << "\t" << counts_[i] << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty vocab file: " + path);
  Vocab v;
  {
    std::istringstream hs(line);
    std::string a, b, c;
    hs >> a >> b >> c >> v.cutoff_;
    if (a != "outage-vocab" || b != "v1" || c != "cutoff")
      throw std::runtime_error("bad vocab header: " + path);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("vocab line missing count: " + line);
    std::string tok = line.substr(0, tab);
    v.index_[tok] = int(v.tokens_.size());
    v.tokens_.push_back(tok);
    v.counts_.push_back(std::stoll(line.substr(tab + 1)));
  }
  if (!v.index_.count(kUnk) || !v.index_.count(kEnd))
    throw std::runtime_error("vocab file missing special tokens: " + path);
  v.unk_id_ = v.index_.at(kUnk);
  v.end_id_ = v.index_.at(kEnd);
  return v;
}

}  // namespace outage::text
