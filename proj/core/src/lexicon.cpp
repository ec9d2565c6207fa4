#include "coart/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "coart/common.hpp"

namespace coart {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string strip_digits(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) out += c;
  return out;
}

// "WORD(2)" -> true. The unnumbered entry is the canonical pronunciation.
bool is_numbered_variant(const std::string& word) {
  if (word.empty() || word.back() != ')') return false;
  auto open = word.rfind('(');
  if (open == std::string::npos || open + 1 >= word.size() - 1) return false;
  for (auto i = open + 1; i + 1 < word.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(word[i]))) return false;
  return true;
}

}  // namespace

Lexicon parse_lexicon(std::istream& dict, std::istream& wordlist, int top_n,
                      const Inventory& inv) {
  // Pass 1: canonical pronunciation per dictionary word.
  std::unordered_map<std::string, PhonemeSequence> pron;
  std::string line;
  int lineno = 0;
  while (std::getline(dict, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind(";;;", 0) == 0) continue;  // cmudict comments
    std::istringstream is(line);
    std::string word;
    is >> word;
    std::vector<std::string> phones;
    std::string tok;
    while (is >> tok) phones.push_back(strip_digits(tok));
    if (word.empty() || phones.empty())
      fail("dictionary parse error at line {}: '{}'", lineno, line);
    if (is_numbered_variant(word)) continue;
    bool valid = true;
    PhonemeSequence seq;
    for (const auto& ph : phones) {
      if (!inv.contains(ph)) {
        valid = false;  // out-of-inventory symbol: drop the word
        break;
      }
      seq.tokens.push_back(inv.phoneme(ph));
    }
    if (!valid) continue;
    seq.source_word = lower(word);
    pron.emplace(seq.source_word, std::move(seq));
  }

  // Pass 2: walk the ranked list, keep words with an entry.
  Lexicon lex;
  int rank = 0;
  while (rank < top_n && std::getline(wordlist, line)) {
    ++rank;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream is(line);
    std::string word;
    is >> word;
    if (word.empty()) fail("wordlist parse error at line {}: empty line", rank);
    word = lower(word);
    auto it = pron.find(word);
    if (it == pron.end()) continue;
    if (lex.entries.count(word)) continue;  // duplicate listing keeps the best rank
    lex.entries.emplace(word, it->second);
    lex.rank.emplace(word, rank);
  }
  if (lex.empty()) fail("empty lexicon: no ranked word within top {} has a dictionary entry", top_n);
  return lex;
}

Lexicon parse_lexicon_files(const std::string& dict_path, const std::string& wordlist_path,
                            int top_n, const Inventory& inv) {
  std::ifstream dict(dict_path);
  require(dict.good(), "cannot open dictionary '{}'", dict_path);
  std::ifstream wl(wordlist_path);
  require(wl.good(), "cannot open wordlist '{}'", wordlist_path);
  return parse_lexicon(dict, wl, top_n, inv);
}

std::vector<MinimalPair> enumerate_minimal_pairs(const Lexicon& lex) {
  require(!lex.empty(), "enumerate_minimal_pairs: empty lexicon");

  // Collapse homophones onto the most frequent word.
  std::unordered_map<std::string, const std::string*> by_seq;
  for (const auto& [word, seq] : lex.entries) {
    const std::string key = seq.str();
    auto it = by_seq.find(key);
    if (it == by_seq.end() || lex.rank.at(word) < lex.rank.at(*it->second))
      by_seq[key] = &word;
  }

  struct Kept {
    const std::string* word;
    const PhonemeSequence* seq;
  };
  std::vector<Kept> kept;
  kept.reserve(by_seq.size());
  for (const auto& [key, wordp] : by_seq) kept.push_back({wordp, &lex.entries.at(*wordp)});

  // Bucket by sequence with one position wildcarded. After homophone
  // collapse, any two members of a bucket differ at exactly that position.
  std::unordered_map<std::string, std::vector<int>> buckets;
  for (int w = 0; w < static_cast<int>(kept.size()); ++w) {
    const auto& toks = kept[static_cast<std::size_t>(w)].seq->tokens;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      std::string key = fmt::format("{}|", i);
      for (std::size_t j = 0; j < toks.size(); ++j) {
        key += (j == i) ? "*" : toks[j].symbol;
        key += ' ';
      }
      buckets[key].push_back(w);
    }
  }

  std::vector<MinimalPair> pairs;
  for (const auto& [key, members] : buckets) {
    const auto bar = key.find('|');
    const int pos = std::stoi(key.substr(0, bar));
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const Kept& ka = kept[static_cast<std::size_t>(members[a])];
        const Kept& kb = kept[static_cast<std::size_t>(members[b])];
        MinimalPair mp;
        if (*ka.word < *kb.word) {
          mp.word_a = *ka.word;
          mp.word_b = *kb.word;
          mp.seq_a = *ka.seq;
          mp.seq_b = *kb.seq;
        } else {
          mp.word_a = *kb.word;
          mp.word_b = *ka.word;
          mp.seq_a = *kb.seq;
          mp.seq_b = *ka.seq;
        }
        mp.trigger_pos = pos;
        pairs.push_back(std::move(mp));
      }
    }
  }

  std::sort(pairs.begin(), pairs.end(), [](const MinimalPair& x, const MinimalPair& y) {
    if (x.word_a != y.word_a) return x.word_a < y.word_a;
    return x.word_b < y.word_b;
  });
  return pairs;
}

void write_pairs(std::ostream& os, const std::vector<MinimalPair>& pairs) {
  for (const auto& p : pairs)
    os << p.word_a << '\t' << p.word_b << '\t' << p.trigger_pos << '\t' << p.seq_a.str() << '\t'
       << p.seq_b.str() << '\n';
}

std::vector<MinimalPair> read_pairs(std::istream& is, const Inventory& inv) {
  std::vector<MinimalPair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 5) fail("pairs file line {}: expected 5 tab-separated fields", lineno);
    MinimalPair mp;
    mp.word_a = fields[0];
    mp.word_b = fields[1];
    mp.trigger_pos = std::stoi(fields[2]);
    mp.seq_a = parse_sequence(fields[3], inv);
    mp.seq_b = parse_sequence(fields[4], inv);
    require(mp.seq_a.size() == mp.seq_b.size(), "pairs file line {}: length mismatch", lineno);
    require(mp.trigger_pos >= 0 && mp.trigger_pos < mp.seq_a.size(),
            "pairs file line {}: trigger_pos out of range", lineno);
    pairs.push_back(std::move(mp));
  }
  return pairs;
}

void write_pairs_file(const std::string& path, const std::vector<MinimalPair>& pairs) {
  std::ofstream os(path);
  require(os.good(), "cannot open '{}' for writing", path);
  write_pairs(os, pairs);
  require(os.good(), "write failed for '{}'", path);
}

std::vector<MinimalPair> read_pairs_file(const std::string& path, const Inventory& inv) {
  std::ifstream is(path);
  require(is.good(), "cannot open pairs file '{}'", path);
  return read_pairs(is, inv);
}

void write_lexicon(std::ostream& os, const Lexicon& lex) {
  for (const auto& [word, seq] : lex.entries) os << word << "  " << seq.str() << '\n';
}

void write_wordlist(std::ostream& os, const Lexicon& lex) {
  std::vector<std::pair<int, const std::string*>> by_rank;
  by_rank.reserve(lex.rank.size());
  for (const auto& [word, r] : lex.rank) by_rank.emplace_back(r, &word);
  std::sort(by_rank.begin(), by_rank.end());
  for (const auto& [r, wordp] : by_rank) os << *wordp << '\n';
}

}  // namespace coart
