#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "coart/phoneme.hpp"

namespace coart {

/// Word -> pronunciation map restricted to a ranked vocabulary.
/// One pronunciation per word: only the unnumbered dictionary variant is
/// kept, stress digits are stripped at parse time, and words mapping onto
/// an identical phoneme sequence are collapsed onto the most frequent one
/// before pair enumeration.
struct Lexicon {
  std::map<std::string, PhonemeSequence> entries;
  std::map<std::string, int> rank;  // 1-based frequency rank

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

/// Two equal-length words whose sequences differ at exactly one position.
/// (word_a, word_b) is stored in lexicographic order.
struct MinimalPair {
  std::string word_a, word_b;
  PhonemeSequence seq_a, seq_b;
  int trigger_pos = 0;

  bool operator==(const MinimalPair& o) const {
    return word_a == o.word_a && word_b == o.word_b && trigger_pos == o.trigger_pos;
  }
};

/// Parses a pronunciation dictionary ("WORD  PH1 PH2 ...", "(k)" variant
/// suffixes, digit stress markers) against a rank-ordered word list and
/// keeps the top_n ranked words that have a usable entry.
Lexicon parse_lexicon(std::istream& dict, std::istream& wordlist, int top_n, const Inventory& inv);
Lexicon parse_lexicon_files(const std::string& dict_path, const std::string& wordlist_path,
                            int top_n, const Inventory& inv);

/// All unordered minimal pairs of the lexicon, homophones collapsed,
/// canonically ordered. Bucketing by one-position-wildcarded sequence
/// keys; the O(n^2) scan lives in the tests as the oracle.
std::vector<MinimalPair> enumerate_minimal_pairs(const Lexicon& lex);

/// Pairs file: "word_a<TAB>word_b<TAB>trigger_pos<TAB>seq_a<TAB>seq_b".
void write_pairs(std::ostream& os, const std::vector<MinimalPair>& pairs);
std::vector<MinimalPair> read_pairs(std::istream& is, const Inventory& inv);
void write_pairs_file(const std::string& path, const std::vector<MinimalPair>& pairs);
std::vector<MinimalPair> read_pairs_file(const std::string& path, const Inventory& inv);

/// Serializes a lexicon in dictionary format ("WORD  PH1 PH2 ...");
/// together with write_wordlist the output re-parses to an identical
/// lexicon.
void write_lexicon(std::ostream& os, const Lexicon& lex);

/// Words of the lexicon in rank order, one per line.
void write_wordlist(std::ostream& os, const Lexicon& lex);

}  // namespace coart
