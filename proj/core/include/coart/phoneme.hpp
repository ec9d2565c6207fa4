#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coart/tensor.hpp"

namespace coart {

enum class PhonemeKind { kVowel, kConsonant, kSilence };

enum class Place {
  kBilabial,
  kLabiodental,
  kDental,
  kAlveolar,
  kPostalveolar,
  kPalatal,
  kVelar,
  kGlottal,
};

const char* to_string(Place p);
const char* to_string(PhonemeKind k);

struct Phoneme {
  std::string symbol;
  PhonemeKind kind = PhonemeKind::kSilence;
  std::optional<Place> place;  // consonants only

  bool operator==(const Phoneme& o) const { return symbol == o.symbol; }
};

/// The fixed 40-entry phoneme set: the 39 stress-free ARPAbet phonemes in
/// alphabetical order followed by SIL at index 39. One-hot index == entry
/// position, so the ordering is part of the on-disk contract.
class Inventory {
 public:
  static const Inventory& arpabet();

  int size() const { return static_cast<int>(entries_.size()); }
  const Phoneme& at(int index) const;
  const std::vector<Phoneme>& entries() const { return entries_; }

  bool contains(const std::string& symbol) const;
  /// Index of `symbol`; throws if the symbol is not in the inventory.
  int index_of(const std::string& symbol) const;
  const Phoneme& phoneme(const std::string& symbol) const;

  const Phoneme& silence() const { return entries_.back(); }

 private:
  Inventory();
  std::vector<Phoneme> entries_;
};

struct PhonemeSequence {
  std::vector<Phoneme> tokens;
  std::string source_word;  // optional

  int size() const { return static_cast<int>(tokens.size()); }
  bool operator==(const PhonemeSequence& o) const { return tokens == o.tokens; }

  /// Space-separated symbol string, e.g. "P AE T".
  std::string str() const;
};

/// Builds a sequence from space-separated symbols, validating each one.
PhonemeSequence parse_sequence(const std::string& symbols, const Inventory& inv);

/// One-hot row of length inv.size() with a single 1 at the phoneme's index.
Vector one_hot(const Phoneme& p, const Inventory& inv);

/// n x c one-hot matrix for a whole sequence.
Matrix one_hot_rows(const PhonemeSequence& seq, const Inventory& inv);

/// Place of articulation for a consonant; throws on vowels and silence.
Place place_of(const Phoneme& p);

std::vector<Place> all_places();

}  // namespace coart
