#include "coart/phoneme.hpp"

#include <array>
#include <sstream>
#include <unordered_map>

#include "coart/common.hpp"

namespace coart {

namespace {

struct Entry {
  const char* symbol;
  PhonemeKind kind;
  Place place;  // meaningful for consonants only
};

// 39 ARPAbet phonemes, alphabetical. Place classes follow the standard
// ARPAbet consonant chart; W is grouped with the bilabials, R with the
// alveolars.
constexpr std::array<Entry, 39> kArpabet = {{
    {"AA", PhonemeKind::kVowel, Place::kBilabial},
    {"AE", PhonemeKind::kVowel, Place::kBilabial},
    {"AH", PhonemeKind::kVowel, Place::kBilabial},
    {"AO", PhonemeKind::kVowel, Place::kBilabial},
    {"AW", PhonemeKind::kVowel, Place::kBilabial},
    {"AY", PhonemeKind::kVowel, Place::kBilabial},
    {"B", PhonemeKind::kConsonant, Place::kBilabial},
    {"CH", PhonemeKind::kConsonant, Place::kPostalveolar},
    {"D", PhonemeKind::kConsonant, Place::kAlveolar},
    {"DH", PhonemeKind::kConsonant, Place::kDental},
    {"EH", PhonemeKind::kVowel, Place::kBilabial},
    {"ER", PhonemeKind::kVowel, Place::kBilabial},
    {"EY", PhonemeKind::kVowel, Place::kBilabial},
    {"F", PhonemeKind::kConsonant, Place::kLabiodental},
    {"G", PhonemeKind::kConsonant, Place::kVelar},
    {"HH", PhonemeKind::kConsonant, Place::kGlottal},
    {"IH", PhonemeKind::kVowel, Place::kBilabial},
    {"IY", PhonemeKind::kVowel, Place::kBilabial},
    {"JH", PhonemeKind::kConsonant, Place::kPostalveolar},
    {"K", PhonemeKind::kConsonant, Place::kVelar},
    {"L", PhonemeKind::kConsonant, Place::kAlveolar},
    {"M", PhonemeKind::kConsonant, Place::kBilabial},
    {"N", PhonemeKind::kConsonant, Place::kAlveolar},
    {"NG", PhonemeKind::kConsonant, Place::kVelar},
    {"OW", PhonemeKind::kVowel, Place::kBilabial},
    {"OY", PhonemeKind::kVowel, Place::kBilabial},
    {"P", PhonemeKind::kConsonant, Place::kBilabial},
    {"R", PhonemeKind::kConsonant, Place::kAlveolar},
    {"S", PhonemeKind::kConsonant, Place::kAlveolar},
    {"SH", PhonemeKind::kConsonant, Place::kPostalveolar},
    {"T", PhonemeKind::kConsonant, Place::kAlveolar},
    {"TH", PhonemeKind::kConsonant, Place::kDental},
    {"UH", PhonemeKind::kVowel, Place::kBilabial},
    {"UW", PhonemeKind::kVowel, Place::kBilabial},
    {"V", PhonemeKind::kConsonant, Place::kLabiodental},
    {"W", PhonemeKind::kConsonant, Place::kBilabial},
    {"Y", PhonemeKind::kConsonant, Place::kPalatal},
    {"Z", PhonemeKind::kConsonant, Place::kAlveolar},
    {"ZH", PhonemeKind::kConsonant, Place::kPostalveolar},
}};

const std::unordered_map<std::string, int>& symbol_index() {
  static const auto* map = [] {
    auto* m = new std::unordered_map<std::string, int>;
    const auto& inv = Inventory::arpabet();
    for (int i = 0; i < inv.size(); ++i) (*m)[inv.at(i).symbol] = i;
    return m;
  }();
  return *map;
}

}  // namespace

const char* to_string(Place p) {
  switch (p) {
    case Place::kBilabial: return "bilabial";
    case Place::kLabiodental: return "labiodental";
    case Place::kDental: return "dental";
    case Place::kAlveolar: return "alveolar";
    case Place::kPostalveolar: return "postalveolar";
    case Place::kPalatal: return "palatal";
    case Place::kVelar: return "velar";
    case Place::kGlottal: return "glottal";
  }
  return "?";
}

const char* to_string(PhonemeKind k) {
  switch (k) {
    case PhonemeKind::kVowel: return "vowel";
    case PhonemeKind::kConsonant: return "consonant";
    case PhonemeKind::kSilence: return "silence";
  }
  return "?";
}

Inventory::Inventory() {
  entries_.reserve(kArpabet.size() + 1);
  for (const auto& e : kArpabet) {
    Phoneme p;
    p.symbol = e.symbol;
    p.kind = e.kind;
    if (e.kind == PhonemeKind::kConsonant) p.place = e.place;
    entries_.push_back(std::move(p));
  }
  entries_.push_back(Phoneme{"SIL", PhonemeKind::kSilence, std::nullopt});
}

const Inventory& Inventory::arpabet() {
  static const Inventory inv;
  return inv;
}

const Phoneme& Inventory::at(int index) const {
  require(index >= 0 && index < size(), "inventory index {} out of range [0, {})", index, size());
  return entries_[static_cast<std::size_t>(index)];
}

bool Inventory::contains(const std::string& symbol) const {
  return symbol_index().count(symbol) > 0;
}

int Inventory::index_of(const std::string& symbol) const {
  auto it = symbol_index().find(symbol);
  if (it == symbol_index().end()) fail("unknown phoneme symbol '{}'", symbol);
  return it->second;
}

const Phoneme& Inventory::phoneme(const std::string& symbol) const {
  return entries_[static_cast<std::size_t>(index_of(symbol))];
}

std::string PhonemeSequence::str() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].symbol;
  }
  return out;
}

PhonemeSequence parse_sequence(const std::string& symbols, const Inventory& inv) {
  PhonemeSequence seq;
  std::istringstream is(symbols);
  std::string tok;
  while (is >> tok) seq.tokens.push_back(inv.phoneme(tok));
  require(!seq.tokens.empty(), "empty phoneme sequence '{}'", symbols);
  return seq;
}

Vector one_hot(const Phoneme& p, const Inventory& inv) {
  Vector v = Vector::Zero(inv.size());
  v[inv.index_of(p.symbol)] = 1.0;
  return v;
}

Matrix one_hot_rows(const PhonemeSequence& seq, const Inventory& inv) {
  Matrix m = Matrix::Zero(seq.size(), inv.size());
  for (int i = 0; i < seq.size(); ++i) m(i, inv.index_of(seq.tokens[i].symbol)) = 1.0;
  return m;
}

Place place_of(const Phoneme& p) {
  require(p.kind == PhonemeKind::kConsonant, "place_of: '{}' is a {}, not a consonant", p.symbol,
          to_string(p.kind));
  return *p.place;
}

std::vector<Place> all_places() {
  return {Place::kBilabial, Place::kLabiodental, Place::kDental,     Place::kAlveolar,
          Place::kPostalveolar, Place::kPalatal,  Place::kVelar,     Place::kGlottal};
}

}  // namespace coart
