#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "arud/error.hpp"

namespace arud {

struct InvalidScript : Error {
  using Error::Error;
};
struct InsufficientDiacritics : Error {
  using Error::Error;
};

std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view cps);

// Short vowel carried by a sound unit. None marks a still (sakin) unit.
enum class Vowel : std::uint8_t { None, Fatha, Damma, Kasra };

struct SoundUnit {
  char32_t consonant = 0;
  Vowel vowel = Vowel::None;
  bool operator==(const SoundUnit&) const = default;
};

enum class Position { Internal, HemistichFinal };

// Removes tatweel, composes hamza seats, reorders marks (shadda before the
// vowel), collapses whitespace. Throws InvalidScript on non-Arabic content.
std::string normalize(std::string_view text);

// Fraction of letters bearing a harakah/sukun/shadda/tanween among letters
// required to bear one. Alef and a bare waw/ya acting as a long vowel are
// exempt from the denominator. Empty text yields 0.
double diacritic_coverage(std::string_view normalized_text);

// Arud writing: shadda expansion, tanween -> vowel + still noon, definite
// article handling, long vowels as still units, final saturation at
// hemistich end. Input is one hemistich. Throws InsufficientDiacritics when
// coverage is below min_coverage.
std::vector<SoundUnit> orthography_to_sound(std::string_view hemistich,
                                            Position position,
                                            double min_coverage = 0.8);

struct Verse {
  std::string raw;                       // normalized, hemistichs joined by " # "
  std::vector<std::string> hemistichs;   // 1 or 2 normalized parts
  double diacritic_coverage = 0.0;
};

// Splits on '#', '*' or 3+ consecutive spaces, then normalizes each part.
Verse parse_verse(std::string_view text);

namespace cp {
inline constexpr char32_t kHamza = 0x0621;
inline constexpr char32_t kAlefMadda = 0x0622;
inline constexpr char32_t kAlefHamzaAbove = 0x0623;
inline constexpr char32_t kWawHamza = 0x0624;
inline constexpr char32_t kAlefHamzaBelow = 0x0625;
inline constexpr char32_t kYaHamza = 0x0626;
inline constexpr char32_t kAlef = 0x0627;
inline constexpr char32_t kTaMarbuta = 0x0629;
inline constexpr char32_t kTatweel = 0x0640;
inline constexpr char32_t kLam = 0x0644;
inline constexpr char32_t kMeem = 0x0645;
inline constexpr char32_t kNoon = 0x0646;
inline constexpr char32_t kWaw = 0x0648;
inline constexpr char32_t kAlefMaqsura = 0x0649;
inline constexpr char32_t kYa = 0x064A;
inline constexpr char32_t kFathatan = 0x064B;
inline constexpr char32_t kDammatan = 0x064C;
inline constexpr char32_t kKasratan = 0x064D;
inline constexpr char32_t kFatha = 0x064E;
inline constexpr char32_t kDamma = 0x064F;
inline constexpr char32_t kKasra = 0x0650;
inline constexpr char32_t kShadda = 0x0651;
inline constexpr char32_t kSukun = 0x0652;
inline constexpr char32_t kDaggerAlef = 0x0670;
inline constexpr char32_t kAlefWasla = 0x0671;

bool is_letter(char32_t c);
bool is_mark(char32_t c);
bool is_sun_letter(char32_t c);
}  // namespace cp

}  // namespace arud
