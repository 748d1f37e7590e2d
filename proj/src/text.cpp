#include "arud/text.hpp"

#include <algorithm>
#include <cstddef>

namespace arud {

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    char32_t c = 0;
    int extra = 0;
    if (b < 0x80) {
      c = b;
    } else if ((b & 0xE0) == 0xC0) {
      c = b & 0x1F;
      extra = 1;
    } else if ((b & 0xF0) == 0xE0) {
      c = b & 0x0F;
      extra = 2;
    } else if ((b & 0xF8) == 0xF0) {
      c = b & 0x07;
      extra = 3;
    } else {
      throw InvalidScript("invalid UTF-8 lead byte");
    }
    if (extra > 0 && i + extra >= s.size()) {
      throw InvalidScript("truncated UTF-8 sequence");
    }
    for (int k = 1; k <= extra; ++k) {
      unsigned char cb = static_cast<unsigned char>(s[i + k]);
      if ((cb & 0xC0) != 0x80) throw InvalidScript("invalid UTF-8 continuation byte");
      c = (c << 6) | (cb & 0x3F);
    }
    out.push_back(c);
    i += 1 + extra;
  }
  return out;
}

std::string utf8_encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size() * 2);
  for (char32_t c : cps) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

namespace cp {

bool is_letter(char32_t c) {
  return (c >= 0x0621 && c <= 0x063A) || (c >= 0x0641 && c <= 0x064A) ||
         c == kAlefWasla;
}

bool is_mark(char32_t c) {
  return (c >= kFathatan && c <= kSukun) || c == kDaggerAlef;
}

bool is_sun_letter(char32_t c) {
  switch (c) {
    case 0x062A: case 0x062B: case 0x062F: case 0x0630:
    case 0x0631: case 0x0632: case 0x0633: case 0x0634:
    case 0x0635: case 0x0636: case 0x0637: case 0x0638:
    case kLam:   case kNoon:
      return true;
    default:
      return false;
  }
}

}  // namespace cp

namespace {

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r'; }

// Hamza-seat composition for decomposed input.
char32_t compose(char32_t base, char32_t mark) {
  if (base == cp::kAlef) {
    if (mark == 0x0653) return cp::kAlefMadda;
    if (mark == 0x0654) return cp::kAlefHamzaAbove;
    if (mark == 0x0655) return cp::kAlefHamzaBelow;
  }
  if (base == cp::kWaw && mark == 0x0654) return cp::kWawHamza;
  if ((base == cp::kYa || base == cp::kAlefMaqsura) && mark == 0x0654) return cp::kYaHamza;
  return 0;
}

}  // namespace

std::string normalize(std::string_view text) {
  std::u32string cps = utf8_decode(text);
  std::u32string buf;
  buf.reserve(cps.size());

  for (char32_t c : cps) {
    if (c == cp::kTatweel) continue;
    if (c == 0x0653 || c == 0x0654 || c == 0x0655) {
      if (!buf.empty()) {
        char32_t composed = compose(buf.back(), c);
        if (composed != 0) {
          buf.back() = composed;
          continue;
        }
      }
      throw InvalidScript("stray hamza mark");
    }
    if (cp::is_letter(c) || cp::is_mark(c) || is_space(c)) {
      buf.push_back(is_space(c) ? U' ' : c);
      continue;
    }
    throw InvalidScript("non-Arabic character U+" + std::to_string(static_cast<unsigned>(c)));
  }

  // Reorder each run of marks: shadda first, dagger alef last.
  std::u32string ordered;
  ordered.reserve(buf.size());
  std::size_t i = 0;
  while (i < buf.size()) {
    if (!cp::is_mark(buf[i])) {
      ordered.push_back(buf[i]);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < buf.size() && cp::is_mark(buf[j])) ++j;
    std::u32string run(buf.begin() + i, buf.begin() + j);
    std::stable_sort(run.begin(), run.end(), [](char32_t a, char32_t b) {
      auto rank = [](char32_t m) {
        if (m == cp::kShadda) return 0;
        if (m == cp::kDaggerAlef) return 2;
        return 1;
      };
      return rank(a) < rank(b);
    });
    ordered.append(run);
    i = j;
  }

  // Collapse whitespace, trim.
  std::u32string out;
  out.reserve(ordered.size());
  for (char32_t c : ordered) {
    if (c == U' ') {
      if (out.empty() || out.back() == U' ') continue;
      out.push_back(U' ');
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == U' ') out.pop_back();
  return utf8_encode(out);
}

namespace {

struct Glyph {
  char32_t letter;
  bool shadda = false;
  bool sukun = false;
  Vowel vowel = Vowel::None;
  char32_t tanween = 0;  // kFathatan/kDammatan/kKasratan or 0
  bool any_mark() const { return shadda || sukun || vowel != Vowel::None || tanween != 0; }
};

std::vector<Glyph> parse_glyphs(const std::u32string& word) {
  std::vector<Glyph> glyphs;
  for (char32_t c : word) {
    if (cp::is_letter(c)) {
      glyphs.push_back(Glyph{c});
      continue;
    }
    if (glyphs.empty()) continue;  // leading mark, ignore
    Glyph& g = glyphs.back();
    switch (c) {
      case cp::kShadda: g.shadda = true; break;
      case cp::kSukun: g.sukun = true; break;
      case cp::kFatha: g.vowel = Vowel::Fatha; break;
      case cp::kDamma: g.vowel = Vowel::Damma; break;
      case cp::kKasra: g.vowel = Vowel::Kasra; break;
      case cp::kFathatan: g.tanween = cp::kFathatan; g.vowel = Vowel::Fatha; break;
      case cp::kDammatan: g.tanween = cp::kDammatan; g.vowel = Vowel::Damma; break;
      case cp::kKasratan: g.tanween = cp::kKasratan; g.vowel = Vowel::Kasra; break;
      default: break;  // dagger alef: no structural effect
    }
  }
  return glyphs;
}

bool is_alef_like(char32_t c) {
  return c == cp::kAlef || c == cp::kAlefMadda || c == cp::kAlefMaqsura ||
         c == cp::kAlefWasla;
}

}  // namespace

double diacritic_coverage(std::string_view normalized_text) {
  std::u32string cps = utf8_decode(normalized_text);
  // Split into glyphs across the whole text; word boundaries do not matter
  // for the counting rule except that the "previous letter" resets at spaces.
  long required = 0;
  long marked = 0;
  const Glyph* prev = nullptr;
  std::vector<Glyph> glyphs;
  {
    std::u32string word;
    std::vector<std::vector<Glyph>> words;
    for (char32_t c : cps) {
      if (c == U' ') {
        if (!word.empty()) words.push_back(parse_glyphs(word));
        word.clear();
      } else {
        word.push_back(c);
      }
    }
    if (!word.empty()) words.push_back(parse_glyphs(word));
    for (const auto& w : words) {
      prev = nullptr;
      for (const Glyph& g : w) {
        bool exempt = false;
        if (is_alef_like(g.letter)) {
          exempt = true;
        } else if (g.letter == cp::kWaw && !g.any_mark() && prev != nullptr &&
                   (prev->vowel == Vowel::Damma || !prev->any_mark())) {
          exempt = true;  // long-u or ambiguous bare waw
        } else if (g.letter == cp::kYa && !g.any_mark() && prev != nullptr &&
                   (prev->vowel == Vowel::Kasra || !prev->any_mark())) {
          exempt = true;
        }
        if (!exempt) {
          ++required;
          if (g.any_mark()) ++marked;
        }
        prev = &g;
      }
    }
  }
  if (required == 0) return normalized_text.empty() ? 0.0 : 1.0;
  return static_cast<double>(marked) / static_cast<double>(required);
}

namespace {

char32_t long_letter(Vowel v) {
  switch (v) {
    case Vowel::Fatha: return cp::kAlef;
    case Vowel::Damma: return cp::kWaw;
    case Vowel::Kasra: return cp::kYa;
    default: return 0;
  }
}

// Emits the sound units of one word. `initial` marks the first word of the
// hemistich (hamzat al-wasl is pronounced there).
void word_to_sound(const std::vector<Glyph>& glyphs, bool initial,
                   std::vector<SoundUnit>& out) {
  std::size_t start = 0;
  const std::size_t n = glyphs.size();
  if (n == 0) return;

  // Definite article: (alef|alef-wasla) + vowelless lam + letter.
  bool article = n >= 3 &&
                 (glyphs[0].letter == cp::kAlef || glyphs[0].letter == cp::kAlefWasla) &&
                 !glyphs[0].shadda && glyphs[0].tanween == 0 &&
                 glyphs[1].letter == cp::kLam && glyphs[1].vowel == Vowel::None &&
                 !glyphs[1].shadda && glyphs[1].tanween == 0;
  if (article) {
    if (initial) {
      out.push_back(SoundUnit{cp::kAlef, glyphs[0].vowel == Vowel::None
                                             ? Vowel::Fatha
                                             : glyphs[0].vowel});
    }
    if (cp::is_sun_letter(glyphs[2].letter)) {
      start = 2;  // lam assimilated; sun letter usually carries shadda
    } else {
      out.push_back(SoundUnit{cp::kLam, Vowel::None});
      start = 2;
    }
  } else if (glyphs[0].letter == cp::kAlefWasla) {
    // Bare hamzat al-wasl outside the article: pronounced only when initial.
    if (initial) {
      out.push_back(SoundUnit{cp::kAlef, glyphs[0].vowel == Vowel::None
                                             ? Vowel::Kasra
                                             : glyphs[0].vowel});
    }
    start = 1;
  }

  for (std::size_t i = start; i < n; ++i) {
    const Glyph& g = glyphs[i];
    char32_t letter = g.letter;

    if (letter == cp::kAlefMadda) {
      // madda = hamza + long a
      out.push_back(SoundUnit{cp::kHamza, Vowel::Fatha});
      out.push_back(SoundUnit{cp::kAlef, Vowel::None});
      continue;
    }

    bool bare = !g.any_mark();
    if (bare && (letter == cp::kAlef || letter == cp::kAlefMaqsura)) {
      // Silent plural-waw alef: word-final alef right after a waw.
      if (i + 1 == n && i > start && glyphs[i - 1].letter == cp::kWaw &&
          glyphs[i - 1].vowel == Vowel::None && !glyphs[i - 1].shadda) {
        continue;
      }
      out.push_back(SoundUnit{cp::kAlef, Vowel::None});
      continue;
    }
    if (bare && letter == cp::kWaw && !out.empty() &&
        (out.back().vowel == Vowel::Damma ||
         (i > start && !glyphs[i - 1].any_mark()))) {
      out.push_back(SoundUnit{cp::kWaw, Vowel::None});
      continue;
    }
    if (bare && letter == cp::kYa && !out.empty() &&
        (out.back().vowel == Vowel::Kasra ||
         (i > start && !glyphs[i - 1].any_mark()))) {
      out.push_back(SoundUnit{cp::kYa, Vowel::None});
      continue;
    }

    if (g.shadda) {
      out.push_back(SoundUnit{letter, Vowel::None});
    }
    if (g.tanween != 0) {
      // tanween fath is seated on a following silent alef, skipped below
      out.push_back(SoundUnit{letter, g.vowel});
      out.push_back(SoundUnit{cp::kNoon, Vowel::None});
      if (g.tanween == cp::kFathatan && i + 1 < n &&
          is_alef_like(glyphs[i + 1].letter) && !glyphs[i + 1].any_mark()) {
        ++i;
      }
      continue;
    }
    if (g.sukun) {
      if (!g.shadda) out.push_back(SoundUnit{letter, Vowel::None});
      continue;
    }
    Vowel v = g.vowel;
    if (v == Vowel::None) v = Vowel::Fatha;  // tolerated omission under the coverage gate
    out.push_back(SoundUnit{letter, v});
  }
}

}  // namespace

std::vector<SoundUnit> orthography_to_sound(std::string_view hemistich,
                                            Position position,
                                            double min_coverage) {
  std::string norm = normalize(hemistich);
  double cov = diacritic_coverage(norm);
  if (cov + 1e-12 < min_coverage) {
    throw InsufficientDiacritics("diacritic coverage " + std::to_string(cov) +
                                 " below threshold");
  }
  std::u32string cps = utf8_decode(norm);
  std::vector<SoundUnit> out;
  std::u32string word;
  bool first = true;
  auto flush = [&] {
    if (word.empty()) return;
    word_to_sound(parse_glyphs(word), first, out);
    first = false;
    word.clear();
  };
  for (char32_t c : cps) {
    if (c == U' ') {
      flush();
    } else {
      word.push_back(c);
    }
  }
  flush();

  if (position == Position::HemistichFinal && !out.empty() &&
      out.back().vowel != Vowel::None) {
    out.push_back(SoundUnit{long_letter(out.back().vowel), Vowel::None});
  }
  return out;
}

Verse parse_verse(std::string_view text) {
  // Separator detection happens on the raw text; each part is then normalized.
  std::u32string cps = utf8_decode(text);
  std::vector<std::u32string> parts;
  std::u32string cur;
  std::size_t i = 0;
  while (i < cps.size()) {
    char32_t c = cps[i];
    if (c == U'#' || c == U'*') {
      parts.push_back(cur);
      cur.clear();
      ++i;
      continue;
    }
    if (c == U' ') {
      std::size_t j = i;
      while (j < cps.size() && cps[j] == U' ') ++j;
      if (j - i >= 3) {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(U' ');
      }
      i = j;
      continue;
    }
    cur.push_back(c);
    ++i;
  }
  parts.push_back(cur);

  Verse verse;
  for (const auto& p : parts) {
    std::string norm = normalize(utf8_encode(p));
    if (!norm.empty()) verse.hemistichs.push_back(std::move(norm));
  }
  if (verse.hemistichs.empty()) {
    throw InvalidScript("verse empty after normalization");
  }
  if (verse.hemistichs.size() > 2) {
    throw InvalidScript("verse has more than two hemistichs");
  }
  for (std::size_t k = 0; k < verse.hemistichs.size(); ++k) {
    if (k > 0) verse.raw += " # ";
    verse.raw += verse.hemistichs[k];
  }
  std::string joined;
  for (std::size_t k = 0; k < verse.hemistichs.size(); ++k) {
    if (k > 0) joined += ' ';
    joined += verse.hemistichs[k];
  }
  verse.diacritic_coverage = diacritic_coverage(joined);
  return verse;
}

}  // namespace arud
