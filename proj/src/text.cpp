#include "nmtfuse/text.hpp"

#include "nmtfuse/util.hpp"

namespace nmtfuse {

std::vector<uint32_t> utf8_decode(const std::string& s) {
  std::vector<uint32_t> out;
  out.reserve(s.size());
  size_t i = 0;
  const size_t n = s.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    uint32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      throw IoError("invalid UTF-8 byte at offset " + std::to_string(i));
    }
    if (i + extra >= n + (extra == 0 ? 1 : 0) && extra > 0 && i + extra >= n)
      throw IoError("truncated UTF-8 sequence at offset " + std::to_string(i));
    for (int k = 1; k <= extra; ++k) {
      const unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) throw IoError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
      cp = (cp << 6) | (cc & 0x3f);
    }
    // reject overlong encodings and surrogates
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xd800 && cp <= 0xdfff) || cp > 0x10ffff)
      throw IoError("invalid UTF-8 codepoint at offset " + std::to_string(i));
    out.push_back(cp);
    i += 1 + extra;
  }
  return out;
}

std::string utf8_encode_one(uint32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xc0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xe0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else {
    out += static_cast<char>(0xf0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  }
  return out;
}

std::string utf8_encode(const std::vector<uint32_t>& cps) {
  std::string out;
  for (uint32_t cp : cps) out += utf8_encode_one(cp);
  return out;
}

std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  for (uint32_t cp : utf8_decode(s)) out.push_back(utf8_encode_one(cp));
  return out;
}

namespace {

uint32_t to_lower_cp(uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  // Latin-1 Supplement capitals (except the multiplication sign)
  if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 0x20;
  if (cp == 0x130) return 'i';    // I with dot above
  if (cp == 0x178) return 0xff;   // Y with diaeresis
  // Latin Extended-A pairs upper/lower
  if (cp >= 0x100 && cp <= 0x177 && (cp % 2 == 0)) return cp + 1;
  if (cp >= 0x179 && cp <= 0x17d && (cp % 2 == 1)) return cp + 1;
  return cp;
}

bool is_space_cp(uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\r' || cp == '\n' || cp == 0xa0 /* nbsp */;
}

bool is_punct_cp(uint32_t cp) {
  if (cp < 0x80) {
    return (cp >= '!' && cp <= '/') || (cp >= ':' && cp <= '@') || (cp >= '[' && cp <= '`') ||
           (cp >= '{' && cp <= '~');
  }
  if (cp == 0xa1 || cp == 0xbf) return true;                // inverted ! and ?
  if (cp == 0xab || cp == 0xbb) return true;                // guillemets
  if (cp >= 0x2000 && cp <= 0x206f) return true;            // general punctuation
  if (cp >= 0x3001 && cp <= 0x3011) return true;            // CJK punctuation
  return false;
}

}  // namespace

std::map<uint32_t, std::string> NormalizeConfig::default_fold_map() {
  std::map<uint32_t, std::string> m;
  auto put = [&m](const char* from, const char* to) {
    auto cps = utf8_decode(from);
    m[cps[0]] = to;
  };
  // combining diacritical marks disappear
  for (uint32_t cp = 0x300; cp <= 0x36f; ++cp) m[cp] = "";
  put("à", "a"); put("á", "a"); put("â", "a"); put("ã", "a"); put("ä", "a"); put("å", "a");
  put("ā", "a"); put("ă", "a"); put("ą", "a"); put("æ", "ae");
  put("ç", "c"); put("ć", "c"); put("ĉ", "c"); put("ċ", "c"); put("č", "c");
  put("ď", "d"); put("đ", "d");
  put("è", "e"); put("é", "e"); put("ê", "e"); put("ë", "e");
  put("ē", "e"); put("ĕ", "e"); put("ė", "e"); put("ę", "e"); put("ě", "e");
  put("ĝ", "g"); put("ğ", "g"); put("ġ", "g"); put("ģ", "g");
  put("ĥ", "h"); put("ħ", "h");
  put("ì", "i"); put("í", "i"); put("î", "i"); put("ï", "i");
  put("ĩ", "i"); put("ī", "i"); put("ĭ", "i"); put("į", "i"); put("ı", "i");
  put("ĵ", "j"); put("ķ", "k");
  put("ĺ", "l"); put("ļ", "l"); put("ľ", "l"); put("ŀ", "l"); put("ł", "l");
  put("ñ", "n"); put("ń", "n"); put("ņ", "n"); put("ň", "n");
  put("ò", "o"); put("ó", "o"); put("ô", "o"); put("õ", "o"); put("ö", "o"); put("ø", "o");
  put("ō", "o"); put("ŏ", "o"); put("ő", "o"); put("œ", "oe");
  put("ŕ", "r"); put("ŗ", "r"); put("ř", "r");
  put("ś", "s"); put("ŝ", "s"); put("ş", "s"); put("š", "s"); put("ß", "ss");
  put("ţ", "t"); put("ť", "t"); put("ŧ", "t");
  put("ù", "u"); put("ú", "u"); put("û", "u"); put("ü", "u");
  put("ũ", "u"); put("ū", "u"); put("ŭ", "u"); put("ů", "u"); put("ű", "u"); put("ų", "u");
  put("ŵ", "w"); put("ý", "y"); put("ÿ", "y"); put("ŷ", "y");
  put("ź", "z"); put("ż", "z"); put("ž", "z");
  return m;
}

std::map<uint32_t, std::string> NormalizeConfig::load_fold_map(const std::string& path) {
  std::map<uint32_t, std::string> m;
  for (const std::string& raw : read_lines(path)) {
    const std::string line = strip(raw);
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) throw IoError("fold map line missing tab: " + line);
    const auto from = utf8_decode(strip(line.substr(0, tab)));
    if (from.size() != 1) throw IoError("fold map source must be one character: " + line);
    m[from[0]] = strip(line.substr(tab + 1));
  }
  return m;
}

std::string normalize(const std::string& text, const NormalizeConfig& cfg) {
  const std::vector<uint32_t> cps = utf8_decode(text);
  std::string out;
  out.reserve(text.size() + 16);
  bool pending_space = false;
  auto emit = [&out, &pending_space](const std::string& piece) {
    if (piece.empty()) return;
    if (pending_space && !out.empty()) out += ' ';
    out += piece;
    pending_space = false;
  };
  for (uint32_t cp : cps) {
    if (is_space_cp(cp)) {
      pending_space = true;
      continue;
    }
    uint32_t c = cfg.lowercase ? to_lower_cp(cp) : cp;
    if (cfg.fold) {
      auto it = cfg.fold_map.find(c);
      if (it != cfg.fold_map.end()) {
        if (it->second.empty()) continue;  // folded away entirely
        // replacement may be multi-char; it is emitted as ordinary letters
        if (is_punct_cp(c)) {
          pending_space = true;
          emit(it->second);
          pending_space = true;
        } else {
          emit(it->second);
        }
        continue;
      }
    }
    if (is_punct_cp(c)) {
      pending_space = true;
      emit(utf8_encode_one(c));
      pending_space = true;
    } else {
      emit(utf8_encode_one(c));
    }
  }
  return out;
}

}  // namespace nmtfuse
