#include "offmix/textprep.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "offmix/unicode.hpp"

namespace offmix {

// ---------------------------------------------------------------- unicode

char32_t decode_utf8(std::string_view text, size_t& pos) {
  unsigned char b0 = static_cast<unsigned char>(text[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
  else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
  else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
  else { ++pos; return 0xFFFD; }
  if (pos + len > text.size()) { ++pos; return 0xFFFD; }
  for (int i = 1; i < len; ++i) {
    unsigned char b = static_cast<unsigned char>(text[pos + i]);
    if ((b & 0xC0) != 0x80) { ++pos; return 0xFFFD; }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::u32string to_utf32(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) out += decode_utf8(text, pos);
  return out;
}

std::string to_utf8(const std::u32string& text) {
  std::string out;
  out.reserve(text.size() * 2);
  for (char32_t cp : text) append_utf8(out, cp);
  return out;
}

bool is_regional_indicator(char32_t cp) {
  return cp >= 0x1F1E6 && cp <= 0x1F1FF;
}

bool is_emoji(char32_t cp) {
  // Emoji / Extended_Pictographic ranges (Unicode 15 emoji-data), plus the
  // joining machinery that glues ZWJ sequences together.
  static const std::pair<char32_t, char32_t> kRanges[] = {
      {0x200D, 0x200D},    // zero width joiner
      {0x20E3, 0x20E3},    // combining enclosing keycap
      {0x2139, 0x2139},
      {0x2194, 0x21AA},
      {0x231A, 0x231B},
      {0x2328, 0x2328},
      {0x23CF, 0x23FA},
      {0x24C2, 0x24C2},
      {0x25AA, 0x25FE},
      {0x2600, 0x27BF},    // misc symbols + dingbats
      {0x2934, 0x2935},
      {0x2B05, 0x2B07},
      {0x2B1B, 0x2B1C},
      {0x2B50, 0x2B55},
      {0x3030, 0x3030},
      {0x303D, 0x303D},
      {0x3297, 0x3299},
      {0xFE0E, 0xFE0F},    // variation selectors
      {0x1F004, 0x1F004},
      {0x1F0CF, 0x1F0CF},
      {0x1F170, 0x1F19A},
      {0x1F201, 0x1F251},
      {0x1F300, 0x1F5FF},
      {0x1F600, 0x1F64F},
      {0x1F680, 0x1F6FF},
      {0x1F700, 0x1F77F},
      {0x1F780, 0x1F7FF},
      {0x1F900, 0x1F9FF},
      {0x1FA00, 0x1FAFF},
  };
  for (const auto& [lo, hi] : kRanges) {
    if (cp >= lo && cp <= hi) return true;
  }
  return false;
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  static const std::pair<char32_t, char32_t> kRanges[] = {
      {0x00A1, 0x00A1}, {0x00BF, 0x00BF},
      {0x0964, 0x0965},              // danda marks
      {0x2010, 0x2027},              // dashes, quotes, bullets, ellipsis
      {0x2030, 0x205E},
      {0x3001, 0x3002},
      {0xFF01, 0xFF0F}, {0xFF1A, 0xFF20}, {0xFF3B, 0xFF40}, {0xFF5B, 0xFF65},
  };
  for (const auto& [lo, hi] : kRanges) {
    if (cp >= lo && cp <= hi) return true;
  }
  return false;
}

bool is_whitespace(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x0B ||
         cp == 0x0C || cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200A) ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_native_script(char32_t cp) {
  return (cp >= 0x0B80 && cp <= 0x0BFF) ||   // Tamil
         (cp >= 0x0D00 && cp <= 0x0D7F);     // Malayalam
}

// --------------------------------------------------------------- cleaning

CleanConfig CleanConfig::task1() {
  CleanConfig c;
  c.remove_emoji = true;
  c.remove_flags = true;
  c.lowercase = true;
  return c;
}

CleanConfig CleanConfig::task2() {
  CleanConfig c;
  c.lowercase = true;
  c.strip_punctuation = true;
  c.strip_trailing_space = true;
  return c;
}

namespace {

char32_t lower_latin(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  // Latin-1 capitals, skipping the multiplication sign.
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
  return cp;
}

}  // namespace

std::string clean_text(const std::string& text, const CleanConfig& config) {
  std::u32string in = to_utf32(text);
  std::u32string kept;
  kept.reserve(in.size());

  for (size_t i = 0; i < in.size(); ++i) {
    char32_t cp = in[i];
    if (config.remove_flags && is_regional_indicator(cp) && i + 1 < in.size() &&
        is_regional_indicator(in[i + 1])) {
      ++i;  // drop the pair
      continue;
    }
    if (config.remove_emoji && is_emoji(cp)) continue;
    if (config.strip_punctuation && is_punctuation(cp)) continue;
    if (config.lowercase) cp = lower_latin(cp);
    kept += cp;
  }

  bool collapse = config.remove_emoji || config.remove_flags ||
                  config.strip_punctuation || config.strip_trailing_space;
  if (!collapse) return to_utf8(kept);

  std::u32string out;
  out.reserve(kept.size());
  bool pending_space = false;
  for (char32_t cp : kept) {
    if (is_whitespace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += U' ';
    pending_space = false;
    out += cp;
  }
  return to_utf8(out);
}

// --------------------------------------------------------- transliteration

TranslitScheme::TranslitScheme(std::string name, TargetScript target,
                               std::vector<Rule> rules)
    : name_(std::move(name)), target_(target), rules_(std::move(rules)) {
  for (const Rule& r : rules_) {
    if (r.roman.empty()) {
      throw Error(ErrorCode::Config, "scheme '" + name_ + "' has a rule with empty roman side");
    }
    max_rule_len_ = std::max(max_rule_len_, r.roman.size());
  }
  index_.reserve(rules_.size());
  for (size_t i = 0; i < rules_.size(); ++i) index_.emplace_back(rules_[i].roman, i);
  std::stable_sort(index_.begin(), index_.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  // Earlier rules win on duplicate roman keys.
  index_.erase(std::unique(index_.begin(), index_.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               index_.end());
}

const TranslitScheme::Rule* TranslitScheme::find(std::string_view key) const {
  auto it = std::lower_bound(index_.begin(), index_.end(), key,
                             [](const auto& e, std::string_view k) { return e.first < k; });
  if (it != index_.end() && it->first == key) return &rules_[it->second];
  return nullptr;
}

TranslitScheme TranslitScheme::load(const std::string& path, std::string name,
                                    TargetScript target) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open scheme table " + path);
  std::vector<Rule> rules;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::Config, path + ": scheme line without tab: '" + line + "'");
    }
    rules.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return TranslitScheme(std::move(name), target, std::move(rules));
}

std::string TranslitScheme::transliterate(const std::string& roman_text) const {
  return transliterate(roman_text, nullptr);
}

std::string TranslitScheme::transliterate(const std::string& roman_text,
                                          double* coverage) const {
  std::string out;
  out.reserve(roman_text.size() * 2);
  size_t pos = 0;
  size_t total_cp = 0, rewritten_cp = 0;
  while (pos < roman_text.size()) {
    size_t longest = std::min(max_rule_len_, roman_text.size() - pos);
    const Rule* match = nullptr;
    size_t match_len = 0;
    for (size_t len = longest; len >= 1; --len) {
      if (const Rule* r = find(std::string_view(roman_text).substr(pos, len))) {
        match = r;
        match_len = len;
        break;
      }
    }
    if (match) {
      out += match->native;
      // Rule roman sides are ASCII, so bytes == code points.
      total_cp += match_len;
      rewritten_cp += match_len;
      pos += match_len;
    } else {
      size_t next = pos;
      char32_t cp = decode_utf8(roman_text, next);
      append_utf8(out, cp);
      if (!is_whitespace(cp)) ++total_cp;
      pos = next;
    }
  }
  if (coverage) {
    *coverage = total_cp == 0 ? 1.0
                              : static_cast<double>(rewritten_cp) /
                                    static_cast<double>(total_cp);
  }
  return out;
}

TranslitScheme bundled_scheme(Language lang, const std::string& data_dir) {
  std::string dir = data_dir;
  if (dir.empty()) {
#ifdef OFFMIX_DATA_DIR
    dir = OFFMIX_DATA_DIR;
#else
    dir = "data";
#endif
  }
  if (lang == Language::ta) {
    return TranslitScheme::load(dir + "/schemes/tamil.tsv", "tamil-default",
                                TargetScript::tamil);
  }
  return TranslitScheme::load(dir + "/schemes/malayalam.tsv", "malayalam-default",
                              TargetScript::malayalam);
}

Dataset transliterate_dataset(const Dataset& ds, const TranslitScheme& scheme,
                              const CleanConfig& config, TranslitStats* stats) {
  Dataset out;
  out.task = ds.task;
  out.language = ds.language;
  out.samples.reserve(ds.samples.size());
  double coverage_sum = 0.0;
  double coverage_min = 1.0;
  for (const Sample& s : ds.samples) {
    Sample t = s;
    double coverage = 1.0;
    t.text = scheme.transliterate(clean_text(s.text, config), &coverage);
    coverage_sum += coverage;
    coverage_min = std::min(coverage_min, coverage);
    out.samples.push_back(std::move(t));
  }
  if (stats) {
    stats->samples = out.samples.size();
    stats->mean_coverage =
        out.samples.empty() ? 1.0 : coverage_sum / static_cast<double>(out.samples.size());
    stats->min_coverage = out.samples.empty() ? 1.0 : coverage_min;
  }
  return out;
}

}  // namespace offmix
