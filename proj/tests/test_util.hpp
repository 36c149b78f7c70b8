#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "offmix/corpus.hpp"
#include "offmix/textprep.hpp"
#include "offmix/translate.hpp"

namespace offmix::testing {

inline std::string data_dir() {
#ifdef OFFMIX_TEST_DATA_DIR
  return OFFMIX_TEST_DATA_DIR;
#else
  return "data";
#endif
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("offmix_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// ------------------------------------------------------- synthetic corpora

/// Writes a TSV with the requested class counts (labels interleaved so
/// either prefix is mixed). Texts are distinct.
inline void write_counted_tsv(const std::string& path, long count_not,
                              long count_off) {
  std::ofstream out(path, std::ios::binary);
  out << "id\ttext\tlabel\n";
  long n = 0, f = 0, id = 0;
  while (n < count_not || f < count_off) {
    if (n < count_not) {
      out << "n" << id << "\tsample text number " << id << "\tNOT\n";
      ++n, ++id;
    }
    if (f < count_off) {
      out << "f" << id << "\tsample text number " << id << "\tOFF\n";
      ++f, ++id;
    }
  }
}

/// Separable bilingual corpus: neutral filler words everywhere, a couple
/// of marker words in every OFF sample. The same samples drive both
/// architectures; the parallel view maps each word through a fixed
/// dictionary.
struct SynthCorpus {
  Dataset task1;                       // romanized text
  std::vector<ParallelSample> task2;   // native + english views
};

inline SynthCorpus make_synth_corpus(size_t per_language, uint64_t seed) {
  struct Word {
    const char* roman;
    const char* english;
  };
  static const Word kFillTa[] = {
      {"padam", "movie"},  {"vera", "another"}, {"oru", "one"},
      {"romba", "very"},   {"paaru", "see"},    {"kathai", "story"},
      {"nalla", "good"},   {"ippo", "now"},
  };
  static const Word kFillMl[] = {
      {"kandu", "saw"},    {"vere", "other"},   {"pole", "like"},
      {"katha", "story"},  {"sugham", "fine"},  {"veedu", "house"},
      {"adipoli", "awesome"}, {"paattu", "song"},
  };
  static const Word kMarkTa[] = {
      {"mokka", "boring"},
      {"kirukka", "crazy"},
      {"waste", "waste"},
      {"loosu", "silly"},
  };
  static const Word kMarkMl[] = {
      {"mosham", "awful"},
      {"chali", "lame"},
      {"waste", "waste"},
      {"kashtam", "pity"},
  };

  std::mt19937_64 rng(seed ^ 0xabcdef1234567890ULL);
  auto pick = [&rng](const Word* pool, size_t n) { return pool[rng() % n]; };

  TranslitScheme ta = bundled_scheme(Language::ta, data_dir());
  TranslitScheme ml = bundled_scheme(Language::ml, data_dir());
  CleanConfig clean = CleanConfig::task2();

  SynthCorpus corpus;
  corpus.task1.task = Task::task1;
  corpus.task1.language = Language::ta;

  size_t id = 0;
  for (int lang = 0; lang < 2; ++lang) {
    const Word* fill = lang == 0 ? kFillTa : kFillMl;
    size_t fill_n = lang == 0 ? std::size(kFillTa) : std::size(kFillMl);
    const Word* mark = lang == 0 ? kMarkTa : kMarkMl;
    size_t mark_n = lang == 0 ? std::size(kMarkTa) : std::size(kMarkMl);
    const TranslitScheme& scheme = lang == 0 ? ta : ml;

    for (size_t k = 0; k < per_language; ++k) {
      bool offensive = k % 2 == 1;
      size_t len = 3 + rng() % 3;
      std::vector<Word> words;
      for (size_t w = 0; w < len; ++w) words.push_back(pick(fill, fill_n));
      if (offensive) {
        // heavy, position-varied marker presence keeps the classes apart
        words[rng() % words.size()] = pick(mark, mark_n);
        words[len / 2] = pick(mark, mark_n);
        words.push_back(pick(mark, mark_n));
      }
      std::string roman, english;
      for (const Word& w : words) {
        if (!roman.empty()) roman += ' ', english += ' ';
        roman += w.roman;
        english += w.english;
      }

      Sample s;
      s.id = "s" + std::to_string(id++);
      s.text = roman;
      s.label = offensive ? Label::OFF : Label::NOT;
      s.language = Language::ta;
      corpus.task1.samples.push_back(s);

      ParallelSample p;
      p.id = s.id;
      p.native_text = scheme.transliterate(clean_text(roman, clean));
      p.english_text = english;
      p.label = s.label;
      corpus.task2.push_back(std::move(p));
    }
  }
  return corpus;
}

}  // namespace offmix::testing
