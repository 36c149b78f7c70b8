#!/usr/bin/env python3
"""Regenerates the transliteration golden fixtures from the scheme tables.

Applies an independent greedy longest-match implementation to a fixed word
list and freezes the results; the C++ engine must reproduce them exactly.
"""

import os

TAMIL_WORDS = [
    "ka", "kaa", "ki", "amma", "appa", "padam", "nalla", "romba",
    "thala", "vera", "mass", "paaru", "kathai", "kadhal", "makkal",
    "vanakkam", "thambi", "machan", "semma", "vaazhkai",
]
MALAYALAM_WORDS = [
    "ka", "kaa", "ki", "amma", "achan", "padam", "nalla", "kandu",
    "vere", "oru", "pole", "katha", "chetan", "sugham", "veedu",
    "mazha", "paattu", "kollam", "adipoli", "nanni",
]


def load(path):
    rules = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            roman, native = line.split("\t")
            rules.setdefault(roman, native)
    return rules


def transliterate(text, rules):
    max_len = max(len(k) for k in rules)
    out = []
    i = 0
    while i < len(text):
        for length in range(min(max_len, len(text) - i), 0, -1):
            chunk = text[i:i + length]
            if chunk in rules:
                out.append(rules[chunk])
                i += length
                break
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def emit(scheme_path, words, out_path):
    rules = load(scheme_path)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write("# roman<TAB>expected native form; regenerate with scripts/gen_golden.py\n")
        for word in words:
            f.write("%s\t%s\n" % (word, transliterate(word, rules)))
    print("wrote %s" % out_path)


def main():
    root = os.path.join(os.path.dirname(__file__), "..")
    os.makedirs(os.path.join(root, "data/fixtures"), exist_ok=True)
    emit(os.path.join(root, "data/schemes/tamil.tsv"), TAMIL_WORDS,
         os.path.join(root, "data/fixtures/translit_golden_ta.tsv"))
    emit(os.path.join(root, "data/schemes/malayalam.tsv"), MALAYALAM_WORDS,
         os.path.join(root, "data/fixtures/translit_golden_ml.tsv"))


if __name__ == "__main__":
    main()
