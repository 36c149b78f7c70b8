#!/usr/bin/env python3
"""Regenerates the bundled roman->native transliteration tables.

Each scheme is a flat longest-match rule table: one rule per consonant
(bare form carries a virama), one per consonant+vowel combination, one per
independent vowel. Greedy longest-match over this table reproduces abugida
composition, including gemination ("amma" -> a + m + ma).

Usage: python3 scripts/gen_schemes.py  (writes data/schemes/*.tsv)
"""

import os

TAMIL_VIRAMA = "்"
TAMIL_VOWELS = [
    # roman, independent, sign ("" = inherent a)
    ("a", "அ", ""),
    ("aa", "ஆ", "ா"),
    ("i", "இ", "ி"),
    ("ii", "ஈ", "ீ"),
    ("u", "உ", "ு"),
    ("uu", "ஊ", "ூ"),
    ("e", "எ", "ெ"),
    ("ee", "ஏ", "ே"),
    ("ai", "ஐ", "ை"),
    ("o", "ஒ", "ொ"),
    ("oo", "ஓ", "ோ"),
    ("au", "ஔ", "ௌ"),
]
TAMIL_CONSONANTS = [
    ("k", "க"), ("g", "க"), ("ng", "ங"),
    ("ch", "ச"), ("c", "ச"), ("s", "ஸ"),
    ("j", "ஜ"), ("nj", "ஞ"),
    ("t", "ட"), ("d", "ட"),
    ("th", "த"), ("dh", "த"), ("n", "ந"),
    ("p", "ப"), ("b", "ப"), ("m", "ம"),
    ("y", "ய"), ("r", "ர"), ("rr", "ற"),
    ("l", "ல"),
    ("zh", "ழ"), ("z", "ழ"),
    ("v", "வ"), ("w", "வ"),
    ("sh", "ஷ"), ("h", "ஹ"),
    ("f", "ஃப"),
]

MALAYALAM_VIRAMA = "്"
MALAYALAM_VOWELS = [
    ("a", "അ", ""),
    ("aa", "ആ", "ാ"),
    ("i", "ഇ", "ി"),
    ("ii", "ഈ", "ീ"),
    ("u", "ഉ", "ു"),
    ("uu", "ഊ", "ൂ"),
    ("e", "എ", "െ"),
    ("ee", "ഏ", "േ"),
    ("ai", "ഐ", "ൈ"),
    ("o", "ഒ", "ൊ"),
    ("oo", "ഓ", "ോ"),
    ("au", "ഔ", "ൌ"),
]
MALAYALAM_CONSONANTS = [
    ("k", "ക"), ("kh", "ഖ"), ("g", "ഗ"), ("gh", "ഘ"),
    ("ng", "ങ"),
    ("ch", "ച"), ("c", "ച"), ("j", "ജ"), ("jh", "ഝ"),
    ("nj", "ഞ"),
    ("t", "ട"), ("d", "ദ"), ("dh", "ധ"),
    ("th", "ത"), ("n", "ന"),
    ("p", "പ"), ("ph", "ഫ"), ("f", "ഫ"),
    ("b", "ബ"), ("bh", "ഭ"), ("m", "മ"),
    ("y", "യ"), ("r", "ര"), ("rr", "റ"),
    ("l", "ല"),
    ("zh", "ഴ"), ("z", "ഴ"),
    ("v", "വ"), ("w", "വ"),
    ("sh", "ഷ"), ("s", "സ"), ("h", "ഹ"),
]


def emit(path, title, vowels, consonants, virama):
    rules = []
    for roman, independent, _sign in vowels:
        rules.append((roman, independent))
    for c_roman, glyph in consonants:
        rules.append((c_roman, glyph + virama))
        for v_roman, _ind, sign in vowels:
            rules.append((c_roman + v_roman, glyph + sign))
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("# %s\n" % title)
        f.write("# roman<TAB>native, longest match first; regenerate with scripts/gen_schemes.py\n")
        for roman, native in rules:
            f.write("%s\t%s\n" % (roman, native))
    print("wrote %s (%d rules)" % (path, len(rules)))


def main():
    root = os.path.join(os.path.dirname(__file__), "..")
    emit(os.path.join(root, "data/schemes/tamil.tsv"),
         "Tamil romanization scheme (lowercase, informal digraphs)",
         TAMIL_VOWELS, TAMIL_CONSONANTS, TAMIL_VIRAMA)
    emit(os.path.join(root, "data/schemes/malayalam.tsv"),
         "Malayalam romanization scheme (lowercase, informal digraphs)",
         MALAYALAM_VOWELS, MALAYALAM_CONSONANTS, MALAYALAM_VIRAMA)


if __name__ == "__main__":
    main()
