#!/usr/bin/env python3
"""Regenerates include/automode/detail/unicode_tables.hpp from Python's unicodedata.

Usage: python3 tools/gen_unicode_tables.py > include/automode/detail/unicode_tables.hpp
"""
import sys
import unicodedata


def ranges(pred):
    out = []
    start = None
    for cp in range(0x110000):
        if pred(cp):
            if start is None:
                start = cp
        elif start is not None:
            out.append((start, cp - 1))
            start = None
    if start is not None:
        out.append((start, 0x10FFFF))
    return out


def is_punct(cp):
    return unicodedata.category(chr(cp)).startswith("P")


def is_space(cp):
    return chr(cp).isspace()


def lower_pairs():
    pairs = []
    for cp in range(0x110000):
        c = chr(cp)
        lo = c.lower()
        if len(lo) == 1 and lo != c:
            pairs.append((cp, ord(lo)))
        elif len(lo) > 1:
            # Multi-codepoint lowercase (e.g. U+0130): keep the first code point.
            pairs.append((cp, ord(lo[0])))
    return pairs


def emit_ranges(name, rs):
    print(f"inline constexpr CodepointRange {name}[] = {{")
    for a, b in rs:
        print(f"    {{0x{a:04X}, 0x{b:04X}}},")
    print("};")


def main():
    print("// Generated by tools/gen_unicode_tables.py from Unicode "
          f"{unicodedata.unidata_version}. Do not edit.")
    print("#pragma once\n")
    print("#include <cstdint>\n")
    print("namespace automode::detail {\n")
    print("struct CodepointRange {\n    char32_t first;\n    char32_t last;\n};\n")
    print("struct CaseMapping {\n    char32_t from;\n    char32_t to;\n};\n")
    print("// General category P* (Pc, Pd, Ps, Pe, Pi, Pf, Po).")
    emit_ranges("kPunctuationRanges", ranges(is_punct))
    print()
    emit_ranges("kWhitespaceRanges", ranges(is_space))
    print()
    print("inline constexpr CaseMapping kLowercaseMap[] = {")
    for a, b in lower_pairs():
        print(f"    {{0x{a:04X}, 0x{b:04X}}},")
    print("};\n")
    print("}  // namespace automode::detail")


if __name__ == "__main__":
    sys.exit(main())
