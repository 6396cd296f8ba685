#!/usr/bin/env python3
"""Regenerates include/emofed/detail/unicode_tables.hpp from Python's
unicodedata module. Run from the repository root:

    python3 scripts/gen_unicode_tables.py
"""
import sys
import unicodedata

OUT = "include/emofed/detail/unicode_tables.hpp"


def category(cp: int) -> str:
    return unicodedata.category(chr(cp))


def strip_ranges():
    """Codepoints removed by the normalizer: Nd digits plus all P* and S*."""
    rs, start = [], None
    for cp in range(0x110000):
        c = category(cp)
        hit = c == "Nd" or c[0] in "PS"
        if hit and start is None:
            start = cp
        elif not hit and start is not None:
            rs.append((start, cp - 1))
            start = None
    if start is not None:
        rs.append((start, 0x10FFFF))
    return rs


def lowercase_pairs():
    """Single-codepoint lowercase mappings (first codepoint of the full
    mapping where it expands, which coincides with the simple mapping)."""
    pairs = []
    for cp in range(0x110000):
        if category(cp)[0] != "L":
            continue
        low = chr(cp).lower()
        if low and ord(low[0]) != cp:
            pairs.append((cp, ord(low[0])))
    return pairs


def fmt_rows(items, per_line, fmt):
    lines = []
    for i in range(0, len(items), per_line):
        lines.append("    " + " ".join(fmt(x) for x in items[i : i + per_line]))
    return "\n".join(lines)


def main():
    strips = strip_ranges()
    lowers = lowercase_pairs()
    with open(OUT, "w", encoding="utf-8") as f:
        f.write("// Generated by scripts/gen_unicode_tables.py (Unicode %s). Do not edit.\n"
                % unicodedata.unidata_version)
        f.write("#pragma once\n\n#include <cstdint>\n\n")
        f.write("namespace emofed::detail {\n\n")
        f.write("struct CpRange { char32_t lo; char32_t hi; };\n")
        f.write("struct CpPair { char32_t from; char32_t to; };\n\n")
        f.write("// Categories Nd, P*, S*: characters the normalizer deletes.\n")
        f.write("inline constexpr CpRange kStripRanges[] = {\n")
        f.write(fmt_rows(strips, 4, lambda r: "{0x%X, 0x%X}," % r))
        f.write("\n};\n\n")
        f.write("inline constexpr CpPair kLowercaseMap[] = {\n")
        f.write(fmt_rows(lowers, 4, lambda p: "{0x%X, 0x%X}," % p))
        f.write("\n};\n\n")
        f.write("}  // namespace emofed::detail\n")
    print("wrote %s: %d strip ranges, %d lowercase pairs" % (OUT, len(strips), len(lowers)))


if __name__ == "__main__":
    sys.exit(main())
