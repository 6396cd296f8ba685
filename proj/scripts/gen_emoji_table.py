#!/usr/bin/env python3
"""Builds data/emoji_categories.csv from the emojibase dataset
(https://www.npmjs.com/package/emojibase-data).

    npm install emojibase-data
    python3 scripts/gen_emoji_table.py node_modules/emojibase-data/en/data.json

Rows are "sequence,category" where sequence is the dash-separated uppercase
hex codepoints of the fully-qualified emoji and category is one of the ten
Unicode emoji group names. Skin-tone variants are emitted as their own rows
with the parent's category.
"""
import json
import sys

# emojibase group order matches the label encoding used by the library.
CATEGORIES = [
    "SmileysEmotion",
    "PeopleBody",
    "Component",
    "AnimalsNature",
    "FoodDrink",
    "TravelPlaces",
    "Activities",
    "Objects",
    "Symbols",
    "Flags",
]

OUT = "data/emoji_categories.csv"


def main(path):
    data = json.load(open(path, encoding="utf-8"))
    rows = {}

    def add(hexcode, group):
        seq = hexcode.upper()
        cat = CATEGORIES[group]
        if rows.setdefault(seq, cat) != cat:
            raise SystemExit("conflicting category for %s" % seq)

    for entry in data:
        group = entry.get("group")
        if group is None:  # components listed without a group (e.g. lone
            continue       # regional indicators); the scanner handles those
        add(entry["hexcode"], group)
        for skin in entry.get("skins", []):
            add(skin["hexcode"], skin.get("group", group))

    with open(OUT, "w", encoding="utf-8", newline="\n") as f:
        f.write("sequence,category\n")
        for seq in sorted(rows):
            f.write("%s,%s\n" % (seq, rows[seq]))
    print("wrote %s: %d sequences" % (OUT, len(rows)))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "node_modules/emojibase-data/en/data.json")
