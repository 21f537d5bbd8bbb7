"""Regenerate the latin bundle's lexicon file.

The file has two parts: a short hand-written block of real English words
used by unit tests, and the generated pseudo-word vocabulary with its
role-based tag assignment (topic words NOUN, common words OTHER). Run from
the repository root:

    python scripts/rebuild_latin_lexicon.py
"""

from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from textreuse.corpus import default_vocabulary, vocabulary_tag

HAND_ENTRIES = """\
book NOUN
paper NOUN
word NOUN
text NOUN
river NOUN
stone NOUN
garden NOUN
student NOUN
method NOUN
result NOUN
large ADJ
small ADJ
quick ADJ
bright ADJ
formal ADJ
read VERB
write VERB
compare VERB
measure VERB
found VERB
"""


def main() -> None:
    out = Path(__file__).resolve().parents[1] / (
        "src/textreuse/resources/latin/lexicon"
    )
    lines = [
        "# Hand-picked entries for unit tests, then the generated",
        "# pseudo-word vocabulary with its role-based tag assignment.",
        HAND_ENTRIES.rstrip("\n"),
    ]
    for i, word in enumerate(default_vocabulary()):
        lines.append(f"{word} {vocabulary_tag(i)}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(lines) - 3 + HAND_ENTRIES.count(chr(10))} entries)")


if __name__ == "__main__":
    main()
