"""Extrinsic plagiarism detection for Arabic-script (Persian-first) text.

Two-stage pipeline: recall-oriented candidate retrieval over a TF-IDF
inverted index, then precision-oriented sentence-level text alignment.
Includes plagdet evaluation, a synthetic corpus generator, and a CLI.
"""

__version__ = "0.1.0"
