"""Exception hierarchy shared across the package.

All data-format problems derive from DataFormatError so the CLI can map
them to a single exit code while callers can still catch the specific kind.
"""


class TextReuseError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(TextReuseError):
    """An input file or directory does not follow its documented format."""


class ResourceFormatError(DataFormatError):
    """A language-resource file is malformed or violates an invariant."""


class IndexFormatError(DataFormatError):
    """An on-disk index is corrupt (bad magic, wrong sizes, ...)."""


class VersionMismatchError(IndexFormatError):
    """The on-disk index was written with an unsupported format version."""


class TruncatedIndexError(IndexFormatError):
    """An index file ended before all declared entries were read."""


class DuplicateDocumentError(TextReuseError):
    """Two documents with the same doc_id were offered for indexing."""


class GoldFormatError(DataFormatError):
    """A gold-annotation XML file is malformed."""


class InvalidOffsetError(DataFormatError):
    """A char range is negative, empty, or out of document bounds."""


class CorpusLayoutError(DataFormatError):
    """A corpus directory is missing parts."""


class DanglingReferenceError(CorpusLayoutError):
    """A pairs line or gold case names a document that is not present."""
