"""Exception types shared across the toolkit.

Every error raised on purpose derives from DevfpError, so callers (and the
CLI) can distinguish expected failures from bugs.
"""


class DevfpError(Exception):
    """Base class for all toolkit errors."""


# ---------------------------------------------------------------------------
# Capture / decoding


class CaptureError(DevfpError):
    """Problem with a pcap file as a whole."""


class UnknownMagic(CaptureError):
    """File does not start with one of the four classic-pcap magic numbers."""


class TruncatedHeader(CaptureError):
    """The 24-byte pcap global header is incomplete."""


class CorruptFrame(CaptureError):
    """A frame header is internally inconsistent (captured_len > original_len)."""

    def __init__(self, frame_index: int, message: str):
        super().__init__(f"frame {frame_index}: {message}")
        self.frame_index = frame_index


class UnsupportedLinkType(CaptureError):
    """Capture link type is not Ethernet (1)."""


class DecodeError(DevfpError):
    """A single frame could not be decoded; the frame is dropped, not fatal."""


class TruncatedIpHeader(DecodeError):
    """Captured bytes end inside the IPv4 header, or the header is malformed."""


class TruncatedTransportHeader(DecodeError):
    """Captured bytes end inside the TCP/UDP header."""


# ---------------------------------------------------------------------------
# Datasets / registry / CSV


class EmptyRegistry(DevfpError):
    """Device registry holds no entries."""


class RegistryFormatError(DevfpError):
    """A registry or attribute-meta file line is malformed."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class HeaderMismatch(DevfpError):
    """CSV header row differs from the canonical dataset header."""


class RaggedRow(DevfpError):
    """CSV data row has the wrong number of fields."""

    def __init__(self, row_index: int, message: str):
        super().__init__(f"row {row_index}: {message}")
        self.row_index = row_index


class NonNumericCell(DevfpError):
    """CSV feature cell is neither empty nor a decimal integer."""

    def __init__(self, row_index: int, column: str, cell: str):
        super().__init__(f"row {row_index}, column {column}: not an integer: {cell!r}")
        self.row_index = row_index
        self.column = column


# ---------------------------------------------------------------------------
# Selection / training / evaluation


class AllZeroCounts(DevfpError):
    """Entropy requested for a class-count vector that is all zero."""


class EmptyDataset(DevfpError):
    """Operation requires at least one (usually two) rows."""


class SingleClassDataset(DevfpError):
    """Operation requires at least two distinct class labels."""


class MissingMeta(DevfpError):
    """An attribute has no entry in the attribute-meta registry."""

    def __init__(self, name: str):
        super().__init__(f"no attribute metadata for {name!r}")
        self.name = name


class SchemaMismatch(DevfpError):
    """Model schema and vector/dataset schema differ."""


class EmptyMatrix(DevfpError):
    """Confusion matrix has no counts to compute metrics from."""


class ClassTooSmall(DevfpError):
    """Stratified split needs at least 2 rows per class."""

    def __init__(self, name: str, size: int):
        super().__init__(f"class {name!r} has {size} row(s); stratified split needs >= 2")
        self.name = name


class UnknownClassLabel(DevfpError):
    """A test row's label is not among the model's class names."""


class ModelFormatError(DevfpError):
    """Persisted model file is malformed or has an unsupported version."""
