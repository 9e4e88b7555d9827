"""Exception hierarchy shared by the toolchain."""


class HisepqError(Exception):
    """Base class for every error raised by this package."""


class IsaError(HisepqError):
    pass


class FieldOverflow(IsaError):
    """A field value does not fit its encoding width."""


class DecodeError(IsaError):
    pass


class IllegalOpcode(DecodeError):
    pass


class IllegalEncoding(DecodeError):
    """Reserved bits are set, so the word is not a canonical encoding."""


class TruncatedLongInstruction(DecodeError):
    pass


class ImageFormatError(HisepqError):
    pass


class AsmError(HisepqError):
    pass


class ParseError(AsmError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownLabel(AsmError):
    pass


class DuplicateLabel(AsmError):
    pass


class HistogramError(HisepqError):
    pass


class AccumulatorFull(HistogramError):
    pass


class SortBusy(HistogramError):
    pass


class MemOutOfRange(HisepqError):
    pass


class CompileError(HisepqError):
    pass


class UnsupportedGate(CompileError):
    pass
