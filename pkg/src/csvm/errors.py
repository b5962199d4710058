"""Exception hierarchy shared by every csvm module."""


class CsvmError(Exception):
    """Base class for all errors raised by csvm."""


class InvalidInput(CsvmError, ValueError):
    pass


class InvalidArgument(CsvmError, ValueError):
    pass


class InvalidGeometry(CsvmError, ValueError):
    """Kernel or pooling window does not fit the (padded) input."""


class DegenerateLabels(CsvmError, ValueError):
    """An operation that needs both classes received only one."""


class DecodeError(CsvmError):
    def __init__(self, path, reason=""):
        self.path = str(path)
        msg = f"cannot decode image {self.path}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class LayoutError(CsvmError):
    """Dataset directory does not have the expected two-class layout."""


class EmptyClassError(CsvmError):
    pass


class ModelFormatError(CsvmError):
    pass
