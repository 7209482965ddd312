# core/exceptions.py
"""
Error and warning types shared by the pipeline.

Errors derive from RecsysError so the CLI can map them to exit codes;
warnings are regular Python warning categories.
"""

from typing import Optional


class RecsysError(Exception):
    """Base class for every failure raised by the library"""


class ParseError(RecsysError):
    """A dataset line could not be parsed"""

    def __init__(self, message: str, line_no: Optional[int] = None, path: Optional[str] = None):
        self.line_no = line_no
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line_no is not None:
            where += f":{line_no}"
        super().__init__(f"{where}: {message}" if where else message)


class EmptyDatasetError(RecsysError):
    """No interaction survived parsing and thresholding"""


class ConfigurationError(RecsysError):
    """Invalid or incompatible parameters"""


class UnreachableItemError(RecsysError):
    """An item with no ratings was requested where a normalized vector is needed"""

    def __init__(self, items):
        self.items = list(items)
        shown = ", ".join(str(i) for i in self.items[:10])
        more = "" if len(self.items) <= 10 else f" (+{len(self.items) - 10} more)"
        super().__init__(f"items without ratings cannot be used here: {shown}{more}")


class DegenerateUserError(RecsysError):
    """A user has no negative (or no positive) items"""


class ContractError(RecsysError):
    """Inputs violate a precondition, e.g. mismatched dimensions"""


class NumericError(RecsysError):
    """Non-finite values in numeric inputs"""


class InsufficientDataError(RecsysError):
    """Not enough observations to compute a statistic"""


class SizeCapError(RecsysError):
    """A dense computation was refused because the instance is too large"""


class DataWarning(UserWarning):
    """Data condition that degrades but does not stop a computation"""


class TruncatedRankingWarning(DataWarning):
    """A cutoff exceeded the ranking length and was applied to what is available"""
