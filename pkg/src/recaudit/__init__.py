"""Popularity-bias and calibration audits for top-n recommenders."""

__version__ = "0.1.0"

from recaudit.errors import (DataError, NumericalError, RecauditError,
                             UsageError)

__all__ = ["DataError", "NumericalError", "RecauditError", "UsageError",
           "__version__"]
