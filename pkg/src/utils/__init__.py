"""
Utils Package
"""

from utils.constants import *
from utils.errors import (
    SfpError, DomainError, IllPosedProblemError, NonFiniteIntegrandError,
    DataFormatError, ConfigError, SaturationHypothesisError, NoAcceptedIterateError,
)
