"""darkstate - Dark-state preparation and subradiance in a driven two-qubit cavity."""

__version__ = "0.1.0"
__author__ = "darkstate developers"
__license__ = "Apache-2.0"
