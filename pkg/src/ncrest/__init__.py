"""REST-style messaging with random linear network coding (NC_REST)."""

__version__ = "0.1.0"
