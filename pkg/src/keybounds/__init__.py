"""Upper and lower bounds on conference-key rates for multipartite states and network channels."""

__version__ = "0.1.0"
