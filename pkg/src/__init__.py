"""ContiVAE dose-response estimation toolkit."""

__version__ = "0.3.0"
