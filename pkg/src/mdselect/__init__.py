"""mdselect: corpus selection toolkit for domain-specific MT fine-tuning."""

__version__ = "0.1.0"
