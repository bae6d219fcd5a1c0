"""mds-dump-adapter: export model artifacts into the mdselect formats."""

__version__ = "0.1.0"
