"""Allow running as: python -m pentakit"""

from pentakit.cli import cli

cli()
