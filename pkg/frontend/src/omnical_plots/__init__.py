"""Render trend figures and interval heatmaps from omnical tables.

This package consumes only the documented delimited table formats
(sweep.v1 and metrics.v1); it never imports the producer.
"""

from .render import render_table
from .tables import SchemaMismatch, read_table

__version__ = "0.1.0"
