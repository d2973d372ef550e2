"""Building height estimation from vector footprints and street-view
pseudo-labels, with LoD1 city-model export."""

__version__ = "0.1.0"
