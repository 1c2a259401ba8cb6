"""Turns dagsim sweep CSVs into figures and aggregated tables."""
