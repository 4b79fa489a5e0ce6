"""Exact polyhedral Banach spaces, amalgamations and certified back-and-forth."""
