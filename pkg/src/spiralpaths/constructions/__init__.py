"""Polytope families: random annuli, the spiral tower and the slab chain."""
