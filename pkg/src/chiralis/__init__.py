"""Exact-arithmetic chiral chain complex on P^1 for truncated vertex algebras,
with module extension groups and the Ext^1 <-> H_1 pairing certificate."""

__version__ = "0.1.0"
