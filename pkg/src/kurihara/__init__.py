"""Kurihara numbers from exact modular symbols of rational elliptic curves,
and the p-primary Selmer/Sha structure they predict."""

__version__ = "0.1.0"
