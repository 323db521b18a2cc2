"""Secrecy outage toolkit engine: closed forms, asymptotics and Monte Carlo for dual-hop underlay CRNs."""
