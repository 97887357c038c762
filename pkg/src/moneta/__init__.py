"""Deterministic engine for contract-backed digital cash.

Layers, bottom up: a value algebra of claims and signed bundles
(``algebra``), an ownership ledger of control and balance maps with REA
events (``ledger``), a contract classifier driven by residuation
(``contracts``), escrow-based atomic transactions (``transactions``) and
their two-phase-commit simulation across partitioned nodes (``harness``),
banking scenarios (``banking``), and a scenario DSL with CLI front end
(``scenario``, ``cli``, ``bench``).
"""

from .algebra import Base, Bundle, Claim, FiatRegistry, Iou
from .ledger import World

__all__ = ["Base", "Bundle", "Claim", "FiatRegistry", "Iou", "World"]

__version__ = "0.1.0"
