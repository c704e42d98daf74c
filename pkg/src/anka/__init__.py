"""ANKA: a peer-to-peer energy marketplace on a simulated, gas-metered blockchain.

The package is organized around a deterministic single-sequencer chain
(`anka.chain`) hosting the marketplace state machine (`anka.contract`),
with client-side geodesic filtering (`anka.geo`), a JSON-RPC node
(`anka.node`), a trader CLI (`anka.cli`) and a fee benchmark
(`anka.bench`).
"""

from anka.chain import Chain, GasSchedule, GenesisConfig, Receipt
from anka.codec import (
    BuyOffer,
    CancelOffer,
    Deploy,
    ListOffer,
    Register,
    SignedTransaction,
    Transfer,
)
from anka.geo import GeoPoint, filter_by_diameter, haversine, normalize_postal
from anka.keys import KeyPair, generate_keypair

__version__ = "0.1.0"

__all__ = [
    "Chain",
    "GasSchedule",
    "GenesisConfig",
    "Receipt",
    "Deploy",
    "Register",
    "ListOffer",
    "BuyOffer",
    "CancelOffer",
    "Transfer",
    "SignedTransaction",
    "GeoPoint",
    "haversine",
    "filter_by_diameter",
    "normalize_postal",
    "KeyPair",
    "generate_keypair",
]
