"""Geodesic distance, area filtering and postal code normalization.

Coordinates are fixed-point microdegrees so that transactions encode them
byte-stably; distance is the haversine great-circle approximation on a
sphere of radius 6,371 km. Postal codes are opaque region keys with no
country semantics.

The area filter keeps offers whose distance to the buyer is strictly below
the given diameter. "Diameter" is arguably a radius; the comparison is kept
literal (distance < diameter) and callers should treat the value as the
search radius in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TypeVar

import numpy as np

from anka._kernels import EARTH_RADIUS_M, haversine_many
from anka.errors import PostalCodeError

MICRO = 1_000_000

POSTAL_MIN_LEN = 3
POSTAL_MAX_LEN = 10


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in integer microdegrees."""

    lat_micro: int
    lon_micro: int

    def __post_init__(self):
        if not -90 * MICRO <= self.lat_micro <= 90 * MICRO:
            raise ValueError(f"latitude out of range: {self.lat_micro / MICRO}")
        if not -180 * MICRO <= self.lon_micro <= 180 * MICRO:
            raise ValueError(f"longitude out of range: {self.lon_micro / MICRO}")

    @classmethod
    def from_degrees(cls, lat: float, lon: float) -> "GeoPoint":
        return cls(lat_micro=round(lat * MICRO), lon_micro=round(lon * MICRO))

    @property
    def lat(self) -> float:
        return self.lat_micro / MICRO

    @property
    def lon(self) -> float:
        return self.lon_micro / MICRO


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters.

    Evaluation order is symmetric in (a, b): sin^2 of half-differences and a
    product of cosines, so haversine(a, b) == haversine(b, a) exactly.
    """
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = math.radians(b.lat - a.lat)
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * math.asin(math.sqrt(h))


_T = TypeVar("_T")


def filter_by_diameter(
    buyer: GeoPoint, diameter_m: float, offers: Sequence[_T]
) -> list[_T]:
    """Offers strictly closer than `diameter_m` to the buyer, input order kept.

    Pure client-side filtering: no gas is metered. Each element must expose a
    `location: GeoPoint` attribute.
    """
    if diameter_m < 0:
        raise ValueError("diameter must be non-negative")
    if not offers:
        return []
    lats = np.fromiter((o.location.lat for o in offers), dtype=np.float64, count=len(offers))
    lons = np.fromiter((o.location.lon for o in offers), dtype=np.float64, count=len(offers))
    dists = haversine_many(lats, lons, buyer.lat, buyer.lon)
    return [o for o, d in zip(offers, dists) if d < diameter_m]


def normalize_postal(raw: str) -> str:
    """Uppercase, strip all whitespace, enforce 3..10 alphanumeric chars.

    Idempotent: normalizing a normalized code is a no-op.
    """
    code = "".join(raw.split()).upper()
    if len(code) < POSTAL_MIN_LEN:
        raise PostalCodeError(f"postal code too short after stripping: {raw!r}")
    if len(code) > POSTAL_MAX_LEN:
        raise PostalCodeError(f"postal code longer than {POSTAL_MAX_LEN} chars: {raw!r}")
    if not code.isascii() or not code.isalnum():
        raise PostalCodeError(f"postal code must be alphanumeric: {raw!r}")
    return code
