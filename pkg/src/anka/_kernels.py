"""Batch great-circle distance kernels.

The diameter filter scans every candidate offer, which is the one numeric
hot loop in the package. The default backend is a numba-compiled kernel;
set ANKA_NUMBA=0 to force the pure-numpy path (also used automatically when
numba is unavailable). `anka bench --geo-kernels N` compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

EARTH_RADIUS_M = 6_371_000.0


def _haversine_many_numpy(
    lat_rad: np.ndarray, lon_rad: np.ndarray, lat0_rad: float, lon0_rad: float
) -> np.ndarray:
    dlat = lat_rad - lat0_rad
    dlon = lon_rad - lon0_rad
    a = np.sin(dlat / 2.0) ** 2 + np.cos(lat0_rad) * np.cos(lat_rad) * np.sin(dlon / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * np.arcsin(np.sqrt(a))


def _build_numba_kernel():
    from numba import njit  # deferred: numba import is slow

    @njit(cache=True)
    def _haversine_many_numba(lat_rad, lon_rad, lat0_rad, lon0_rad):  # pragma: no cover
        n = lat_rad.shape[0]
        out = np.empty(n, dtype=np.float64)
        cos0 = math.cos(lat0_rad)
        for i in range(n):
            dlat = lat_rad[i] - lat0_rad
            dlon = lon_rad[i] - lon0_rad
            a = (
                math.sin(dlat / 2.0) ** 2
                + cos0 * math.cos(lat_rad[i]) * math.sin(dlon / 2.0) ** 2
            )
            out[i] = EARTH_RADIUS_M * 2.0 * math.asin(math.sqrt(a))
        return out

    return _haversine_many_numba


_BACKEND = None
_KERNEL = None


def _select_backend() -> tuple[str, object]:
    flag = os.environ.get("ANKA_NUMBA", "").strip().lower()
    if flag in ("0", "false", "no", "numpy"):
        return "numpy", _haversine_many_numpy
    try:
        return "numba", _build_numba_kernel()
    except ImportError:
        return "numpy", _haversine_many_numpy


def kernel_backend() -> str:
    global _BACKEND, _KERNEL
    if _BACKEND is None:
        _BACKEND, _KERNEL = _select_backend()
    return _BACKEND


def available_backends() -> list[str]:
    """Backends runnable right now; numpy always, numba when importable."""
    backends = ["numpy"]
    try:
        import numba  # noqa: F401

        backends.append("numba")
    except ImportError:
        pass
    return backends


def haversine_many(
    lat_deg: np.ndarray, lon_deg: np.ndarray, lat0_deg: float, lon0_deg: float
) -> np.ndarray:
    """Distances in meters from (lat0, lon0) to each (lat[i], lon[i]), degrees in."""
    kernel_backend()
    lat_rad = np.radians(np.asarray(lat_deg, dtype=np.float64))
    lon_rad = np.radians(np.asarray(lon_deg, dtype=np.float64))
    return _KERNEL(lat_rad, lon_rad, math.radians(lat0_deg), math.radians(lon0_deg))


def haversine_many_with(
    backend: str,
    lat_deg: np.ndarray,
    lon_deg: np.ndarray,
    lat0_deg: float,
    lon0_deg: float,
) -> np.ndarray:
    """Run a specific backend ("numpy" or "numba"); used by the kernel benchmark."""
    if backend == "numpy":
        kernel = _haversine_many_numpy
    elif backend == "numba":
        kernel = _build_numba_kernel()
    else:
        raise ValueError(f"unknown kernel backend: {backend}")
    lat_rad = np.radians(np.asarray(lat_deg, dtype=np.float64))
    lon_rad = np.radians(np.asarray(lon_deg, dtype=np.float64))
    return kernel(lat_rad, lon_rad, math.radians(lat0_deg), math.radians(lon0_deg))
