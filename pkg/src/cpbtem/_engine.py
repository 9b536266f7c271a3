"""Backend selection and block scheduling for the batched measurement loop.

The compiled ``_kernels`` extension is used when importable; set
``CPBTEM_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from cpbtem import _fallback
from cpbtem.rng import substream

_compiled = None
if os.environ.get("CPBTEM_PURE_PYTHON") != "1":
    try:
        from cpbtem import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKENDS = {"python": _fallback.run_block}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.run_block

BACKEND = "compiled" if "compiled" in BACKENDS else "python"

# rounds of random input per block; the block layout depends only on k
ROUNDS_PER_BLOCK = 1 << 17


def block_size(k: int) -> int:
    return max(1, ROUNDS_PER_BLOCK // max(1, k))


def run_measurements(
    dtheta,
    k: int,
    det,
    *,
    seed: int,
    stream: int,
    p_loss: float = 0.0,
    p_inel: float = 0.0,
    xi_precision: float = 0.0,
    epsilon: float = 0.0,
    localized: bool = False,
    deferred: bool = False,
    threads: int = 1,
    backend: str | None = None,
):
    """Run ``len(dtheta)`` independent k-round measurements.

    Returns ``(bits, states)``: bits are int8 (1, 0, or -1 for a measurement
    aborted by electron loss) and states are the corrected pre-readout box
    amplitudes, shape ``(n, 2)``.
    """
    kernel = BACKENDS[backend or BACKEND]
    dtheta = np.ascontiguousarray(dtheta, dtype=float)
    n = len(dtheta)
    bits = np.empty(n, dtype=np.int8)
    states = np.empty((n, 2), dtype=complex)
    need_normals = (p_inel > 0 and xi_precision > 0) or (p_inel > 0 and epsilon != 0)
    mag_a = np.ascontiguousarray(det.mag_a, dtype=float)
    mag_b = np.ascontiguousarray(det.mag_b, dtype=float)
    beta = np.ascontiguousarray(det.beta, dtype=float)
    cdf_a, cdf_b = det.cdf_a, det.cdf_b
    bs = block_size(k)

    def work(b):
        start, stop = b * bs, min((b + 1) * bs, n)
        m = stop - start
        rng = substream(seed, stream, b)
        U = rng.random((m, k, 4))
        Z = rng.standard_normal((m, k, 2)) if need_normals else np.zeros((m, k, 2))
        u_final = rng.random(m)
        kernel(
            dtheta[start:stop], int(k), float(p_loss), float(p_inel),
            float(xi_precision), float(epsilon), bool(localized), bool(deferred),
            mag_a, mag_b, beta, cdf_a, cdf_b, U, Z, u_final,
            bits[start:stop], states[start:stop],
        )

    nblocks = -(-n // bs)
    if threads <= 1 or nblocks <= 1:
        for b in range(nblocks):
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(nblocks)))
    return bits, states
