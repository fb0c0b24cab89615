"""Full Green function of the simple random walk on ``Z^d``, ``d >= 3``.

Uses the continuous-time representation

    G(x) = int_0^inf  prod_i e^{-t/d} I_{|x_i|}(t/d)  dt,

which holds because the jump chain of a rate-one continuous-time walk is the
discrete walk.  The integral is evaluated by the trapezoid rule in ``u = log t``
up to ``T ~ 1e9``; the remainder beyond ``T`` uses the Gaussian heat kernel and
an incomplete gamma function.  Absolute accuracy is a few ``1e-9``.
"""

from __future__ import annotations

import threading

import numpy as np
from scipy.special import gamma, gammainc, ive

from ..errors import ValidationError

_H = 0.1
_U_MIN = -20.0
_T_MAX = 1e9  # ive(k, z) overflows to nan for z beyond ~1e10


class LatticeGreen:
    """Cached evaluator of ``G(x)`` for the standard walk on ``Z^d``.

    Values depend only on the multiset of ``|x_i|``, so lookups are keyed by the
    sorted absolute coordinates packed into a single ``int64``.
    """

    def __init__(self, dim: int):
        if dim < 3:
            raise ValidationError("the walk on Z^d is recurrent for d <= 2; G is infinite")
        self.dim = dim
        self.bits = 63 // dim
        self.limit = 1 << self.bits
        n = int(np.ceil((np.log(_T_MAX) - _U_MIN) / _H))
        u = _U_MIN + _H * np.arange(n + 1)
        self._t = np.exp(u)
        w = _H * self._t
        w[0] *= 0.5
        w[-1] *= 0.5
        self._w = w
        self._T = float(self._t[-1])
        self._table = np.zeros((0, len(self._t)))
        self._keys = np.zeros(0, dtype=np.int64)
        self._vals = np.zeros(0)
        self._lock = threading.Lock()

    # -- keys -------------------------------------------------------------
    def keys(self, diffs: np.ndarray) -> np.ndarray:
        a = np.sort(np.abs(np.asarray(diffs, dtype=np.int64)), axis=-1)
        if a.size and a.max() >= self.limit:
            raise ValidationError(f"coordinate {int(a.max())} exceeds the key range {self.limit - 1}")
        key = np.zeros(a.shape[:-1], dtype=np.int64)
        for i in range(self.dim):
            key = (key << self.bits) | a[..., i]
        return key

    def _unpack(self, keys: np.ndarray) -> np.ndarray:
        out = np.empty((len(keys), self.dim), dtype=np.int64)
        k = keys.copy()
        mask = self.limit - 1
        for i in range(self.dim - 1, -1, -1):
            out[:, i] = k & mask
            k >>= self.bits
        return out

    # -- evaluation -------------------------------------------------------
    def _bessel_rows(self, kmax: int) -> np.ndarray:
        if self._table.shape[0] <= kmax:
            k = np.arange(kmax + 1)
            self._table = ive(k[:, None], self._t[None, :] / self.dim)
        return self._table

    def _compute(self, coords: np.ndarray) -> np.ndarray:
        d = self.dim
        tab = self._bessel_rows(int(coords.max()) if coords.size else 0)
        out = np.empty(len(coords))
        a = d / 2
        pref = (d / (2 * np.pi)) ** a
        chunk = 4096
        for s in range(0, len(coords), chunk):
            c = coords[s : s + chunk]
            prod = tab[c[:, 0]].copy()
            for i in range(1, d):
                prod *= tab[c[:, i]]
            # per-row reduction: the value of a key never depends on its batch
            body = np.sum(prod * self._w, axis=1)
            r2 = (c.astype(float) ** 2).sum(axis=1)
            sq = d * r2 / 2
            tail = np.empty(len(c))
            zero = sq == 0
            tail[zero] = pref * self._T ** (1 - a) / (a - 1)
            sz = sq[~zero]
            tail[~zero] = pref * sz ** (1 - a) * gamma(a - 1) * gammainc(a - 1, sz / self._T)
            # integrand is ~1 on (0, t_0) at the origin only
            head = np.where(zero, self._t[0], 0.0)
            out[s : s + chunk] = body + tail + head
        return out

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        """Green values for packed keys (any shape)."""
        flat = keys.ravel()
        uniq, inverse = np.unique(flat, return_inverse=True)
        with self._lock:
            pos = np.searchsorted(self._keys, uniq)
            pos_c = np.minimum(pos, max(len(self._keys) - 1, 0))
            known = (len(self._keys) > 0) & (self._keys[pos_c] == uniq) if len(self._keys) else np.zeros(len(uniq), bool)
            missing = uniq[~known]
            if len(missing):
                vals = self._compute(self._unpack(missing))
                allk = np.concatenate([self._keys, missing])
                allv = np.concatenate([self._vals, vals])
                order = np.argsort(allk, kind="stable")
                self._keys, self._vals = allk[order], allv[order]
            res = self._vals[np.searchsorted(self._keys, uniq)]
        return res[inverse].reshape(keys.shape)

    def values(self, diffs) -> np.ndarray:
        """``G(x)`` for each row of an ``(..., d)`` integer array."""
        return self.lookup(self.keys(diffs))

    def __call__(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=np.int64)[None, :])[0])

    def matrix(self, points, other=None, block: int = 1 << 21) -> np.ndarray:
        """``G(y - x)`` for ``x`` in ``points`` and ``y`` in ``other`` (default: ``points``)."""
        P = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        Q = P if other is None else np.asarray(other, dtype=np.int64).reshape(-1, self.dim)
        out = np.empty((len(P), len(Q)))
        rows = max(1, block // max(len(Q), 1))
        for s in range(0, len(P), rows):
            diff = Q[None, :, :] - P[s : s + rows, None, :]
            out[s : s + rows] = self.values(diff)
        return out

    @property
    def cache_size(self) -> int:
        return len(self._keys)


_INSTANCES: dict = {}
_INSTANCES_LOCK = threading.Lock()


def lattice_green(dim: int) -> LatticeGreen:
    """Process-wide shared evaluator for dimension ``dim``."""
    with _INSTANCES_LOCK:
        if dim not in _INSTANCES:
            _INSTANCES[dim] = LatticeGreen(dim)
        return _INSTANCES[dim]
