"""Channel-facing decoding for Construction-A lattices.

channel_beliefs reduces the AWGN observation to per-coordinate mod-p
likelihoods (summing the K nearest integer representatives of each class),
bp_decode runs flooding sum-product belief propagation on the nonbinary
Tanner graph with direct cyclic convolution at the checks (O(p^2) per
degree-3 check), mmse_scale applies the Wiener coefficient, and
lift_to_lattice turns a decoded codeword plus the observation back into an
integer lattice point.
"""

from dataclasses import dataclass

import numpy as np

from .field import Prime, finv
from .ldpc import ParityCheck, syndrome


@dataclass(frozen=True)
class DecodeResult:
    x_hat: np.ndarray
    converged: bool
    iterations: int


@dataclass(frozen=True)
class BPResult:
    c_hat: np.ndarray
    converged: bool
    iterations: int


def channel_beliefs(y, sigma2, p, window=3):
    """Per-coordinate posteriors over F_p given y_i = x_i + noise.

    P(a | y_i) is proportional to the sum over the `window` integers
    closest to y_i in the class a mod p of exp(-(y_i - t)^2 / (2 sigma2)).
    Returns an (n, p) row-stochastic array.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if window < 1:
        raise ValueError("window must be >= 1")
    pv = p.p if isinstance(p, Prime) else int(p)
    y = np.asarray(y, dtype=np.float64)
    a = np.arange(pv, dtype=np.float64)
    base = a + pv * np.round((y[:, None] - a) / pv)
    sign = np.where(y[:, None] - base >= 0, 1.0, -1.0)
    exps = np.empty((y.size, pv, window))
    for j in range(window):
        mult = (j + 1) // 2
        off = sign * (pv * mult) if j % 2 == 1 else -sign * (pv * mult)
        t = base + off
        exps[:, :, j] = -((y[:, None] - t) ** 2) / (2.0 * sigma2)
    mx = exps.max(axis=(1, 2), keepdims=True)
    probs = np.exp(exps - mx).sum(axis=2)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs


def _cyclic_conv(u, v, sub_idx):
    """Row-wise cyclic convolution over Z_p of (R, p) arrays.
    sub_idx[w, b] = (w - b) mod p."""
    return np.einsum("rwb,rb->rw", u[:, sub_idx], v)


def _normalize(msgs):
    s = msgs.sum(axis=-1, keepdims=True)
    dead = s <= 0
    if np.any(dead):
        msgs = np.where(dead, 1.0, msgs)
        s = msgs.sum(axis=-1, keepdims=True)
    return msgs / s


class BPDecoder:
    """Edge structure and index tables for sum-product decoding of one H.

    Edges are grouped by check degree (row 0 is one symbol shorter) so all
    per-check work is dense array arithmetic; variable-side gathers are
    grouped by variable degree.
    """

    def __init__(self, H: ParityCheck):
        self.H = H
        p = H.p.p
        self.p = p
        n, k = H.n, H.k
        m = H.num_rows
        d_r = H.params.d_r

        rows_cols = np.zeros((m, d_r + 2), dtype=np.int64)
        rows_coeffs = np.zeros((m, d_r + 2), dtype=np.int64)
        rows_cols[:, :d_r] = H.left_cols
        rows_coeffs[:, :d_r] = H.left_coeffs
        rows_cols[:, d_r] = np.arange(m) + k - 1
        rows_coeffs[1:, d_r] = H.sub_coeffs[1:]
        rows_cols[:, d_r + 1] = np.arange(m) + k
        rows_coeffs[:, d_r + 1] = H.diag_coeffs
        # row 0 has no subdiagonal entry: drop that slot
        self.groups = []
        edge_var = []
        offset = 0
        specs = [(np.array([0]), np.delete(np.arange(d_r + 2), d_r))]
        if m > 1:
            specs.append((np.arange(1, m), np.arange(d_r + 2)))
        for row_ids, slot_ids in specs:
            cols = rows_cols[np.ix_(row_ids, slot_ids)]
            coeffs = rows_coeffs[np.ix_(row_ids, slot_ids)]
            rg, tg = cols.shape
            inv = np.array([[finv(int(h), H.p) for h in hr] for hr in coeffs],
                           dtype=np.int64)
            v_grid = np.arange(p, dtype=np.int64)
            in_idx = (inv[:, :, None] * v_grid) % p
            out_idx = (-coeffs[:, :, None] * v_grid) % p
            self.groups.append({
                "rows": row_ids,
                "cols": cols,
                "edge_slice": slice(offset, offset + rg * tg),
                "shape": (rg, tg),
                "in_idx": in_idx,
                "out_idx": out_idx,
            })
            edge_var.append(cols.ravel())
            offset += rg * tg
        self.num_edges = offset
        self.edge_var = np.concatenate(edge_var)
        w = np.arange(p)
        self.sub_idx = (w[:, None] - w[None, :]) % p

        by_degree = {}
        var_edges = [[] for _ in range(n)]
        for e, v in enumerate(self.edge_var):
            var_edges[v].append(e)
        for v, edges in enumerate(var_edges):
            by_degree.setdefault(len(edges), []).append(v)
        self.var_groups = []
        for deg, vars_list in sorted(by_degree.items()):
            if deg == 0:
                continue
            vids = np.array(vars_list, dtype=np.int64)
            eidx = np.array([var_edges[v] for v in vars_list], dtype=np.int64)
            self.var_groups.append((vids, eidx))

    def _check_update(self, v2c):
        c2v = np.empty_like(v2c)
        for g in self.groups:
            rg, tg = g["shape"]
            M = v2c[g["edge_slice"]].reshape(rg, tg, self.p)
            Q = np.take_along_axis(M, g["in_idx"], axis=2)
            fwd = [Q[:, 0]]
            for j in range(1, tg - 1):
                fwd.append(_cyclic_conv(fwd[-1], Q[:, j], self.sub_idx))
            bwd = [Q[:, tg - 1]]
            for j in range(tg - 2, 0, -1):
                bwd.append(_cyclic_conv(bwd[-1], Q[:, j], self.sub_idx))
            bwd.reverse()
            out = np.empty((rg, tg, self.p))
            for j in range(tg):
                if j == 0:
                    conv = bwd[0]
                elif j == tg - 1:
                    conv = fwd[tg - 2]
                else:
                    conv = _cyclic_conv(fwd[j - 1], bwd[j], self.sub_idx)
                out[:, j] = conv
            msgs = np.take_along_axis(out, g["out_idx"], axis=2)
            c2v[g["edge_slice"]] = _normalize(msgs).reshape(rg * tg, self.p)
        return c2v

    def _var_update(self, prior, c2v):
        v2c = np.empty_like(c2v)
        post = prior.copy()
        for vids, eidx in self.var_groups:
            C = c2v[eidx]                      # (V, deg, p)
            deg = C.shape[1]
            left = np.ones_like(C)
            for j in range(1, deg):
                left[:, j] = left[:, j - 1] * C[:, j - 1]
            right = np.ones_like(C)
            for j in range(deg - 2, -1, -1):
                right[:, j] = right[:, j + 1] * C[:, j + 1]
            msgs = prior[vids][:, None, :] * left * right
            v2c[eidx.ravel()] = _normalize(msgs).reshape(-1, self.p)
            post[vids] = prior[vids] * left[:, -1] * C[:, -1]
        return v2c, _normalize(post)

    def decode(self, beliefs, max_iter=100) -> BPResult:
        prior = np.asarray(beliefs, dtype=np.float64)
        if prior.shape != (self.H.n, self.p):
            raise ValueError("beliefs must be an (n, p) array")
        hard = prior.argmax(axis=1)
        if not syndrome(self.H, hard).any():
            return BPResult(hard, True, 0)
        v2c = _normalize(prior[self.edge_var])
        for it in range(1, max_iter + 1):
            c2v = self._check_update(v2c)
            v2c, post = self._var_update(prior, c2v)
            hard = post.argmax(axis=1)
            if not syndrome(self.H, hard).any():
                return BPResult(hard, True, it)
        return BPResult(hard, False, max_iter)


def _decoder_for(H: ParityCheck) -> BPDecoder:
    dec = getattr(H, "_bp_decoder", None)
    if dec is None:
        dec = BPDecoder(H)
        H._bp_decoder = dec
    return dec


def bp_decode(H: ParityCheck, beliefs, max_iter=100) -> BPResult:
    """Flooding sum-product decoding; stops early once the hard decision
    satisfies every check. Non-convergence is reported, not raised."""
    return _decoder_for(H).decode(beliefs, max_iter)


def mmse_scale(y, snr):
    """Wiener-scaled observation w*y with w = snr/(1+snr)."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    w = snr / (1.0 + snr)
    return w * np.asarray(y, dtype=np.float64)


def lift_to_lattice(c_hat, y_eff, p):
    """Back to Lambda_f: x_i = c_i + p * round((y_i - c_i)/p)."""
    pv = p.p if isinstance(p, Prime) else int(p)
    c_hat = np.asarray(c_hat, dtype=np.int64)
    y_eff = np.asarray(y_eff, dtype=np.float64)
    shift = np.round((y_eff - c_hat) / pv).astype(np.int64)
    return c_hat + pv * shift


def decode_point(H: ParityCheck, y, sigma2, *, snr=None, window=3,
                 max_iter=100) -> DecodeResult:
    """Full chain: optional MMSE scaling, beliefs, BP, lift.

    When snr is given, y is Wiener-scaled and the beliefs use the effective
    noise variance w*sigma2 of the scaled channel.
    """
    y = np.asarray(y, dtype=np.float64)
    if snr is None:
        y_eff = y
        sigma2_eff = sigma2
    else:
        w = snr / (1.0 + snr)
        y_eff = w * y
        sigma2_eff = w * sigma2
    beliefs = channel_beliefs(y_eff, sigma2_eff, H.p, window)
    res = bp_decode(H, beliefs, max_iter)
    x_hat = lift_to_lattice(res.c_hat, y_eff, H.p)
    return DecodeResult(x_hat, res.converged, res.iterations)
