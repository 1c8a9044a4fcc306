"""Projective points, Fubini-Study geometry and Fubini-Study sampling.

Throughout, the Fubini-Study form is normalized so that the total volume of
P^n is 1.  Pullback densities are ratios of top-degree forms, so the
normalizing constants cancel and only Levi matrices are needed.
"""

from math import comb

import numpy as np

from .errors import ZeroVector, IndeterminatePoint

DEFAULT_TOL = 1e-9
INDETERMINACY_GUARD = 1e-12


class ProjPoint:
    """Point of P^n stored as its canonical unit representative.

    The canonical representative has Euclidean norm 1 and its first nonzero
    coordinate real and positive.  Equality is up to ``tol`` in the chordal
    metric.
    """

    __slots__ = ("coords", "tol")

    def __init__(self, coords, tol=DEFAULT_TOL, _normalized=False):
        c = np.array(coords, dtype=complex)
        if not _normalized:
            c = _normalize_array(c)
        c.flags.writeable = False
        self.coords = c
        self.tol = tol

    @property
    def dim(self):
        return len(self.coords) - 1

    def chart(self, index=None):
        """Affine coordinates in the chart ``z_index = 1`` (largest by default)."""
        if index is None:
            index = int(np.argmax(np.abs(self.coords)))
        c = self.coords[index]
        if c == 0:
            raise ZeroDivisionError(f"point lies on the hyperplane z_{index} = 0")
        return np.delete(self.coords / c, index)

    def __eq__(self, other):
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return len(self.coords) == len(other.coords) and fs_distance(self, other) < self.tol

    __hash__ = None

    def __repr__(self):
        inner = ", ".join(f"{z:.6g}" for z in self.coords)
        return f"ProjPoint({inner})"

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


def _normalize_array(raw):
    raw = np.asarray(raw, dtype=complex)
    norm = np.linalg.norm(raw)
    if not np.isfinite(norm) or norm == 0:
        raise ZeroVector("cannot normalize the zero vector")
    nz = np.flatnonzero(raw)
    lead = raw[nz[0]]
    # already canonical: return bit-identical so normalize is idempotent
    if lead.imag == 0 and lead.real > 0 and abs(norm - 1.0) <= 4 * np.finfo(float).eps:
        return raw.copy()
    phase = lead / abs(lead)
    out = raw / (norm * phase)
    out[nz[0]] = abs(out[nz[0]])
    return out


def normalize(raw):
    """Canonical :class:`ProjPoint` for a nonzero complex vector."""
    return ProjPoint(_normalize_array(raw), _normalized=True)


def normalize_rows(Z):
    """Vectorized normalization (unit norm only, no phase fixing)."""
    Z = np.asarray(Z, dtype=complex)
    n = np.linalg.norm(Z, axis=-1, keepdims=True)
    return Z / n


def wedge_norm(p, q):
    """|p ^ q| for rows of two arrays (last axis = homogeneous coordinates)."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    outer = p[..., :, None] * q[..., None, :]
    m = outer - np.swapaxes(outer, -1, -2)
    iu = np.triu_indices(p.shape[-1], 1)
    return np.sqrt(np.sum(np.abs(m[..., iu[0], iu[1]]) ** 2, axis=-1))


def fs_distance(p, q):
    """Chordal distance ``|p ^ q| / (|p| |q|)`` in [0, 1]."""
    a = np.asarray(p.coords if isinstance(p, ProjPoint) else p, dtype=complex)
    b = np.asarray(q.coords if isinstance(q, ProjPoint) else q, dtype=complex)
    d = wedge_norm(a, b) / (np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1))
    return np.minimum(d, 1.0) if np.ndim(d) else float(min(d, 1.0))


def _rng(seed, shard_index=0, shard_count=1):
    return np.random.default_rng([int(seed), int(shard_index), int(shard_count)])


def sample_fs_array(n, count, seed, shard_index=0, shard_count=1):
    """Array of shape (count, n+1) of unit vectors, FS-distributed on P^n.

    A standard complex Gaussian vector is unitarily invariant, so its
    projectivization has exactly the normalized Fubini-Study law.
    """
    rng = _rng(seed, shard_index, shard_count)
    g = rng.standard_normal((count, n + 1)) + 1j * rng.standard_normal((count, n + 1))
    return normalize_rows(g)


def sample_fs(n, count, seed, shard_index=0, shard_count=1):
    """List of :class:`ProjPoint` drawn i.i.d. from the FS volume of P^n."""
    if count < 1:
        raise ValueError("count must be >= 1")
    Z = sample_fs_array(n, count, seed, shard_index, shard_count)
    return [normalize(z) for z in Z]


# --- pullback densities ---------------------------------------------------

def _components(f):
    return list(getattr(f, "components", f))


def chart_lift(Z):
    """Lift rows to the affine chart of their largest coordinate.

    Returns ``(lift, chart_index, affine_index)`` where ``lift`` has a 1 in
    the chart slot and ``affine_index`` (S, n) lists the free coordinates.
    """
    Z = np.asarray(Z, dtype=complex)
    S, N = Z.shape
    k = np.argmax(np.abs(Z), axis=1)
    lift = Z / Z[np.arange(S), k][:, None]
    cols = np.tile(np.arange(N), (S, 1))
    mask = cols != k[:, None]
    free = cols[mask].reshape(S, N - 1)
    return lift, k, free


def levi_log_norm(F, J):
    """Levi matrix of log|F|^2 given values F (S, m) and Jacobian J (S, m, n).

    Entry (a, b) is d^2/dx_a dxbar_b of log|F|^2.
    """
    F2 = np.sum(np.abs(F) ** 2, axis=1)
    A = np.einsum("ska,skb->sab", J, J.conj()) / F2[:, None, None]
    u = np.einsum("ska,sk->sa", J, F.conj())
    return A - u[:, :, None] * u.conj()[:, None, :] / (F2 ** 2)[:, None, None]


def _fs_levi(x):
    r2 = 1.0 + np.sum(np.abs(x) ** 2, axis=1)
    n = x.shape[1]
    eye = np.eye(n)[None, :, :]
    return eye / r2[:, None, None] - x.conj()[:, :, None] * x[:, None, :] / (r2 ** 2)[:, None, None]


def _jacobian(components, lift, free, grads):
    vals = np.stack([c.evaluate_many(lift) for c in components], axis=1)
    S = lift.shape[0]
    full = np.stack(
        [np.stack([g.evaluate_many(lift) for g in row], axis=1) for row in grads], axis=1
    )  # (S, m+1, N)
    J = np.take_along_axis(full, np.broadcast_to(free[:, None, :], (S, full.shape[1], free.shape[1])), axis=2)
    return vals, J


def _gradients(components):
    N = components[0].num_vars
    return [[c.differentiate(i) for i in range(N)] for c in components]


def elementary_symmetric(eigs, j):
    """e_j of the last axis of ``eigs``."""
    S, n = eigs.shape
    e = np.zeros((S, n + 1), dtype=eigs.dtype)
    e[:, 0] = 1.0
    for k in range(n):
        e[:, 1:k + 2] = e[:, 1:k + 2] + eigs[:, k:k + 1] * e[:, 0:k + 1]
    return e[:, j]


def pullback_density_array(f, Z, wedge_power, grads=None, guard=INDETERMINACY_GUARD):
    """Vectorized density of (f^*w)^j ^ w^(n-j) / w^n at rows of ``Z``.

    Returns ``(density, ok)``; ``ok`` is False where the point is classified
    as indeterminate (``|f(z)| / |z|^d`` below ``guard`` times the coefficient
    norm), and the density there is NaN.
    """
    comps = _components(f)
    Z = normalize_rows(Z)
    S, N = Z.shape
    n = N - 1
    j = int(wedge_power)
    if not 0 <= j <= n:
        raise ValueError("wedge_power must lie in [0, n]")
    grads = grads or _gradients(comps)
    lift, _, free = chart_lift(Z)
    vals_unit = np.stack([c.evaluate_many(Z) for c in comps], axis=1)
    scale = max(max(c.coefficient_norm() for c in comps), 1e-300)
    ok = np.linalg.norm(vals_unit, axis=1) >= guard * scale
    out = np.full(S, np.nan)
    if j == 0:
        out[ok] = 1.0
        return out, ok
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return out, ok
    L = lift[idx]
    fr = free[idx]
    vals, J = _jacobian(comps, L, fr, grads)
    x = np.take_along_axis(L, fr, axis=1)
    out[idx] = density_from_jet(vals, J, x, j)
    return out, ok


def jet(f, Z, grads=None):
    """Values and affine Jacobians of ``f`` at rows of ``Z`` in max-modulus charts.

    Returns ``(F, J, x)``: F (S, m+1), J (S, m+1, n), and the affine
    coordinates x (S, n) used for the Fubini-Study Levi matrix.
    """
    comps = _components(f)
    grads = grads or _gradients(comps)
    lift, _, free = chart_lift(normalize_rows(Z))
    F, J = _jacobian(comps, lift, free, grads)
    return F, J, np.take_along_axis(lift, free, axis=1)


def density_from_jet(F, J, x, j):
    """Density of (f^*w)^j ^ w^(n-j) / w^n from values F, Jacobian J at chart points x."""
    n = x.shape[1]
    H = levi_log_norm(F, J)
    M = np.linalg.solve(_fs_levi(x), H)
    if j == n:
        dens = np.real(np.linalg.det(M))
    elif j == 1:
        dens = np.real(np.trace(M, axis1=1, axis2=2)) / n
    else:
        eig = np.linalg.eigvals(M)
        dens = np.real(elementary_symmetric(eig, j)) / comb(n, j)
    return np.maximum(dens, 0.0)


def fs_pullback_density(f, z, wedge_power):
    """Density of (f^*w)^j ^ w^(n-j) against w^n at a regular point ``z``.

    Parameters
    ----------
    f : sequence of HomoPoly or RationalMap
        Components of the polynomial lift.
    z : ProjPoint or array_like
    wedge_power : int
        ``j`` with ``0 <= j <= n``.

    Raises
    ------
    IndeterminatePoint
        If ``f(z)`` vanishes to within the indeterminacy guard.
    """
    coords = z.coords if isinstance(z, ProjPoint) else np.asarray(z, dtype=complex)
    dens, ok = pullback_density_array(f, coords[None, :], wedge_power)
    if not ok[0]:
        raise IndeterminatePoint("f(z) = 0: point is in the indeterminacy locus")
    return float(dens[0])


def mc_pullback_integral(f, wedge_power, samples, seed, max_rounds=8):
    """Monte-Carlo estimate of the integral of the pullback density.

    Indeterminate draws (a measure-zero set) are replaced by fresh draws.
    Returns ``(mean, std_error, rejected)``.
    """
    comps = _components(f)
    n = comps[0].num_vars - 1
    grads = _gradients(comps)
    vals = []
    rejected = 0
    need = samples
    shard = 0
    while need > 0 and shard < max_rounds:
        Z = sample_fs_array(n, need, seed, shard_index=shard, shard_count=max_rounds)
        d, ok = pullback_density_array(comps, Z, wedge_power, grads=grads)
        vals.append(d[ok])
        rejected += int((~ok).sum())
        need -= int(ok.sum())
        shard += 1
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v))), rejected
