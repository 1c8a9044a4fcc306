"""Monte-Carlo proximity functions and the exceptional-target growth scanner.

Pairings between a covector W and a point z are bilinear: <W, z> = sum W_i z_i.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularHit, TargetContainsImage, DegenerateInput, IndeterminatePoint
from .projcore import (
    ProjPoint, normalize_rows, sample_fs_array, jet, density_from_jet,
    INDETERMINACY_GUARD, _gradients,
)
from .ratmap import RationalMap, iterate

SINGULAR_RATIO = 1e-14
MAX_REJECT_FRACTION = 0.01

# Haar means c_{l,m} of the proximity of the identity of P^m to a random
# codimension-l target.  l = 1: E[-log |<W,z>|^2] with |<W,z>|^2 ~ Beta(1, m),
# i.e. the harmonic number H_m.  l = m = 2: the hyperplane part plus the
# wedge-map part; confirmed by quadrature in the test-suite.
HAAR_CONSTANTS = {(1, 1): 1.0, (1, 2): 1.5, (2, 2): 1.5}


@dataclass
class Target:
    """Hyperplane (covector, l = 1) or point (l = n), stored unit-normalized."""

    kind: str
    data: np.ndarray

    def __post_init__(self):
        if self.kind not in ("hyperplane", "point"):
            raise ValueError("kind must be 'hyperplane' or 'point'")
        d = np.asarray(getattr(self.data, "coords", self.data), dtype=complex)
        nrm = np.linalg.norm(d)
        if nrm == 0:
            raise ValueError("target vector must be nonzero")
        self.data = d / nrm

    @classmethod
    def hyperplane(cls, coeffs):
        return cls("hyperplane", coeffs)

    @classmethod
    def point(cls, coords):
        return cls("point", coords)

    @classmethod
    def affine_point(cls, *xs):
        return cls("point", [1.0, *xs])

    def label(self):
        return ";".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in self.data)


@dataclass
class ProximityEstimate:
    value: float
    std_error: float
    samples: int
    rejected: int
    skipped_indeterminate: int = 0

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class ScanRow:
    target: Target
    m_values: list
    growth_base: float
    flag: str
    fit_unstable: bool = False
    reason: str = ""
    std_errors: list = field(default_factory=list)


def _unit_image(P, Z, guard=INDETERMINACY_GUARD):
    V = P.evaluate_many(Z)
    scale = max(c.coefficient_norm() for c in P.components)
    nrm = np.linalg.norm(V, axis=1)
    ok = nrm >= guard * scale
    U = np.zeros_like(V)
    U[ok] = V[ok] / nrm[ok, None]
    return U, ok


def _wedge_norm_sq(U, W):
    """|u ^ W|^2 for unit rows u and a unit vector W, from the Plucker coordinates.

    Summing |u_i W_j - u_j W_i|^2 keeps full relative accuracy when u is
    extremely close to W, where 1 - |<u, W>|^2 would cancel to zero.
    """
    N = len(W)
    acc = np.zeros(U.shape[:-1])
    for i in range(N):
        for j in range(i + 1, N):
            acc += np.abs(U[..., i] * W[j] - U[..., j] * W[i]) ** 2
    return acc


def _hyperplane_values(U, W):
    """log(|u|^2 |W|^2 / |<W,u>|^2) for unit rows; returns (values, |<W,u>|)."""
    pair = np.abs(U @ W)
    with np.errstate(divide="ignore"):
        return -2.0 * np.log(pair), pair


def lambda_hyperplane(P, W, z):
    """log(|P(z)|^2 |W|^2 / |<W, P(z)>|^2), always >= 0.

    Raises
    ------
    IndeterminatePoint
        If z lies in the indeterminacy locus.
    SingularHit
        If |<W, P(z)>| / |P(z)| < 1e-14.
    """
    W = W if isinstance(W, Target) else Target.hyperplane(W)
    coords = z.coords if isinstance(z, ProjPoint) else np.asarray(z, dtype=complex)
    U, ok = _unit_image(P, normalize_rows(coords[None, :]))
    if not ok[0]:
        raise IndeterminatePoint("z is in the indeterminacy locus")
    val, pair = _hyperplane_values(U, W.data)
    if pair[0] < SINGULAR_RATIO:
        raise SingularHit("<W, P(z)> vanishes: z is on the pole of the integrand")
    return max(float(val[0]), 0.0)


def _lambda_point_values(U, W):
    w2 = _wedge_norm_sq(U, W)
    with np.errstate(divide="ignore"):
        return -np.log(w2), np.sqrt(w2)


def lambda_point(P, W, z):
    """log(|P(z)|^2 |W|^2 / |P(z) ^ W|^2) for a point target W."""
    W = W if isinstance(W, Target) else Target.point(W)
    coords = z.coords if isinstance(z, ProjPoint) else np.asarray(z, dtype=complex)
    U, ok = _unit_image(P, normalize_rows(coords[None, :]))
    if not ok[0]:
        raise IndeterminatePoint("z is in the indeterminacy locus")
    val, dist = _lambda_point_values(U, W.data)
    if dist[0] < SINGULAR_RATIO:
        raise SingularHit("P(z) coincides with the target point")
    return max(float(val[0]), 0.0)


def _wedge_matrix(W):
    """Matrix L with L v = v ^ W in the basis e_i ^ e_j, i < j."""
    N = len(W)
    rows = []
    for i in range(N):
        for j in range(i + 1, N):
            r = np.zeros(N, dtype=complex)
            r[i] = W[j]
            r[j] = -W[i]
            rows.append(r)
    return np.array(rows)


def _draw(P, n, samples, seed, integrand, rounds=8):
    """Shared Monte-Carlo loop: resample singular hits, skip indeterminate draws."""
    vals = []
    rejected = skipped = drawn = 0
    need = samples
    r = 0
    while need > 0:
        if r >= rounds:
            break
        Z = sample_fs_array(n, int(need * 1.02) + 8, seed, shard_index=r, shard_count=rounds)
        v, singular, indet = integrand(Z)
        drawn += len(Z)
        rejected += int(singular.sum())
        skipped += int(indet.sum())
        good = v[~singular & ~indet][:need]
        vals.append(good)
        need -= len(good)
        r += 1
    v = np.concatenate(vals)
    if rejected > MAX_REJECT_FRACTION * drawn:
        raise TargetContainsImage(
            f"{rejected} of {drawn} draws hit the pole: P(z) lies in or hugs the target")
    if len(v) < 2:
        raise TargetContainsImage("no usable draws")
    return ProximityEstimate(float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v))),
                             len(v), rejected, skipped)


def m1_estimate(P, W, samples=10_000, seed=0):
    """Monte-Carlo FS average of :func:`lambda_hyperplane` (proximity to a hyperplane).

    Raises
    ------
    TargetContainsImage
        If more than 1% of the draws hit the pole of the integrand.
    """
    W = W if isinstance(W, Target) else Target.hyperplane(W)
    if len(W.data) != P.target_dim + 1:
        raise DegenerateInput("target dimension does not match the map")

    def integrand(Z):
        U, ok = _unit_image(P, Z)
        v, pair = _hyperplane_values(U, W.data)
        return np.maximum(v, 0.0), ok & (pair < SINGULAR_RATIO), ~ok

    return _draw(P, P.source_dim, samples, seed, integrand)


def mpoint_estimate(P, W, samples=10_000, seed=0, method="hybrid"):
    """Monte-Carlo proximity of P to a point target (l = n).

    On P^1 this is :func:`m1_estimate`.  On P^2 the quantity is the integral
    of log(|P|^2 |W|^2 / |P ^ W|^2) against (P^*w + g^*w) ^ w, where
    g = P ^ W maps into the wedge space.

    ``method="density"`` averages the integrand times the pullback density
    over FS draws.  ``method="crofton"`` slices instead: both (1,1)-forms are
    averages of curves P^{-1}(A) (A a random line, resp. a random line
    through W), and w is an average of random lines H, so each draw sums the
    log term over the roots of a univariate polynomial on H.  Slicing
    resolves the very thin regions near pre-images of W that carry most of
    the g^*w mass for exceptional targets and that FS draws miss.
    ``method="hybrid"`` (the scanner default) uses FS draws for the P^*w
    part and slicing for the g^*w part.
    """
    W = W if isinstance(W, Target) else Target.point(W)
    n = P.source_dim
    if n != P.target_dim or n not in (1, 2):
        raise DegenerateInput("point proximity is implemented for self-maps of P^1 and P^2")
    if n == 1:
        # on P^1 the point W is the hyperplane {<W^perp, .> = 0}
        w = W.data
        return m1_estimate(P, Target.hyperplane([-w[1], w[0]]), samples, seed)
    if method == "density":
        return _mpoint_density(P, W, samples, seed, (True, True))
    if method == "crofton":
        return _mpoint_crofton(P, W, samples, seed, (True, True))
    if method == "hybrid":
        a = _mpoint_density(P, W, samples, seed, (True, False))
        b = _mpoint_crofton(P, W, samples, seed, (False, True))
        return ProximityEstimate(a.value + b.value, float(np.hypot(a.std_error, b.std_error)),
                                 min(a.samples, b.samples), a.rejected + b.rejected,
                                 a.skipped_indeterminate + b.skipped_indeterminate)
    raise ValueError("method must be 'density', 'crofton' or 'hybrid'")


def _mpoint_density(P, W, samples, seed, parts):
    L = _wedge_matrix(W.data)
    grads = _gradients(list(P.components))
    use_p, use_g = parts

    def integrand(Z):
        U, ok = _unit_image(P, Z)
        val, dist = _lambda_point_values(U, W.data)
        singular = ok & (dist < SINGULAR_RATIO)
        use = ok & ~singular
        out = np.zeros(len(Z))
        idx = np.flatnonzero(use)
        if idx.size:
            F, J, x = jet(P.components, Z[idx], grads)
            dens = np.zeros(idx.size)
            if use_p:
                dens += density_from_jet(F, J, x, 1)
            if use_g:
                dens += density_from_jet(F @ L.T, np.einsum("ab,sbn->san", L, J), x, 1)
            out[idx] = np.maximum(val[idx], 0.0) * dens
        return out, singular, ~ok

    return _draw(P, 2, samples, seed, integrand)


def _random_unit(rng, shape):
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _line_frames(rng, S):
    """Orthonormal pairs (a, b) spanning Haar-random lines of P^2."""
    g = rng.standard_normal((S, 3, 2)) + 1j * rng.standard_normal((S, 3, 2))
    q, _ = np.linalg.qr(g)
    return q[:, :, 0], q[:, :, 1]


def _covectors_through(rng, W, S):
    """Haar-random covectors A with <A, W> = 0 (lines through the point W)."""
    # bilinear annihilator of W = Hermitian complement of conj(W)
    _, _, vh = np.linalg.svd(W.conj()[None, :])
    basis = vh[1:]                                         # rows e with e . W = 0
    c = _random_unit(rng, (S, 2))
    return c @ basis


def _slice_roots(P, A, a, b, M):
    """Roots u of A . P(a + u b) for each sample; returns points (S, D, 3) and validity."""
    S = len(A)
    D = P.degree
    u = np.exp(2j * np.pi * np.arange(M) / M)
    pts = a[:, None, :] + u[None, :, None] * b[:, None, :]          # (S, M, 3)
    vals = P.evaluate_many(pts.reshape(-1, 3)).reshape(S, M, 3)
    f = np.einsum("smk,sk->sm", vals, A)
    coeffs = np.fft.fft(f, axis=1)[:, :D + 1] / M                  # low first
    lead = coeffs[:, D]
    scale = np.max(np.abs(coeffs), axis=1)
    ok = np.abs(lead) > 1e-12 * scale
    C = np.zeros((S, D, D), dtype=complex)
    if D > 1:
        C[:, 1:, :-1] = np.eye(D - 1)
    C[:, :, -1] = -coeffs[:, :D] / np.where(ok, lead, 1.0)[:, None]
    roots = np.linalg.eigvals(C)                                      # (S, D)
    roots = _polish_roots(coeffs, roots)
    Z = a[:, None, :] + roots[:, :, None] * b[:, None, :]
    return Z, ok


def _polish_roots(coeffs, roots, steps=2):
    """Vectorized Newton steps on p(u) = sum coeffs[:, i] u^i at every root."""
    D = coeffs.shape[1] - 1
    dcoef = coeffs[:, 1:] * np.arange(1, D + 1)
    for _ in range(steps):
        p = np.zeros_like(roots)
        dp = np.zeros_like(roots)
        for i in range(D, -1, -1):
            p = p * roots + coeffs[:, i:i + 1]
        for i in range(D - 1, -1, -1):
            dp = dp * roots + dcoef[:, i:i + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            step = p / dp
        good = np.isfinite(step) & (np.abs(step) < 1e-3 * (1 + np.abs(roots)))
        roots = np.where(good, roots - step, roots)
    return roots


def _mpoint_crofton(P, W, samples, seed, parts):
    rng = np.random.default_rng([int(seed), 0xC0F7])
    D = P.degree
    M = 1 << int(np.ceil(np.log2(D + 2)))
    w = W.data
    per_sample = np.zeros(samples)
    valid = np.ones(samples, dtype=bool)
    rejected = 0
    pencils = []
    if parts[0]:
        pencils.append(_random_unit(rng, (samples, 3)))
    if parts[1]:
        pencils.append(_covectors_through(rng, w, samples))
    for A in pencils:
        a, b = _line_frames(rng, samples)
        Z, ok = _slice_roots(P, A, a, b, M)
        U, okz = _unit_image(P, Z.reshape(-1, 3))
        val, dist = _lambda_point_values(U, w)
        val = val.reshape(samples, D)
        okz = okz.reshape(samples, D)
        sing = (dist.reshape(samples, D) < SINGULAR_RATIO) & okz
        rejected += int(sing.any(axis=1).sum())
        use = ok & ~sing.any(axis=1)
        valid &= use
        per_sample += np.where(okz, np.maximum(val, 0.0), 0.0).sum(axis=1)
    v = per_sample[valid]
    if rejected > MAX_REJECT_FRACTION * samples:
        raise TargetContainsImage(f"{rejected} of {samples} slices hit the target point")
    return ProximityEstimate(float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v))),
                             len(v), rejected, int((~valid).sum()) - rejected)


def proximity_estimate(P, W, samples=10_000, seed=0, method="hybrid"):
    W = W if isinstance(W, Target) else Target.hyperplane(W)
    if W.kind == "hyperplane":
        return m1_estimate(P, W, samples, seed)
    return mpoint_estimate(P, W, samples, seed, method=method)


def haar_targets(m, count, kind, seed):
    """Haar-random hyperplanes or points of P^m (both are FS-random unit vectors)."""
    Z = sample_fs_array(m, count, seed, shard_index=1, shard_count=3)
    return [Target(kind, z) for z in Z]


def haar_constant(l, m):
    try:
        return HAAR_CONSTANTS[(l, m)]
    except KeyError:
        raise DegenerateInput(f"c_(l,m) is only available for l in {{1, m}} and m <= 2") from None


def calibrate_constant(l, m, num_targets=50, samples_each=10_000, seed=0):
    """MC calibration of c_{l,m} from the identity map of P^m."""
    I = RationalMap.identity(m)
    kind = "hyperplane" if l == 1 else "point"
    vals = [proximity_estimate(I, T, samples_each, seed + 1 + i).value
            for i, T in enumerate(haar_targets(m, num_targets, kind, seed))]
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(len(vals)))


def mean_proximity_check(P, l, num_targets=50, samples_each=10_000, seed=0, delta_prev=None):
    """Average proximity over Haar-random targets vs the prediction c_{l,m} delta_{l-1}(P).

    Returns ``(mean, predicted)``.
    """
    n, m = P.source_dim, P.target_dim
    if l not in (1, n):
        raise DegenerateInput("only l = 1 and l = n are supported")
    if delta_prev is None:
        if l == 1:
            delta_prev = 1
        else:
            from .degrees import intermediate_degree
            delta_prev = intermediate_degree(P, l - 1, seed=seed)
    kind = "hyperplane" if l == 1 else "point"
    vals = []
    for i, T in enumerate(haar_targets(m, num_targets, kind, seed)):
        vals.append(proximity_estimate(P, T, samples_each, seed + 1 + i).value)
    return float(np.mean(vals)), haar_constant(l, m) * delta_prev


def default_threshold(P, l):
    """Geometric mean of delta_{l-1}(P) and delta_l(P).

    Averaged over targets m_{P_k} grows like delta_{l-1}(P_k), so the
    threshold must exceed delta_{l-1}(P); targets whose proximity grows like
    the next degree delta_l(P) are the exceptional ones.
    """
    from .degrees import intermediate_degree
    lower = 1 if l == 1 else intermediate_degree(P, l - 1)
    return float(np.sqrt(lower * intermediate_degree(P, l)))


def _fit_growth(ks, values):
    ks = np.asarray(ks, dtype=float)
    v = np.asarray(values, dtype=float)
    use = (ks >= 2) & np.isfinite(v) & (v > 0)
    if use.sum() < 2:
        return float("nan"), True
    slope, intercept = np.polyfit(ks[use], np.log(v[use]), 1)
    resid = np.log(v[use]) - (slope * ks[use] + intercept)
    unstable = use.sum() > 2 and float(np.max(np.abs(resid))) > 0.5
    return float(np.exp(slope)), bool(unstable)


def exceptional_scan(P, l, targets, k_max, a_base=None, samples=10_000, seed=0, iterates=None):
    """Estimate m_{P_k}(W) for k = 1..k_max and flag targets with fast growth.

    ``growth_base`` is exp of the least-squares slope of log m_k against k
    over k >= 2.  Targets whose estimator breaks down because too many draws
    land on the pole (the proximity is then infinite or nearly so) are
    flagged with reason ``rejection_rate``.
    """
    n = P.source_dim
    if P.source_dim != P.target_dim or n not in (1, 2):
        raise DegenerateInput("the scan needs a self-map of P^1 or P^2")
    if l not in (1, n):
        raise DegenerateInput("only l = 1 and l = n are supported")
    if a_base is None:
        a_base = default_threshold(P, l)
    Pk = iterates or [iterate(P, k) for k in range(1, k_max + 1)]
    rows = []
    for ti, T in enumerate(targets):
        vals, errs = [], []
        hit_pole = False
        for k, M in enumerate(Pk, start=1):
            cell_seed = seed + 1000 * ti + k
            try:
                est = proximity_estimate(M, T, samples, cell_seed)
            except TargetContainsImage:
                hit_pole = True
                vals.append(float("inf"))
                errs.append(float("nan"))
                continue
            vals.append(est.value)
            errs.append(est.std_error)
        g, unstable = _fit_growth(range(1, len(vals) + 1), vals)
        if hit_pole:
            flag, reason = "exceptional_candidate", "rejection_rate"
        elif np.isfinite(g) and g > a_base:
            flag, reason = "exceptional_candidate", "growth"
        else:
            flag, reason = "generic", ""
        rows.append(ScanRow(T, vals, g, flag, unstable, reason, errs))
    return rows


def scan_to_csv(rows, path):
    """Target coordinates, m_1..m_kmax, growth_base, flag."""
    k_max = max(len(r.m_values) for r in rows) if rows else 0
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        N = len(rows[0].target.data) if rows else 0
        head = ["kind"]
        for i in range(N):
            head += [f"re_w{i}", f"im_w{i}"]
        head += [f"m_{k}" for k in range(1, k_max + 1)] + ["growth_base", "flag", "fit_unstable", "reason"]
        wr.writerow(head)
        for r in rows:
            row = [r.target.kind]
            for z in r.target.data:
                row += [repr(float(z.real)), repr(float(z.imag))]
            row += [repr(float(v)) for v in r.m_values]
            row += [repr(float(r.growth_base)), r.flag, int(r.fit_unstable), r.reason]
            wr.writerow(row)


__all__ = [
    "Target", "ProximityEstimate", "ScanRow", "lambda_hyperplane", "lambda_point",
    "m1_estimate", "mpoint_estimate", "proximity_estimate", "mean_proximity_check",
    "exceptional_scan", "scan_to_csv", "haar_targets", "haar_constant", "calibrate_constant",
    "default_threshold",
    "HAAR_CONSTANTS",
]
